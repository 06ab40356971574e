#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "corridor/mdp.hpp"
#include "corridor/ppo.hpp"
#include "corridor/sim.hpp"

namespace corridor {

// ---- stability ----

struct StabilityCriteria {
    double max_slope_veh_per_s = 0.01;
    double max_final_backup = 50.0;
};

struct StabilityVerdict {
    double slope = 0.0;
    double final_backup = 0.0;
    bool stable = true;
};

/// Least-squares slope of the total backup over t in [duration/2, duration] and the final size.
StabilityVerdict stability_verdict(std::span<const std::pair<double, double>> series, double duration_s,
                                   const StabilityCriteria &criteria = {});

// ---- controllers ----

/// MaxPressure or a trained policy, ready to be instantiated on any compatible network.
struct ControllerSpec {
    ArchitectureKind kind = ArchitectureKind::MaxPressure;
    std::optional<PolicySet> policy;

    std::string name() const { return to_string(kind); }
};

/// Loads the checkpoint an RL architecture needs; throws ConfigError when it is missing
/// or was trained for a different architecture.
ControllerSpec load_controller_spec(ArchitectureKind kind, const std::optional<std::string> &checkpoint_path);

/// Deterministic controller for a network with `n` junctions (policies are re-targeted when allowed).
std::unique_ptr<Controller> make_controller(const ControllerSpec &spec, std::size_t n);

/// Calls fn(i) for i in [0, count) on up to `threads` worker threads; rethrows the first failure.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)> &fn);

// ---- capacity regions ----

struct SeedVerdict {
    std::uint64_t seed = 0;
    StabilityVerdict verdict;
};

struct CapacityVerdict {
    double lambda_ns = 0.0;
    double lambda_we = 0.0;
    std::vector<SeedVerdict> seeds;
    bool stable = false;
};

/// Stable iff at least ceil(R/2) of the R seeds are stable.
bool majority_stable(std::span<const SeedVerdict> seeds);

struct CapacitySweepConfig {
    CorridorSpec corridor;
    std::vector<double> ns_grid;
    std::vector<double> we_grid;
    std::vector<std::uint64_t> seeds;
    SimConfig sim;
    StabilityCriteria criteria;
    std::size_t threads = 1;
};

/// Demand grid 100..1500 veh/h in steps of 100.
std::vector<double> default_demand_grid();

/// One verdict per grid point, sorted by (lambda_ns, lambda_we).
std::vector<CapacityVerdict> capacity_sweep(const CapacitySweepConfig &cfg, const ControllerSpec &controller);

/// Points that are stable while a grid neighbour with lower demand on one axis is unstable.
std::vector<std::string> downward_closure_warnings(const std::vector<CapacityVerdict> &verdicts);

/// Largest demand on the varied axis reached by a run of stable points starting at the
/// lowest grid value, with the other axis fixed; 0 when the lowest point is unstable.
double max_stable_we(const std::vector<CapacityVerdict> &verdicts, double lambda_ns);
double max_stable_ns(const std::vector<CapacityVerdict> &verdicts, double lambda_we);

void write_capacity_csv(const std::vector<CapacityVerdict> &verdicts, const std::string &path);
void write_capacity_svg(const std::vector<CapacityVerdict> &verdicts, const std::string &title,
                        const std::string &path);

// ---- average travel time ----

struct AttRecord {
    double lambda_we = 0.0;
    double lambda_ns = 0.0;
    std::string architecture;
    double att_s = 0.0;
    std::size_t vehicles = 0;
};

/// The 13 points (WE, NS) = (100, 1300) ... (1300, 100) on the line WE + NS = 1400.
std::vector<std::pair<double, double>> att_demand_line();

struct AttConfig {
    CorridorSpec corridor;
    /// (lambda_we, lambda_ns) pairs; lambda_ew = lambda_we and lambda_sn = lambda_ns.
    std::vector<std::pair<double, double>> points;
    std::vector<std::uint64_t> seeds;
    SimConfig sim;
    std::size_t threads = 1;
};

/// Mean over seeds of the per-run ATT, for every controller at every point.
std::vector<AttRecord> att_eval(const AttConfig &cfg, const std::vector<ControllerSpec> &controllers);
void write_att_csv(const std::vector<AttRecord> &records, const std::string &path);

// ---- green wave ----

/// Share of completed WE vehicles with no stop, among those exiting at or after `min_exit_s`.
/// Throws std::domain_error when no WE vehicle qualifies.
double zero_stop_ratio(std::span<const VehicleRecord> vehicles, double min_exit_s = 0.0);

struct GreenWaveRecord {
    std::size_t n = 13;
    double link_length_m = 0.0;
    double ratio = 0.0;
    std::size_t vehicles = 0;
};

struct GreenWaveConfig {
    std::size_t n = 13;
    std::vector<double> link_lengths;
    DemandConfig demand{800.0, 0.0, 100.0, 100.0};
    std::vector<std::uint64_t> seeds;
    SimConfig sim;
    /// Also measure the single-junction ratio at the largest link length.
    bool include_single_junction = true;
    std::size_t threads = 1;
};

/// Link lengths 200..2000 m in steps of 100.
std::vector<double> default_green_wave_lengths();

/// Ratios pooled over seeds; the single-junction record (n = 1), when requested, comes last.
std::vector<GreenWaveRecord> green_wave_study(const GreenWaveConfig &cfg, const ControllerSpec &controller);
void write_green_wave_csv(const std::vector<GreenWaveRecord> &records, const std::string &path);
void write_green_wave_svg(const std::vector<GreenWaveRecord> &records, const std::string &path);

// ---- training presets ----

/// Library defaults, or the reduced-budget preset used for the single-junction smoke run
/// ("smoke": phase feature, entropy 0.3, lr 1e-3, minibatch 64, 10 epochs).
PpoConfig ppo_preset(const std::string &name);

} // namespace corridor
