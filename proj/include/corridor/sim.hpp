#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "corridor/net.hpp"
#include "corridor/signal.hpp"

namespace corridor {

/// Intelligent Driver Model parameters.
struct IdmParams {
    double v0 = 13.89;
    double time_headway_s = 0.85;
    double a_max = 2.0;
    double b_comfort = 3.0;
    double s0 = 2.0;
    double vehicle_length_m = 5.0;
    double delta = 4.0;
};

inline constexpr double kFreeRoad = std::numeric_limits<double>::infinity();

/// IDM acceleration. `gap_m` may be kFreeRoad; throws std::invalid_argument if gap_m <= 0.
double idm_accel(const IdmParams &p, double v, double v_lead, double gap_m);

/// Ballistic update with the stop-in-place rule when speed would turn negative.
struct Kinematics {
    double advance_m;
    double speed_mps;
};
Kinematics ballistic_update(double v, double accel, double dt);

struct SimConfig {
    double dt_s = 0.5;
    double duration_s = 10000.0;
    double warmup_s = 1000.0;
    std::uint64_t seed = 1;
    IdmParams idm;
    SignalTiming timing;
    double queue_speed_threshold_mps = 0.5;
    double stop_speed_threshold_mps = 0.5;
    double stop_rearm_speed_mps = 2.0;
    double backup_sample_period_s = 100.0;
    double insertion_clearance_m = 7.0;
    /// Use the west/east reflected arrival streams (symmetry testing).
    bool mirror_streams = false;
    /// Verify conservation, ordering and gaps after every step (throws on violation).
    bool check_invariants = false;

    void validate() const;
    std::int64_t ticks_per_decision() const;
    std::int64_t total_ticks() const;
};

class SimError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

using VehicleId = std::size_t;

struct Vehicle {
    VehicleId id = 0;
    RouteId route = 0;
    std::size_t route_index = 0;
    LinkId link = 0;
    /// Front bumper, meters from the start of `link`.
    double position_m = 0.0;
    double speed_mps = 0.0;
    double length_m = 5.0;
    double generated_at_s = 0.0;
    std::optional<double> entered_at_s;
    std::optional<double> exited_at_s;
    int stop_count = 0;
    bool stop_armed = true;
    /// Decided to run the amber at the end of the current link.
    bool committed = false;
};

/// Per-link arrival times (seconds) for every entry link of the network, indexed by link id
/// (empty for non-entry links).
using ArrivalSchedule = std::vector<std::vector<double>>;

/// Poisson arrival times with rate `rate_vph`, truncated at `duration_s`.
std::vector<double> poisson_arrivals(double rate_vph, double duration_s, std::uint64_t stream_seed);

/// Stream key for an entry link; reflection maps WE<->EW and junction i <-> n-1-i.
std::uint64_t arrival_stream_key(const CorridorNetwork &net, LinkId entry, bool mirrored);

ArrivalSchedule sample_arrivals(const CorridorNetwork &net, const DemandConfig &demand, double duration_s,
                                std::uint64_t seed, bool mirror_streams = false);

struct LaneStats {
    std::size_t count = 0;
    std::size_t queue = 0;
    double density = 0.0;
};

struct LaneSample {
    double t_s;
    LinkId link;
    LaneStats stats;
};

struct BackupSample {
    double t_s;
    LinkId entry_link;
    std::size_t size;
};

struct DecisionRecord {
    double t_s;
    JunctionId junction;
    ControlDecision decision;
    PhaseId phase_after;
};

struct VehicleRecord {
    VehicleId id;
    RouteId route;
    Direction direction;
    double generated_at_s;
    std::optional<double> entered_at_s;
    std::optional<double> exited_at_s;
    int stop_count;

    bool completed() const { return exited_at_s.has_value(); }
    double travel_time_s() const { return *exited_at_s - generated_at_s; }
};

struct SafetyCounters {
    std::size_t red_crossings = 0;
    std::size_t amber_crossings = 0;
    std::size_t gap_clamps = 0;
    std::size_t stop_line_clamps = 0;
};

/// Mutable world state of one simulation.
class SimState {
  public:
    SimState(const CorridorNetwork &net, const DemandConfig &demand, const SimConfig &config);
    SimState(const CorridorNetwork &net, ArrivalSchedule arrivals, const SimConfig &config);

    const CorridorNetwork &network() const { return *net_; }
    const SimConfig &config() const { return config_; }
    std::int64_t tick() const { return tick_; }
    double time_s() const { return static_cast<double>(tick_) * config_.dt_s; }
    bool at_decision_instant() const { return tick_ % config_.ticks_per_decision() == 0; }
    bool finished() const { return tick_ >= config_.total_ticks(); }

    const std::vector<Vehicle> &vehicles() const { return vehicles_; }
    /// Vehicle ids on a link, leader first.
    const std::deque<VehicleId> &lane(LinkId link) const { return lanes_.at(link); }
    const std::deque<VehicleId> &backup(LinkId entry) const { return backups_.at(entry); }
    const std::vector<SignalState> &signals() const { return signals_; }
    const SignalState &signal(JunctionId j) const { return signals_.at(j); }
    SignalState &signal_mut(JunctionId j) { return signals_.at(j); }

    /// floor(link length / insertion clearance).
    std::size_t storage_capacity(LinkId link) const;
    LaneStats lane_stats(LinkId link) const;
    std::size_t queue_length(LinkId link) const;

    std::size_t generated() const { return vehicles_.size(); }
    std::size_t in_backup() const;
    std::size_t in_network() const;
    std::size_t exited() const { return exited_; }
    const SafetyCounters &safety() const { return safety_; }

    /// Places a vehicle directly on a link (tests and scenario setup).
    VehicleId place_vehicle(LinkId link, double position_m, double speed_mps);

    /// Throws SimError if conservation, ordering, gaps or speeds are violated.
    void check_invariants() const;

  private:
    friend void step(SimState &, const std::vector<ControlDecision> *);

    struct Obstacle {
        double gap_m;
        double v_lead;
        bool stop_line;
    };

    void generate_and_insert();
    Obstacle obstacle_ahead(std::size_t lane_pos, const Vehicle &v);
    void move_vehicles();
    void transfer_and_absorb(double t_end);
    void update_stop_counts(VehicleId id);

    const CorridorNetwork *net_;
    SimConfig config_;
    std::int64_t tick_ = 0;
    std::vector<Vehicle> vehicles_;
    std::vector<std::deque<VehicleId>> lanes_;
    std::vector<std::deque<VehicleId>> backups_;
    std::vector<SignalState> signals_;
    ArrivalSchedule arrivals_;
    std::vector<std::size_t> arrival_cursor_;
    std::size_t exited_ = 0;
    SafetyCounters safety_;
};

/// Advances the state by one tick. `controls`, when non-null, holds one decision
/// per junction and must be supplied exactly at decision instants.
void step(SimState &state, const std::vector<ControlDecision> *controls);

/// Decides signal actions at decision instants.
class Controller {
  public:
    virtual ~Controller() = default;
    virtual std::string name() const = 0;
    virtual std::vector<ControlDecision> decide(const SimState &state) = 0;
    /// Called once after the final tick.
    virtual void finish(const SimState &) {}
};

struct SimResult {
    std::vector<VehicleRecord> vehicles;
    std::vector<LaneSample> lane_series;
    std::vector<BackupSample> backup_series;
    std::vector<DecisionRecord> decisions;
    SafetyCounters safety;
    double duration_s = 0.0;
    double warmup_s = 0.0;

    /// Total backup size per sample instant: (t_s, total) pairs.
    std::vector<std::pair<double, double>> backup_totals() const;
};

SimResult run(const CorridorNetwork &net, const DemandConfig &demand, const SimConfig &config,
              Controller &controller);
SimResult run(SimState &state, Controller &controller);

/// Travel-time statistics over vehicles completing within [warmup, duration].
struct TravelTimeSummary {
    double mean_s = 0.0;
    std::size_t count = 0;
};
TravelTimeSummary average_travel_time(const SimResult &result);

void write_vehicle_csv(const SimResult &result, const std::string &path);
void write_lane_csv(const SimResult &result, const std::string &path);
void write_backup_csv(const SimResult &result, const std::string &path);
void write_decision_csv(const SimResult &result, const std::string &path);

} // namespace corridor
