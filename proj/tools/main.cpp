#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "corridor/csv.hpp"
#include "corridor/exp.hpp"
#include "corridor/run_config.hpp"

using namespace corridor;
namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

void add_shared_flags(CLI::App &cmd, RunConfig &f, std::string &config_path) {
    cmd.add_option("--config", config_path, "JSON run-configuration file (flags override it)");
    cmd.add_option("--n", f.n, "number of junctions");
    cmd.add_option("--link-length", f.link_length, "inter-junction link length (m)");
    cmd.add_option("--demand-ns", f.demand_ns, "north-south demand (veh/h)");
    cmd.add_option("--demand-sn", f.demand_sn, "south-north demand (veh/h)");
    cmd.add_option("--demand-we", f.demand_we, "west-east demand (veh/h)");
    cmd.add_option("--demand-ew", f.demand_ew, "east-west demand (veh/h)");
    cmd.add_option("--arch", f.arch, "maxpressure | centralized | fd | ps");
    cmd.add_option("--checkpoint", f.checkpoint, "policy checkpoint (one per RL architecture, in --arch order)");
    cmd.add_option("--seed", f.seed, "base seed");
    cmd.add_option("--seeds", f.seeds, "number of seeds (base, base+1, ...)");
    cmd.add_option("--duration", f.duration, "simulated seconds (episode length for train)");
    cmd.add_option("--warmup", f.warmup, "seconds excluded from statistics");
    cmd.add_option("--out", f.out, std::string("output directory (default $") + kOutDirEnv + " or ./out)");
    cmd.add_option("--threads", f.threads, "worker threads for sweeps");
}

RunConfig resolve(const RunConfig &flags, const std::string &config_path) {
    RunConfig c = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    c.merge(flags);
    return c;
}

fs::path out_dir(const RunConfig &c) {
    fs::path dir = resolve_out_dir(c);
    fs::create_directories(dir);
    return dir;
}

SimConfig sim_config(const RunConfig &c, double default_duration) {
    SimConfig s;
    s.duration_s = c.duration.value_or(default_duration);
    s.warmup_s = c.warmup.value_or(std::min(1000.0, s.duration_s / 2.0));
    s.seed = c.seed.value_or(1);
    s.validate();
    return s;
}

std::vector<std::uint64_t> seed_list(const RunConfig &c, std::size_t default_count) {
    const std::size_t count = c.seeds.value_or(default_count);
    if (count == 0) throw ConfigError("--seeds must be at least 1");
    const std::uint64_t base = c.seed.value_or(1);
    std::vector<std::uint64_t> s;
    for (std::size_t k = 0; k < count; ++k) s.push_back(base + k);
    return s;
}

DemandConfig demand(const RunConfig &c, DemandConfig d) {
    if (c.demand_we) d.lambda_we = *c.demand_we;
    if (c.demand_ew) d.lambda_ew = *c.demand_ew;
    if (c.demand_ns) d.lambda_ns = *c.demand_ns;
    if (c.demand_sn) d.lambda_sn = *c.demand_sn;
    d.validate();
    return d;
}

CorridorSpec corridor(const RunConfig &c, std::size_t default_n) {
    CorridorSpec spec;
    spec.n = c.n.value_or(default_n);
    spec.link_length_m = c.link_length.value_or(300.0);
    spec.validate();
    return spec;
}

/// Pairs each RL architecture with the next checkpoint in order.
std::vector<ControllerSpec> controllers(const RunConfig &c, const std::string &default_arch) {
    const std::vector<std::string> archs = c.arch.value_or(std::vector<std::string>{default_arch});
    const std::vector<std::string> ckpts = c.checkpoint.value_or(std::vector<std::string>{});
    std::vector<ControllerSpec> out;
    std::size_t next = 0;
    for (const auto &a : archs) {
        const ArchitectureKind kind = parse_architecture(a);
        std::optional<std::string> path;
        if (kind != ArchitectureKind::MaxPressure && next < ckpts.size()) path = ckpts[next++];
        out.push_back(load_controller_spec(kind, path));
    }
    if (next < ckpts.size()) throw ConfigError("more checkpoints than RL architectures");
    return out;
}

ControllerSpec single_controller(const RunConfig &c, const std::string &default_arch) {
    auto specs = controllers(c, default_arch);
    if (specs.size() != 1) throw ConfigError("this command takes exactly one --arch");
    return specs.front();
}

void require_unset(const RunConfig &c, bool episodes, bool preset, bool grid, bool lengths) {
    if (episodes && c.episodes) throw ConfigError("--episodes only applies to train");
    if (preset && c.preset) throw ConfigError("--preset only applies to train");
    if (grid && c.grid) throw ConfigError("--grid only applies to capacity");
    if (lengths && c.link_lengths) throw ConfigError("--link-lengths only applies to greenwave");
}

int cmd_simulate(const RunConfig &c) {
    require_unset(c, true, true, true, true);
    const CorridorNetwork net(corridor(c, 3));
    const SimConfig sim = sim_config(c, 10000.0);
    const ControllerSpec spec = single_controller(c, "maxpressure");
    auto ctl = make_controller(spec, net.junction_count());
    const SimResult r = run(net, demand(c, {700.0, 700.0, 700.0, 700.0}), sim, *ctl);
    const fs::path dir = out_dir(c);
    write_vehicle_csv(r, dir / "vehicles.csv");
    write_lane_csv(r, dir / "lanes.csv");
    write_backup_csv(r, dir / "backup.csv");
    write_decision_csv(r, dir / "decisions.csv");
    const TravelTimeSummary att = average_travel_time(r);
    std::printf("%s: %zu vehicles completed after warm-up, ATT %.2f s\n", spec.name().c_str(), att.count, att.mean_s);
    return 0;
}

int cmd_capacity(const RunConfig &c) {
    require_unset(c, true, true, false, true);
    if (c.demand_ns || c.demand_sn || c.demand_we || c.demand_ew)
        throw ConfigError("capacity sweeps the demand grid; use --grid instead of --demand-*");
    CapacitySweepConfig cfg;
    cfg.corridor = corridor(c, 3);
    cfg.ns_grid = cfg.we_grid = c.grid.value_or(default_demand_grid());
    cfg.seeds = seed_list(c, 5);
    cfg.sim = sim_config(c, 10000.0);
    cfg.threads = c.threads.value_or(1);
    const ControllerSpec spec = single_controller(c, "maxpressure");
    const auto verdicts = capacity_sweep(cfg, spec);
    for (const auto &w : downward_closure_warnings(verdicts)) std::fprintf(stderr, "warning: %s\n", w.c_str());
    const fs::path dir = out_dir(c);
    write_capacity_csv(verdicts, dir / "capacity.csv");
    write_capacity_svg(verdicts,
                       "Capacity region: " + spec.name() + ", n = " + std::to_string(cfg.corridor.n) + ", l = " +
                           format_double(cfg.corridor.link_length_m) + " m",
                       dir / "capacity.svg");
    const auto stable = std::count_if(verdicts.begin(), verdicts.end(), [](const auto &v) { return v.stable; });
    std::printf("%s: %zd of %zu demand points stable\n", spec.name().c_str(), stable, verdicts.size());
    return 0;
}

int cmd_att(const RunConfig &c) {
    require_unset(c, true, true, true, true);
    if (c.demand_ns || c.demand_sn || c.demand_we || c.demand_ew)
        throw ConfigError("att evaluates the fixed demand line WE + NS = 1400 veh/h");
    AttConfig cfg;
    cfg.corridor = corridor(c, 3);
    cfg.points = att_demand_line();
    cfg.seeds = seed_list(c, 5);
    cfg.sim = sim_config(c, 10000.0);
    cfg.threads = c.threads.value_or(1);
    const auto records = att_eval(cfg, controllers(c, "maxpressure"));
    write_att_csv(records, out_dir(c) / "att.csv");
    for (const auto &r : records)
        std::printf("%-12s we=%4.0f ns=%4.0f ATT %.2f s\n", r.architecture.c_str(), r.lambda_we, r.lambda_ns, r.att_s);
    return 0;
}

int cmd_greenwave(const RunConfig &c) {
    require_unset(c, true, true, true, false);
    if (c.link_length && c.link_lengths) throw ConfigError("give either --link-length or --link-lengths");
    GreenWaveConfig cfg;
    cfg.n = c.n.value_or(13);
    cfg.link_lengths = c.link_lengths   ? *c.link_lengths
                       : c.link_length ? std::vector<double>{*c.link_length}
                                       : default_green_wave_lengths();
    for (double l : cfg.link_lengths) CorridorSpec{cfg.n, l}.validate();
    cfg.demand = demand(c, {800.0, 0.0, 100.0, 100.0});
    cfg.seeds = seed_list(c, 3);
    cfg.sim = sim_config(c, 10000.0);
    cfg.threads = c.threads.value_or(1);
    const auto records = green_wave_study(cfg, single_controller(c, "ps"));
    const fs::path dir = out_dir(c);
    write_green_wave_csv(records, dir / "greenwave.csv");
    write_green_wave_svg(records, dir / "greenwave.svg");
    for (const auto &r : records)
        std::printf("n=%2zu l=%5.0f m zero-stop ratio %.3f (%zu vehicles)\n", r.n, r.link_length_m, r.ratio, r.vehicles);
    return 0;
}

int cmd_train(const RunConfig &c) {
    require_unset(c, false, false, true, true);
    if (c.checkpoint) throw ConfigError("train does not take --checkpoint");
    const std::vector<std::string> archs = c.arch.value_or(std::vector<std::string>{"ps"});
    if (archs.size() != 1) throw ConfigError("train takes exactly one --arch");
    const ArchitectureKind kind = parse_architecture(archs.front());
    if (kind == ArchitectureKind::MaxPressure) throw ConfigError("maxpressure has nothing to train");

    PpoConfig ppo = ppo_preset(c.preset.value_or("default"));
    if (c.episodes) ppo.episodes = *c.episodes;
    if (c.duration) ppo.episode_duration_s = *c.duration;
    if (c.seed) ppo.train_seed = *c.seed;
    ppo.demand = demand(c, ppo.demand);
    ppo.validate();
    const CorridorNetwork net(corridor(c, 3));
    SimConfig sim;
    sim.duration_s = ppo.episode_duration_s;
    sim.warmup_s = c.warmup.value_or(std::min(sim.warmup_s, ppo.episode_duration_s / 2.0));

    const fs::path dir = out_dir(c);
    const TrainResult result = train(net, kind, ppo, sim, [](const TrainLogRow &row) {
        if (row.eval_return)
            std::fprintf(stderr, "episode %d: mean reward %.3f, eval return %.1f\n", row.episode + 1, row.mean_reward,
                         *row.eval_return);
    });
    write_train_log_csv(result.log, dir / "train_log.csv");
    for (const auto &ckpt : result.evaluated) {
        char name[64];
        std::snprintf(name, sizeof name, "checkpoint_ep%04d.json", ckpt.episode + 1);
        save_checkpoint(ckpt, dir / name);
    }
    save_checkpoint(result.best, dir / "checkpoint_best.json");
    std::printf("best policy: episode %d, eval return %.1f\n", result.best.episode + 1, result.best.eval_return);
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Corridor traffic simulator and signal-control experiments"};
    app.require_subcommand(1);

    RunConfig flags;
    std::string config_path;
    auto *simulate = app.add_subcommand("simulate", "run one simulation and write per-vehicle, lane, backup and decision CSVs");
    auto *capacity = app.add_subcommand("capacity", "capacity-region sweep (capacity.csv, capacity.svg)");
    auto *att = app.add_subcommand("att", "average travel time on the WE + NS = 1400 veh/h line (att.csv)");
    auto *greenwave = app.add_subcommand("greenwave", "zero-stop ratio versus link length (greenwave.csv, greenwave.svg)");
    auto *train_cmd = app.add_subcommand("train", "PPO training (train_log.csv, checkpoint_*.json)");
    for (auto *cmd : {simulate, capacity, att, greenwave, train_cmd}) add_shared_flags(*cmd, flags, config_path);
    capacity->add_option("--grid", flags.grid, "demand values for both axes (veh/h)");
    greenwave->add_option("--link-lengths", flags.link_lengths, "link lengths to study (m)");
    train_cmd->add_option("--episodes", flags.episodes, "training episodes");
    train_cmd->add_option("--preset", flags.preset, "hyperparameter preset: default | smoke");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        const RunConfig c = resolve(flags, config_path);
        if (*simulate) return cmd_simulate(c);
        if (*capacity) return cmd_capacity(c);
        if (*att) return cmd_att(c);
        if (*greenwave) return cmd_greenwave(c);
        return cmd_train(c);
    } catch (const ConfigError &e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const CheckpointError &e) {
        std::cerr << "checkpoint error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}
