#include <cmath>

#include "corridor/csv.hpp"
#include "corridor/sim.hpp"

namespace corridor {

namespace {

void sample(const SimState &s, SimResult &out) {
    const double t = s.time_s();
    for (const Link &l : s.network().links()) out.lane_series.push_back({t, l.id, s.lane_stats(l.id)});
    for (LinkId e : s.network().entry_links()) out.backup_series.push_back({t, e, s.backup(e).size()});
}

} // namespace

std::vector<std::pair<double, double>> SimResult::backup_totals() const {
    std::vector<std::pair<double, double>> totals;
    for (const BackupSample &b : backup_series) {
        if (totals.empty() || totals.back().first != b.t_s) totals.emplace_back(b.t_s, 0.0);
        totals.back().second += static_cast<double>(b.size);
    }
    return totals;
}

SimResult run(const CorridorNetwork &net, const DemandConfig &demand, const SimConfig &config,
              Controller &controller) {
    SimState state(net, demand, config);
    return run(state, controller);
}

SimResult run(SimState &state, Controller &controller) {
    const SimConfig &cfg = state.config();
    const auto sample_ticks = static_cast<std::int64_t>(std::llround(cfg.backup_sample_period_s / cfg.dt_s));
    SimResult out;
    out.duration_s = cfg.duration_s;
    out.warmup_s = cfg.warmup_s;

    if (state.tick() % sample_ticks == 0) sample(state, out);
    while (!state.finished()) {
        if (state.at_decision_instant()) {
            const double t = state.time_s();
            const auto decisions = controller.decide(state);
            step(state, &decisions);
            for (JunctionId j = 0; j < decisions.size(); ++j)
                out.decisions.push_back({t, j, decisions[j], state.signal(j).phase_after()});
        } else {
            step(state, nullptr);
        }
        if (state.tick() % sample_ticks == 0) sample(state, out);
    }
    controller.finish(state);

    const auto &net = state.network();
    out.vehicles.reserve(state.vehicles().size());
    for (const Vehicle &v : state.vehicles())
        out.vehicles.push_back({v.id, v.route, net.route(v.route).direction, v.generated_at_s, v.entered_at_s,
                                v.exited_at_s, v.stop_count});
    out.safety = state.safety();
    return out;
}

TravelTimeSummary average_travel_time(const SimResult &result) {
    TravelTimeSummary s;
    double total = 0.0;
    for (const VehicleRecord &v : result.vehicles) {
        if (!v.completed() || *v.exited_at_s < result.warmup_s || *v.exited_at_s > result.duration_s) continue;
        total += v.travel_time_s();
        ++s.count;
    }
    if (s.count > 0) s.mean_s = total / static_cast<double>(s.count);
    return s;
}

void write_vehicle_csv(const SimResult &result, const std::string &path) {
    CsvWriter csv(path, {"id", "route", "generated_at", "entered_at", "exited_at", "stop_count"});
    for (const VehicleRecord &v : result.vehicles) {
        csv.row_begin();
        csv.field(v.id).field(v.route).field(v.generated_at_s).field(v.entered_at_s).field(v.exited_at_s)
            .field(v.stop_count);
        csv.row_end();
    }
}

void write_lane_csv(const SimResult &result, const std::string &path) {
    CsvWriter csv(path, {"t_s", "link", "count", "queue", "density"});
    for (const LaneSample &s : result.lane_series) {
        csv.row_begin();
        csv.field(s.t_s).field(s.link).field(s.stats.count).field(s.stats.queue).field(s.stats.density);
        csv.row_end();
    }
}

void write_backup_csv(const SimResult &result, const std::string &path) {
    CsvWriter csv(path, {"t_s", "entry_link", "size"});
    for (const BackupSample &s : result.backup_series) {
        csv.row_begin();
        csv.field(s.t_s).field(s.entry_link).field(s.size);
        csv.row_end();
    }
}

void write_decision_csv(const SimResult &result, const std::string &path) {
    CsvWriter csv(path, {"t_s", "junction", "decision", "phase_after"});
    for (const DecisionRecord &d : result.decisions) {
        csv.row_begin();
        csv.field(d.t_s).field(d.junction).field(to_string(d.decision)).field(to_string(d.phase_after));
        csv.row_end();
    }
}

} // namespace corridor
