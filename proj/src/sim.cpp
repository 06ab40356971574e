#include "corridor/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "corridor/csv.hpp"
#include "corridor/rng.hpp"

namespace corridor {

namespace {

constexpr double kMinGap = 1e-3;
constexpr double kStopLineMargin = 1e-6;

Approach approach_of(Direction d) {
    switch (d) {
    case Direction::WE: return Approach::W;
    case Direction::EW: return Approach::E;
    case Direction::NS: return Approach::N;
    case Direction::SN: return Approach::S;
    }
    return Approach::W;
}

/// Largest speed whose IDM desired gap fits into `gap`, capped at v0.
double safe_insertion_speed(const IdmParams &p, double v_lead, double gap) {
    if (std::isinf(gap)) return p.v0;
    if (gap <= p.s0) return 0.0;
    const double c = 1.0 / (2.0 * std::sqrt(p.a_max * p.b_comfort));
    const double lin = p.time_headway_s - v_lead * c;
    const double v = (-lin + std::sqrt(lin * lin + 4.0 * c * (gap - p.s0))) / (2.0 * c);
    return std::clamp(v, 0.0, p.v0);
}

std::int64_t ticks_for(double seconds, double dt, const char *what) {
    const double k = seconds / dt;
    const double r = std::round(k);
    if (std::abs(k - r) > 1e-9) throw ConfigError(std::string(what) + " must be a multiple of dt");
    return static_cast<std::int64_t>(r);
}

} // namespace

double idm_accel(const IdmParams &p, double v, double v_lead, double gap_m) {
    if (!(gap_m > 0.0)) throw std::invalid_argument("idm_accel: gap must be positive");
    const double free_term = std::pow(v / p.v0, p.delta);
    if (std::isinf(gap_m)) return p.a_max * (1.0 - free_term);
    const double s_star =
        p.s0 + std::max(0.0, v * p.time_headway_s + v * (v - v_lead) / (2.0 * std::sqrt(p.a_max * p.b_comfort)));
    const double ratio = s_star / gap_m;
    return p.a_max * (1.0 - free_term - ratio * ratio);
}

Kinematics ballistic_update(double v, double accel, double dt) {
    const double v_new = v + accel * dt;
    if (v_new >= 0.0) return {v * dt + 0.5 * accel * dt * dt, v_new};
    // Stops within the step: travel the remaining braking distance only.
    return {accel < 0.0 ? -v * v / (2.0 * accel) : 0.0, 0.0};
}

void SimConfig::validate() const {
    if (!(dt_s > 0.0)) throw ConfigError("dt must be positive");
    if (!(duration_s > 0.0)) throw ConfigError("duration must be positive");
    if (!(warmup_s >= 0.0) || !(warmup_s < duration_s)) throw ConfigError("warmup must lie in [0, duration)");
    if (!(backup_sample_period_s > 0.0)) throw ConfigError("backup sample period must be positive");
    ticks_for(timing.decision_period_s, dt_s, "decision period");
    ticks_for(timing.amber_s, dt_s, "amber interval");
    ticks_for(backup_sample_period_s, dt_s, "backup sample period");
    if (timing.amber_s >= timing.decision_period_s) throw ConfigError("amber must be shorter than the decision period");
}

std::int64_t SimConfig::ticks_per_decision() const {
    return ticks_for(timing.decision_period_s, dt_s, "decision period");
}

std::int64_t SimConfig::total_ticks() const {
    return static_cast<std::int64_t>(std::floor(duration_s / dt_s + 1e-9));
}

std::vector<double> poisson_arrivals(double rate_vph, double duration_s, std::uint64_t seed) {
    std::vector<double> times;
    if (!(rate_vph > 0.0)) return times;
    Rng rng(seed);
    const double mean_gap = 3600.0 / rate_vph;
    double t = rng.exponential(mean_gap);
    while (t < duration_s) {
        times.push_back(t);
        t += rng.exponential(mean_gap);
    }
    return times;
}

std::uint64_t arrival_stream_key(const CorridorNetwork &net, LinkId entry, bool mirrored) {
    const Link &l = net.link(entry);
    Direction d = l.direction;
    std::uint64_t j = l.downstream_junction.value_or(0);
    if (mirrored) {
        d = mirror(d);
        if (!is_horizontal(d)) j = net.mirror_junction(j);
    }
    if (is_horizontal(d)) j = 0;
    return (static_cast<std::uint64_t>(d) << 32) | j;
}

ArrivalSchedule sample_arrivals(const CorridorNetwork &net, const DemandConfig &demand, double duration_s,
                                std::uint64_t seed, bool mirror_streams) {
    demand.validate();
    ArrivalSchedule schedule(net.links().size());
    for (LinkId e : net.entry_links()) {
        const double rate = demand.rate(net.link(e).direction);
        schedule[e] = poisson_arrivals(rate, duration_s, stream_seed(seed, arrival_stream_key(net, e, mirror_streams)));
    }
    return schedule;
}

SimState::SimState(const CorridorNetwork &net, const DemandConfig &demand, const SimConfig &config)
    : SimState(net, sample_arrivals(net, demand, config.duration_s, config.seed, config.mirror_streams), config) {}

SimState::SimState(const CorridorNetwork &net, ArrivalSchedule arrivals, const SimConfig &config)
    : net_(&net), config_(config), arrivals_(std::move(arrivals)) {
    config_.validate();
    if (arrivals_.size() != net.links().size()) throw ConfigError("arrival schedule does not match the network");
    lanes_.resize(net.links().size());
    backups_.resize(net.links().size());
    arrival_cursor_.assign(net.links().size(), 0);
    for (JunctionId j = 0; j < net.junction_count(); ++j) {
        SignalState s;
        s.junction = j;
        signals_.push_back(s);
    }
}

std::size_t SimState::storage_capacity(LinkId link) const {
    return static_cast<std::size_t>(std::floor(net_->link(link).length_m / config_.insertion_clearance_m));
}

std::size_t SimState::queue_length(LinkId link) const {
    std::size_t q = 0;
    for (VehicleId id : lanes_.at(link))
        if (vehicles_[id].speed_mps < config_.queue_speed_threshold_mps) ++q;
    return q;
}

LaneStats SimState::lane_stats(LinkId link) const {
    LaneStats s;
    s.count = lanes_.at(link).size();
    s.queue = queue_length(link);
    const std::size_t cap = storage_capacity(link);
    s.density = cap == 0 ? 1.0 : std::clamp(static_cast<double>(s.count) / static_cast<double>(cap), 0.0, 1.0);
    return s;
}

std::size_t SimState::in_backup() const {
    std::size_t n = 0;
    for (const auto &b : backups_) n += b.size();
    return n;
}

std::size_t SimState::in_network() const {
    std::size_t n = 0;
    for (const auto &l : lanes_) n += l.size();
    return n;
}

VehicleId SimState::place_vehicle(LinkId link, double position_m, double speed_mps) {
    const Link &l = net_->link(link);
    Vehicle v;
    v.id = vehicles_.size();
    v.route = l.route;
    const auto &route_links = net_->route(l.route).links;
    v.route_index = static_cast<std::size_t>(std::find(route_links.begin(), route_links.end(), link) - route_links.begin());
    v.link = link;
    v.position_m = position_m;
    v.speed_mps = speed_mps;
    v.length_m = config_.idm.vehicle_length_m;
    v.generated_at_s = time_s();
    v.entered_at_s = time_s();
    vehicles_.push_back(v);
    // Keep the lane ordered leader first.
    auto &lane = lanes_[link];
    auto it = std::find_if(lane.begin(), lane.end(),
                           [&](VehicleId other) { return vehicles_[other].position_m < position_m; });
    lane.insert(it, v.id);
    return v.id;
}

void SimState::generate_and_insert() {
    const double t = time_s();
    const double clearance = config_.insertion_clearance_m;
    for (LinkId e : net_->entry_links()) {
        auto &times = arrivals_[e];
        auto &cursor = arrival_cursor_[e];
        while (cursor < times.size() && times[cursor] <= t + 1e-9) {
            Vehicle v;
            v.id = vehicles_.size();
            v.route = net_->link(e).route;
            v.link = e;
            v.length_m = config_.idm.vehicle_length_m;
            v.generated_at_s = times[cursor];
            vehicles_.push_back(v);
            backups_[e].push_back(v.id);
            ++cursor;
        }
        auto &backup = backups_[e];
        if (backup.empty()) continue;
        auto &lane = lanes_[e];
        if (!lane.empty()) {
            const Vehicle &last = vehicles_[lane.back()];
            if (last.position_m - last.length_m < clearance) continue;
        }
        Vehicle &v = vehicles_[backup.front()];
        backup.pop_front();
        v.position_m = v.length_m;
        v.entered_at_s = t;
        lane.push_back(v.id);
        const Obstacle ob = obstacle_ahead(lane.size() - 1, v);
        v.speed_mps = safe_insertion_speed(config_.idm, ob.v_lead, ob.gap_m);
        v.stop_armed = true;
    }
}

SimState::Obstacle SimState::obstacle_ahead(std::size_t lane_pos, const Vehicle &v) {
    const auto &lane = lanes_[v.link];
    if (lane_pos > 0) {
        const Vehicle &leader = vehicles_[lane[lane_pos - 1]];
        return {leader.position_m - leader.length_m - v.position_m, leader.speed_mps, false};
    }
    const Link &link = net_->link(v.link);
    if (!link.downstream_junction) return {kFreeRoad, 0.0, false};

    const double dist = link.length_m - v.position_m;
    Obstacle ob{kFreeRoad, 0.0, false};
    const auto &next_lane = lanes_[*link.next];
    if (!next_lane.empty()) {
        const Vehicle &last = vehicles_[next_lane.back()];
        ob = {dist + last.position_m - last.length_m, last.speed_mps, false};
    }

    const Aspect aspect = signals_[*link.downstream_junction].aspect(approach_of(link.direction));
    bool proceed = aspect == Aspect::Green || v.committed;
    if (!proceed && aspect == Aspect::Amber) {
        const double needed = dist > 0.0 ? v.speed_mps * v.speed_mps / (2.0 * dist) : kFreeRoad;
        if (needed > config_.idm.b_comfort) {
            vehicles_[v.id].committed = true;
            proceed = true;
        }
    }
    if (!proceed && dist < ob.gap_m) ob = {dist, 0.0, true};
    return ob;
}

void SimState::update_stop_counts(VehicleId id) {
    Vehicle &v = vehicles_[id];
    if (v.stop_armed && v.speed_mps < config_.stop_speed_threshold_mps) {
        ++v.stop_count;
        v.stop_armed = false;
    } else if (!v.stop_armed && v.speed_mps > config_.stop_rearm_speed_mps) {
        v.stop_armed = true;
    }
}

void SimState::move_vehicles() {
    const double dt = config_.dt_s;
    const IdmParams &idm = config_.idm;

    // Accelerations from the pre-step snapshot.
    thread_local std::vector<double> accel;
    thread_local std::vector<char> stop_line;
    accel.assign(vehicles_.size(), 0.0);
    stop_line.assign(vehicles_.size(), 0);
    for (const Route &r : net_->routes()) {
        for (LinkId l : r.links) {
            const auto &lane = lanes_[l];
            for (std::size_t i = 0; i < lane.size(); ++i) {
                const Vehicle &v = vehicles_[lane[i]];
                const Obstacle ob = obstacle_ahead(i, v);
                accel[v.id] = idm_accel(idm, v.speed_mps, ob.v_lead, std::max(ob.gap_m, kMinGap));
                stop_line[v.id] = ob.stop_line ? 1 : 0;
            }
        }
    }

    // Update downstream links first so cross-link leaders are already moved.
    for (const Route &r : net_->routes()) {
        for (auto it = r.links.rbegin(); it != r.links.rend(); ++it) {
            const LinkId l = *it;
            const Link &link = net_->link(l);
            auto &lane = lanes_[l];
            for (std::size_t i = 0; i < lane.size(); ++i) {
                Vehicle &v = vehicles_[lane[i]];
                const Kinematics k = ballistic_update(v.speed_mps, accel[v.id], dt);
                double pos = v.position_m + k.advance_m;
                double speed = k.speed_mps;

                double limit = kFreeRoad;
                double limit_speed = 0.0;
                if (i > 0) {
                    const Vehicle &leader = vehicles_[lane[i - 1]];
                    limit = leader.position_m - leader.length_m;
                    limit_speed = leader.speed_mps;
                } else if (stop_line[v.id]) {
                    limit = link.length_m - kStopLineMargin;
                } else if (link.next && !lanes_[*link.next].empty()) {
                    const Vehicle &last = vehicles_[lanes_[*link.next].back()];
                    limit = link.length_m + last.position_m - last.length_m;
                    limit_speed = last.speed_mps;
                }
                if (pos > limit) {
                    if (stop_line[v.id]) ++safety_.stop_line_clamps;
                    else ++safety_.gap_clamps;
                    pos = std::max(limit, v.position_m);
                    speed = std::min(speed, limit_speed);
                }
                v.position_m = pos;
                v.speed_mps = speed;
                update_stop_counts(v.id);
            }
        }
    }
}

void SimState::transfer_and_absorb(double t_end) {
    for (const Route &r : net_->routes()) {
        for (auto it = r.links.rbegin(); it != r.links.rend(); ++it) {
            const Link &link = net_->link(*it);
            auto &lane = lanes_[link.id];
            while (!lane.empty() && vehicles_[lane.front()].position_m >= link.length_m) {
                Vehicle &v = vehicles_[lane.front()];
                lane.pop_front();
                if (!link.next) {
                    v.exited_at_s = t_end;
                    ++exited_;
                    continue;
                }
                const Aspect aspect = signals_[*link.downstream_junction].aspect(approach_of(link.direction));
                if (aspect != Aspect::Green) {
                    if (v.committed && aspect == Aspect::Amber) ++safety_.amber_crossings;
                    else if (!v.committed) ++safety_.red_crossings;
                }
                v.position_m -= link.length_m;
                v.link = *link.next;
                ++v.route_index;
                v.committed = false;
                lanes_[v.link].push_back(v.id);
            }
        }
    }
}

void step(SimState &s, const std::vector<ControlDecision> *controls) {
    const double t = s.time_s();
    if (controls) {
        if (controls->size() != s.signals_.size())
            throw SimError("expected " + std::to_string(s.signals_.size()) + " decisions, got " +
                           std::to_string(controls->size()));
        if (!s.at_decision_instant())
            throw TimingError("decision supplied off the decision grid at t=" + std::to_string(t));
        for (std::size_t j = 0; j < controls->size(); ++j)
            apply_decision(s.signals_[j], (*controls)[j], t, s.config_.timing);
    }
    s.generate_and_insert();
    s.move_vehicles();
    s.transfer_and_absorb(t + s.config_.dt_s);
    for (auto &sig : s.signals_) advance_signal(sig, s.config_.dt_s, s.config_.timing);
    ++s.tick_;
    if (s.config_.check_invariants) s.check_invariants();
}

void SimState::check_invariants() const {
    const std::size_t accounted = in_backup() + in_network() + exited_;
    if (accounted != vehicles_.size())
        throw SimError("conservation violated at t=" + std::to_string(time_s()) + ": generated " +
                       std::to_string(vehicles_.size()) + ", accounted " + std::to_string(accounted));
    for (const Link &link : net_->links()) {
        const auto &lane = lanes_[link.id];
        for (std::size_t i = 0; i < lane.size(); ++i) {
            const Vehicle &v = vehicles_[lane[i]];
            if (v.speed_mps < 0.0 || !std::isfinite(v.speed_mps))
                throw SimError("negative or non-finite speed for vehicle " + std::to_string(v.id));
            if (v.position_m < 0.0 || v.position_m > link.length_m)
                throw SimError("vehicle " + std::to_string(v.id) + " outside its link");
            if (!v.entered_at_s || *v.entered_at_s < v.generated_at_s)
                throw SimError("vehicle " + std::to_string(v.id) + " entered before it was generated");
            if (i > 0) {
                const Vehicle &leader = vehicles_[lane[i - 1]];
                if (leader.position_m - leader.length_m - v.position_m < -1e-9)
                    throw SimError("overlap between vehicles " + std::to_string(leader.id) + " and " +
                                   std::to_string(v.id) + " on link " + std::to_string(link.id));
            }
        }
        if (!lane.empty() && link.next && !lanes_[*link.next].empty()) {
            const Vehicle &front = vehicles_[lane.front()];
            const Vehicle &last = vehicles_[lanes_[*link.next].back()];
            if (link.length_m - front.position_m + last.position_m - last.length_m < -1e-9)
                throw SimError("overlap across the downstream end of link " + std::to_string(link.id));
        }
    }
}

} // namespace corridor
