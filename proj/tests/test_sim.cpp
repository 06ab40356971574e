#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "corridor/controllers.hpp"
#include "corridor/rng.hpp"
#include "corridor/sim.hpp"

using namespace corridor;

namespace {

// Textbook IDM, written out independently of the library.
double idm_oracle(double v, double v_lead, double gap, const IdmParams &p) {
    const double s_star = p.s0 + std::max(0.0, v * p.time_headway_s + v * (v - v_lead) / (2.0 * std::sqrt(p.a_max * p.b_comfort)));
    const double free = std::pow(v / p.v0, p.delta);
    const double inter = std::isinf(gap) ? 0.0 : (s_star / gap) * (s_star / gap);
    return p.a_max * (1.0 - free - inter);
}

std::vector<ControlDecision> keep_all(const SimState &s) {
    return std::vector<ControlDecision>(s.network().junction_count(), ControlDecision::Keep);
}

void step_keep(SimState &s) {
    if (s.at_decision_instant()) {
        const auto d = keep_all(s);
        step(s, &d);
    } else {
        step(s, nullptr);
    }
}

std::size_t exited_between(const SimResult &r, Direction d, double from, double to) {
    return std::count_if(r.vehicles.begin(), r.vehicles.end(), [&](const VehicleRecord &v) {
        return v.direction == d && v.completed() && *v.exited_at_s >= from && *v.exited_at_s < to;
    });
}

} // namespace

TEST_CASE("Poisson arrivals: zero rate, unit rate and truncation") {
    CHECK(poisson_arrivals(0.0, 10000.0, 3).empty());
    double total = 0.0;
    const int seeds = 2000;
    for (int s = 0; s < seeds; ++s) {
        const auto a = poisson_arrivals(3600.0, 10.0, stream_seed(99, s));
        for (double t : a) CHECK((t >= 0.0 && t < 10.0));
        CHECK(std::is_sorted(a.begin(), a.end()));
        total += static_cast<double>(a.size());
    }
    // Mean 10, standard error sqrt(10 / 2000).
    CHECK(std::abs(total / seeds - 10.0) < 4.0 * std::sqrt(10.0 / seeds));
}

TEST_CASE("Poisson arrivals at 700 veh/h over 10000 s match the Poisson moments") {
    const double mean_expected = 700.0 * 10000.0 / 3600.0;
    std::vector<double> counts;
    std::vector<double> gaps;
    for (int s = 1; s <= 100; ++s) {
        const auto a = poisson_arrivals(700.0, 10000.0, stream_seed(s, 5));
        counts.push_back(static_cast<double>(a.size()));
        for (std::size_t i = 1; i < a.size(); ++i) gaps.push_back(a[i] - a[i - 1]);
    }
    const double mean = std::accumulate(counts.begin(), counts.end(), 0.0) / counts.size();
    double var = 0.0;
    for (double c : counts) var += (c - mean) * (c - mean);
    var /= counts.size() - 1;
    CHECK(std::abs(mean - mean_expected) <= 3.0 * std::sqrt(mean_expected / 100.0));
    CHECK(std::abs(var - mean) <= 0.15 * mean);
    const double gap_mean = std::accumulate(gaps.begin(), gaps.end(), 0.0) / gaps.size();
    CHECK(gap_mean == doctest::Approx(3600.0 / 700.0).epsilon(0.01));
}

TEST_CASE("entry links get independent streams and demand rates") {
    const CorridorNetwork net(CorridorSpec{3, 300.0});
    const auto sched = sample_arrivals(net, DemandConfig{700, 0, 350, 350}, 10000.0, 11);
    std::size_t nonempty = 0;
    for (LinkId e : net.entry_links()) {
        const Link &l = net.link(e);
        if (l.direction == Direction::EW) CHECK(sched[e].empty());
        if (!sched[e].empty()) ++nonempty;
    }
    CHECK(nonempty == 1 + 6);
    const LinkId n0 = net.approach_link(0, Approach::N), n1 = net.approach_link(1, Approach::N);
    CHECK(sched[n0] != sched[n1]);
}

TEST_CASE("IDM acceleration matches the closed form") {
    const IdmParams p;
    CHECK(idm_accel(p, p.v0, p.v0, kFreeRoad) == doctest::Approx(0.0));
    CHECK(idm_accel(p, 0.0, 0.0, kFreeRoad) == doctest::Approx(2.0));
    CHECK(idm_accel(p, 0.0, 0.0, p.s0) == doctest::Approx(0.0));
    for (double v : {0.0, 3.0, 8.0, 13.0})
        for (double vl : {0.0, 5.0, 13.89})
            for (double gap : {2.5, 10.0, 40.0, 200.0}) CHECK(idm_accel(p, v, vl, gap) == doctest::Approx(idm_oracle(v, vl, gap, p)));
    CHECK_THROWS(idm_accel(p, 5.0, 5.0, 0.0));
    CHECK_THROWS(idm_accel(p, 5.0, 5.0, -1.0));
}

TEST_CASE("ballistic update stops in place instead of reversing") {
    const Kinematics k = ballistic_update(1.0, -4.0, 0.5);
    CHECK(k.speed_mps == 0.0);
    CHECK(k.advance_m == doctest::Approx(1.0 * 1.0 / (2.0 * 4.0)));
    const Kinematics free = ballistic_update(2.0, 1.0, 0.5);
    CHECK(free.speed_mps == doctest::Approx(2.5));
    CHECK(free.advance_m == doctest::Approx(2.0 * 0.5 + 0.5 * 1.0 * 0.25));
}

TEST_CASE("a vehicle at rest 100 m before a green stop line reaches 1.0 m/s after one step") {
    const CorridorNetwork net(CorridorSpec{1, 300.0});
    SimConfig cfg;
    cfg.duration_s = 100.0;
    cfg.warmup_s = 0.0;
    SimState s(net, ArrivalSchedule(net.links().size()), cfg);
    const LinkId w = net.approach_link(0, Approach::W);
    const VehicleId id = s.place_vehicle(w, 200.0, 0.0);
    step_keep(s);
    CHECK(s.vehicles()[id].speed_mps == doctest::Approx(1.0));
    CHECK(s.vehicles()[id].position_m == doctest::Approx(200.25));
}

TEST_CASE("an empty network only advances the clock") {
    const CorridorNetwork net(CorridorSpec{3, 300.0});
    SimConfig cfg;
    cfg.duration_s = 200.0;
    cfg.warmup_s = 0.0;
    SimState s(net, DemandConfig{}, cfg);
    for (int i = 0; i < 100; ++i) step_keep(s);
    CHECK(s.time_s() == 50.0);
    CHECK(s.generated() == 0);
    CHECK(s.in_network() == 0);
    KeepController keep;
    const SimResult r = run(net, DemandConfig{}, cfg, keep);
    CHECK(r.vehicles.empty());
    for (const auto &b : r.backup_series) CHECK(b.size == 0);
    for (const auto &l : r.lane_series) CHECK(l.stats.count == 0);
}

TEST_CASE("vehicles are conserved and never overlap or run red lights") {
    for (std::size_t n : {1u, 3u}) {
        const CorridorNetwork net(CorridorSpec{n, 300.0});
        for (const DemandConfig &d : {DemandConfig{700, 500, 300, 900}, DemandConfig{1300, 1300, 1300, 1300}}) {
            SimConfig cfg;
            cfg.duration_s = 3000.0;
            cfg.seed = 17 + n;
            cfg.check_invariants = true;
            MaxPressureController mp;
            SimState s(net, d, cfg);
            while (!s.finished()) {
                if (s.at_decision_instant()) {
                    const auto dec = mp.decide(s);
                    step(s, &dec);
                } else {
                    step(s, nullptr);
                }
                REQUIRE(s.generated() == s.in_backup() + s.in_network() + s.exited());
            }
            CHECK(s.safety().red_crossings == 0);
            CHECK(s.safety().gap_clamps == 0);
            for (LinkId l = 0; l < net.links().size(); ++l) {
                const LaneStats st = s.lane_stats(l);
                CHECK(st.queue <= st.count);
                CHECK(st.count <= s.storage_capacity(l));
                CHECK((st.density >= 0.0 && st.density <= 1.0));
            }
        }
    }
}

TEST_CASE("storage capacity and density use floor(l / 7)") {
    const CorridorNetwork net(CorridorSpec{1, 700.0});
    SimConfig cfg;
    cfg.duration_s = 100.0;
    cfg.warmup_s = 0.0;
    SimState s(net, ArrivalSchedule(net.links().size()), cfg);
    const LinkId w = net.approach_link(0, Approach::W);
    CHECK(s.storage_capacity(w) == 100);
    for (int i = 0; i < 25; ++i) s.place_vehicle(w, 690.0 - 7.0 * i, 0.0);
    CHECK(s.lane_stats(w).count == 25);
    CHECK(s.lane_stats(w).queue == 25);
    CHECK(s.lane_stats(w).density == doctest::Approx(0.25));
}

TEST_CASE("runs are bit-for-bit reproducible and seeds matter") {
    const CorridorNetwork net(CorridorSpec{3, 300.0});
    SimConfig cfg;
    cfg.duration_s = 2000.0;
    cfg.seed = 5;
    const DemandConfig d{700, 700, 700, 700};
    MaxPressureController a, b, c;
    const SimResult r1 = run(net, d, cfg, a);
    const SimResult r2 = run(net, d, cfg, b);
    REQUIRE(r1.vehicles.size() == r2.vehicles.size());
    for (std::size_t i = 0; i < r1.vehicles.size(); ++i) {
        CHECK(r1.vehicles[i].generated_at_s == r2.vehicles[i].generated_at_s);
        CHECK(r1.vehicles[i].exited_at_s == r2.vehicles[i].exited_at_s);
        CHECK(r1.vehicles[i].stop_count == r2.vehicles[i].stop_count);
    }
    cfg.seed = 6;
    const SimResult r3 = run(net, d, cfg, c);
    CHECK(r3.vehicles.size() != r1.vehicles.size());
}

TEST_CASE("reflecting west and east gives the mirrored run") {
    const CorridorNetwork net(CorridorSpec{3, 300.0});
    SimConfig cfg;
    cfg.duration_s = 3000.0;
    cfg.seed = 21;
    const DemandConfig d{900, 400, 600, 300};
    FixedCycleController f1, f2;
    const SimResult r = run(net, d, cfg, f1);
    cfg.mirror_streams = true;
    const SimResult m = run(net, d.mirrored(), cfg, f2);

    using Key = std::tuple<double, double, int>;
    const auto keys = [](const SimResult &res, Direction dir) {
        std::vector<Key> k;
        for (const auto &v : res.vehicles)
            if (v.direction == dir && v.completed()) k.emplace_back(v.generated_at_s, *v.exited_at_s, v.stop_count);
        std::sort(k.begin(), k.end());
        return k;
    };
    CHECK(keys(r, Direction::WE) == keys(m, Direction::EW));
    CHECK(keys(r, Direction::EW) == keys(m, Direction::WE));
    CHECK(keys(r, Direction::NS) == keys(m, Direction::NS));
    CHECK(keys(r, Direction::SN) == keys(m, Direction::SN));
    CHECK(!keys(r, Direction::WE).empty());
}

TEST_CASE("free-flow traversal time is frozen as a regression value") {
    // Two links of l at v0 plus the start-up offset measured once (0.58 s).
    const double l = 700.0;
    const CorridorNetwork net(CorridorSpec{1, l});
    SimConfig cfg;
    cfg.duration_s = 10000.0;
    cfg.seed = 3;
    KeepController keep;
    const SimResult r = run(net, DemandConfig{100, 0, 0, 0}, cfg, keep);
    const TravelTimeSummary att = average_travel_time(r);
    REQUIRE(att.count > 100);
    for (const auto &v : r.vehicles)
        if (v.completed()) CHECK(v.stop_count == 0);
    const double free_flow = 2.0 * l / cfg.idm.v0;
    CHECK(att.mean_s > free_flow);
    CHECK(att.mean_s == doctest::Approx(free_flow + 0.58).epsilon(0.01));
}

TEST_CASE("continuous green discharges at the frozen saturation flow") {
    const CorridorNetwork net(CorridorSpec{1, 300.0});
    SimConfig cfg;
    cfg.duration_s = 4600.0;
    cfg.warmup_s = 1000.0;
    KeepController keep;
    const SimResult r = run(net, DemandConfig{3600, 0, 0, 0}, cfg, keep);
    const double per_hour = static_cast<double>(exited_between(r, Direction::WE, 1000.0, 4600.0));
    CHECK(per_hour >= 1700.0);
    CHECK(per_hour <= 1900.0);
}

TEST_CASE("a stopped vehicle counts one stop per stop event") {
    const CorridorNetwork net(CorridorSpec{1, 300.0});
    SimConfig cfg;
    cfg.duration_s = 200.0;
    cfg.warmup_s = 0.0;
    // Arrivals on the north approach only while WE is green: they must stop.
    ArrivalSchedule sched(net.links().size());
    sched[net.approach_link(0, Approach::N)] = {0.0};
    KeepController keep;
    SimState s(net, sched, cfg);
    const SimResult r = run(s, keep);
    REQUIRE(r.vehicles.size() == 1);
    CHECK(r.vehicles[0].stop_count == 1);
    CHECK_FALSE(r.vehicles[0].completed());
    CHECK(s.queue_length(net.approach_link(0, Approach::N)) == 1);
}
