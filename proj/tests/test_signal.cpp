#include <doctest.h>

#include <vector>

#include "corridor/rng.hpp"
#include "corridor/signal.hpp"

using namespace corridor;

namespace {

constexpr double kDt = 0.5;

// Aspect of the W approach at the start of every tick over [t0, t1), driving the
// state machine tick by tick and applying `decisions` at successive decision instants.
struct Timeline {
    std::vector<Aspect> we;
    std::vector<Aspect> ns;
};

Timeline drive(SignalState &s, const std::vector<ControlDecision> &decisions) {
    Timeline tl;
    const int ticks_per_window = 34;
    for (std::size_t k = 0; k < decisions.size(); ++k) {
        apply_decision(s, decisions[k], 17.0 * static_cast<double>(k));
        for (int i = 0; i < ticks_per_window; ++i) {
            tl.we.push_back(s.aspect(Approach::W));
            tl.ns.push_back(s.aspect(Approach::N));
            advance_signal(s, kDt);
        }
    }
    return tl;
}

double seconds_with(const std::vector<Aspect> &tl, std::size_t from, std::size_t to, Aspect a) {
    double s = 0.0;
    for (std::size_t i = from; i < to; ++i) s += tl[i] == a ? kDt : 0.0;
    return s;
}

} // namespace

TEST_CASE("KEEP holds the same phase green for the whole 17 s window") {
    SignalState s;
    const Timeline tl = drive(s, {ControlDecision::Keep, ControlDecision::Keep});
    CHECK(seconds_with(tl.we, 34, 68, Aspect::Green) == 17.0);
    CHECK(seconds_with(tl.ns, 34, 68, Aspect::Red) == 17.0);
    CHECK(s.current_phase == PhaseId::WE_GREEN);
}

TEST_CASE("SWITCH gives exactly 2 s amber then 15 s of the new phase") {
    SignalState s;
    const Timeline tl = drive(s, {ControlDecision::Keep, ControlDecision::Switch});
    // Window [17, 34): ticks 34..67.
    for (std::size_t i = 34; i < 38; ++i) {
        CHECK(tl.we[i] == Aspect::Amber);
        CHECK(tl.ns[i] == Aspect::Red);
    }
    for (std::size_t i = 38; i < 68; ++i) {
        CHECK(tl.we[i] == Aspect::Red);
        CHECK(tl.ns[i] == Aspect::Green);
    }
    CHECK(seconds_with(tl.we, 34, 68, Aspect::Amber) == 2.0);
    CHECK(seconds_with(tl.ns, 34, 68, Aspect::Green) == 15.0);
    CHECK(s.current_phase == PhaseId::NS_GREEN);
    CHECK(s.mode == SignalMode::Green);
}

TEST_CASE("two consecutive switches return to the original phase after 34 s") {
    SignalState s;
    drive(s, {ControlDecision::Switch, ControlDecision::Switch});
    CHECK(s.current_phase == PhaseId::WE_GREEN);
    CHECK(s.mode == SignalMode::Green);
}

TEST_CASE("every window is 17 s of green, or 2 s amber plus 15 s green") {
    Rng rng(42);
    SignalState s;
    std::vector<ControlDecision> d;
    for (int k = 0; k < 200; ++k) d.push_back(rng.uniform() < 0.5 ? ControlDecision::Keep : ControlDecision::Switch);
    const Timeline tl = drive(s, d);
    for (std::size_t k = 0; k < d.size(); ++k) {
        const std::size_t a = 34 * k, b = a + 34;
        const double amber = seconds_with(tl.we, a, b, Aspect::Amber) + seconds_with(tl.ns, a, b, Aspect::Amber);
        const double green = seconds_with(tl.we, a, b, Aspect::Green) + seconds_with(tl.ns, a, b, Aspect::Green);
        if (d[k] == ControlDecision::Switch) {
            CHECK(amber == 2.0);
            CHECK(green == 15.0);
        } else {
            CHECK(amber == 0.0);
            CHECK(green == 17.0);
        }
    }
}

TEST_CASE("decisions off the 17 s grid or during amber are rejected") {
    CHECK(is_decision_instant(0.0));
    CHECK(is_decision_instant(17.0));
    CHECK(is_decision_instant(9996.0));
    CHECK_FALSE(is_decision_instant(16.5));
    CHECK_FALSE(is_decision_instant(17.5));
    SignalState s;
    CHECK_THROWS_AS(apply_decision(s, ControlDecision::Keep, 8.5), TimingError);
    apply_decision(s, ControlDecision::Switch, 17.0);
    CHECK(s.mode == SignalMode::Amber);
    CHECK(s.phase_after() == PhaseId::NS_GREEN);
    CHECK_THROWS_AS(apply_decision(s, ControlDecision::Keep, 34.0), TimingError);
}

TEST_CASE("MaxPressure hand-evaluated examples") {
    PressureInput q;
    q.upstream = {5, 3, 2, 1};
    CHECK(phase_pressure(PhaseId::WE_GREEN, q) == 8.0);
    CHECK(phase_pressure(PhaseId::NS_GREEN, q) == 3.0);
    CHECK(max_pressure_decide(PhaseId::NS_GREEN, q) == ControlDecision::Switch);
    CHECK(max_pressure_decide(PhaseId::WE_GREEN, q) == ControlDecision::Keep);

    CHECK(max_pressure_decide(PhaseId::WE_GREEN, PressureInput{}) == ControlDecision::Keep);
    CHECK(max_pressure_decide(PhaseId::NS_GREEN, PressureInput{}) == ControlDecision::Keep);

    PressureInput q2;
    q2.upstream = {1, 1, 4, 4};
    CHECK(phase_pressure(PhaseId::NS_GREEN, q2) == 8.0);
    CHECK(max_pressure_decide(PhaseId::WE_GREEN, q2) == ControlDecision::Switch);

    PressureInput q3;
    q3.upstream = {6, 0, 3, 0};
    q3.downstream = {4, 0, 0, 0};
    CHECK(phase_pressure(PhaseId::WE_GREEN, q3) == 2.0);
    CHECK(max_pressure_decide(PhaseId::WE_GREEN, q3) == ControlDecision::Switch);
}

TEST_CASE("adding a constant to every queue leaves pressures and decisions unchanged") {
    Rng rng(7);
    for (int trial = 0; trial < 500; ++trial) {
        PressureInput q;
        for (std::size_t i = 0; i < 4; ++i) {
            q.upstream[i] = static_cast<double>(rng.below(30));
            q.downstream[i] = static_cast<double>(rng.below(30));
        }
        PressureInput shifted = q;
        const double c = static_cast<double>(rng.below(50));
        for (std::size_t i = 0; i < 4; ++i) {
            shifted.upstream[i] += c;
            shifted.downstream[i] += c;
        }
        for (PhaseId p : {PhaseId::WE_GREEN, PhaseId::NS_GREEN}) {
            CHECK(phase_pressure(p, shifted) == phase_pressure(p, q));
            CHECK(max_pressure_decide(p, shifted) == max_pressure_decide(p, q));
        }
    }
}

TEST_CASE("one saturated approach is served within one decision") {
    for (Approach a : kApproaches) {
        PressureInput q;
        q.upstream[static_cast<std::size_t>(a)] = 42.0;
        const PhaseId serving = serving_phase(a);
        CHECK(max_pressure_decide(other(serving), q) == ControlDecision::Switch);
        CHECK(max_pressure_decide(serving, q) == ControlDecision::Keep);
    }
}
