#include "corridor/signal.hpp"

#include <cmath>

namespace corridor {

namespace {
constexpr double kGridTol = 1e-9;
}

std::string to_string(PhaseId p) { return p == PhaseId::WE_GREEN ? "WE_GREEN" : "NS_GREEN"; }
std::string to_string(ControlDecision d) { return d == ControlDecision::Keep ? "KEEP" : "SWITCH"; }

Aspect SignalState::aspect(Approach a) const {
    if (serving_phase(a) != current_phase) return Aspect::Red;
    return mode == SignalMode::Green ? Aspect::Green : Aspect::Amber;
}

bool is_decision_instant(double t_s, const SignalTiming &timing) {
    const double k = t_s / timing.decision_period_s;
    return std::abs(k - std::round(k)) < kGridTol;
}

void apply_decision(SignalState &state, ControlDecision decision, double t_s, const SignalTiming &timing) {
    if (!is_decision_instant(t_s, timing))
        throw TimingError("decision at t=" + std::to_string(t_s) + " s is off the decision grid");
    if (state.mode != SignalMode::Green)
        throw TimingError("decision at junction " + std::to_string(state.junction) + " while amber");
    if (decision == ControlDecision::Switch) {
        state.mode = SignalMode::Amber;
        state.pending_phase = other(state.current_phase);
    } else {
        state.pending_phase = state.current_phase;
    }
    state.mode_elapsed_s = 0.0;
}

void advance_signal(SignalState &state, double dt, const SignalTiming &timing) {
    state.mode_elapsed_s += dt;
    if (state.mode == SignalMode::Amber && state.mode_elapsed_s >= timing.amber_s - kGridTol) {
        state.mode_elapsed_s -= timing.amber_s;
        if (std::abs(state.mode_elapsed_s) < kGridTol) state.mode_elapsed_s = 0.0;
        state.mode = SignalMode::Green;
        state.current_phase = state.pending_phase;
    }
}

double phase_pressure(PhaseId phase, const PressureInput &q) {
    double p = 0.0;
    for (Approach a : kApproaches) {
        if (serving_phase(a) != phase) continue;
        const auto i = static_cast<std::size_t>(a);
        p += q.upstream[i] - q.downstream[i];
    }
    return p;
}

ControlDecision max_pressure_decide(PhaseId current, const PressureInput &q) {
    const double mine = phase_pressure(current, q);
    const double theirs = phase_pressure(other(current), q);
    return theirs > mine ? ControlDecision::Switch : ControlDecision::Keep;
}

} // namespace corridor
