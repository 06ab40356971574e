#pragma once

#include <array>
#include <string>

#include "corridor/net.hpp"

namespace corridor {

/// WE_GREEN serves the WE and EW movements, NS_GREEN serves NS and SN.
enum class PhaseId { WE_GREEN = 0, NS_GREEN = 1 };
enum class SignalMode { Green, Amber };
enum class ControlDecision { Keep = 0, Switch = 1 };
enum class Aspect { Green, Amber, Red };

std::string to_string(PhaseId p);
std::string to_string(ControlDecision d);

constexpr PhaseId other(PhaseId p) { return p == PhaseId::WE_GREEN ? PhaseId::NS_GREEN : PhaseId::WE_GREEN; }
constexpr PhaseId serving_phase(Approach a) {
    return (a == Approach::W || a == Approach::E) ? PhaseId::WE_GREEN : PhaseId::NS_GREEN;
}

struct SignalTiming {
    double decision_period_s = 17.0;
    double amber_s = 2.0;
};

class TimingError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

/// Two-phase signal at one junction. During amber, `current_phase` is the
/// terminating phase and `pending_phase` the one that turns green next.
struct SignalState {
    JunctionId junction = 0;
    PhaseId current_phase = PhaseId::WE_GREEN;
    SignalMode mode = SignalMode::Green;
    double mode_elapsed_s = 0.0;
    PhaseId pending_phase = PhaseId::WE_GREEN;

    Aspect aspect(Approach a) const;
    /// Phase that is (or will be, once amber ends) green.
    PhaseId phase_after() const { return mode == SignalMode::Amber ? pending_phase : current_phase; }
};

/// True iff `t_s` is a multiple of the decision period.
bool is_decision_instant(double t_s, const SignalTiming &timing = {});

/// Applies a decision taken at time `t_s`. Throws TimingError off-grid or while amber.
void apply_decision(SignalState &state, ControlDecision decision, double t_s, const SignalTiming &timing = {});

/// Advances the state machine by dt. Amber turns into green of the pending
/// phase after exactly `timing.amber_s`.
void advance_signal(SignalState &state, double dt, const SignalTiming &timing = {});

/// Queue counts per approach (W, E, N, S) on the incoming links and on the
/// links those movements discharge into (0 for exit links).
struct PressureInput {
    std::array<double, 4> upstream{};
    std::array<double, 4> downstream{};
};

double phase_pressure(PhaseId phase, const PressureInput &q);

/// MaxPressure: switch iff the competing phase has strictly higher pressure.
ControlDecision max_pressure_decide(PhaseId current, const PressureInput &q);

} // namespace corridor
