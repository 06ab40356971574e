#include "corridor/controllers.hpp"

namespace corridor {

PressureInput pressure_input(const SimState &state, JunctionId junction) {
    const CorridorNetwork &net = state.network();
    PressureInput q;
    for (Approach a : kApproaches) {
        const auto i = static_cast<std::size_t>(a);
        const Link &in = net.link(net.approach_link(junction, a));
        q.upstream[i] = static_cast<double>(state.queue_length(in.id));
        const Link &out = net.link(*in.next);
        q.downstream[i] = out.kind == LinkKind::Exit ? 0.0 : static_cast<double>(state.queue_length(out.id));
    }
    return q;
}

std::vector<ControlDecision> MaxPressureController::decide(const SimState &state) {
    std::vector<ControlDecision> out;
    for (const SignalState &s : state.signals())
        out.push_back(max_pressure_decide(s.current_phase, pressure_input(state, s.junction)));
    return out;
}

std::vector<ControlDecision> FixedCycleController::decide(const SimState &state) {
    return std::vector<ControlDecision>(state.signals().size(), ControlDecision::Switch);
}

std::vector<ControlDecision> KeepController::decide(const SimState &state) {
    return std::vector<ControlDecision>(state.signals().size(), ControlDecision::Keep);
}

} // namespace corridor
