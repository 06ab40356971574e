#include "corridor/mdp.hpp"

#include <algorithm>
#include <cctype>

namespace corridor {

std::string to_string(ArchitectureKind k) {
    switch (k) {
    case ArchitectureKind::Centralized: return "centralized";
    case ArchitectureKind::FullyDecentralized: return "fd";
    case ArchitectureKind::ParameterSharing: return "ps";
    case ArchitectureKind::MaxPressure: return "maxpressure";
    }
    return "?";
}

ArchitectureKind parse_architecture(const std::string &s) {
    std::string k = s;
    std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (k == "centralized") return ArchitectureKind::Centralized;
    if (k == "fd" || k == "fully_decentralized") return ArchitectureKind::FullyDecentralized;
    if (k == "ps" || k == "parameter_sharing") return ArchitectureKind::ParameterSharing;
    if (k == "maxpressure" || k == "max_pressure") return ArchitectureKind::MaxPressure;
    throw ConfigError("unknown architecture '" + s + "'");
}

std::size_t local_observation_size(const ObservationConfig &cfg) { return cfg.phase_feature ? 6 : 4; }

std::vector<double> observe_local(const SimState &state, JunctionId junction, const ObservationConfig &cfg) {
    std::vector<double> obs;
    obs.reserve(local_observation_size(cfg));
    for (Approach a : kApproaches) obs.push_back(state.lane_stats(state.network().approach_link(junction, a)).density);
    if (cfg.phase_feature) {
        const PhaseId p = state.signal(junction).phase_after();
        obs.push_back(p == PhaseId::WE_GREEN ? 1.0 : 0.0);
        obs.push_back(p == PhaseId::NS_GREEN ? 1.0 : 0.0);
    }
    return obs;
}

std::vector<double> observe_global(const SimState &state, const ObservationConfig &cfg) {
    std::vector<double> obs;
    for (JunctionId j = 0; j < state.network().junction_count(); ++j) {
        const auto local = observe_local(state, j, cfg);
        obs.insert(obs.end(), local.begin(), local.end());
    }
    return obs;
}

double reward_local(const SimState &state, JunctionId junction) {
    double q = 0.0;
    for (Approach a : kApproaches)
        q += static_cast<double>(state.queue_length(state.network().approach_link(junction, a)));
    return -q;
}

double reward_global(const SimState &state) {
    double r = 0.0;
    for (JunctionId j = 0; j < state.network().junction_count(); ++j) r += reward_local(state, j);
    return r;
}

std::vector<ControlDecision> apply_actions(std::span<const int> actions, std::size_t junctions) {
    if (actions.size() != junctions)
        throw std::invalid_argument("expected " + std::to_string(junctions) + " action bits, got " +
                                    std::to_string(actions.size()));
    std::vector<ControlDecision> out;
    out.reserve(actions.size());
    for (int a : actions) {
        if (a != 0 && a != 1) throw std::invalid_argument("action bits must be 0 or 1");
        out.push_back(a ? ControlDecision::Switch : ControlDecision::Keep);
    }
    return out;
}

} // namespace corridor
