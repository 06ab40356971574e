#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "corridor/sim.hpp"

namespace corridor {

enum class ArchitectureKind { Centralized, FullyDecentralized, ParameterSharing, MaxPressure };

std::string to_string(ArchitectureKind k);
/// Accepts "centralized", "fd", "ps", "maxpressure" (and the long names).
ArchitectureKind parse_architecture(const std::string &s);

struct ObservationConfig {
    /// Append a one-hot of the current phase per junction.
    bool phase_feature = false;
};

/// Per-junction observation length (4, or 6 with the phase feature).
std::size_t local_observation_size(const ObservationConfig &cfg);

/// Densities of the W, E, N, S incoming lanes at one junction, each in [0, 1].
std::vector<double> observe_local(const SimState &state, JunctionId junction, const ObservationConfig &cfg = {});
/// Concatenation of the local observations of J1..Jn.
std::vector<double> observe_global(const SimState &state, const ObservationConfig &cfg = {});

/// Negative sum of queue counts on the four incoming lanes.
double reward_local(const SimState &state, JunctionId junction);
double reward_global(const SimState &state);

/// 0 -> KEEP, 1 -> SWITCH, one bit per junction.
std::vector<ControlDecision> apply_actions(std::span<const int> actions, std::size_t junctions);

struct Transition {
    std::vector<double> observation;
    std::vector<int> action;
    double log_prob = 0.0;
    double reward = 0.0;
    double value = 0.0;
    bool done = false;
    std::optional<JunctionId> junction;
};

} // namespace corridor
