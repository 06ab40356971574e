#pragma once

#include "corridor/sim.hpp"

namespace corridor {

/// Queue counts around a junction as seen by MaxPressure.
PressureInput pressure_input(const SimState &state, JunctionId junction);

class MaxPressureController : public Controller {
  public:
    std::string name() const override { return "maxpressure"; }
    std::vector<ControlDecision> decide(const SimState &state) override;
};

/// Switches at every decision instant: 15 s green per phase, 34 s cycle.
class FixedCycleController : public Controller {
  public:
    std::string name() const override { return "fixedcycle"; }
    std::vector<ControlDecision> decide(const SimState &state) override;
};

/// Never switches; the initial WE_GREEN phase stays green for the whole run.
class KeepController : public Controller {
  public:
    std::string name() const override { return "keep"; }
    std::vector<ControlDecision> decide(const SimState &state) override;
};

} // namespace corridor
