#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "corridor/mdp.hpp"
#include "corridor/nn.hpp"
#include "corridor/sim.hpp"

namespace corridor {

struct PpoConfig {
    double gamma = 0.99;
    double gae_lambda = 0.95;
    double clip_eps = 0.2;
    int epochs_per_update = 4;
    std::size_t minibatch_size = 256;
    double lr = 3e-4;
    double value_coef = 0.5;
    double entropy_coef = 0.01;
    /// Global gradient-norm clip per network; <= 0 disables.
    double max_grad_norm = 0.5;
    /// Multiplies rewards before advantage/return computation (training only).
    double reward_scale = 0.01;
    int episodes = 500;
    double episode_duration_s = 10000.0;
    int eval_every = 10;
    std::uint64_t train_seed = 1;
    std::uint64_t eval_seed = 1000003;
    DemandConfig demand{700.0, 700.0, 700.0, 700.0};
    std::vector<std::size_t> hidden{64, 64};
    ObservationConfig observation;

    void validate() const;
    nlohmann::json to_json() const;
    static PpoConfig from_json(const nlohmann::json &j);
};

struct GaeResult {
    std::vector<double> advantages;
    std::vector<double> returns;
};

/// Generalized advantage estimation over one trajectory.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values, double bootstrap_value,
                      double gamma, double lambda);

struct PpoSample {
    std::vector<double> observation;
    std::vector<int> action;
    double log_prob_old = 0.0;
    double advantage = 0.0;
    double ret = 0.0;
};

/// Rescales advantages to mean 0, std 1 (std guarded by 1e-8).
void normalize_advantages(std::span<PpoSample> batch);

struct PpoLoss {
    double total = 0.0;
    double policy = 0.0;
    double value = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
    std::vector<double> actor_grad;
    std::vector<double> critic_grad;
};

/// Clipped surrogate + value_coef * MSE - entropy_coef * entropy, averaged over the batch,
/// with gradients w.r.t. actor and critic parameters.
PpoLoss ppo_loss(std::span<const PpoSample> batch, const nn::ActorCritic &net, const PpoConfig &cfg);

/// Trained parameters for one architecture: one agent for centralized and
/// parameter sharing, one per junction for fully decentralized.
struct PolicySet {
    ArchitectureKind kind = ArchitectureKind::ParameterSharing;
    std::size_t n = 1;
    ObservationConfig observation;
    std::vector<nn::ActorCritic> agents;

    std::size_t agent_count() const { return agents.size(); }
    const nn::ActorCritic &agent_for(JunctionId j) const {
        return kind == ArchitectureKind::FullyDecentralized ? agents.at(j) : agents.at(0);
    }
    std::size_t observation_size() const;
    std::size_t action_bits() const { return kind == ArchitectureKind::Centralized ? n : 1; }
};

PolicySet make_policy_set(ArchitectureKind kind, std::size_t n, const PpoConfig &cfg);

/// Runs a PolicySet at decision instants; optionally records transitions.
class PolicyController : public Controller {
  public:
    enum class Mode { Sample, Deterministic };

    PolicyController(const PolicySet &policy, Mode mode, Rng *rng = nullptr, bool record = false);

    std::string name() const override { return to_string(policy_->kind); }
    std::vector<ControlDecision> decide(const SimState &state) override;
    void finish(const SimState &state) override;

    /// One trajectory per junction (decentralized) or a single one (centralized).
    const std::vector<std::vector<Transition>> &trajectories() const { return trajectories_; }
    /// Critic values of the state following each trajectory's last transition.
    const std::vector<double> &bootstrap_values() const { return bootstrap_; }
    /// Undiscounted sum of global rewards at the reward instants.
    double return_sum() const { return return_sum_; }
    std::size_t reward_instants() const { return reward_instants_; }

  private:
    std::size_t slot_count() const;
    std::vector<double> slot_observation(const SimState &state, std::size_t slot) const;
    double slot_reward(const SimState &state, std::size_t slot) const;
    void settle_rewards(const SimState &state);

    const PolicySet *policy_;
    Mode mode_;
    Rng *rng_;
    bool record_;
    bool pending_ = false;
    std::vector<std::vector<Transition>> trajectories_;
    std::vector<double> bootstrap_;
    double return_sum_ = 0.0;
    std::size_t reward_instants_ = 0;
};

struct PolicyCheckpoint {
    static constexpr int kFormatVersion = 1;

    int format_version = kFormatVersion;
    PolicySet policy;
    nlohmann::json hyperparameters;
    int episode = 0;
    double eval_return = 0.0;
    std::uint64_t train_seed = 0;
};

class CheckpointError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

nlohmann::json checkpoint_to_json(const PolicyCheckpoint &ckpt);
PolicyCheckpoint checkpoint_from_json(const nlohmann::json &j);
void save_checkpoint(const PolicyCheckpoint &ckpt, const std::string &path);
/// Loads and validates a checkpoint. With `target_n`, rejects centralized and fully
/// decentralized checkpoints trained for a different junction count; parameter-sharing
/// checkpoints are re-targeted to any n.
PolicyCheckpoint load_checkpoint(const std::string &path, std::optional<std::size_t> target_n = std::nullopt);
PolicySet retarget(const PolicySet &policy, std::size_t n);

struct TrainLogRow {
    int episode = 0;
    double mean_reward = 0.0;
    double loss = 0.0;
    std::optional<double> eval_return;
    double wall_s = 0.0;
};

struct TrainResult {
    PolicyCheckpoint best;
    std::vector<TrainLogRow> log;
    std::vector<PolicyCheckpoint> evaluated;
};

class DivergenceError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Deterministic-policy evaluation; returns the undiscounted global-reward sum.
double evaluate_return(const CorridorNetwork &net, const PolicySet &policy, const DemandConfig &demand,
                       const SimConfig &sim);

/// One PPO update of a single agent from its samples. Returns the mean minibatch loss.
double ppo_update(nn::ActorCritic &net, nn::AdamState &actor_opt, nn::AdamState &critic_opt,
                  std::vector<PpoSample> samples, const PpoConfig &cfg, Rng &rng);

/// Episode-based PPO training; returns the checkpoint with the best evaluation return.
TrainResult train(const CorridorNetwork &net, ArchitectureKind kind, const PpoConfig &cfg, const SimConfig &sim_base,
                  const std::function<void(const TrainLogRow &)> &progress = {});

void write_train_log_csv(const std::vector<TrainLogRow> &log, const std::string &path);

} // namespace corridor
