#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "corridor/rng.hpp"

namespace corridor::nn {

/// Dense feed-forward network: tanh hidden layers, identity output.
/// Parameters are stored flat, layer by layer: weights (out x in, row-major) then biases.
struct Mlp {
    std::vector<std::size_t> dims;
    std::vector<double> params;

    std::size_t input_size() const { return dims.front(); }
    std::size_t output_size() const { return dims.back(); }
    std::size_t layer_count() const { return dims.size() - 1; }
    /// Offset of layer `k`'s weight block in `params`.
    std::size_t weight_offset(std::size_t k) const;
    std::size_t bias_offset(std::size_t k) const { return weight_offset(k) + dims[k + 1] * dims[k]; }

    static std::size_t param_count(const std::vector<std::size_t> &dims);
};

/// Orthogonal initialization (rows or columns orthonormalized, scaled by gain), zero biases.
Mlp make_mlp(const std::vector<std::size_t> &dims, Rng &rng, double hidden_gain, double output_gain);

/// Activations of every layer for one input; needed by backward.
struct Tape {
    std::vector<std::vector<double>> activations;
    std::span<const double> output() const { return activations.back(); }
};

std::vector<double> forward(const Mlp &net, std::span<const double> input);
Tape forward_tape(const Mlp &net, std::span<const double> input);

/// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
void backward(const Mlp &net, const Tape &tape, std::span<const double> d_output, std::span<double> grad);

struct AdamState {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<double> m;
    std::vector<double> v;
};

AdamState make_adam(std::size_t n_params, double lr);
void adam_step(std::span<double> params, std::span<const double> grad, AdamState &state);

/// Separate actor (one logit per action bit) and critic (scalar value) networks.
struct ActorCritic {
    Mlp actor;
    Mlp critic;
};

ActorCritic make_actor_critic(std::size_t obs_size, std::size_t action_bits, const std::vector<std::size_t> &hidden,
                              Rng &rng);

double logistic(double z);
/// log P(bits | logits) for independent Bernoulli heads.
double bernoulli_log_prob(std::span<const double> logits, std::span<const int> bits);
double bernoulli_entropy(std::span<const double> logits);

nlohmann::json to_json(const Mlp &net);
Mlp mlp_from_json(const nlohmann::json &j);

} // namespace corridor::nn
