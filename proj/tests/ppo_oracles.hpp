#pragma once

// Independent reference computations used by the PPO tests and the acceptance suite.

#include <cmath>
#include <vector>

#include "corridor/ppo.hpp"

namespace corridor::oracle {

/// A_t = sum_k (gamma*lambda)^k delta_{t+k}, evaluated directly.
inline std::vector<double> gae_double_sum(const std::vector<double> &r, const std::vector<double> &v, double bootstrap,
                                          double gamma, double lambda) {
    const std::size_t T = r.size();
    std::vector<double> delta(T);
    for (std::size_t t = 0; t < T; ++t) delta[t] = r[t] + gamma * (t + 1 < T ? v[t + 1] : bootstrap) - v[t];
    std::vector<double> adv(T, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        double w = 1.0;
        for (std::size_t k = t; k < T; ++k) {
            adv[t] += w * delta[k];
            w *= gamma * lambda;
        }
    }
    return adv;
}

/// Random small actor-critic plus batch for gradient checks.
struct LossProblem {
    nn::ActorCritic net;
    std::vector<PpoSample> batch;
};

inline LossProblem random_loss_problem(Rng &rng) {
    const std::size_t obs = 1 + rng.below(6);
    const std::size_t bits = 1 + rng.below(3);
    std::vector<std::size_t> hidden;
    const std::size_t layers = 1 + rng.below(2);
    for (std::size_t h = 0; h < layers; ++h) hidden.push_back(2 + rng.below(10));
    LossProblem p;
    p.net = nn::make_actor_critic(obs, bits, hidden, rng);
    for (double &w : p.net.actor.params) w += 0.3 * rng.normal();
    const std::size_t n = 1 + rng.below(8);
    for (std::size_t i = 0; i < n; ++i) {
        PpoSample s;
        for (std::size_t k = 0; k < obs; ++k) s.observation.push_back(rng.uniform());
        const auto logits = nn::forward(p.net.actor, s.observation);
        for (std::size_t k = 0; k < bits; ++k) s.action.push_back(rng.uniform() < 0.5 ? 1 : 0);
        // Old log-prob near the current one so ratios straddle the clip range.
        s.log_prob_old = nn::bernoulli_log_prob(logits, s.action) + 0.3 * rng.normal();
        s.advantage = rng.normal();
        s.ret = rng.normal();
        p.batch.push_back(std::move(s));
    }
    return p;
}

/// Max relative error of ppo_loss gradients against central differences (h = 1e-5).
/// Parameters whose perturbation crosses a clip kink are skipped.
inline double loss_gradient_error(LossProblem p, const PpoConfig &cfg) {
    const PpoLoss analytic = ppo_loss(p.batch, p.net, cfg);
    const double h = 1e-5;
    double worst = 0.0;
    auto check = [&](std::vector<double> &params, const std::vector<double> &grad) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double orig = params[i];
            params[i] = orig + h;
            const PpoLoss up = ppo_loss(p.batch, p.net, cfg);
            params[i] = orig - h;
            const PpoLoss down = ppo_loss(p.batch, p.net, cfg);
            params[i] = orig;
            if (up.clip_fraction != analytic.clip_fraction || down.clip_fraction != analytic.clip_fraction) continue;
            const double fd = (up.total - down.total) / (2 * h);
            const double denom = std::max(1e-7, std::abs(fd) + std::abs(grad[i]));
            worst = std::max(worst, std::abs(fd - grad[i]) / denom);
        }
    };
    check(p.net.actor.params, analytic.actor_grad);
    check(p.net.critic.params, analytic.critic_grad);
    return worst;
}

} // namespace corridor::oracle
