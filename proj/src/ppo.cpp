#include "corridor/ppo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "corridor/csv.hpp"

namespace corridor {

void PpoConfig::validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
    if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigError("gae_lambda must lie in [0, 1]");
    if (!(clip_eps > 0.0)) throw ConfigError("clip_eps must be positive");
    if (epochs_per_update < 1) throw ConfigError("epochs_per_update must be at least 1");
    if (minibatch_size < 1) throw ConfigError("minibatch_size must be at least 1");
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
    if (episodes < 1) throw ConfigError("episodes must be at least 1");
    if (eval_every < 1) throw ConfigError("eval_every must be at least 1");
    if (!(episode_duration_s > 0.0)) throw ConfigError("episode duration must be positive");
    if (hidden.empty()) throw ConfigError("at least one hidden layer is required");
    demand.validate();
}

nlohmann::json PpoConfig::to_json() const {
    return {{"gamma", gamma},
            {"gae_lambda", gae_lambda},
            {"clip_eps", clip_eps},
            {"epochs_per_update", epochs_per_update},
            {"minibatch_size", minibatch_size},
            {"lr", lr},
            {"value_coef", value_coef},
            {"entropy_coef", entropy_coef},
            {"max_grad_norm", max_grad_norm},
            {"reward_scale", reward_scale},
            {"episodes", episodes},
            {"episode_duration_s", episode_duration_s},
            {"eval_every", eval_every},
            {"train_seed", train_seed},
            {"eval_seed", eval_seed},
            {"demand",
             {{"we", demand.lambda_we}, {"ew", demand.lambda_ew}, {"ns", demand.lambda_ns}, {"sn", demand.lambda_sn}}},
            {"hidden", hidden},
            {"phase_feature", observation.phase_feature}};
}

PpoConfig PpoConfig::from_json(const nlohmann::json &j) {
    PpoConfig c;
    c.gamma = j.value("gamma", c.gamma);
    c.gae_lambda = j.value("gae_lambda", c.gae_lambda);
    c.clip_eps = j.value("clip_eps", c.clip_eps);
    c.epochs_per_update = j.value("epochs_per_update", c.epochs_per_update);
    c.minibatch_size = j.value("minibatch_size", c.minibatch_size);
    c.lr = j.value("lr", c.lr);
    c.value_coef = j.value("value_coef", c.value_coef);
    c.entropy_coef = j.value("entropy_coef", c.entropy_coef);
    c.max_grad_norm = j.value("max_grad_norm", c.max_grad_norm);
    c.reward_scale = j.value("reward_scale", c.reward_scale);
    c.episodes = j.value("episodes", c.episodes);
    c.episode_duration_s = j.value("episode_duration_s", c.episode_duration_s);
    c.eval_every = j.value("eval_every", c.eval_every);
    c.train_seed = j.value("train_seed", c.train_seed);
    c.eval_seed = j.value("eval_seed", c.eval_seed);
    if (j.contains("demand")) {
        const auto &d = j.at("demand");
        c.demand = {d.value("we", 700.0), d.value("ew", 700.0), d.value("ns", 700.0), d.value("sn", 700.0)};
    }
    c.hidden = j.value("hidden", c.hidden);
    c.observation.phase_feature = j.value("phase_feature", false);
    return c;
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values, double bootstrap_value,
                      double gamma, double lambda) {
    if (rewards.size() != values.size()) throw std::invalid_argument("rewards and values differ in length");
    const std::size_t T = rewards.size();
    GaeResult out;
    out.advantages.assign(T, 0.0);
    out.returns.assign(T, 0.0);
    double next_adv = 0.0;
    for (std::size_t t = T; t-- > 0;) {
        const double next_value = t + 1 < T ? values[t + 1] : bootstrap_value;
        const double delta = rewards[t] + gamma * next_value - values[t];
        next_adv = delta + gamma * lambda * next_adv;
        out.advantages[t] = next_adv;
        out.returns[t] = next_adv + values[t];
    }
    return out;
}

void normalize_advantages(std::span<PpoSample> batch) {
    if (batch.empty()) return;
    double mean = 0.0;
    for (const auto &s : batch) mean += s.advantage;
    mean /= static_cast<double>(batch.size());
    double var = 0.0;
    for (const auto &s : batch) var += (s.advantage - mean) * (s.advantage - mean);
    var /= static_cast<double>(batch.size());
    const double scale = 1.0 / (std::sqrt(var) + 1e-8);
    for (auto &s : batch) s.advantage = (s.advantage - mean) * scale;
}

PpoLoss ppo_loss(std::span<const PpoSample> batch, const nn::ActorCritic &net, const PpoConfig &cfg) {
    PpoLoss out;
    out.actor_grad.assign(net.actor.params.size(), 0.0);
    out.critic_grad.assign(net.critic.params.size(), 0.0);
    if (batch.empty()) return out;
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    std::size_t clipped = 0;

    std::vector<double> d_logits;
    for (const PpoSample &s : batch) {
        const nn::Tape actor = nn::forward_tape(net.actor, s.observation);
        const auto logits = actor.output();
        const double logp = nn::bernoulli_log_prob(logits, s.action);
        const double ratio = std::exp(logp - s.log_prob_old);
        const double clipped_ratio = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
        const double surr_raw = ratio * s.advantage;
        const double surr_clip = clipped_ratio * s.advantage;
        const bool raw_active = surr_raw <= surr_clip;
        if (!raw_active) ++clipped;
        out.policy -= std::min(surr_raw, surr_clip) * inv_n;
        const double entropy = nn::bernoulli_entropy(logits);
        out.entropy += entropy * inv_n;

        // d(loss)/d(logp) through the active branch of the min.
        const double d_logp = raw_active ? -s.advantage * ratio * inv_n : 0.0;
        d_logits.assign(logits.size(), 0.0);
        for (std::size_t j = 0; j < logits.size(); ++j) {
            const double p = nn::logistic(logits[j]);
            const double d_entropy = -logits[j] * p * (1.0 - p);
            d_logits[j] = d_logp * (static_cast<double>(s.action[j]) - p) - cfg.entropy_coef * d_entropy * inv_n;
        }
        nn::backward(net.actor, actor, d_logits, out.actor_grad);

        const nn::Tape critic = nn::forward_tape(net.critic, s.observation);
        const double err = critic.output()[0] - s.ret;
        out.value += err * err * inv_n;
        const double d_value = cfg.value_coef * 2.0 * err * inv_n;
        nn::backward(net.critic, critic, std::span<const double>(&d_value, 1), out.critic_grad);
    }
    out.total = out.policy + cfg.value_coef * out.value - cfg.entropy_coef * out.entropy;
    out.clip_fraction = static_cast<double>(clipped) * inv_n;
    return out;
}

std::size_t PolicySet::observation_size() const {
    const std::size_t local = local_observation_size(observation);
    return kind == ArchitectureKind::Centralized ? local * n : local;
}

PolicySet make_policy_set(ArchitectureKind kind, std::size_t n, const PpoConfig &cfg) {
    if (kind == ArchitectureKind::MaxPressure) throw ConfigError("maxpressure has no trainable policy");
    PolicySet p;
    p.kind = kind;
    p.n = n;
    p.observation = cfg.observation;
    const std::size_t count = kind == ArchitectureKind::FullyDecentralized ? n : 1;
    for (std::size_t k = 0; k < count; ++k) {
        Rng init(stream_seed(cfg.train_seed, 1000 + k));
        p.agents.push_back(nn::make_actor_critic(p.observation_size(), p.action_bits(), cfg.hidden, init));
    }
    return p;
}

PolicyController::PolicyController(const PolicySet &policy, Mode mode, Rng *rng, bool record)
    : policy_(&policy), mode_(mode), rng_(rng), record_(record) {
    if (mode == Mode::Sample && !rng) throw std::invalid_argument("sampling mode needs a random generator");
    trajectories_.resize(slot_count());
    bootstrap_.assign(slot_count(), 0.0);
}

std::size_t PolicyController::slot_count() const {
    return policy_->kind == ArchitectureKind::Centralized ? 1 : policy_->n;
}

std::vector<double> PolicyController::slot_observation(const SimState &state, std::size_t slot) const {
    return policy_->kind == ArchitectureKind::Centralized ? observe_global(state, policy_->observation)
                                                          : observe_local(state, slot, policy_->observation);
}

double PolicyController::slot_reward(const SimState &state, std::size_t slot) const {
    return policy_->kind == ArchitectureKind::Centralized ? reward_global(state) : reward_local(state, slot);
}

void PolicyController::settle_rewards(const SimState &state) {
    const double global = reward_global(state);
    return_sum_ += global;
    ++reward_instants_;
    if (!record_ || !pending_) return;
    double local_sum = 0.0;
    for (std::size_t slot = 0; slot < slot_count(); ++slot) {
        const double r = slot_reward(state, slot);
        local_sum += r;
        trajectories_[slot].back().reward = r;
        const auto obs = slot_observation(state, slot);
        bootstrap_[slot] = nn::forward(policy_->agent_for(slot).critic, obs)[0];
    }
    if (std::abs(local_sum - global) > 1e-9) throw SimError("global reward differs from the sum of local rewards");
    pending_ = false;
}

std::vector<ControlDecision> PolicyController::decide(const SimState &state) {
    if (state.network().junction_count() != policy_->n)
        throw ConfigError("policy was built for " + std::to_string(policy_->n) + " junctions");
    const SimConfig &cfg = state.config();
    const std::int64_t k = state.tick() / cfg.ticks_per_decision();
    if (k > 0) settle_rewards(state);
    const bool record_now =
        record_ && static_cast<double>(k + 1) * cfg.timing.decision_period_s <= cfg.duration_s + 1e-9;

    std::vector<int> bits;
    bits.reserve(policy_->n);
    for (std::size_t slot = 0; slot < slot_count(); ++slot) {
        const nn::ActorCritic &agent = policy_->agent_for(slot);
        auto obs = slot_observation(state, slot);
        const auto logits = nn::forward(agent.actor, obs);
        std::vector<int> action(logits.size());
        for (std::size_t j = 0; j < logits.size(); ++j) {
            const double p = nn::logistic(logits[j]);
            action[j] = mode_ == Mode::Sample ? (rng_->uniform() < p ? 1 : 0) : (p > 0.5 ? 1 : 0);
        }
        bits.insert(bits.end(), action.begin(), action.end());
        if (record_now) {
            Transition tr;
            tr.log_prob = nn::bernoulli_log_prob(logits, action);
            tr.value = nn::forward(agent.critic, obs)[0];
            tr.observation = std::move(obs);
            tr.action = std::move(action);
            if (policy_->kind != ArchitectureKind::Centralized) tr.junction = slot;
            trajectories_[slot].push_back(std::move(tr));
        }
    }
    if (record_now) pending_ = true;
    return apply_actions(bits, policy_->n);
}

void PolicyController::finish(const SimState &state) {
    if (pending_) settle_rewards(state);
    for (auto &traj : trajectories_)
        if (!traj.empty()) traj.back().done = true;
}

nlohmann::json checkpoint_to_json(const PolicyCheckpoint &c) {
    nlohmann::json agents = nlohmann::json::array();
    for (const auto &a : c.policy.agents) agents.push_back({{"actor", nn::to_json(a.actor)}, {"critic", nn::to_json(a.critic)}});
    return {{"format_version", c.format_version},
            {"architecture", to_string(c.policy.kind)},
            {"n", c.policy.n},
            {"observation_length", c.policy.observation_size()},
            {"phase_feature", c.policy.observation.phase_feature},
            {"actor_dims", c.policy.agents.empty() ? std::vector<std::size_t>{} : c.policy.agents[0].actor.dims},
            {"critic_dims", c.policy.agents.empty() ? std::vector<std::size_t>{} : c.policy.agents[0].critic.dims},
            {"agents", agents},
            {"hyperparameters", c.hyperparameters},
            {"episode", c.episode},
            {"eval_return", c.eval_return},
            {"train_seed", c.train_seed}};
}

PolicyCheckpoint checkpoint_from_json(const nlohmann::json &j) {
    try {
        PolicyCheckpoint c;
        c.format_version = j.at("format_version").get<int>();
        if (c.format_version != PolicyCheckpoint::kFormatVersion)
            throw CheckpointError("unsupported checkpoint format version " + std::to_string(c.format_version));
        c.policy.kind = parse_architecture(j.at("architecture").get<std::string>());
        if (c.policy.kind == ArchitectureKind::MaxPressure) throw CheckpointError("maxpressure has no checkpoint");
        c.policy.n = j.at("n").get<std::size_t>();
        c.policy.observation.phase_feature = j.at("phase_feature").get<bool>();
        for (const auto &a : j.at("agents"))
            c.policy.agents.push_back({nn::mlp_from_json(a.at("actor")), nn::mlp_from_json(a.at("critic"))});
        const std::size_t expected_agents = c.policy.kind == ArchitectureKind::FullyDecentralized ? c.policy.n : 1;
        if (c.policy.agents.size() != expected_agents)
            throw CheckpointError("checkpoint holds " + std::to_string(c.policy.agents.size()) + " agents, expected " +
                                  std::to_string(expected_agents));
        const std::size_t obs_len = j.at("observation_length").get<std::size_t>();
        if (obs_len != c.policy.observation_size()) throw CheckpointError("observation length is inconsistent");
        for (const auto &a : c.policy.agents) {
            if (a.actor.input_size() != obs_len || a.critic.input_size() != obs_len)
                throw CheckpointError("network input size does not match the observation length");
            if (a.actor.output_size() != c.policy.action_bits() || a.critic.output_size() != 1)
                throw CheckpointError("network output size does not match the architecture");
        }
        c.hyperparameters = j.value("hyperparameters", nlohmann::json::object());
        c.episode = j.at("episode").get<int>();
        c.eval_return = j.at("eval_return").get<double>();
        c.train_seed = j.at("train_seed").get<std::uint64_t>();
        return c;
    } catch (const nlohmann::json::exception &e) {
        throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
    } catch (const std::invalid_argument &e) {
        throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
    }
}

void save_checkpoint(const PolicyCheckpoint &ckpt, const std::string &path) {
    std::ofstream out(path);
    if (!out) throw CheckpointError("cannot write " + path);
    out << checkpoint_to_json(ckpt).dump(1) << '\n';
}

PolicySet retarget(const PolicySet &policy, std::size_t n) {
    if (policy.n == n) return policy;
    if (policy.kind != ArchitectureKind::ParameterSharing)
        throw CheckpointError(to_string(policy.kind) + " checkpoint was trained for n=" + std::to_string(policy.n) +
                              " and cannot run on n=" + std::to_string(n));
    PolicySet p = policy;
    p.n = n;
    return p;
}

PolicyCheckpoint load_checkpoint(const std::string &path, std::optional<std::size_t> target_n) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("cannot open checkpoint " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception &e) {
        throw CheckpointError("checkpoint " + path + " is not valid JSON: " + e.what());
    }
    PolicyCheckpoint c = checkpoint_from_json(j);
    if (target_n) c.policy = retarget(c.policy, *target_n);
    return c;
}

double evaluate_return(const CorridorNetwork &net, const PolicySet &policy, const DemandConfig &demand,
                       const SimConfig &sim) {
    PolicyController ctl(policy, PolicyController::Mode::Deterministic);
    SimState state(net, demand, sim);
    run(state, ctl);
    return ctl.return_sum();
}

namespace {

double clip_grad(std::vector<double> &g, double max_norm) {
    double sq = 0.0;
    for (double x : g) sq += x * x;
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double s = max_norm / norm;
        for (double &x : g) x *= s;
    }
    return norm;
}

} // namespace

double ppo_update(nn::ActorCritic &net, nn::AdamState &actor_opt, nn::AdamState &critic_opt,
                  std::vector<PpoSample> samples, const PpoConfig &cfg, Rng &rng) {
    if (samples.empty()) return 0.0;
    normalize_advantages(samples);
    std::vector<std::size_t> order(samples.size());
    std::vector<PpoSample> mb;
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (int epoch = 0; epoch < cfg.epochs_per_update; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        for (std::size_t start = 0; start < order.size(); start += cfg.minibatch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.minibatch_size);
            mb.clear();
            for (std::size_t i = start; i < end; ++i) mb.push_back(samples[order[i]]);
            PpoLoss loss = ppo_loss(mb, net, cfg);
            if (!std::isfinite(loss.total)) throw DivergenceError("PPO loss is not finite");
            clip_grad(loss.actor_grad, cfg.max_grad_norm);
            clip_grad(loss.critic_grad, cfg.max_grad_norm);
            nn::adam_step(net.actor.params, loss.actor_grad, actor_opt);
            nn::adam_step(net.critic.params, loss.critic_grad, critic_opt);
            loss_sum += loss.total;
            ++loss_count;
        }
    }
    return loss_sum / static_cast<double>(loss_count);
}

TrainResult train(const CorridorNetwork &net, ArchitectureKind kind, const PpoConfig &cfg, const SimConfig &sim_base,
                  const std::function<void(const TrainLogRow &)> &progress) {
    cfg.validate();
    if (kind == ArchitectureKind::MaxPressure) throw ConfigError("maxpressure is not trainable");
    const std::size_t n = net.junction_count();
    PolicySet policy = make_policy_set(kind, n, cfg);

    std::vector<nn::AdamState> actor_opt, critic_opt;
    std::vector<Rng> shuffle_rng;
    for (std::size_t k = 0; k < policy.agent_count(); ++k) {
        actor_opt.push_back(nn::make_adam(policy.agents[k].actor.params.size(), cfg.lr));
        critic_opt.push_back(nn::make_adam(policy.agents[k].critic.params.size(), cfg.lr));
        shuffle_rng.emplace_back(stream_seed(cfg.train_seed, 2000 + k));
    }
    Rng action_rng(stream_seed(cfg.train_seed, 3000));

    SimConfig sim = sim_base;
    sim.duration_s = cfg.episode_duration_s;
    sim.warmup_s = std::min(sim.warmup_s, cfg.episode_duration_s / 2.0);
    SimConfig eval_sim = sim;
    eval_sim.seed = cfg.eval_seed;

    TrainResult result;
    bool have_best = false;
    const auto t0 = std::chrono::steady_clock::now();
    for (int episode = 0; episode < cfg.episodes; ++episode) {
        sim.seed = stream_seed(cfg.train_seed, 10000 + static_cast<std::uint64_t>(episode));
        PolicyController ctl(policy, PolicyController::Mode::Sample, &action_rng, true);
        SimState state(net, cfg.demand, sim);
        run(state, ctl);

        std::vector<std::vector<PpoSample>> per_agent(policy.agent_count());
        for (std::size_t slot = 0; slot < ctl.trajectories().size(); ++slot) {
            const auto &traj = ctl.trajectories()[slot];
            std::vector<double> rewards, values;
            for (const auto &tr : traj) {
                rewards.push_back(tr.reward * cfg.reward_scale);
                values.push_back(tr.value);
            }
            const GaeResult gae = compute_gae(rewards, values, ctl.bootstrap_values()[slot], cfg.gamma, cfg.gae_lambda);
            auto &bucket = per_agent[kind == ArchitectureKind::FullyDecentralized ? slot : 0];
            for (std::size_t t = 0; t < traj.size(); ++t)
                bucket.push_back({traj[t].observation, traj[t].action, traj[t].log_prob, gae.advantages[t], gae.returns[t]});
        }

        double loss = 0.0;
        for (std::size_t k = 0; k < policy.agent_count(); ++k)
            loss += ppo_update(policy.agents[k], actor_opt[k], critic_opt[k], std::move(per_agent[k]), cfg,
                               shuffle_rng[k]);
        loss /= static_cast<double>(policy.agent_count());

        TrainLogRow row;
        row.episode = episode;
        row.mean_reward = ctl.reward_instants() ? ctl.return_sum() / static_cast<double>(ctl.reward_instants()) : 0.0;
        row.loss = loss;
        if ((episode + 1) % cfg.eval_every == 0 || episode + 1 == cfg.episodes) {
            const double ret = evaluate_return(net, policy, cfg.demand, eval_sim);
            row.eval_return = ret;
            PolicyCheckpoint ckpt;
            ckpt.policy = policy;
            ckpt.hyperparameters = cfg.to_json();
            ckpt.episode = episode;
            ckpt.eval_return = ret;
            ckpt.train_seed = cfg.train_seed;
            if (!have_best || ret > result.best.eval_return) {
                result.best = ckpt;
                have_best = true;
            }
            result.evaluated.push_back(std::move(ckpt));
        }
        row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.log.push_back(row);
        if (progress) progress(row);
    }
    return result;
}

void write_train_log_csv(const std::vector<TrainLogRow> &log, const std::string &path) {
    CsvWriter csv(path, {"episode", "mean_reward", "loss", "eval_return", "wall_s"});
    for (const auto &r : log) {
        csv.row_begin();
        csv.field(r.episode).field(r.mean_reward).field(r.loss).field(r.eval_return).field(r.wall_s);
        csv.row_end();
    }
}

} // namespace corridor
