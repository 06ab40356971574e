#include "corridor/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace corridor::nn {

std::size_t Mlp::param_count(const std::vector<std::size_t> &dims) {
    std::size_t n = 0;
    for (std::size_t k = 0; k + 1 < dims.size(); ++k) n += dims[k + 1] * dims[k] + dims[k + 1];
    return n;
}

std::size_t Mlp::weight_offset(std::size_t k) const {
    std::size_t off = 0;
    for (std::size_t i = 0; i < k; ++i) off += dims[i + 1] * dims[i] + dims[i + 1];
    return off;
}

namespace {

// Gram-Schmidt on the rows (or columns, whichever are fewer) of a Gaussian matrix.
void orthogonal_fill(std::span<double> w, std::size_t rows, std::size_t cols, double gain, Rng &rng) {
    for (double &x : w) x = rng.normal();
    const bool by_rows = rows <= cols;
    const std::size_t count = by_rows ? rows : cols;
    const std::size_t len = by_rows ? cols : rows;
    auto at = [&](std::size_t vec, std::size_t i) -> double & {
        return by_rows ? w[vec * cols + i] : w[i * cols + vec];
    };
    for (std::size_t a = 0; a < count; ++a) {
        for (std::size_t b = 0; b < a; ++b) {
            double dot = 0.0;
            for (std::size_t i = 0; i < len; ++i) dot += at(a, i) * at(b, i);
            for (std::size_t i = 0; i < len; ++i) at(a, i) -= dot * at(b, i);
        }
        double norm = 0.0;
        for (std::size_t i = 0; i < len; ++i) norm += at(a, i) * at(a, i);
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < len; ++i) at(a, i) /= norm;
    }
    for (double &x : w) x *= gain;
}

} // namespace

Mlp make_mlp(const std::vector<std::size_t> &dims, Rng &rng, double hidden_gain, double output_gain) {
    if (dims.size() < 2) throw std::invalid_argument("an MLP needs at least input and output sizes");
    Mlp net;
    net.dims = dims;
    net.params.assign(Mlp::param_count(dims), 0.0);
    for (std::size_t k = 0; k < net.layer_count(); ++k) {
        const double gain = k + 1 == net.layer_count() ? output_gain : hidden_gain;
        std::span<double> w(net.params.data() + net.weight_offset(k), dims[k + 1] * dims[k]);
        orthogonal_fill(w, dims[k + 1], dims[k], gain, rng);
    }
    return net;
}

Tape forward_tape(const Mlp &net, std::span<const double> input) {
    if (input.size() != net.input_size())
        throw std::invalid_argument("input has " + std::to_string(input.size()) + " entries, network expects " +
                                    std::to_string(net.input_size()));
    Tape tape;
    tape.activations.reserve(net.dims.size());
    tape.activations.emplace_back(input.begin(), input.end());
    for (std::size_t k = 0; k < net.layer_count(); ++k) {
        const std::size_t in = net.dims[k], out = net.dims[k + 1];
        const double *w = net.params.data() + net.weight_offset(k);
        const double *b = net.params.data() + net.bias_offset(k);
        const auto &x = tape.activations.back();
        std::vector<double> y(out);
        for (std::size_t r = 0; r < out; ++r) {
            double acc = b[r];
            for (std::size_t c = 0; c < in; ++c) acc += w[r * in + c] * x[c];
            y[r] = k + 1 == net.layer_count() ? acc : std::tanh(acc);
        }
        tape.activations.push_back(std::move(y));
    }
    return tape;
}

std::vector<double> forward(const Mlp &net, std::span<const double> input) {
    return std::move(forward_tape(net, input).activations.back());
}

void backward(const Mlp &net, const Tape &tape, std::span<const double> d_output, std::span<double> grad) {
    if (grad.size() != net.params.size()) throw std::invalid_argument("gradient buffer size mismatch");
    std::vector<double> delta(d_output.begin(), d_output.end());
    for (std::size_t k = net.layer_count(); k-- > 0;) {
        const std::size_t in = net.dims[k], out = net.dims[k + 1];
        const double *w = net.params.data() + net.weight_offset(k);
        double *gw = grad.data() + net.weight_offset(k);
        double *gb = grad.data() + net.bias_offset(k);
        const auto &x = tape.activations[k];
        // Hidden layers: delta is w.r.t. the tanh output; convert to pre-activation.
        if (k + 1 < net.layer_count()) {
            const auto &y = tape.activations[k + 1];
            for (std::size_t r = 0; r < out; ++r) delta[r] *= 1.0 - y[r] * y[r];
        }
        std::vector<double> prev(in, 0.0);
        for (std::size_t r = 0; r < out; ++r) {
            gb[r] += delta[r];
            for (std::size_t c = 0; c < in; ++c) {
                gw[r * in + c] += delta[r] * x[c];
                prev[c] += w[r * in + c] * delta[r];
            }
        }
        delta = std::move(prev);
    }
}

AdamState make_adam(std::size_t n_params, double lr) {
    AdamState s;
    s.lr = lr;
    s.m.assign(n_params, 0.0);
    s.v.assign(n_params, 0.0);
    return s;
}

void adam_step(std::span<double> params, std::span<const double> grad, AdamState &s) {
    if (params.size() != grad.size() || s.m.size() != params.size())
        throw std::invalid_argument("adam_step: size mismatch");
    ++s.step;
    const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
    const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * grad[i];
        s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * grad[i] * grad[i];
        params[i] -= s.lr * (s.m[i] / c1) / (std::sqrt(s.v[i] / c2) + s.eps);
    }
}

ActorCritic make_actor_critic(std::size_t obs_size, std::size_t action_bits, const std::vector<std::size_t> &hidden,
                              Rng &rng) {
    std::vector<std::size_t> actor_dims{obs_size}, critic_dims{obs_size};
    for (std::size_t h : hidden) {
        actor_dims.push_back(h);
        critic_dims.push_back(h);
    }
    actor_dims.push_back(action_bits);
    critic_dims.push_back(1);
    ActorCritic ac;
    ac.actor = make_mlp(actor_dims, rng, 1.0, 0.01);
    ac.critic = make_mlp(critic_dims, rng, 1.0, 1.0);
    return ac;
}

double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

namespace {
// log(logistic(z)), stable for large |z|.
double log_logistic(double z) { return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }
} // namespace

double bernoulli_log_prob(std::span<const double> logits, std::span<const int> bits) {
    if (logits.size() != bits.size()) throw std::invalid_argument("action size mismatch");
    double lp = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) lp += bits[i] ? log_logistic(logits[i]) : log_logistic(-logits[i]);
    return lp;
}

double bernoulli_entropy(std::span<const double> logits) {
    double h = 0.0;
    for (double z : logits) {
        const double p = logistic(z);
        h -= p * log_logistic(z) + (1.0 - p) * log_logistic(-z);
    }
    return h;
}

nlohmann::json to_json(const Mlp &net) { return {{"dims", net.dims}, {"params", net.params}}; }

Mlp mlp_from_json(const nlohmann::json &j) {
    Mlp net;
    net.dims = j.at("dims").get<std::vector<std::size_t>>();
    net.params = j.at("params").get<std::vector<double>>();
    if (net.dims.size() < 2 || net.params.size() != Mlp::param_count(net.dims))
        throw std::invalid_argument("network parameters do not match the layer dimensions");
    for (double x : net.params)
        if (!std::isfinite(x)) throw std::invalid_argument("non-finite network parameter");
    return net;
}

} // namespace corridor::nn
