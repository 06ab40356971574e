#include <doctest.h>

#include <cmath>

#include "corridor/nn.hpp"

using namespace corridor;
using namespace corridor::nn;

namespace {

// Loss = sum_k c_k * out_k for fixed random c; gradient via central differences.
double probe_loss(const Mlp &net, const std::vector<double> &x, const std::vector<double> &c) {
    const auto y = forward(net, x);
    double l = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) l += c[k] * y[k];
    return l;
}

double max_rel_error(Mlp net, const std::vector<double> &x, const std::vector<double> &c) {
    std::vector<double> grad(net.params.size(), 0.0);
    backward(net, forward_tape(net, x), c, grad);
    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t i = 0; i < net.params.size(); ++i) {
        const double orig = net.params[i];
        net.params[i] = orig + h;
        const double up = probe_loss(net, x, c);
        net.params[i] = orig - h;
        const double down = probe_loss(net, x, c);
        net.params[i] = orig;
        const double fd = (up - down) / (2 * h);
        const double rel = std::abs(fd - grad[i]) / std::max(1e-6, std::abs(fd) + std::abs(grad[i]));
        worst = std::max(worst, rel);
    }
    return worst;
}

} // namespace

TEST_CASE("zero weights give probability one half per bit") {
    Mlp net;
    net.dims = {4, 8, 3};
    net.params.assign(Mlp::param_count(net.dims), 0.0);
    const auto logits = forward(net, std::vector<double>{0.3, 0.1, 0.9, 0.5});
    REQUIRE(logits.size() == 3);
    for (double z : logits) {
        CHECK(z == 0.0);
        CHECK(logistic(z) == 0.5);
    }
}

TEST_CASE("identity single layer passes input through") {
    Mlp net;
    net.dims = {3, 3};
    net.params.assign(Mlp::param_count(net.dims), 0.0);
    for (std::size_t i = 0; i < 3; ++i) net.params[i * 3 + i] = 1.0;
    const std::vector<double> x{0.25, -1.5, 2.0};
    CHECK(forward(net, x) == x);
}

TEST_CASE("value head yields one finite scalar") {
    Rng rng(3);
    const ActorCritic ac = make_actor_critic(12, 3, {64, 64}, rng);
    const auto v = forward(ac.critic, std::vector<double>(12, 0.4));
    REQUIRE(v.size() == 1);
    CHECK(std::isfinite(v[0]));
    CHECK(ac.actor.output_size() == 3);
}

TEST_CASE("backward matches central finite differences on a 4-8-2 net") {
    Rng rng(11);
    Mlp net = make_mlp({4, 8, 2}, rng, 1.0, 1.0);
    for (double &p : net.params) p += 0.1 * rng.normal();
    std::vector<double> x(4), c(2);
    for (double &v : x) v = rng.normal();
    for (double &v : c) v = rng.normal();
    CHECK(max_rel_error(net, x, c) < 1e-4);
}

TEST_CASE("gradient check holds for random shapes") {
    Rng rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::size_t> dims{1 + rng.below(6)};
        const std::size_t hidden = 1 + rng.below(3);
        for (std::size_t h = 0; h < hidden; ++h) dims.push_back(1 + rng.below(32));
        dims.push_back(1 + rng.below(4));
        Mlp net = make_mlp(dims, rng, 1.0, 1.0);
        std::vector<double> x(dims.front()), c(dims.back());
        for (double &v : x) v = rng.normal();
        for (double &v : c) v = rng.normal();
        CAPTURE(trial);
        CHECK(max_rel_error(net, x, c) < 1e-4);
    }
}

TEST_CASE("zero upstream gradient gives zero gradients") {
    Rng rng(5);
    const Mlp net = make_mlp({3, 5, 2}, rng, 1.0, 1.0);
    std::vector<double> grad(net.params.size(), 0.0);
    backward(net, forward_tape(net, std::vector<double>{1, 2, 3}), std::vector<double>{0.0, 0.0}, grad);
    for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("duplicated input rows double the accumulated gradient") {
    Rng rng(6);
    const Mlp net = make_mlp({3, 5, 2}, rng, 1.0, 1.0);
    const std::vector<double> x{0.1, -0.2, 0.7}, d{1.0, -0.5};
    std::vector<double> once(net.params.size(), 0.0), twice(net.params.size(), 0.0);
    const Tape tape = forward_tape(net, x);
    backward(net, tape, d, once);
    backward(net, tape, d, twice);
    backward(net, tape, d, twice);
    for (std::size_t i = 0; i < once.size(); ++i) CHECK(twice[i] == doctest::Approx(2.0 * once[i]).epsilon(1e-12));
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    std::vector<double> p{1.0, -2.0, 3.0};
    const auto before = p;
    AdamState s = make_adam(3, 1e-3);
    adam_step(p, std::vector<double>(3, 0.0), s);
    CHECK(p == before);
}

TEST_CASE("adam: first step from fresh state moves by lr against the gradient sign") {
    std::vector<double> p{0.0, 0.0, 0.0};
    AdamState s = make_adam(3, 1e-2);
    adam_step(p, std::vector<double>{3.0, -0.5, 1e-3}, s);
    // Bias-corrected m/sqrt(v) = g/|g| on step one (up to eps).
    CHECK(p[0] == doctest::Approx(-1e-2).epsilon(1e-6));
    CHECK(p[1] == doctest::Approx(1e-2).epsilon(1e-6));
    CHECK(p[2] == doctest::Approx(-1e-2 * 1e-3 / (1e-3 + 1e-8)).epsilon(1e-9));
}

TEST_CASE("adam is deterministic") {
    Rng r1(9), r2(9);
    Mlp a = make_mlp({2, 4, 1}, r1, 1.0, 1.0), b = make_mlp({2, 4, 1}, r2, 1.0, 1.0);
    CHECK(a.params == b.params);
    AdamState sa = make_adam(a.params.size(), 1e-3), sb = make_adam(b.params.size(), 1e-3);
    std::vector<double> g(a.params.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::sin(static_cast<double>(i));
    adam_step(a.params, g, sa);
    adam_step(b.params, g, sb);
    CHECK(a.params == b.params);
}

TEST_CASE("orthogonal init: rows orthonormal scaled by gain") {
    Rng rng(1);
    const Mlp net = make_mlp({8, 4}, rng, 1.0, 0.5);
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t q = 0; q < 4; ++q) {
            double dot = 0.0;
            for (std::size_t c = 0; c < 8; ++c) dot += net.params[r * 8 + c] * net.params[q * 8 + c];
            CHECK(dot == doctest::Approx(r == q ? 0.25 : 0.0).epsilon(1e-12));
        }
}

TEST_CASE("serialization round trip gives bit-identical outputs") {
    Rng rng(77);
    const Mlp net = make_mlp({6, 16, 16, 2}, rng, 1.0, 0.01);
    const Mlp back = mlp_from_json(nlohmann::json::parse(to_json(net).dump()));
    CHECK(back.params == net.params);
    const std::vector<double> x{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    CHECK(forward(back, x) == forward(net, x));
}

TEST_CASE("bernoulli log-prob and entropy") {
    const std::vector<double> z{0.0, 2.0};
    const std::vector<int> a{1, 0};
    CHECK(bernoulli_log_prob(z, a) == doctest::Approx(std::log(0.5) + std::log(1.0 - logistic(2.0))));
    CHECK(bernoulli_log_prob(z, a) <= 0.0);
    CHECK(bernoulli_entropy(std::vector<double>{0.0}) == doctest::Approx(std::log(2.0)));
    CHECK(std::isfinite(bernoulli_log_prob(std::vector<double>{800.0}, std::vector<int>{0})));
}
