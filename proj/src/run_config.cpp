#include "corridor/run_config.hpp"

#include <cstdlib>
#include <fstream>

#include "corridor/net.hpp"

namespace corridor {

namespace {

template <class T> void take(std::optional<T> &dst, const std::optional<T> &src) {
    if (src) dst = src;
}

// Visits every field with its file key; used by parse, dump and merge.
template <class Config, class F> void for_each_field(Config &c, F &&f) {
    f("n", c.n);
    f("link-length", c.link_length);
    f("link-lengths", c.link_lengths);
    f("demand-ns", c.demand_ns);
    f("demand-sn", c.demand_sn);
    f("demand-we", c.demand_we);
    f("demand-ew", c.demand_ew);
    f("arch", c.arch);
    f("checkpoint", c.checkpoint);
    f("seed", c.seed);
    f("seeds", c.seeds);
    f("duration", c.duration);
    f("warmup", c.warmup);
    f("grid", c.grid);
    f("out", c.out);
    f("threads", c.threads);
    f("episodes", c.episodes);
    f("preset", c.preset);
}

template <class T> void read_value(const nlohmann::json &v, std::optional<T> &dst) { dst = v.get<T>(); }

// A single string is accepted where a list of strings is expected.
void read_value(const nlohmann::json &v, std::optional<std::vector<std::string>> &dst) {
    dst = v.is_string() ? std::vector<std::string>{v.get<std::string>()} : v.get<std::vector<std::string>>();
}

} // namespace

void RunConfig::merge(const RunConfig &o) {
    take(n, o.n);
    take(link_length, o.link_length);
    take(link_lengths, o.link_lengths);
    take(demand_ns, o.demand_ns);
    take(demand_sn, o.demand_sn);
    take(demand_we, o.demand_we);
    take(demand_ew, o.demand_ew);
    take(arch, o.arch);
    take(checkpoint, o.checkpoint);
    take(seed, o.seed);
    take(seeds, o.seeds);
    take(duration, o.duration);
    take(warmup, o.warmup);
    take(grid, o.grid);
    take(out, o.out);
    take(threads, o.threads);
    take(episodes, o.episodes);
    take(preset, o.preset);
}

RunConfig run_config_from_json(const nlohmann::json &j) {
    if (!j.is_object()) throw ConfigError("run configuration must be a JSON object");
    RunConfig c;
    std::size_t known = 0;
    for_each_field(c, [&](const char *key, auto &field) {
        auto it = j.find(key);
        if (it == j.end()) return;
        ++known;
        try {
            read_value(*it, field);
        } catch (const nlohmann::json::exception &) {
            throw ConfigError(std::string("run configuration key '") + key + "' has the wrong type");
        }
    });
    if (known != j.size())
        for (const auto &[key, value] : j.items()) {
            bool found = false;
            for_each_field(c, [&](const char *k, auto &) { found = found || key == k; });
            if (!found) throw ConfigError("unknown run configuration key '" + key + "'");
        }
    return c;
}

RunConfig load_run_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open run configuration " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError("run configuration " + path + " is not valid JSON: " + e.what());
    }
    return run_config_from_json(j);
}

nlohmann::json to_json(const RunConfig &c) {
    nlohmann::json j = nlohmann::json::object();
    for_each_field(c, [&](const char *key, const auto &field) {
        if (field) j[key] = *field;
    });
    return j;
}

std::string resolve_out_dir(const RunConfig &c) {
    if (c.out) return *c.out;
    if (const char *env = std::getenv(kOutDirEnv); env && *env) return env;
    return "out";
}

} // namespace corridor
