#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace corridor {

/// Environment variable naming the default output directory.
inline constexpr const char *kOutDirEnv = "CORRIDOR_OUT";

/// Every CLI flag, unset unless given. Keys in a run-configuration file are the flag
/// names without the leading dashes.
struct RunConfig {
    std::optional<std::size_t> n;
    std::optional<double> link_length;
    std::optional<std::vector<double>> link_lengths;
    std::optional<double> demand_ns, demand_sn, demand_we, demand_ew;
    std::optional<std::vector<std::string>> arch;
    std::optional<std::vector<std::string>> checkpoint;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> seeds;
    std::optional<double> duration;
    std::optional<double> warmup;
    std::optional<std::vector<double>> grid;
    std::optional<std::string> out;
    std::optional<std::size_t> threads;
    std::optional<int> episodes;
    std::optional<std::string> preset;

    /// Fields set in `overrides` replace those here.
    void merge(const RunConfig &overrides);
};

/// Parses a run-configuration document; unknown keys and ill-typed values raise ConfigError.
RunConfig run_config_from_json(const nlohmann::json &j);
RunConfig load_run_config(const std::string &path);
nlohmann::json to_json(const RunConfig &c);

/// --out if set, else $CORRIDOR_OUT, else "out".
std::string resolve_out_dir(const RunConfig &c);

} // namespace corridor
