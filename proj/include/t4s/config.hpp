#pragma once

#include "t4s/fit.hpp"

#include <map>
#include <optional>
#include <string>

namespace t4s {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Scenario { RandomTensor, ImplicitMap, DerivVerify };

struct ExperimentConfig {
    Scenario scenario = Scenario::RandomTensor;
    int k = 2;
    Index N = 8, M = 6;
    double power = 2.0;          // C[i,i] = sigma * i^-power
    double sigma = 1.0;
    Index n_s = 400, n_t = 500;
    Optimizer optimizer = Optimizer::TrRmgn;
    Index n_chunk = 1;
    double ratio_cap = 2.0;
    double tau = 10.0;
    int max_stages = 100;
    int max_iter = 100;          // TR iterations per stage
    int sgd_max_iter = 5000;
    double time_limit = 0.0;     // seconds per continuation, 0 = none
    double validation = 0.2;
    double sketch_eps = 0.01;
    int sketch_patience = 5;
    std::uint64_t seed = 0;
    std::string out_dir = "t4s_out";
    int threads = 1;

    /// Canonical key=value listing, one per line, sorted by key.
    std::string canonical() const;
    std::string hash() const;
};

/// INI-style text: `key = value`, `#`/`;` comments, optional [section] headers
/// (section.key). Unknown keys and bad values raise ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Applies one `key=value` override with the same validation.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);
void validate(const ExperimentConfig& cfg);

std::string to_string(Scenario s);
std::string to_string(Optimizer o);

}  // namespace t4s
