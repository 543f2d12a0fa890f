#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fbctl/channel.hpp"
#include "fbctl/simulator.hpp"

namespace fbctl {

/**
 * Experiment description read from an INI-style file:
 *
 *   [channel]    antennas, doppler
 *   [grid]       M, N, model_samples, model (existing model JSON to reuse)
 *   [reward]     snr_db | snr, alpha (comma-separated list)
 *   [codebook]   method (none|random|lloyd|file), size, training, iterations, path, eps_samples
 *   [trajectory] slots, warmup, seed
 *   [periodic]   max_period
 *   [solver]     max_iter
 *   [evaluate]   policy (solve JSON to evaluate instead of solving)
 *   [output]     prefix
 *
 * Every key is optional; unknown sections or keys are rejected.
 */
struct ExperimentConfig {
    std::size_t L = 3;
    double doppler = 0.1;

    std::size_t M = 16;
    std::size_t N = 16;
    std::size_t model_samples = 1000000;
    std::optional<std::filesystem::path> model_path;

    double snr_db = 20.0;
    double P = 100.0;
    std::vector<double> alphas{0.5};

    std::string codebook_method = "none";
    std::size_t codebook_size = 16;
    std::size_t codebook_training = 100000;
    std::size_t codebook_iterations = 50;
    std::optional<std::filesystem::path> codebook_path;
    std::size_t eps_samples = 100000;

    TrajectoryConfig trajectory;
    std::size_t max_period = 64;
    std::size_t max_iter = 100;
    std::optional<std::filesystem::path> policy_path;

    std::string prefix = "fbctl_";

    FadingParams fading() const { return FadingParams::clarke(L, doppler); }
    bool quantized() const { return codebook_method != "none"; }

    /// Throws ConfigError on any out-of-domain value.
    void validate() const;
    /// Fully resolved configuration in the same INI format.
    std::string to_ini() const;
};

/// Defaults plus whatever the file sets. Relative paths resolve against the file's directory.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});

/// Documentation of all keys and defaults, for --help.
std::string config_reference();

} // namespace fbctl
