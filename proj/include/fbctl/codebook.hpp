#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fbctl/channel.hpp"

namespace fbctl {

/// Set of unit-norm beamforming vectors used to quantize the channel shape.
struct Codebook {
    std::vector<cvec> vectors;
    std::string method = "explicit";
    std::uint64_t seed = 0;

    std::size_t size() const { return vectors.size(); }
    std::size_t antennas() const { return vectors.empty() ? 0 : static_cast<std::size_t>(vectors.front().size()); }

    /// Throws InvalidArgument unless non-empty, equal-length and unit-norm.
    void validate() const;
};

struct Quantized {
    cvec s_hat;
    double eps = 0.0;
    std::size_t index = 0;
};

/// Maximum |s^H x|^2 codeword; ties resolved toward the lowest index.
Quantized quantize_shape(const cvec& s, const Codebook& codebook);

Codebook random_codebook(std::size_t L, std::size_t size, Rng& rng);

struct LloydResult {
    Codebook codebook;
    /// Mean eps over the training set after each centroid update.
    std::vector<double> objective;
};

/**
 * Generalized Lloyd training for shape quantization.
 *
 * Alternates nearest-codeword partitioning under the |s^H x|^2 criterion with
 * a centroid step that takes the principal eigenvector of each cluster's
 * correlation matrix. Empty clusters are re-seeded from a random training
 * shape. Stops after `iterations` rounds or once the mean eps improves by
 * less than 1e-6.
 */
LloydResult lloyd_train(const std::vector<cvec>& training, std::size_t size, std::size_t iterations, Rng& rng);

Codebook lloyd_codebook(std::size_t L, std::size_t size, std::size_t training_count, std::size_t iterations,
                        Rng& rng);

/// Moments of the quantization loss eps = |s_hat^H s|^2 under isotropic shapes.
struct EpsStats {
    double mean_eps = 1.0;
    double mean_log2_eps = 0.0;
    double mean_eps_stderr = 0.0;
    double mean_log2_eps_stderr = 0.0;
    /// E[log2(1 + P gbar_m eps)] for each g grid point.
    Eigen::VectorXd per_g_rate;
    Eigen::VectorXd per_g_rate_stderr;
    Eigen::VectorXd g_points;
    double P = 0.0;
    std::size_t sample_count = 0;
    /// Samples with eps == 0, left out of the log moments.
    std::size_t zero_eps_count = 0;

    /// E[log2(1 + P gbar eps)] at a grid point; throws when gbar is not one.
    double rate_at(double gbar) const;
};

/**
 * Monte Carlo eps moments. All moments are taken over the same shape draws,
 * so per_g_rate[m] >= log2(1 + P gbar_m) + mean_log2_eps holds exactly.
 */
EpsStats epsilon_statistics(const Codebook& codebook, std::size_t L, double P, const Eigen::VectorXd& g_points,
                            std::size_t sample_count, Rng& rng);

/// log2(e) |F|^(-1/(L-1)); 0 for L = 1.
double price_increment_bound(std::size_t L, std::size_t size);

} // namespace fbctl
