#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fbctl/channel.hpp"

namespace fbctl {

struct Codebook;

/**
 * Product quantizer of the controller state (g, z).
 *
 * g is split into M equiprobable bins of the Gamma(L, 1) law with the last
 * bin unbounded; z into N equal-length bins of [0, 1].
 */
struct GridSpec {
    std::size_t M = 0;
    std::size_t N = 0;
    Eigen::VectorXd g_edges;  // M + 1, g_edges[M] = +inf
    Eigen::VectorXd g_points; // M
    Eigen::VectorXd z_edges;  // N + 1
    Eigen::VectorXd z_points; // N

    /// Checks the ordering and containment invariants; throws InvalidArgument.
    void validate() const;
};

struct GGrid {
    Eigen::VectorXd edges;
    Eigen::VectorXd points;
};

struct ZGrid {
    Eigen::VectorXd edges;
    Eigen::VectorXd points;
};

/// Equiprobable bins of Gamma(L, 1) with the conditional bin means as points.
GGrid build_g_grid(std::size_t L, std::size_t M);

/// Equal-length bins of [0, 1] with midpoints.
ZGrid build_z_grid(std::size_t N);

GridSpec make_grid(std::size_t L, std::size_t M, std::size_t N);

/// Bin indices (m, n) of a state; z = 1 belongs to the last z-bin.
std::pair<std::size_t, std::size_t> quantize_state(double g, double z, const GridSpec& spec);

std::size_t g_bin(double g, const GridSpec& spec);
std::size_t z_bin(double z, const GridSpec& spec);

/**
 * Estimated Markov model of the quantized state.
 *
 * All matrices are indexed [source][destination]. The z-chain after
 * feedback is a single row shared by every source bin.
 */
struct TransitionModel {
    Eigen::MatrixXd Ptilde;                  // M x M, g-transitions
    Eigen::MatrixXd P0;                      // N x N, z-transitions without feedback
    Eigen::VectorXd P1_row;                  // N, z-law one slot after perfect feedback
    std::optional<Eigen::VectorXd> Peps1_row; // N, z-law one slot after quantized feedback
    std::uint64_t seed = 0;
    std::size_t sample_count = 0;
    std::vector<std::string> warnings;

    std::size_t M() const { return static_cast<std::size_t>(Ptilde.rows()); }
    std::size_t N() const { return static_cast<std::size_t>(P0.rows()); }
};

/// Joint stationary probabilities pi(m, n) of the quantized state.
struct StationaryDistribution {
    Eigen::MatrixXd pi; // M x N

    /// Marginal over z: probability of each g-bin.
    Eigen::VectorXd g_marginal() const { return pi.rowwise().sum(); }
    /// Marginal over g: probability of each z-bin.
    Eigen::VectorXd z_marginal() const { return pi.colwise().sum().transpose(); }
};

struct EstimationOptions {
    /// Rejection draws allowed per missing sample when topping up a starved bin.
    std::size_t retry_budget = 100000;
    /// Minimum samples requested for every source bin of the g-chain.
    std::size_t min_row_samples = 1;
    /// Replace rows that stay empty by the uniform row (recording a warning)
    /// instead of failing.
    bool uniform_fallback = true;
};

/**
 * Monte Carlo estimate of the transition model for a Gauss-Markov channel.
 *
 * P0 rows start exactly at the z grid points and share random numbers
 * across rows; the g-chain is estimated from stationary draws binned at the
 * source. When a codebook is given the quantized-feedback row is estimated
 * as well.
 */
TransitionModel estimate_transition_model(const FadingParams& params, const GridSpec& spec,
                                          std::size_t sample_count, std::uint64_t seed,
                                          const Codebook* codebook = nullptr,
                                          const EstimationOptions& options = {});

/// Whether every row of A is a probability vector within tol.
bool is_row_stochastic(const Eigen::MatrixXd& A, double tol = 1e-9);

/**
 * Monotone (stochastically ordered) row-stochastic matrix test: the tail mass
 * sum_{m >= m0} A[n][m] is nondecreasing in the source row n for every m0,
 * up to tol. Throws InvalidArgument for non-stochastic input.
 */
bool is_monotone_stochastic(const Eigen::MatrixXd& A, double tol = 1e-9);

/// Largest distance from any state in a bin to its grid point, with the
/// unbounded last g-bin truncated at g_cap.
double max_quantization_error(const GridSpec& spec, double g_cap);

} // namespace fbctl
