#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "fbctl/channel.hpp"
#include "fbctl/codebook.hpp"
#include "fbctl/mdp.hpp"
#include "fbctl/state_grid.hpp"

namespace fbctl {

struct TrajectoryConfig {
    std::size_t slots = 1000000;
    std::size_t warmup = 1000;
    std::uint64_t seed = 1;

    void validate() const;
};

struct EvalResult {
    double throughput = 0.0;    // E[log2(1 + P g z)]
    double feedback_rate = 0.0; // Pr(mu = 1)
    double net = 0.0;           // throughput - alpha * feedback_rate
    double std_error = 0.0;     // batch-means standard error of net
    double alpha = 0.0;
    std::size_t slots = 0;      // slots averaged (after warmup)
};

/**
 * Per-slot totals and batch sums of one simulated run. The throughput and
 * feedback counts do not depend on alpha, so one run can be priced at any
 * alpha afterwards.
 */
struct RunStats {
    double rate_sum = 0.0;
    std::size_t feedback_count = 0;
    std::size_t count = 0;
    std::size_t batch_size = 0;
    std::vector<double> batch_rate;
    std::vector<double> batch_feedback;

    void reset(std::size_t measured_slots, std::size_t batches = 100);
    void add(double rate, bool feedback);
    EvalResult result(double alpha) const;
};

struct CurvePoint {
    double alpha = 0.0;
    double net = 0.0;
    double throughput = 0.0;
    double feedback_rate = 0.0;
    double avg_threshold = 0.0;
    double std_error = 0.0;
};

struct Curve {
    std::vector<CurvePoint> points;
};

/**
 * Runs a quantized-state controller against the true channel. Each slot:
 * evolve, measure z against the current beamformer, quantize (g, z), and on
 * feedback replace the beamformer by s (or its codeword) before the rate
 * log2(1 + P g z) is collected.
 */
EvalResult simulate_policy(const Policy& policy, const GridSpec& spec, const FadingParams& params,
                           const RewardSpec& rewards, const TrajectoryConfig& config,
                           const Codebook* codebook = nullptr);

/// Feedback every k slots, for every k in 1..max_period, over one shared trajectory.
std::vector<RunStats> periodic_profile(const FadingParams& params, double P, std::size_t max_period,
                                       const TrajectoryConfig& config, const Codebook* codebook = nullptr);

struct PeriodicChoice {
    std::size_t period = 1;
    EvalResult result;
};

PeriodicChoice best_period(const std::vector<RunStats>& profile, double alpha);

/// Numerical search for the best feedback interval in 1..max_period.
PeriodicChoice periodic_baseline(const FadingParams& params, const RewardSpec& rewards, std::size_t max_period,
                                 const TrajectoryConfig& config, const Codebook* codebook = nullptr);

/// sum_m y[m] Pr(gbin = m).
double average_threshold(const ThresholdProfile& profile, const StationaryDistribution& pi);

/// Everything the controller needs that does not depend on alpha.
struct ControllerSetup {
    GridSpec spec;
    TransitionModel model;
    std::optional<Codebook> codebook;
    std::optional<EpsStats> eps;
};

ControllerSetup build_setup(const FadingParams& params, double P, std::size_t M, std::size_t N,
                            std::size_t model_samples, std::uint64_t seed,
                            std::optional<Codebook> codebook = std::nullopt, std::size_t eps_samples = 100000);

/// Solves the controller for one alpha (quantized variants when the setup has a codebook).
SolveResult solve_for_alpha(const ControllerSetup& setup, double P, double alpha);

/// Controlled-feedback curve: solve and simulate at each alpha with common random numbers.
Curve sweep_alpha(const std::vector<double>& alphas, const ControllerSetup& setup, const FadingParams& params,
                  double P, const TrajectoryConfig& config);

struct PeriodicSweep {
    Curve curve;
    std::vector<std::size_t> periods;
};

PeriodicSweep sweep_periodic(const std::vector<double>& alphas, const FadingParams& params, double P,
                             std::size_t max_period, const TrajectoryConfig& config,
                             const Codebook* codebook = nullptr);

struct RefinementRow {
    std::size_t M = 0;
    std::size_t N = 0;
    double J = 0.0;
    std::size_t iterations = 0;
    std::size_t samples = 0;
};

/// Solves the perfect-feedback controller on successively finer grids; the
/// estimation budget scales with the number of states.
std::vector<RefinementRow> refinement_study(const std::vector<std::pair<std::size_t, std::size_t>>& sizes,
                                            const FadingParams& params, const RewardSpec& rewards,
                                            std::size_t samples_per_state, std::uint64_t seed);

} // namespace fbctl
