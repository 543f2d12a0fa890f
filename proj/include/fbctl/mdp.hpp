#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "fbctl/codebook.hpp"
#include "fbctl/state_grid.hpp"

namespace fbctl {

/// Transmit SNR (linear) and per-feedback price in bit/s/Hz.
struct RewardSpec {
    double P = 100.0;
    double alpha = 0.0;

    /// alpha = B T_s / T_c.
    static RewardSpec from_costs(double P, double B, double T_s, double T_c);
    static RewardSpec from_snr_db(double snr_db, double alpha);
    void validate() const;
};

/// Reward per stage with perfect feedback.
double reward_per_stage(double gbar, double zbar, bool feedback, const RewardSpec& spec);

/// Reward per stage when the fed-back shape passes through a codebook.
double reward_per_stage_quantized(double gbar, double zbar, bool feedback, const RewardSpec& spec,
                                  const EpsStats& eps);

/// M x N feedback decisions, true = feed back.
class Policy {
  public:
    Policy() = default;
    Policy(std::size_t M, std::size_t N, bool value = false) : M_(M), N_(N), decide_(M * N, value ? 1 : 0) {}

    std::size_t M() const { return M_; }
    std::size_t N() const { return N_; }
    bool operator()(std::size_t m, std::size_t n) const { return decide_[m * N_ + n] != 0; }
    void set(std::size_t m, std::size_t n, bool v) { decide_[m * N_ + n] = v ? 1 : 0; }
    /// Fraction of states that feed back.
    double feedback_fraction() const;

    bool operator==(const Policy&) const = default;

    static Policy always(std::size_t M, std::size_t N) { return Policy(M, N, true); }
    static Policy never(std::size_t M, std::size_t N) { return Policy(M, N, false); }
    /// Feed back in (m, n) iff z_points[n] < thresholds[m].
    static Policy from_thresholds(const Eigen::VectorXd& thresholds, const Eigen::VectorXd& z_points);

  private:
    std::size_t M_ = 0;
    std::size_t N_ = 0;
    std::vector<std::uint8_t> decide_;
};

struct ThresholdProfile {
    Eigen::VectorXd y;
    bool is_threshold = false;
};

/**
 * Finite MDP on the quantized state: g-chain, idle z-chain, the shared
 * post-feedback z-row and the two reward tables.
 *
 * Perfect and quantized feedback differ only in `feedback_row` and
 * `reward_feedback`, so the four combinations compared when studying
 * quantization are all instances of this one type.
 */
struct ControlProblem {
    Eigen::VectorXd g_points;
    Eigen::VectorXd z_points;
    Eigen::VectorXd z_edges;
    Eigen::MatrixXd g_trans;         // M x M
    Eigen::MatrixXd z_trans_idle;    // N x N
    Eigen::VectorXd feedback_row;    // N
    Eigen::MatrixXd reward_idle;     // M x N
    Eigen::VectorXd reward_feedback; // M
    RewardSpec rewards;

    std::size_t M() const { return static_cast<std::size_t>(g_points.size()); }
    std::size_t N() const { return static_cast<std::size_t>(z_points.size()); }
    std::size_t states() const { return M() * N(); }

    double reward(std::size_t m, std::size_t n, bool feedback) const {
        return feedback ? reward_feedback(static_cast<Eigen::Index>(m))
                        : reward_idle(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    }

    void validate() const;
};

enum class FeedbackKind { perfect, quantized };

/**
 * Assembles the MDP. `reward_kind` selects G or G_eps for the feedback
 * action, `dynamics_kind` selects P(1) or P_eps(1); quantized variants need
 * `eps` and/or model.Peps1_row respectively.
 */
ControlProblem make_problem(const GridSpec& spec, const TransitionModel& model, const RewardSpec& rewards,
                            FeedbackKind reward_kind = FeedbackKind::perfect,
                            FeedbackKind dynamics_kind = FeedbackKind::perfect, const EpsStats* eps = nullptr);

/// Same problem with another feedback price.
ControlProblem with_alpha(const ControlProblem& problem, double alpha);

struct ValueTable {
    Eigen::MatrixXd V; // M x N
    double beta = 0.9;
};

/**
 * Continuation sum_{k,l} V(k,l) Ptilde[m][k] P_mu[n][l] for every state.
 * The feedback variant does not depend on n.
 */
Eigen::MatrixXd continuation_table(const Eigen::MatrixXd& V, const ControlProblem& problem, bool feedback);

double expected_continuation(const Eigen::MatrixXd& V, const ControlProblem& problem, std::size_t m, std::size_t n,
                             bool feedback);

/// One application of the discounted Bellman operator; ties pick no feedback.
ValueTable dp_operator(const ValueTable& value, const ControlProblem& problem, Policy* greedy = nullptr);

/// Iterates dp_operator from zero until the sup-norm step falls below tol.
ValueTable value_iteration_discounted(const ControlProblem& problem, double beta, double tol = 1e-10,
                                      std::size_t max_iter = 1000000, std::size_t* iterations = nullptr);

/// Greedy policy for a value table (ties pick no feedback).
Policy greedy_policy(const ValueTable& value, const ControlProblem& problem);

struct SolveResult {
    Policy policy;
    ThresholdProfile threshold;
    double J = 0.0;
    Eigen::MatrixXd A; // differential rewards, A(M-1, N-1) = 0
    std::size_t iterations = 0;
    StationaryDistribution pi;
};

struct PolicyEvaluation {
    double J = 0.0;
    Eigen::MatrixXd A;
};

/// Gain and differential rewards of a fixed policy with A(M-1, N-1) = 0.
PolicyEvaluation evaluate_policy(const Policy& policy, const ControlProblem& problem);

/**
 * Average-reward policy iteration with exact evaluation.
 *
 * Starts from the one-step greedy policy, improves with ties resolved toward
 * no feedback, and stops when the policy repeats.
 */
SolveResult policy_iteration_average(const ControlProblem& problem, std::size_t max_iter = 100);

/// Relative value iteration; a cross-check for policy iteration.
SolveResult relative_value_iteration(const ControlProblem& problem, double tol = 1e-11,
                                     std::size_t max_iter = 1000000);

/// Transition matrix over flattened states s = m N + n under a policy.
Eigen::MatrixXd policy_transition_matrix(const Policy& policy, const ControlProblem& problem);

StationaryDistribution stationary_distribution(const Policy& policy, const ControlProblem& problem);

/// sum_{m,n} G(m, n, mu(m, n)) pi(m, n).
double average_reward(const Policy& policy, const ControlProblem& problem);
double average_reward(const Policy& policy, const ControlProblem& problem, const StationaryDistribution& pi);

ThresholdProfile extract_threshold(const Policy& policy, const Eigen::VectorXd& z_edges);

/// ((2^-alpha (1 + P g) - 1) / (P g))^+, with the g -> 0 limit 0.
double threshold_lower_bound(double gbar, double P, double alpha);

/**
 * Brute-force optimum over threshold vectors with edge-valued components.
 *
 * Candidates for row m are the edges z_edges[k] with k at least the number of
 * grid points strictly below the one-step lower bound. Refuses searches
 * larger than 1e6 candidates.
 */
SolveResult exhaustive_threshold_search(const ControlProblem& problem);

/// Number of candidates exhaustive_threshold_search would evaluate.
double exhaustive_candidate_count(const ControlProblem& problem);

} // namespace fbctl
