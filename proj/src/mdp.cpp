#include "fbctl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/LU>

#include "fbctl/errors.hpp"

namespace fbctl {

namespace {

// Relative slack under which the two actions count as tied.
constexpr double tie_tolerance = 1e-12;

bool prefers_feedback(double q_feedback, double q_idle) {
    return q_feedback > q_idle + tie_tolerance * std::max(1.0, std::abs(q_idle));
}

Eigen::Index flat(std::size_t m, std::size_t n, std::size_t N) { return static_cast<Eigen::Index>(m * N + n); }

void require_shape(const Policy& policy, const ControlProblem& problem) {
    if (policy.M() != problem.M() || policy.N() != problem.N())
        throw InvalidArgument("policy dimensions do not match the problem");
}

Eigen::MatrixXd unflatten(const Eigen::VectorXd& v, std::size_t M, std::size_t N) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(N));
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t n = 0; n < N; ++n) out(m, n) = v(flat(m, n, N));
    return out;
}

} // namespace

RewardSpec RewardSpec::from_costs(double P, double B, double T_s, double T_c) {
    if (!(B > 0.0 && T_s > 0.0 && T_c > 0.0)) throw InvalidArgument("B, T_s and T_c must be positive");
    RewardSpec r;
    r.P = P;
    r.alpha = B * T_s / T_c;
    r.validate();
    return r;
}

RewardSpec RewardSpec::from_snr_db(double snr_db, double alpha) {
    RewardSpec r;
    r.P = std::pow(10.0, snr_db / 10.0);
    r.alpha = alpha;
    r.validate();
    return r;
}

void RewardSpec::validate() const {
    if (!(P > 0.0) || !std::isfinite(P)) throw InvalidArgument("transmit SNR must be positive and finite");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidArgument("feedback price must be finite and nonnegative");
}

double reward_per_stage(double gbar, double zbar, bool feedback, const RewardSpec& spec) {
    if (feedback) return std::log2(1.0 + spec.P * gbar) - spec.alpha;
    return std::log2(1.0 + spec.P * gbar * zbar);
}

double reward_per_stage_quantized(double gbar, double zbar, bool feedback, const RewardSpec& spec,
                                  const EpsStats& eps) {
    if (!feedback) return reward_per_stage(gbar, zbar, false, spec);
    if (std::abs(eps.P - spec.P) > 1e-12 * spec.P)
        throw InvalidArgument("eps statistics were computed for a different SNR");
    return eps.rate_at(gbar) - spec.alpha;
}

double Policy::feedback_fraction() const {
    if (decide_.empty()) return 0.0;
    return static_cast<double>(std::count(decide_.begin(), decide_.end(), 1)) / static_cast<double>(decide_.size());
}

Policy Policy::from_thresholds(const Eigen::VectorXd& thresholds, const Eigen::VectorXd& z_points) {
    const auto M = static_cast<std::size_t>(thresholds.size());
    const auto N = static_cast<std::size_t>(z_points.size());
    Policy p(M, N);
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t n = 0; n < N; ++n) p.set(m, n, z_points(n) < thresholds(m));
    return p;
}

void ControlProblem::validate() const {
    const auto M = g_points.size();
    const auto N = z_points.size();
    if (M == 0 || N == 0) throw InvalidArgument("empty control problem");
    if (g_trans.rows() != M || g_trans.cols() != M || z_trans_idle.rows() != N || z_trans_idle.cols() != N ||
        feedback_row.size() != N || reward_idle.rows() != M || reward_idle.cols() != N ||
        reward_feedback.size() != M || z_edges.size() != N + 1)
        throw InvalidArgument("control problem tables have inconsistent sizes");
    if (!is_row_stochastic(g_trans) || !is_row_stochastic(z_trans_idle) ||
        !is_row_stochastic(feedback_row.transpose()))
        throw InvalidArgument("transition tables must be row-stochastic");
}

ControlProblem make_problem(const GridSpec& spec, const TransitionModel& model, const RewardSpec& rewards,
                            FeedbackKind reward_kind, FeedbackKind dynamics_kind, const EpsStats* eps) {
    spec.validate();
    rewards.validate();
    if (model.M() != spec.M || model.N() != spec.N) throw InvalidArgument("model does not match the grid");
    ControlProblem p;
    p.g_points = spec.g_points;
    p.z_points = spec.z_points;
    p.z_edges = spec.z_edges;
    p.g_trans = model.Ptilde;
    p.z_trans_idle = model.P0;
    p.rewards = rewards;
    if (dynamics_kind == FeedbackKind::quantized) {
        if (!model.Peps1_row) throw InvalidArgument("model has no quantized-feedback row");
        p.feedback_row = *model.Peps1_row;
    } else {
        p.feedback_row = model.P1_row;
    }
    if (reward_kind == FeedbackKind::quantized && !eps)
        throw InvalidArgument("quantized feedback reward needs eps statistics");
    const auto M = spec.M;
    const auto N = spec.N;
    p.reward_idle.resize(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(N));
    p.reward_feedback.resize(static_cast<Eigen::Index>(M));
    for (std::size_t m = 0; m < M; ++m) {
        const double g = spec.g_points(m);
        for (std::size_t n = 0; n < N; ++n) p.reward_idle(m, n) = reward_per_stage(g, spec.z_points(n), false, rewards);
        p.reward_feedback(m) = reward_kind == FeedbackKind::quantized
                                   ? reward_per_stage_quantized(g, 1.0, true, rewards, *eps)
                                   : reward_per_stage(g, 1.0, true, rewards);
    }
    p.validate();
    return p;
}

ControlProblem with_alpha(const ControlProblem& problem, double alpha) {
    ControlProblem p = problem;
    p.reward_feedback.array() += problem.rewards.alpha - alpha;
    p.rewards.alpha = alpha;
    p.rewards.validate();
    return p;
}

Eigen::MatrixXd continuation_table(const Eigen::MatrixXd& V, const ControlProblem& problem, bool feedback) {
    const Eigen::MatrixXd C = problem.g_trans * V; // C(m, l) = sum_k Ptilde[m][k] V(k, l)
    if (!feedback) return C * problem.z_trans_idle.transpose();
    const Eigen::VectorXd w = C * problem.feedback_row;
    return w.replicate(1, V.cols());
}

double expected_continuation(const Eigen::MatrixXd& V, const ControlProblem& problem, std::size_t m, std::size_t n,
                             bool feedback) {
    if (m >= problem.M() || n >= problem.N()) throw InvalidArgument("state index out of range");
    const Eigen::VectorXd row = problem.g_trans.row(static_cast<Eigen::Index>(m)) * V;
    const Eigen::VectorXd& z_law =
        feedback ? problem.feedback_row
                 : Eigen::VectorXd(problem.z_trans_idle.row(static_cast<Eigen::Index>(n)).transpose());
    return row.dot(z_law);
}

ValueTable dp_operator(const ValueTable& value, const ControlProblem& problem, Policy* greedy) {
    const auto M = problem.M();
    const auto N = problem.N();
    if (static_cast<std::size_t>(value.V.rows()) != M || static_cast<std::size_t>(value.V.cols()) != N)
        throw InvalidArgument("value table does not match the problem");
    const Eigen::MatrixXd idle = continuation_table(value.V, problem, false);
    const Eigen::MatrixXd fb = continuation_table(value.V, problem, true);
    ValueTable out{Eigen::MatrixXd(value.V.rows(), value.V.cols()), value.beta};
    if (greedy) *greedy = Policy(M, N);
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t n = 0; n < N; ++n) {
            const double q0 = problem.reward(m, n, false) + value.beta * idle(m, n);
            const double q1 = problem.reward(m, n, true) + value.beta * fb(m, n);
            const bool choose = prefers_feedback(q1, q0);
            out.V(m, n) = choose ? q1 : q0;
            if (greedy) greedy->set(m, n, choose);
        }
    }
    return out;
}

ValueTable value_iteration_discounted(const ControlProblem& problem, double beta, double tol, std::size_t max_iter,
                                      std::size_t* iterations) {
    if (!(beta > 0.0 && beta < 1.0)) throw InvalidArgument("discount factor must lie in (0, 1)");
    ValueTable v{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(problem.M()), static_cast<Eigen::Index>(problem.N())),
                 beta};
    double diff = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= max_iter; ++k) {
        ValueTable next = dp_operator(v, problem);
        diff = (next.V - v.V).cwiseAbs().maxCoeff();
        v = std::move(next);
        if (diff <= tol) {
            if (iterations) *iterations = k;
            return v;
        }
    }
    throw NumericalFailure("value iteration did not converge", diff);
}

Policy greedy_policy(const ValueTable& value, const ControlProblem& problem) {
    Policy p;
    dp_operator(value, problem, &p);
    return p;
}

Eigen::MatrixXd policy_transition_matrix(const Policy& policy, const ControlProblem& problem) {
    require_shape(policy, problem);
    const auto M = problem.M();
    const auto N = problem.N();
    const auto S = static_cast<Eigen::Index>(M * N);
    Eigen::MatrixXd T(S, S);
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t n = 0; n < N; ++n) {
            const auto s = flat(m, n, N);
            const bool fb = policy(m, n);
            for (std::size_t k = 0; k < M; ++k) {
                const double pg = problem.g_trans(m, k);
                for (std::size_t l = 0; l < N; ++l) {
                    const double pz = fb ? problem.feedback_row(l) : problem.z_trans_idle(n, l);
                    T(s, flat(k, l, N)) = pg * pz;
                }
            }
        }
    }
    return T;
}

PolicyEvaluation evaluate_policy(const Policy& policy, const ControlProblem& problem) {
    const auto M = problem.M();
    const auto N = problem.N();
    const Eigen::MatrixXd T = policy_transition_matrix(policy, problem);
    const auto S = T.rows();
    const auto anchor = S - 1; // state (M-1, N-1)

    // J + A_s - sum_s' T(s, s') A_s' = G_s with A_anchor = 0; the anchor's
    // column is reused for the unknown J.
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S) - T;
    system.col(anchor).setOnes();
    Eigen::VectorXd rhs(S);
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t n = 0; n < N; ++n) rhs(flat(m, n, N)) = problem.reward(m, n, policy(m, n));

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
    if (!(lu.rcond() > 1e-13)) throw NumericalFailure("policy evaluation system is singular", lu.rcond());
    Eigen::VectorXd x = lu.solve(rhs);
    const double residual = (system * x - rhs).cwiseAbs().maxCoeff();
    if (residual > 1e-8) throw NumericalFailure("policy evaluation residual too large", residual);

    PolicyEvaluation out;
    out.J = x(anchor);
    x(anchor) = 0.0;
    out.A = unflatten(x, M, N);
    return out;
}

namespace {

SolveResult finish(const ControlProblem& problem, Policy policy, double J, Eigen::MatrixXd A, std::size_t iterations) {
    SolveResult r;
    r.threshold = extract_threshold(policy, problem.z_edges);
    r.J = J;
    r.A = std::move(A);
    r.iterations = iterations;
    r.pi = stationary_distribution(policy, problem);
    r.policy = std::move(policy);
    return r;
}

} // namespace

SolveResult policy_iteration_average(const ControlProblem& problem, std::size_t max_iter) {
    problem.validate();
    const auto M = problem.M();
    const auto N = problem.N();
    // one-step greedy start
    Policy policy(M, N);
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t n = 0; n < N; ++n)
            policy.set(m, n, prefers_feedback(problem.reward(m, n, true), problem.reward(m, n, false)));

    for (std::size_t it = 1; it <= max_iter; ++it) {
        PolicyEvaluation eval = evaluate_policy(policy, problem);
        const Eigen::MatrixXd idle = continuation_table(eval.A, problem, false);
        const Eigen::MatrixXd fb = continuation_table(eval.A, problem, true);
        Policy next(M, N);
        for (std::size_t m = 0; m < M; ++m) {
            for (std::size_t n = 0; n < N; ++n) {
                const double q0 = problem.reward(m, n, false) + idle(m, n);
                const double q1 = problem.reward(m, n, true) + fb(m, n);
                next.set(m, n, prefers_feedback(q1, q0));
            }
        }
        if (next == policy) return finish(problem, std::move(policy), eval.J, std::move(eval.A), it);
        policy = std::move(next);
    }
    throw NumericalFailure("policy iteration exceeded " + std::to_string(max_iter) + " iterations");
}

SolveResult relative_value_iteration(const ControlProblem& problem, double tol, std::size_t max_iter) {
    problem.validate();
    const auto M = static_cast<Eigen::Index>(problem.M());
    const auto N = static_cast<Eigen::Index>(problem.N());
    // Aperiodicity transform: h <- (1 - tau) h + tau T h.
    constexpr double tau = 0.5;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(M, N);
    double span = std::numeric_limits<double>::infinity();
    for (std::size_t it = 1; it <= max_iter; ++it) {
        const ValueTable t = dp_operator(ValueTable{h, 1.0}, problem);
        const Eigen::MatrixXd next = (1.0 - tau) * h + tau * t.V;
        const Eigen::MatrixXd delta = next - h;
        span = delta.maxCoeff() - delta.minCoeff();
        const double gain = delta(M - 1, N - 1) / tau;
        h = next.array() - next(M - 1, N - 1);
        if (span <= tol) {
            Policy policy = greedy_policy(ValueTable{h, 1.0}, problem);
            return finish(problem, std::move(policy), gain, h, it);
        }
    }
    throw NumericalFailure("relative value iteration did not converge", span);
}

StationaryDistribution stationary_distribution(const Policy& policy, const ControlProblem& problem) {
    const Eigen::MatrixXd T = policy_transition_matrix(policy, problem);
    const auto S = T.rows();
    Eigen::MatrixXd system = T.transpose() - Eigen::MatrixXd::Identity(S, S);
    system.row(S - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(S);
    rhs(S - 1) = 1.0;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
    if (!(lu.rcond() > 1e-13))
        throw NumericalFailure("stationary equations are singular (chain not unichain)", lu.rcond());
    Eigen::VectorXd pi = lu.solve(rhs);
    if (pi.minCoeff() < -1e-9) throw NumericalFailure("stationary solve produced negative mass", pi.minCoeff());
    pi = pi.cwiseMax(0.0);
    pi /= pi.sum();

    // Check against the balance equations; polish with lazy power steps if needed.
    const auto balance = [&](const Eigen::VectorXd& p) { return (T.transpose() * p - p).cwiseAbs().maxCoeff(); };
    double residual = balance(pi);
    for (int k = 0; k < 10000 && residual > 1e-10; ++k) {
        pi = 0.5 * (pi + T.transpose() * pi);
        residual = balance(pi);
    }
    if (residual > 1e-8) throw NumericalFailure("stationary distribution fails the balance equations", residual);

    StationaryDistribution out;
    out.pi = unflatten(pi, problem.M(), problem.N());
    return out;
}

double average_reward(const Policy& policy, const ControlProblem& problem, const StationaryDistribution& pi) {
    require_shape(policy, problem);
    double J = 0.0;
    for (std::size_t m = 0; m < problem.M(); ++m)
        for (std::size_t n = 0; n < problem.N(); ++n) J += problem.reward(m, n, policy(m, n)) * pi.pi(m, n);
    return J;
}

double average_reward(const Policy& policy, const ControlProblem& problem) {
    return average_reward(policy, problem, stationary_distribution(policy, problem));
}

ThresholdProfile extract_threshold(const Policy& policy, const Eigen::VectorXd& z_edges) {
    if (static_cast<std::size_t>(z_edges.size()) != policy.N() + 1)
        throw InvalidArgument("z edges do not match the policy");
    ThresholdProfile out;
    out.y.resize(static_cast<Eigen::Index>(policy.M()));
    out.is_threshold = true;
    for (std::size_t m = 0; m < policy.M(); ++m) {
        std::size_t lead = 0;
        while (lead < policy.N() && policy(m, lead)) ++lead;
        bool clean = true;
        for (std::size_t n = lead; n < policy.N(); ++n) clean = clean && !policy(m, n);
        out.is_threshold = out.is_threshold && clean;
        out.y(m) = z_edges(lead);
    }
    return out;
}

double threshold_lower_bound(double gbar, double P, double alpha) {
    if (!(gbar > 0.0)) return 0.0;
    const double pg = P * gbar;
    const double value = (std::exp2(-alpha) * (1.0 + pg) - 1.0) / pg;
    return std::clamp(value, 0.0, 1.0);
}

namespace {

std::vector<std::size_t> first_candidates(const ControlProblem& problem) {
    std::vector<std::size_t> first(problem.M());
    for (std::size_t m = 0; m < problem.M(); ++m) {
        const double lb = threshold_lower_bound(problem.g_points(m), problem.rewards.P, problem.rewards.alpha);
        std::size_t k = 0;
        while (k < problem.N() && problem.z_points(k) < lb) ++k;
        first[m] = k;
    }
    return first;
}

} // namespace

double exhaustive_candidate_count(const ControlProblem& problem) {
    double count = 1.0;
    for (const auto k : first_candidates(problem)) count *= static_cast<double>(problem.N() + 1 - k);
    return count;
}

SolveResult exhaustive_threshold_search(const ControlProblem& problem) {
    problem.validate();
    if (exhaustive_candidate_count(problem) > 1e6)
        throw InvalidArgument("exhaustive threshold search exceeds 1e6 candidates; use policy iteration");
    const auto M = problem.M();
    const auto N = problem.N();
    const auto first = first_candidates(problem);

    std::vector<std::size_t> cut(first);
    Eigen::VectorXd y(static_cast<Eigen::Index>(M));
    double best_J = -std::numeric_limits<double>::infinity();
    Policy best;
    std::size_t evaluated = 0;
    for (;;) {
        for (std::size_t m = 0; m < M; ++m) y(m) = problem.z_edges(cut[m]);
        Policy candidate = Policy::from_thresholds(y, problem.z_points);
        const double J = average_reward(candidate, problem);
        ++evaluated;
        if (J > best_J) {
            best_J = J;
            best = std::move(candidate);
        }
        // odometer over cut[m] in [first[m], N]
        std::size_t m = 0;
        while (m < M && cut[m] == N) {
            cut[m] = first[m];
            ++m;
        }
        if (m == M) break;
        ++cut[m];
    }
    PolicyEvaluation eval = evaluate_policy(best, problem);
    return finish(problem, std::move(best), best_J, std::move(eval.A), evaluated);
}

} // namespace fbctl
