// Test-only helpers: random model generators and closed-form / quadrature
// oracles that do not touch the library's estimation code paths.
#pragma once

#include <cmath>
#include <random>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "fbctl/mdp.hpp"
#include "fbctl/rng.hpp"

namespace fbctl::testing {

inline Eigen::MatrixXd random_stochastic(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::uniform_real_distribution<double> u(0.01, 1.0);
    Eigen::MatrixXd A(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) A(r, c) = u(rng);
        A.row(r) /= A.row(r).sum();
    }
    return A;
}

/// Tail-sum matrix T(r, c) = sum_{k >= c} A(r, k).
inline Eigen::MatrixXd tails(const Eigen::MatrixXd& A) {
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(A.rows(), A.cols());
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
        double acc = 0.0;
        for (Eigen::Index c = A.cols() - 1; c >= 0; --c) T(r, c) = acc += A(r, c);
    }
    return T;
}

inline Eigen::MatrixXd from_tails(const Eigen::MatrixXd& T) {
    Eigen::MatrixXd A(T.rows(), T.cols());
    for (Eigen::Index r = 0; r < T.rows(); ++r)
        for (Eigen::Index c = 0; c < T.cols(); ++c)
            A(r, c) = T(r, c) - (c + 1 < T.cols() ? T(r, c + 1) : 0.0);
    return A;
}

/// Random monotone row-stochastic matrix: running elementwise max of tail sums.
inline Eigen::MatrixXd random_monotone(Eigen::Index n, Rng& rng) {
    Eigen::MatrixXd T = tails(random_stochastic(n, n, rng));
    for (Eigen::Index r = 1; r < n; ++r) T.row(r) = T.row(r).cwiseMax(T.row(r - 1));
    return from_tails(T);
}

/// Probability row that stochastically dominates every row of A.
inline Eigen::VectorXd dominating_row(const Eigen::MatrixXd& A, Rng& rng) {
    Eigen::MatrixXd T = tails(A);
    Eigen::MatrixXd raw = tails(random_stochastic(1, A.cols(), rng));
    Eigen::RowVectorXd top = T.colwise().maxCoeff().cwiseMax(raw.row(0));
    return from_tails(top).transpose();
}

/// Random monotone control problem on an M x N grid with midpoint z values.
inline ControlProblem random_monotone_problem(std::size_t M, std::size_t N, double P, double alpha, Rng& rng) {
    ControlProblem p;
    std::uniform_real_distribution<double> u(0.1, 6.0);
    p.g_points.resize(static_cast<Eigen::Index>(M));
    for (std::size_t m = 0; m < M; ++m) p.g_points(m) = u(rng);
    std::sort(p.g_points.data(), p.g_points.data() + M);
    p.z_edges.resize(static_cast<Eigen::Index>(N + 1));
    p.z_points.resize(static_cast<Eigen::Index>(N));
    for (std::size_t n = 0; n <= N; ++n) p.z_edges(n) = static_cast<double>(n) / static_cast<double>(N);
    for (std::size_t n = 0; n < N; ++n) p.z_points(n) = (static_cast<double>(n) + 0.5) / static_cast<double>(N);
    p.g_trans = random_stochastic(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(M), rng);
    p.z_trans_idle = random_monotone(static_cast<Eigen::Index>(N), rng);
    p.feedback_row = dominating_row(p.z_trans_idle, rng);
    p.rewards = RewardSpec{P, alpha};
    p.reward_idle.resize(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(N));
    p.reward_feedback.resize(static_cast<Eigen::Index>(M));
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t n = 0; n < N; ++n)
            p.reward_idle(m, n) = std::log2(1.0 + P * p.g_points(m) * p.z_points(n));
        p.reward_feedback(m) = std::log2(1.0 + P * p.g_points(m)) - alpha;
    }
    p.validate();
    return p;
}

/// Pr(z >= tau) = (1 - tau)^(L - 1) for an isotropic shape against a fixed beamformer.
inline double alignment_tail(double tau, std::size_t L) { return std::pow(1.0 - tau, static_cast<double>(L - 1)); }

/// E[log2(1 + P g)] for g ~ Gamma(L, 1), by adaptive quadrature.
inline double ergodic_rate_full_csi(std::size_t L, double P) {
    const double k = static_cast<double>(L);
    boost::math::quadrature::exp_sinh<double> integrator;
    return integrator.integrate([&](double g) {
        return std::log2(1.0 + P * g) * std::exp((k - 1.0) * std::log(g) - g - std::lgamma(k));
    });
}

/// E[log2(1 + P g z)] with g ~ Gamma(L, 1) independent of z ~ Beta(1, L - 1).
inline double ergodic_rate_no_feedback(std::size_t L, double P) {
    const double k = static_cast<double>(L);
    boost::math::quadrature::exp_sinh<double> outer;
    return outer.integrate([&](double g) {
        const double pg = std::exp((k - 1.0) * std::log(g) - g - std::lgamma(k));
        const double inner = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
            [&](double z) { return std::log2(1.0 + P * g * z) * (k - 1.0) * std::pow(1.0 - z, k - 2.0); }, 0.0, 1.0,
            10, 1e-12);
        return pg * inner;
    });
}

} // namespace fbctl::testing
