#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "fbctl/codebook.hpp"
#include "fbctl/errors.hpp"
#include "fbctl/mdp.hpp"
#include "support.hpp"

using namespace fbctl;

namespace {

// Independent evaluation: build the flattened chain by Kronecker rows and
// take the stationary law as the unit eigenvector of the transpose.
double oracle_average_reward(const Policy& policy, const ControlProblem& p) {
    const Eigen::Index M = p.g_trans.rows(), N = p.z_trans_idle.rows(), S = M * N;
    Eigen::MatrixXd T(S, S);
    Eigen::VectorXd r(S);
    for (Eigen::Index m = 0; m < M; ++m)
        for (Eigen::Index n = 0; n < N; ++n) {
            const bool fb = policy(m, n);
            const Eigen::RowVectorXd zrow = fb ? Eigen::RowVectorXd(p.feedback_row.transpose())
                                               : Eigen::RowVectorXd(p.z_trans_idle.row(n));
            for (Eigen::Index k = 0; k < M; ++k)
                for (Eigen::Index l = 0; l < N; ++l) T(m * N + n, k * N + l) = p.g_trans(m, k) * zrow(l);
            r(m * N + n) = fb ? std::log2(1.0 + p.rewards.P * p.g_points(m)) - p.rewards.alpha
                              : std::log2(1.0 + p.rewards.P * p.g_points(m) * p.z_points(n));
        }
    Eigen::EigenSolver<Eigen::MatrixXd> es(T.transpose());
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < S; ++i)
        if (std::abs(es.eigenvalues()(i) - 1.0) < std::abs(es.eigenvalues()(best) - 1.0)) best = i;
    Eigen::VectorXd pi = es.eigenvectors().col(best).real();
    pi /= pi.sum();
    return pi.dot(r);
}

double brute_force_best(const ControlProblem& p) {
    const std::size_t M = p.M(), N = p.N(), S = M * N;
    double best = -INFINITY;
    for (std::size_t mask = 0; mask < (std::size_t{1} << S); ++mask) {
        Policy policy(M, N);
        for (std::size_t s = 0; s < S; ++s) policy.set(s / N, s % N, (mask >> s) & 1);
        best = std::max(best, oracle_average_reward(policy, p));
    }
    return best;
}

ControlProblem one_state(double g, double z, double alpha) {
    ControlProblem p;
    p.g_points = Eigen::VectorXd::Constant(1, g);
    p.z_points = Eigen::VectorXd::Constant(1, z);
    p.z_edges = Eigen::Vector2d(0.0, 1.0);
    p.g_trans = Eigen::MatrixXd::Ones(1, 1);
    p.z_trans_idle = Eigen::MatrixXd::Ones(1, 1);
    p.feedback_row = Eigen::VectorXd::Ones(1);
    p.rewards = RewardSpec{100.0, alpha};
    p.reward_idle = Eigen::MatrixXd::Constant(1, 1, std::log2(1.0 + 100.0 * g * z));
    p.reward_feedback = Eigen::VectorXd::Constant(1, std::log2(1.0 + 100.0 * g) - alpha);
    return p;
}

bool monotone_in_z(const Eigen::MatrixXd& V, double tol = 1e-9) {
    for (Eigen::Index m = 0; m < V.rows(); ++m)
        for (Eigen::Index n = 1; n < V.cols(); ++n)
            if (V(m, n) < V(m, n - 1) - tol) return false;
    return true;
}

} // namespace

TEST_CASE("reward per stage") {
    const RewardSpec spec{100.0, 0.5};
    CHECK(reward_per_stage(1.0, 0.3, true, spec) == doctest::Approx(std::log2(101.0) - 0.5));
    CHECK(reward_per_stage(1.0, 0.3, true, spec) == doctest::Approx(6.1582).epsilon(1e-4));
    CHECK(reward_per_stage(2.0, 0.0, false, spec) == 0.0);
    for (double g : {0.1, 1.0, 7.5})
        CHECK(reward_per_stage(g, 1.0, false, spec) == doctest::Approx(reward_per_stage(g, 1.0, true, spec) + 0.5));

    const RewardSpec costs = RewardSpec::from_costs(100.0, 40.0, 1e-3, 0.1);
    CHECK(std::abs(costs.alpha - 0.4) < 1e-12);
    CHECK(RewardSpec::from_snr_db(20.0, 0.0).P == doctest::Approx(100.0).epsilon(1e-14));
    CHECK_THROWS_AS(RewardSpec({-1.0, 0.0}).validate(), InvalidArgument);
    CHECK_THROWS_AS(RewardSpec({1.0, -0.1}).validate(), InvalidArgument);
}

TEST_CASE("quantized reward per stage") {
    const Eigen::VectorXd g = Eigen::Vector3d(0.5, 2.0, 5.0);
    const RewardSpec spec{100.0, 0.3};
    SUBCASE("perfect codebook") {
        Rng rng = make_stream(1, 0);
        Codebook basis;
        basis.vectors = {cvec::Ones(1)};
        const EpsStats eps = epsilon_statistics(basis, 1, 100.0, g, 10000, rng);
        for (Eigen::Index m = 0; m < 3; ++m)
            for (double z : {0.0, 0.4, 1.0})
                for (bool fb : {false, true})
                    CHECK(reward_per_stage_quantized(g(m), z, fb, spec, eps) ==
                          doctest::Approx(reward_per_stage(g(m), z, fb, spec)).epsilon(1e-13));
    }
    SUBCASE("random codebook") {
        Rng rng = make_stream(2, 0);
        const Codebook cb = random_codebook(3, 16, rng);
        const EpsStats eps = epsilon_statistics(cb, 3, 100.0, g, 20000, rng);
        for (Eigen::Index m = 0; m < 3; ++m) {
            const double q = reward_per_stage_quantized(g(m), 0.5, true, spec, eps);
            CHECK(q <= reward_per_stage(g(m), 0.5, true, spec));
            CHECK(q >= std::log2(1.0 + 100.0 * g(m)) + eps.mean_log2_eps - 0.3 - 1e-12);
            CHECK(reward_per_stage_quantized(g(m), 0.5, false, spec, eps) == reward_per_stage(g(m), 0.5, false, spec));
        }
        CHECK_THROWS(reward_per_stage_quantized(1.234, 0.5, true, spec, eps));
        CHECK_THROWS(reward_per_stage_quantized(g(0), 0.5, true, RewardSpec{10.0, 0.3}, eps));
    }
}

TEST_CASE("DP operator") {
    Rng rng = make_stream(7, 0);
    const ControlProblem p = testing::random_monotone_problem(3, 5, 100.0, 0.8, rng);
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(3, 5);
    const ValueTable one = dp_operator({zero, 0.9}, p);
    for (std::size_t m = 0; m < 3; ++m)
        for (std::size_t n = 0; n < 5; ++n)
            CHECK(one.V(m, n) == doctest::Approx(std::max(p.reward(m, n, true), p.reward(m, n, false))));

    const Eigen::MatrixXd any = Eigen::MatrixXd::Random(3, 5) * 10.0;
    const ValueTable b0 = dp_operator({any, 0.0}, p);
    CHECK((b0.V - one.V).cwiseAbs().maxCoeff() < 1e-12);

    for (int trial = 0; trial < 100; ++trial) {
        const ControlProblem q = testing::random_monotone_problem(3, 6, 100.0, 1.0, rng);
        Eigen::MatrixXd V = Eigen::MatrixXd::Random(3, 6);
        for (Eigen::Index m = 0; m < 3; ++m) {
            Eigen::RowVectorXd row = V.row(m);
            std::sort(row.data(), row.data() + row.size());
            V.row(m) = row;
        }
        CHECK(monotone_in_z(dp_operator({V, 0.95}, q).V));
    }
}

TEST_CASE("discounted value iteration") {
    SUBCASE("single state") {
        const ControlProblem p = one_state(1.0, 0.5, 0.7);
        const ValueTable v = value_iteration_discounted(p, 0.9, 1e-12);
        CHECK(v.V(0, 0) == doctest::Approx(std::max(p.reward(0, 0, true), p.reward(0, 0, false)) / 0.1).epsilon(1e-10));
    }
    Rng rng = make_stream(8, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const ControlProblem p = testing::random_monotone_problem(4, 6, 100.0, 1.5, rng);
        std::size_t iterations = 0;
        const ValueTable v = value_iteration_discounted(p, 0.9, 1e-10, 1000000, &iterations);
        const ValueTable Fv = dp_operator(v, p);
        CHECK((Fv.V - v.V).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK(monotone_in_z(v.V));
        CHECK(iterations > 0);
        for (std::size_t m = 0; m < 4; ++m) {
            const double w1 = expected_continuation(v.V, p, m, 0, true);
            for (std::size_t n = 0; n < 6; ++n) {
                CHECK(expected_continuation(v.V, p, m, n, true) == w1);
                CHECK(w1 >= expected_continuation(v.V, p, m, n, false) - 1e-9);
                if (n > 0)
                    CHECK(expected_continuation(v.V, p, m, n, false) >=
                          expected_continuation(v.V, p, m, n - 1, false) - 1e-9);
            }
        }
    }
    const ControlProblem p = testing::random_monotone_problem(2, 2, 100.0, 1.0, rng);
    CHECK_THROWS_AS(value_iteration_discounted(p, 0.999, 1e-14, 3), NumericalFailure);
    CHECK_THROWS_AS(value_iteration_discounted(p, 1.0), InvalidArgument);
}

TEST_CASE("policy iteration") {
    SUBCASE("single state") {
        for (double alpha : {0.0, 1.0, 10.0}) {
            const ControlProblem p = one_state(1.0, 0.5, alpha);
            const SolveResult r = policy_iteration_average(p);
            const bool fb = p.reward(0, 0, true) > p.reward(0, 0, false);
            CHECK(r.policy(0, 0) == fb);
            CHECK(r.J == doctest::Approx(p.reward(0, 0, fb)).epsilon(1e-12));
            CHECK(r.A(0, 0) == 0.0);
        }
    }
    Rng rng = make_stream(9, 0);
    SUBCASE("alpha = 0 feeds back everywhere") {
        for (int trial = 0; trial < 20; ++trial) {
            const ControlProblem p = testing::random_monotone_problem(4, 8, 100.0, 0.0, rng);
            const SolveResult r = policy_iteration_average(p);
            CHECK(r.policy == Policy::always(4, 8));
            CHECK((r.threshold.y.array() == 1.0).all());
        }
    }
    SUBCASE("global optimum over all deterministic policies") {
        std::uniform_real_distribution<double> price(0.0, 3.0);
        for (int trial = 0; trial < 20; ++trial) {
            const ControlProblem p = testing::random_monotone_problem(2, 4, 100.0, price(rng), rng);
            const SolveResult r = policy_iteration_average(p);
            CHECK(std::abs(r.J - brute_force_best(p)) < 1e-9);
            CHECK(std::abs(r.J - exhaustive_threshold_search(p).J) < 1e-9);
            CHECK(r.threshold.is_threshold);
        }
    }
    SUBCASE("evaluation equations and consistency") {
        for (int trial = 0; trial < 20; ++trial) {
            const ControlProblem p = testing::random_monotone_problem(4, 6, 100.0, 1.0, rng);
            const SolveResult r = policy_iteration_average(p);
            CHECK(r.A(3, 5) == 0.0);
            for (std::size_t m = 0; m < 4; ++m)
                for (std::size_t n = 0; n < 6; ++n) {
                    const bool fb = r.policy(m, n);
                    const double lhs = r.J + r.A(m, n);
                    const double rhs = p.reward(m, n, fb) + expected_continuation(r.A, p, m, n, fb);
                    CHECK(std::abs(lhs - rhs) <= 1e-8);
                }
            CHECK(std::abs(average_reward(r.policy, p) - r.J) < 1e-9);
            CHECK(std::abs(oracle_average_reward(r.policy, p) - r.J) < 1e-9);
            const SolveResult rvi = relative_value_iteration(p);
            CHECK(std::abs(rvi.J - r.J) < 1e-7);
            // threshold structure and the per-row lower bound
            CHECK(r.threshold.is_threshold);
            for (std::size_t m = 0; m < 4; ++m)
                CHECK(r.threshold.y(m) >= threshold_lower_bound(p.g_points(m), 100.0, 1.0) - 1.0 / 6);
        }
    }
    SUBCASE("discounted limit") {
        const ControlProblem p = testing::random_monotone_problem(3, 4, 100.0, 1.0, rng);
        const SolveResult r = policy_iteration_average(p);
        const ValueTable v = value_iteration_discounted(p, 0.999, 1e-9);
        CHECK(std::abs((1.0 - 0.999) * v.V.maxCoeff() - r.J) / r.J < 0.02);
    }
    SUBCASE("determinism") {
        Rng a = make_stream(99, 0), b = make_stream(99, 0);
        const ControlProblem pa = testing::random_monotone_problem(4, 8, 100.0, 0.9, a);
        const ControlProblem pb = testing::random_monotone_problem(4, 8, 100.0, 0.9, b);
        const SolveResult ra = policy_iteration_average(pa), rb = policy_iteration_average(pb);
        CHECK(ra.policy == rb.policy);
        CHECK(ra.J == rb.J);
        CHECK(ra.iterations == rb.iterations);
    }
}

TEST_CASE("stationary distribution") {
    SUBCASE("symmetric two-state z-chain") {
        ControlProblem p = one_state(1.0, 0.5, 0.0);
        p.z_points = Eigen::Vector2d(0.25, 0.75);
        p.z_edges = Eigen::Vector3d(0.0, 0.5, 1.0);
        p.z_trans_idle = (Eigen::Matrix2d() << 0.7, 0.3, 0.3, 0.7).finished();
        p.feedback_row = Eigen::Vector2d(0.0, 1.0);
        p.reward_idle = Eigen::RowVector2d(std::log2(26.0), std::log2(76.0));
        const StationaryDistribution pi = stationary_distribution(Policy::never(1, 2), p);
        CHECK(pi.pi(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(pi.pi(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
    }
    Rng rng = make_stream(10, 0);
    SUBCASE("always-feedback z marginal is the feedback row") {
        const ControlProblem p = testing::random_monotone_problem(3, 5, 100.0, 0.0, rng);
        const StationaryDistribution pi = stationary_distribution(Policy::always(3, 5), p);
        CHECK((pi.z_marginal() - p.feedback_row).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(std::abs(pi.pi.sum() - 1.0) < 1e-12);
        const Eigen::MatrixXd T = policy_transition_matrix(Policy::always(3, 5), p);
        Eigen::RowVectorXd flat(15);
        for (Eigen::Index m = 0; m < 3; ++m)
            for (Eigen::Index n = 0; n < 5; ++n) flat(m * 5 + n) = pi.pi(m, n);
        CHECK((flat * T - flat).cwiseAbs().maxCoeff() < 1e-8);
    }
    SUBCASE("doubly stochastic chains give the uniform law") {
        ControlProblem p = testing::random_monotone_problem(3, 3, 100.0, 1.0, rng);
        p.g_trans = (Eigen::Matrix3d() << .5, .3, .2, .2, .5, .3, .3, .2, .5).finished();
        p.z_trans_idle = (Eigen::Matrix3d() << .6, .3, .1, .3, .4, .3, .1, .3, .6).finished();
        const StationaryDistribution pi = stationary_distribution(Policy::never(3, 3), p);
        CHECK((pi.pi.array() - 1.0 / 9).abs().maxCoeff() < 1e-12);
    }
    SUBCASE("absorbing lowest bin") {
        ControlProblem p = testing::random_monotone_problem(3, 4, 100.0, 1.0, rng);
        p.z_trans_idle.setZero();
        p.z_trans_idle.col(0).setOnes();
        const Policy never = Policy::never(3, 4);
        const StationaryDistribution pi = stationary_distribution(never, p);
        double expect = 0.0;
        for (std::size_t m = 0; m < 3; ++m)
            expect += pi.g_marginal()(m) * std::log2(1.0 + 100.0 * p.g_points(m) * p.z_points(0));
        CHECK(average_reward(never, p) == doctest::Approx(expect).epsilon(1e-12));
    }
    SUBCASE("affine in alpha with slope -Pr(feedback)") {
        const ControlProblem p = testing::random_monotone_problem(3, 5, 100.0, 0.5, rng);
        const Policy policy = policy_iteration_average(p).policy;
        const StationaryDistribution pi = stationary_distribution(policy, p);
        double fb = 0.0;
        for (std::size_t m = 0; m < 3; ++m)
            for (std::size_t n = 0; n < 5; ++n)
                if (policy(m, n)) fb += pi.pi(m, n);
        const double j0 = average_reward(policy, p);
        const double j1 = average_reward(policy, with_alpha(p, 1.7));
        CHECK(j1 - j0 == doctest::Approx(-1.2 * fb).epsilon(1e-9));
    }
}

TEST_CASE("threshold extraction and lower bound") {
    const Eigen::VectorXd edges = build_z_grid(16).edges;
    CHECK((extract_threshold(Policy::always(3, 16), edges).y.array() == 1.0).all());
    CHECK(extract_threshold(Policy::always(3, 16), edges).is_threshold);
    CHECK((extract_threshold(Policy::never(3, 16), edges).y.array() == 0.0).all());
    Policy two(1, 16);
    two.set(0, 0, true);
    two.set(0, 1, true);
    const ThresholdProfile t = extract_threshold(two, edges);
    CHECK(t.is_threshold);
    CHECK(t.y(0) == doctest::Approx(2.0 / 16));
    CHECK(Policy::from_thresholds(t.y, build_z_grid(16).points) == two);
    Policy holes(1, 16);
    holes.set(0, 3, true);
    CHECK_FALSE(extract_threshold(holes, edges).is_threshold);

    for (double g : {0.01, 1.0, 30.0}) CHECK(threshold_lower_bound(g, 100.0, 0.0) == doctest::Approx(1.0));
    CHECK(threshold_lower_bound(1.0, 100.0, 10.0) == 0.0);
    CHECK(threshold_lower_bound(1.0, 100.0, 1.0) == doctest::Approx(0.495));
    CHECK(threshold_lower_bound(0.0, 100.0, 1.0) == 0.0);
}

TEST_CASE("exhaustive search") {
    Rng rng = make_stream(11, 0);
    const ControlProblem p12 = testing::random_monotone_problem(1, 2, 100.0, 1.0, rng);
    CHECK(exhaustive_candidate_count(p12) <= 3.0);
    CHECK(exhaustive_threshold_search(p12).J == doctest::Approx(brute_force_best(p12)).epsilon(1e-12));
    const ControlProblem p0 = testing::random_monotone_problem(3, 4, 100.0, 0.0, rng);
    CHECK((exhaustive_threshold_search(p0).threshold.y.array() == 1.0).all());
    const ControlProblem big = testing::random_monotone_problem(8, 16, 100.0, 3.0, rng);
    CHECK_THROWS_AS(exhaustive_threshold_search(big), InvalidArgument);
}

TEST_CASE("quantized feedback orderings") {
    const FadingParams params = FadingParams::clarke(3, 0.1);
    const GridSpec spec = make_grid(3, 6, 6);
    Rng rng = make_stream(12, streams::codebook);
    const Codebook cb = random_codebook(3, 16, rng);
    const TransitionModel model = estimate_transition_model(params, spec, 100000, 5, &cb);
    Rng erng = make_stream(12, streams::eps_stats);
    const EpsStats eps = epsilon_statistics(cb, 3, 100.0, spec.g_points, 50000, erng);
    const double dlog = -eps.mean_log2_eps;
    for (double alpha : {0.0, 0.5, 1.0, 2.0}) {
        const RewardSpec r{100.0, alpha};
        auto J = [&](FeedbackKind g, FeedbackKind d, double a) {
            return policy_iteration_average(make_problem(spec, model, RewardSpec{100.0, a}, g, d, &eps)).J;
        };
        using FeedbackKind::perfect, FeedbackKind::quantized;
        const double gp = J(perfect, perfect, alpha), gpe = J(perfect, quantized, alpha);
        const double gep = J(quantized, perfect, alpha), gepe = J(quantized, quantized, alpha);
        CHECK(gp >= gpe - 1e-8);
        CHECK(gpe >= gepe - 1e-8);
        CHECK(gp >= gep - 1e-8);
        CHECK(gep >= gepe - 1e-8);
        CHECK(gep >= J(perfect, perfect, alpha + dlog) - 1e-8);
        CHECK(gepe >= J(perfect, quantized, alpha + dlog) - 1e-8);
        const SolveResult q = policy_iteration_average(make_problem(spec, model, r, quantized, quantized, &eps));
        CHECK(q.threshold.is_threshold);
    }
}
