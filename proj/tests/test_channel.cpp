#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "fbctl/channel.hpp"
#include "fbctl/errors.hpp"
#include "support.hpp"

using namespace fbctl;

TEST_CASE("isotropic channel has unit-variance entries and consistent g, s") {
    Rng rng = make_stream(7, 0);
    const std::size_t draws = 1000000;
    double sum_g = 0.0;
    for (std::size_t i = 0; i < draws; ++i) sum_g += sample_isotropic_channel(3, rng).g;
    CHECK(sum_g / draws == doctest::Approx(3.0).epsilon(0.01 / 3.0));

    for (int i = 0; i < 100; ++i) {
        const ChannelState h = sample_isotropic_channel(4, rng);
        CHECK(std::abs(h.s.norm() - 1.0) < 1e-12);
        CHECK(std::abs(h.h.squaredNorm() - h.g) < 1e-12 * h.g);
        CHECK((h.h - std::sqrt(h.g) * h.s).norm() < 1e-12);
    }
}

TEST_CASE("single-antenna power is Exp(1): median ln 2") {
    Rng rng = make_stream(8, 0);
    std::vector<double> g(1000000);
    for (auto& v : g) v = sample_isotropic_channel(1, rng).g;
    std::nth_element(g.begin(), g.begin() + g.size() / 2, g.end());
    CHECK(std::abs(g[g.size() / 2] - std::log(2.0)) < 0.01);
}

TEST_CASE("zero antennas is rejected") {
    Rng rng = make_stream(1, 0);
    CHECK_THROWS_AS(sample_isotropic_channel(0, rng), InvalidArgument);
    CHECK_THROWS_AS(FadingParams::clarke(0, 0.1), InvalidArgument);
}

TEST_CASE("evolve_channel") {
    Rng rng = make_stream(9, 0);

    SUBCASE("rho = 1 freezes the channel") {
        const auto p = FadingParams::clarke(3, 0.0);
        CHECK(p.rho == 1.0);
        const ChannelState h = sample_isotropic_channel(3, rng);
        const ChannelState next = evolve_channel(h, p, rng);
        CHECK((next.h - h.h).norm() == 0.0);
    }

    SUBCASE("rho = 0 decorrelates") {
        const auto p = FadingParams::with_correlation(3, 0.0);
        double sxy = 0.0, sxx = 0.0, syy = 0.0;
        for (int i = 0; i < 1000000; ++i) {
            const ChannelState h = sample_isotropic_channel(3, rng);
            const ChannelState n = evolve_channel(h, p, rng);
            sxy += h.h(0).real() * n.h(0).real();
            sxx += h.h(0).real() * h.h(0).real();
            syy += n.h(0).real() * n.h(0).real();
        }
        CHECK(std::abs(sxy / std::sqrt(sxx * syy)) < 0.005);
    }

    SUBCASE("one-slot autocorrelation equals J0(2 pi f_D T_c)") {
        const auto p = FadingParams::clarke(3, 0.1);
        CHECK(p.rho == doctest::Approx(std::cyl_bessel_j(0.0, 0.2 * std::numbers::pi)).epsilon(1e-12));
        CHECK(p.rho == doctest::Approx(0.9037).epsilon(1e-4));
        std::complex<double> corr = 0.0;
        double power = 0.0;
        ChannelState h = sample_isotropic_channel(3, rng);
        for (int i = 0; i < 1000000; ++i) {
            const ChannelState n = evolve_channel(h, p, rng);
            corr += n.h(0) * std::conj(h.h(0));
            power += std::norm(h.h(0));
            h = n;
        }
        CHECK(std::abs(corr.real() / power - 0.9037126) < 0.005);
    }
}

TEST_CASE("stationarity and lag-k correlation of the Gauss-Markov chain") {
    Rng rng = make_stream(10, 0);
    const auto p = FadingParams::clarke(3, 0.1);
    const std::size_t slots = 1000000;
    ChannelState h = sample_isotropic_channel(3, rng);
    std::vector<std::complex<double>> x(slots);
    double sum_g = 0.0, sum_g2 = 0.0;
    for (std::size_t t = 0; t < slots; ++t) {
        x[t] = h.h(0);
        sum_g += h.g;
        sum_g2 += h.g * h.g;
        h = evolve_channel(h, p, rng);
    }
    const double mean = sum_g / slots;
    // correlated samples: inflate the naive standard error by the integrated autocorrelation of g
    const double var = sum_g2 / slots - mean * mean;
    const double tau = (1 + p.rho * p.rho) / (1 - p.rho * p.rho);
    CHECK(std::abs(mean - 3.0) < 3.0 * std::sqrt(var * tau / slots));

    double power = 0.0;
    for (const auto& v : x) power += std::norm(v);
    for (int k = 1; k <= 5; ++k) {
        std::complex<double> c = 0.0;
        for (std::size_t t = 0; t + k < slots; ++t) c += x[t + k] * std::conj(x[t]);
        CHECK(std::abs(c.real() / power - std::pow(p.rho, k)) < 0.01);
    }
}

TEST_CASE("alignment") {
    Rng rng = make_stream(11, 0);
    const cvec s = isotropic_unit_vector(3, rng);
    CHECK(alignment(s, s) == doctest::Approx(1.0).epsilon(1e-12));

    cvec e0 = cvec::Zero(3), e1 = cvec::Zero(3);
    e0(0) = 1.0;
    e1(1) = 1.0;
    CHECK(alignment(e0, e1) == 0.0);
    CHECK_THROWS_AS(alignment(e0, cvec::Zero(2)), InvalidArgument);

    SUBCASE("isotropic law Pr(z >= tau) = (1 - tau)^(L-1)") {
        const std::vector<double> taus{0.1, 0.5, 0.9};
        std::vector<int> hits(taus.size(), 0);
        double sum_z = 0.0;
        const int draws = 100000;
        for (int i = 0; i < draws; ++i) {
            const double z = alignment(isotropic_unit_vector(3, rng), e0);
            sum_z += z;
            for (std::size_t k = 0; k < taus.size(); ++k) hits[k] += z >= taus[k];
        }
        for (std::size_t k = 0; k < taus.size(); ++k)
            CHECK(std::abs(hits[k] / double(draws) - testing::alignment_tail(taus[k], 3)) < 0.01);
        // E[z] = 1/L, var = (L-1)/(L^2 (L+1))
        const double se = std::sqrt(2.0 / (9.0 * 4.0) / draws);
        CHECK(std::abs(sum_z / draws - 1.0 / 3.0) < 3.0 * se);
    }
}

TEST_CASE("shape_with_alignment hits the requested z") {
    Rng rng = make_stream(12, 0);
    const cvec f = isotropic_unit_vector(4, rng);
    for (double z : {0.0, 0.3, 0.999, 1.0}) {
        const cvec s = shape_with_alignment(f, z, rng);
        CHECK(std::abs(s.norm() - 1.0) < 1e-12);
        CHECK(alignment(s, f) == doctest::Approx(z).epsilon(1e-12));
    }
}

TEST_CASE("bessel_j0") {
    CHECK(bessel_j0(0.0) == 1.0);
    CHECK(std::abs(bessel_j0(2.404826)) < 1e-6);
    CHECK(bessel_j0(0.6283) == doctest::Approx(0.9037).epsilon(1e-4));
    CHECK(bessel_j0(-3.0) == bessel_j0(3.0));
    // independent reference: the standard library's cylindrical Bessel function
    for (double x = 0.0; x <= 50.0; x += 0.0137)
        CHECK(std::abs(bessel_j0(x) - std::cyl_bessel_j(0.0, x)) <= 1e-8);
    CHECK_THROWS_AS(bessel_j0(std::nan("")), InvalidArgument);
    CHECK_THROWS_AS(bessel_j0(INFINITY), InvalidArgument);
}
