#include "fbctl/channel.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "fbctl/errors.hpp"

namespace fbctl {

namespace {

void require_unit(const cvec& v, const char* what) {
    if (v.size() == 0) throw InvalidArgument(std::string(what) + ": empty vector");
    if (std::abs(v.norm() - 1.0) > 1e-9) throw InvalidArgument(std::string(what) + ": vector is not unit-norm");
}

} // namespace

ChannelState ChannelState::from_vector(cvec h) {
    if (h.size() == 0) throw InvalidArgument("channel vector must have at least one antenna");
    ChannelState state;
    state.g = h.squaredNorm();
    if (state.g > 0.0) {
        state.s = h / std::sqrt(state.g);
    } else {
        // zero channel has no direction; any unit vector satisfies h = sqrt(g) s
        state.s = cvec::Zero(h.size());
        state.s(0) = 1.0;
    }
    state.h = std::move(h);
    return state;
}

FadingParams FadingParams::clarke(std::size_t L, double doppler_slot) {
    if (L == 0) throw InvalidArgument("antenna count must be positive");
    if (!std::isfinite(doppler_slot) || doppler_slot < 0.0)
        throw InvalidArgument("normalized Doppler must be finite and nonnegative");
    FadingParams p;
    p.L = L;
    p.doppler_slot = doppler_slot;
    p.rho = bessel_j0(2.0 * std::numbers::pi * doppler_slot);
    return p;
}

FadingParams FadingParams::with_correlation(std::size_t L, double rho) {
    if (L == 0) throw InvalidArgument("antenna count must be positive");
    if (!(std::abs(rho) <= 1.0)) throw InvalidArgument("correlation must lie in [-1, 1]");
    FadingParams p;
    p.L = L;
    p.doppler_slot = std::numeric_limits<double>::quiet_NaN();
    p.rho = rho;
    return p;
}

Beamformer Beamformer::from_vector(const cvec& f) {
    require_unit(f, "beamformer");
    return Beamformer{f};
}

std::complex<double> complex_normal(Rng& rng) {
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    const double re = normal(rng);
    const double im = normal(rng);
    return {re, im};
}

cvec complex_normal_vector(std::size_t L, Rng& rng) {
    cvec v(static_cast<Eigen::Index>(L));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = complex_normal(rng);
    return v;
}

cvec isotropic_unit_vector(std::size_t L, Rng& rng) {
    if (L == 0) throw InvalidArgument("antenna count must be positive");
    for (;;) {
        cvec v = complex_normal_vector(L, rng);
        const double n = v.norm();
        if (n > 0.0) return v / n;
    }
}

cvec shape_with_alignment(const cvec& f, double z, Rng& rng) {
    require_unit(f, "shape_with_alignment");
    if (!(z >= 0.0 && z <= 1.0)) throw InvalidArgument("alignment must lie in [0, 1]");
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const std::complex<double> along = std::sqrt(z) * std::polar(1.0, phase(rng));
    if (f.size() == 1) return f * std::polar(1.0, phase(rng));
    cvec perp;
    for (;;) {
        perp = complex_normal_vector(static_cast<std::size_t>(f.size()), rng);
        perp -= f * f.dot(perp);
        const double n = perp.norm();
        if (n > 1e-12) {
            perp /= n;
            break;
        }
    }
    return along * f + std::sqrt(1.0 - z) * perp;
}

ChannelState sample_isotropic_channel(std::size_t L, Rng& rng) {
    if (L == 0) throw InvalidArgument("antenna count must be positive");
    return ChannelState::from_vector(complex_normal_vector(L, rng));
}

ChannelState evolve_channel(const ChannelState& state, const FadingParams& params, Rng& rng) {
    if (!(std::abs(params.rho) <= 1.0)) throw InvalidArgument("correlation must lie in [-1, 1]");
    if (params.rho == 1.0) return state;
    const double innovation = std::sqrt(1.0 - params.rho * params.rho);
    cvec h = params.rho * state.h;
    for (Eigen::Index i = 0; i < h.size(); ++i) h(i) += innovation * complex_normal(rng);
    return ChannelState::from_vector(std::move(h));
}

double alignment(const cvec& s, const cvec& f) {
    if (s.size() != f.size()) throw InvalidArgument("alignment: dimension mismatch");
    const double z = std::norm(f.dot(s));
    return std::min(z, 1.0);
}

double bessel_j0(double x) {
    if (!std::isfinite(x)) throw InvalidArgument("bessel_j0: argument must be finite");
    const double ax = std::abs(x);
    if (ax < 12.0) {
        // sum_k (-x^2/4)^k / (k!)^2, in extended precision to absorb cancellation
        const long double q = -0.25L * static_cast<long double>(ax) * ax;
        long double term = 1.0L;
        long double sum = 1.0L;
        for (int k = 1; k < 200; ++k) {
            term *= q / (static_cast<long double>(k) * k);
            sum += term;
            if (std::abs(term) < 1e-22L * std::abs(sum)) break;
        }
        return static_cast<double>(sum);
    }
    // Hankel asymptotic expansion, truncated at its smallest term.
    const double mu = 0.0;
    const double y = 8.0 * ax;
    double p = 1.0;
    double q = 0.0;
    double term = 1.0;
    double last = 1.0;
    for (int k = 1; k < 60; ++k) {
        const double a = 2.0 * k - 1.0;
        term *= (mu - a * a) / (k * y);
        if (std::abs(term) > last) break;
        last = std::abs(term);
        if (k % 2 == 1) {
            q += ((k / 2) % 2 == 0 ? 1.0 : -1.0) * term;
        } else {
            p += ((k / 2) % 2 == 0 ? 1.0 : -1.0) * term;
        }
    }
    const double chi = ax - 0.25 * std::numbers::pi;
    return std::sqrt(2.0 / (std::numbers::pi * ax)) * (p * std::cos(chi) - q * std::sin(chi));
}

} // namespace fbctl
