#pragma once

#include <complex>
#include <cstddef>

#include <Eigen/Dense>

#include "fbctl/rng.hpp"

namespace fbctl {

using cvec = Eigen::VectorXcd;

/**
 * Channel vector h together with its power g = |h|^2 and shape s = h/|h|.
 *
 * Construct through from_vector() so that the three stay consistent.
 */
struct ChannelState {
    cvec h;
    double g = 0.0;
    cvec s;

    static ChannelState from_vector(cvec h);
    std::size_t antennas() const { return static_cast<std::size_t>(h.size()); }
};

/// Temporal correlation of the channel; only the product f_D * T_c matters.
struct FadingParams {
    std::size_t L = 1;
    double doppler_slot = 0.0;
    double rho = 1.0;

    /// rho = J0(2 pi f_D T_c).
    static FadingParams clarke(std::size_t L, double doppler_slot);
    /// Explicit one-slot correlation, bypassing the Doppler mapping.
    static FadingParams with_correlation(std::size_t L, double rho);
};

/// Unit-norm transmit beamformer.
struct Beamformer {
    cvec f;

    static Beamformer from_vector(const cvec& f);
};

/// One CN(0, 1) draw: real and imaginary parts independent N(0, 1/2).
std::complex<double> complex_normal(Rng& rng);

/// Vector of L i.i.d. CN(0, 1) entries.
cvec complex_normal_vector(std::size_t L, Rng& rng);

/// Uniformly distributed point on the complex unit sphere in C^L.
cvec isotropic_unit_vector(std::size_t L, Rng& rng);

/**
 * Isotropic unit vector s conditioned on |s^H f|^2 = z, for unit f.
 *
 * The component along f carries a uniform phase; the orthogonal
 * complement direction is isotropic within f's orthogonal subspace.
 */
cvec shape_with_alignment(const cvec& f, double z, Rng& rng);

ChannelState sample_isotropic_channel(std::size_t L, Rng& rng);

/// First-order Gauss-Markov step h' = rho h + sqrt(1 - rho^2) w.
ChannelState evolve_channel(const ChannelState& state, const FadingParams& params, Rng& rng);

/// z = |s^H f|^2.
double alignment(const cvec& s, const cvec& f);

/// Bessel function of the first kind, order zero.
double bessel_j0(double x);

} // namespace fbctl
