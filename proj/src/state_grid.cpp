#include "fbctl/state_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "fbctl/codebook.hpp"
#include "fbctl/errors.hpp"

namespace fbctl {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

void require_increasing(const Eigen::VectorXd& v, const char* what) {
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        if (!(v(i) > v(i - 1))) throw InvalidArgument(std::string(what) + " must be strictly increasing");
    }
}

void normalize_rows(Eigen::MatrixXd& counts, const char* what, std::vector<std::string>& warnings) {
    const auto n = counts.cols();
    for (Eigen::Index r = 0; r < counts.rows(); ++r) {
        const double total = counts.row(r).sum();
        if (total > 0.0) {
            counts.row(r) /= total;
        } else {
            counts.row(r).setConstant(1.0 / static_cast<double>(n));
            warnings.push_back(std::string(what) + " row " + std::to_string(r) +
                               " had no samples; replaced by the uniform row");
        }
    }
}

Eigen::VectorXd normalized(const Eigen::VectorXd& counts, const char* what, std::vector<std::string>& warnings) {
    Eigen::MatrixXd row = counts.transpose();
    normalize_rows(row, what, warnings);
    return row.row(0).transpose();
}

} // namespace

void GridSpec::validate() const {
    if (M == 0 || N == 0) throw InvalidArgument("grid dimensions must be positive");
    if (static_cast<std::size_t>(g_edges.size()) != M + 1 || static_cast<std::size_t>(g_points.size()) != M ||
        static_cast<std::size_t>(z_edges.size()) != N + 1 || static_cast<std::size_t>(z_points.size()) != N)
        throw InvalidArgument("grid vectors do not match M and N");
    if (g_edges(0) != 0.0 || g_edges(M) != inf) throw InvalidArgument("g edges must span [0, inf)");
    if (z_edges(0) != 0.0 || z_edges(N) != 1.0) throw InvalidArgument("z edges must span [0, 1]");
    require_increasing(g_edges, "g edges");
    require_increasing(z_edges, "z edges");
    for (std::size_t m = 0; m < M; ++m) {
        if (!(g_points(m) >= g_edges(m) && g_points(m) <= g_edges(m + 1)))
            throw InvalidArgument("g grid point outside its bin");
    }
    for (std::size_t n = 0; n < N; ++n) {
        if (!(z_points(n) >= z_edges(n) && z_points(n) <= z_edges(n + 1)))
            throw InvalidArgument("z grid point outside its bin");
    }
}

GGrid build_g_grid(std::size_t L, std::size_t M) {
    if (L == 0) throw InvalidArgument("antenna count must be positive");
    if (M == 0) throw InvalidArgument("g grid needs at least one bin");
    const double shape = static_cast<double>(L);
    GGrid grid;
    grid.edges.resize(static_cast<Eigen::Index>(M + 1));
    grid.points.resize(static_cast<Eigen::Index>(M));
    grid.edges(0) = 0.0;
    for (std::size_t m = 1; m < M; ++m)
        grid.edges(m) = boost::math::gamma_p_inv(shape, static_cast<double>(m) / static_cast<double>(M));
    grid.edges(M) = inf;

    // E[g | bin] = L (P(L+1, b) - P(L+1, a)) / Pr(bin), P the regularized lower gamma.
    const auto upper_cdf = [&](double x) { return std::isinf(x) ? 1.0 : boost::math::gamma_p(shape + 1.0, x); };
    for (std::size_t m = 0; m < M; ++m) {
        const double mass = upper_cdf(grid.edges(m + 1)) - upper_cdf(grid.edges(m));
        double point = shape * mass * static_cast<double>(M);
        point = std::clamp(point, grid.edges(m), m + 1 == M ? std::numeric_limits<double>::max() : grid.edges(m + 1));
        grid.points(m) = point;
    }
    return grid;
}

ZGrid build_z_grid(std::size_t N) {
    if (N == 0) throw InvalidArgument("z grid needs at least one bin");
    ZGrid grid;
    grid.edges.resize(static_cast<Eigen::Index>(N + 1));
    grid.points.resize(static_cast<Eigen::Index>(N));
    const double n = static_cast<double>(N);
    for (std::size_t i = 0; i <= N; ++i) grid.edges(i) = static_cast<double>(i) / n;
    for (std::size_t i = 0; i < N; ++i) grid.points(i) = (static_cast<double>(i) + 0.5) / n;
    return grid;
}

GridSpec make_grid(std::size_t L, std::size_t M, std::size_t N) {
    const auto g = build_g_grid(L, M);
    const auto z = build_z_grid(N);
    GridSpec spec;
    spec.M = M;
    spec.N = N;
    spec.g_edges = g.edges;
    spec.g_points = g.points;
    spec.z_edges = z.edges;
    spec.z_points = z.points;
    return spec;
}

std::size_t g_bin(double g, const GridSpec& spec) {
    if (!(g >= 0.0) || std::isinf(g)) throw InvalidArgument("channel power must be finite and nonnegative");
    // first edge strictly greater than g, minus one
    const double* begin = spec.g_edges.data() + 1;
    const double* end = spec.g_edges.data() + spec.M;
    return static_cast<std::size_t>(std::upper_bound(begin, end, g) - begin);
}

std::size_t z_bin(double z, const GridSpec& spec) {
    if (!(z >= 0.0 && z <= 1.0)) throw InvalidArgument("alignment must lie in [0, 1]");
    const double* begin = spec.z_edges.data() + 1;
    const double* end = spec.z_edges.data() + spec.N;
    return static_cast<std::size_t>(std::upper_bound(begin, end, z) - begin);
}

std::pair<std::size_t, std::size_t> quantize_state(double g, double z, const GridSpec& spec) {
    return {g_bin(g, spec), z_bin(z, spec)};
}

TransitionModel estimate_transition_model(const FadingParams& params, const GridSpec& spec, std::size_t sample_count,
                                          std::uint64_t seed, const Codebook* codebook,
                                          const EstimationOptions& options) {
    spec.validate();
    if (sample_count == 0) throw InvalidArgument("sample count must be positive");
    if (codebook) {
        codebook->validate();
        if (codebook->antennas() != params.L) throw InvalidArgument("codebook dimension does not match L");
    }
    const auto L = params.L;
    const auto M = static_cast<Eigen::Index>(spec.M);
    const auto N = static_cast<Eigen::Index>(spec.N);
    const double rho = params.rho;
    const double innovation = std::sqrt(std::max(0.0, 1.0 - rho * rho));

    TransitionModel model;
    model.seed = seed;
    model.sample_count = sample_count;

    // g-chain: stationary draws, binned at the source.
    {
        Rng rng = make_stream(seed, streams::g_transitions);
        Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(M, M);
        std::vector<std::size_t> row_total(spec.M, 0);
        const auto step = [&](const ChannelState& h) {
            const auto from = g_bin(h.g, spec);
            const auto to = g_bin(evolve_channel(h, params, rng).g, spec);
            counts(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(to)) += 1.0;
            ++row_total[from];
            return from;
        };
        for (std::size_t i = 0; i < sample_count; ++i) step(sample_isotropic_channel(L, rng));
        // Top up starved source bins by rejection.
        for (std::size_t m = 0; m < spec.M; ++m) {
            std::size_t tries = 0;
            while (row_total[m] < options.min_row_samples) {
                ChannelState h = sample_isotropic_channel(L, rng);
                if (g_bin(h.g, spec) == m) {
                    step(h);
                    tries = 0;
                } else if (++tries > options.retry_budget) {
                    if (row_total[m] > 0 || options.uniform_fallback) break;
                    throw EstimationFailure("g bin " + std::to_string(m) + " starved after " +
                                            std::to_string(options.retry_budget) + " rejection draws");
                }
            }
            if (row_total[m] == 0 && !options.uniform_fallback)
                throw EstimationFailure("g bin " + std::to_string(m) + " received no samples");
        }
        normalize_rows(counts, "Ptilde", model.warnings);
        model.Ptilde = std::move(counts);
    }

    // Uncontrolled z-chain from each grid point, WLOG against f = e_0.
    // The same draw (g, phase, orthogonal direction, innovation) drives every row.
    {
        Rng rng = make_stream(seed, streams::z_idle);
        std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
        Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(N, N);
        cvec perp(static_cast<Eigen::Index>(L));
        for (std::size_t i = 0; i < sample_count; ++i) {
            const double g = complex_normal_vector(L, rng).squaredNorm();
            const std::complex<double> lead = std::polar(1.0, phase(rng));
            perp.setZero();
            if (L > 1) {
                cvec tail = isotropic_unit_vector(L - 1, rng);
                perp.tail(static_cast<Eigen::Index>(L - 1)) = tail;
            }
            const cvec w = complex_normal_vector(L, rng);
            const double amp = std::sqrt(g);
            for (Eigen::Index n = 0; n < N; ++n) {
                const double z = spec.z_points(n);
                cvec h = (amp * std::sqrt(1.0 - z)) * perp;
                h(0) += amp * std::sqrt(z) * lead;
                h = rho * h + innovation * w;
                const double power = h.squaredNorm();
                const double z_next = power > 0.0 ? std::min(1.0, std::norm(h(0)) / power) : 0.0;
                counts(n, static_cast<Eigen::Index>(z_bin(z_next, spec))) += 1.0;
            }
        }
        normalize_rows(counts, "P0", model.warnings);
        model.P0 = std::move(counts);
    }

    // One slot after perfect feedback: f = s, z = 1.
    {
        Rng rng = make_stream(seed, streams::z_feedback);
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(N);
        for (std::size_t i = 0; i < sample_count; ++i) {
            const ChannelState h = sample_isotropic_channel(L, rng);
            const ChannelState next = evolve_channel(h, params, rng);
            counts(static_cast<Eigen::Index>(z_bin(alignment(next.s, h.s), spec))) += 1.0;
        }
        model.P1_row = normalized(counts, "P1", model.warnings);
    }

    if (codebook) {
        Rng rng = make_stream(seed, streams::z_quantized);
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(N);
        for (std::size_t i = 0; i < sample_count; ++i) {
            const ChannelState h = sample_isotropic_channel(L, rng);
            const cvec f = quantize_shape(h.s, *codebook).s_hat;
            const ChannelState next = evolve_channel(h, params, rng);
            counts(static_cast<Eigen::Index>(z_bin(alignment(next.s, f), spec))) += 1.0;
        }
        model.Peps1_row = normalized(counts, "Peps1", model.warnings);
    }
    return model;
}

bool is_row_stochastic(const Eigen::MatrixXd& A, double tol) {
    if (A.size() == 0) return false;
    if ((A.array() < -tol).any()) return false;
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
        if (std::abs(A.row(r).sum() - 1.0) > tol) return false;
    }
    return true;
}

bool is_monotone_stochastic(const Eigen::MatrixXd& A, double tol) {
    if (A.rows() != A.cols()) throw InvalidArgument("monotonicity test needs a square matrix");
    if (!is_row_stochastic(A, 1e-9)) throw InvalidArgument("monotonicity test needs a row-stochastic matrix");
    const auto n = A.rows();
    // tail(r, c) = sum_{k >= c} A(r, k)
    Eigen::MatrixXd tail = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        double acc = 0.0;
        for (Eigen::Index c = n - 1; c >= 0; --c) {
            acc += A(r, c);
            tail(r, c) = acc;
        }
    }
    // checking adjacent rows is not enough once tol > 0, so compare every pair
    for (Eigen::Index hi = 1; hi < n; ++hi) {
        for (Eigen::Index lo = 0; lo < hi; ++lo) {
            if (((tail.row(hi) - tail.row(lo)).array() < -tol).any()) return false;
        }
    }
    return true;
}

double max_quantization_error(const GridSpec& spec, double g_cap) {
    if (spec.M == 0 || spec.N == 0) throw InvalidArgument("grid dimensions must be positive");
    double z_part = 0.0;
    for (std::size_t n = 0; n < spec.N; ++n) {
        z_part = std::max({z_part, spec.z_points(n) - spec.z_edges(n), spec.z_edges(n + 1) - spec.z_points(n)});
    }
    double g_part = 0.0;
    for (std::size_t m = 0; m < spec.M; ++m) {
        const double hi = m + 1 == spec.M ? g_cap : spec.g_edges(m + 1);
        g_part = std::max({g_part, spec.g_points(m) - spec.g_edges(m), hi - spec.g_points(m)});
    }
    return std::hypot(g_part, z_part);
}

} // namespace fbctl
