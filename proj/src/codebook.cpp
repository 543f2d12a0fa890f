#include "fbctl/codebook.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "fbctl/errors.hpp"

namespace fbctl {

void Codebook::validate() const {
    if (vectors.empty()) throw InvalidArgument("codebook is empty");
    const auto L = vectors.front().size();
    if (L == 0) throw InvalidArgument("codebook vectors are empty");
    for (const auto& v : vectors) {
        if (v.size() != L) throw InvalidArgument("codebook vectors differ in length");
        if (std::abs(v.norm() - 1.0) > 1e-9) throw InvalidArgument("codebook vector is not unit-norm");
    }
}

Quantized quantize_shape(const cvec& s, const Codebook& codebook) {
    if (codebook.vectors.empty()) throw InvalidArgument("quantize_shape: empty codebook");
    if (static_cast<std::size_t>(s.size()) != codebook.antennas())
        throw InvalidArgument("quantize_shape: dimension mismatch");
    Quantized best;
    best.eps = -1.0;
    for (std::size_t i = 0; i < codebook.vectors.size(); ++i) {
        const double eps = std::norm(codebook.vectors[i].dot(s));
        if (eps > best.eps) {
            best.eps = eps;
            best.index = i;
        }
    }
    best.s_hat = codebook.vectors[best.index];
    best.eps = std::min(best.eps, 1.0);
    return best;
}

Codebook random_codebook(std::size_t L, std::size_t size, Rng& rng) {
    if (size == 0) throw InvalidArgument("codebook size must be positive");
    Codebook cb;
    cb.method = "random";
    cb.vectors.reserve(size);
    for (std::size_t i = 0; i < size; ++i) cb.vectors.push_back(isotropic_unit_vector(L, rng));
    return cb;
}

LloydResult lloyd_train(const std::vector<cvec>& training, std::size_t size, std::size_t iterations, Rng& rng) {
    if (size == 0) throw InvalidArgument("codebook size must be positive");
    if (training.empty()) throw InvalidArgument("Lloyd training set is empty");
    const auto L = training.front().size();
    std::uniform_int_distribution<std::size_t> pick(0, training.size() - 1);

    LloydResult out;
    out.codebook.method = "lloyd";
    // Initialise from distinct training shapes where possible.
    for (std::size_t i = 0; i < size; ++i) out.codebook.vectors.push_back(training[i % training.size()]);
    if (training.size() > size) {
        for (std::size_t i = 0; i < size; ++i) out.codebook.vectors[i] = training[pick(rng)];
    }

    std::vector<std::size_t> owner(training.size());
    double previous = -std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < iterations; ++it) {
        std::vector<Eigen::MatrixXcd> corr(size, Eigen::MatrixXcd::Zero(L, L));
        std::vector<std::size_t> count(size, 0);
        for (std::size_t t = 0; t < training.size(); ++t) {
            const auto q = quantize_shape(training[t], out.codebook);
            owner[t] = q.index;
            corr[q.index].noalias() += training[t] * training[t].adjoint();
            ++count[q.index];
        }
        for (std::size_t c = 0; c < size; ++c) {
            if (count[c] == 0) {
                out.codebook.vectors[c] = training[pick(rng)];
                continue;
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(corr[c]);
            cvec v = eig.eigenvectors().col(L - 1);
            out.codebook.vectors[c] = v / v.norm();
        }
        double total = 0.0;
        for (std::size_t t = 0; t < training.size(); ++t) total += quantize_shape(training[t], out.codebook).eps;
        const double objective = total / static_cast<double>(training.size());
        out.objective.push_back(objective);
        if (objective - previous < 1e-6) break;
        previous = objective;
    }
    return out;
}

Codebook lloyd_codebook(std::size_t L, std::size_t size, std::size_t training_count, std::size_t iterations,
                        Rng& rng) {
    if (training_count < 100 * size)
        throw InvalidArgument("Lloyd training needs at least 100 shapes per codeword");
    std::vector<cvec> training;
    training.reserve(training_count);
    for (std::size_t i = 0; i < training_count; ++i) training.push_back(isotropic_unit_vector(L, rng));
    return lloyd_train(training, size, iterations, rng).codebook;
}

double EpsStats::rate_at(double gbar) const {
    for (Eigen::Index m = 0; m < g_points.size(); ++m) {
        if (std::abs(g_points(m) - gbar) <= 1e-12 * std::max(1.0, std::abs(gbar))) return per_g_rate(m);
    }
    throw InvalidArgument("no quantized-feedback rate stored for g = " + std::to_string(gbar));
}

EpsStats epsilon_statistics(const Codebook& codebook, std::size_t L, double P, const Eigen::VectorXd& g_points,
                            std::size_t sample_count, Rng& rng) {
    codebook.validate();
    if (codebook.antennas() != L) throw InvalidArgument("epsilon_statistics: codebook dimension mismatch");
    if (sample_count < 10000) throw InvalidArgument("epsilon_statistics needs at least 1e4 samples");
    const auto M = g_points.size();

    double sum_eps = 0.0, sum_eps2 = 0.0;
    double sum_log = 0.0, sum_log2 = 0.0;
    Eigen::VectorXd sum_rate = Eigen::VectorXd::Zero(M);
    Eigen::VectorXd sum_rate2 = Eigen::VectorXd::Zero(M);
    std::size_t zeros = 0;
    for (std::size_t i = 0; i < sample_count; ++i) {
        const cvec s = isotropic_unit_vector(L, rng);
        const double eps = quantize_shape(s, codebook).eps;
        sum_eps += eps;
        sum_eps2 += eps * eps;
        if (eps <= 0.0) {
            ++zeros;
        } else {
            const double l = std::log2(eps);
            sum_log += l;
            sum_log2 += l * l;
        }
        for (Eigen::Index m = 0; m < M; ++m) {
            const double r = std::log2(1.0 + P * g_points(m) * eps);
            sum_rate(m) += r;
            sum_rate2(m) += r * r;
        }
    }
    const auto stderr_of = [](double sum, double sum2, double n) {
        if (n < 2) return 0.0;
        const double mean = sum / n;
        const double var = std::max(0.0, (sum2 - n * mean * mean) / (n - 1));
        return std::sqrt(var / n);
    };
    const double n = static_cast<double>(sample_count);
    const double n_log = static_cast<double>(sample_count - zeros);

    EpsStats st;
    st.sample_count = sample_count;
    st.zero_eps_count = zeros;
    st.P = P;
    st.g_points = g_points;
    st.mean_eps = sum_eps / n;
    st.mean_eps_stderr = stderr_of(sum_eps, sum_eps2, n);
    st.mean_log2_eps = n_log > 0 ? std::min(0.0, sum_log / n_log) : 0.0;
    st.mean_log2_eps_stderr = stderr_of(sum_log, sum_log2, n_log);
    st.per_g_rate = sum_rate / n;
    st.per_g_rate_stderr.resize(M);
    for (Eigen::Index m = 0; m < M; ++m) {
        st.per_g_rate(m) = std::min(st.per_g_rate(m), std::log2(1.0 + P * g_points(m)));
        st.per_g_rate_stderr(m) = stderr_of(sum_rate(m), sum_rate2(m), n);
    }
    return st;
}

double price_increment_bound(std::size_t L, std::size_t size) {
    if (size == 0) throw InvalidArgument("codebook size must be positive");
    if (L <= 1) return 0.0;
    return std::numbers::log2e * std::pow(static_cast<double>(size), -1.0 / static_cast<double>(L - 1));
}

} // namespace fbctl
