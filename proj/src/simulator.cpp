#include "fbctl/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fbctl/errors.hpp"

namespace fbctl {

void TrajectoryConfig::validate() const {
    if (slots == 0) throw InvalidArgument("trajectory needs at least one slot");
    if (!(slots > warmup)) throw InvalidArgument("trajectory slots must exceed the warmup");
}

void RunStats::reset(std::size_t measured_slots, std::size_t batches) {
    rate_sum = 0.0;
    feedback_count = 0;
    count = 0;
    const std::size_t nb = std::min(batches, measured_slots);
    batch_size = nb == 0 ? 0 : measured_slots / nb;
    batch_rate.assign(nb, 0.0);
    batch_feedback.assign(nb, 0.0);
}

void RunStats::add(double rate, bool feedback) {
    if (batch_size > 0) {
        const std::size_t b = count / batch_size;
        if (b < batch_rate.size()) {
            batch_rate[b] += rate;
            batch_feedback[b] += feedback ? 1.0 : 0.0;
        }
    }
    rate_sum += rate;
    feedback_count += feedback ? 1 : 0;
    ++count;
}

EvalResult RunStats::result(double alpha) const {
    EvalResult r;
    r.alpha = alpha;
    r.slots = count;
    if (count == 0) return r;
    const double n = static_cast<double>(count);
    r.throughput = rate_sum / n;
    r.feedback_rate = static_cast<double>(feedback_count) / n;
    r.net = r.throughput - alpha * r.feedback_rate;
    const auto nb = batch_rate.size();
    if (nb >= 2 && batch_size > 0) {
        const double bs = static_cast<double>(batch_size);
        double mean = 0.0;
        for (std::size_t b = 0; b < nb; ++b) mean += (batch_rate[b] - alpha * batch_feedback[b]) / bs;
        mean /= static_cast<double>(nb);
        double var = 0.0;
        for (std::size_t b = 0; b < nb; ++b) {
            const double d = (batch_rate[b] - alpha * batch_feedback[b]) / bs - mean;
            var += d * d;
        }
        var /= static_cast<double>(nb - 1);
        r.std_error = std::sqrt(var / static_cast<double>(nb));
    }
    return r;
}

namespace {

cvec fed_back(const ChannelState& h, const Codebook* codebook) {
    return codebook ? quantize_shape(h.s, *codebook).s_hat : h.s;
}

} // namespace

EvalResult simulate_policy(const Policy& policy, const GridSpec& spec, const FadingParams& params,
                           const RewardSpec& rewards, const TrajectoryConfig& config, const Codebook* codebook) {
    config.validate();
    spec.validate();
    rewards.validate();
    if (policy.M() != spec.M || policy.N() != spec.N) throw InvalidArgument("policy dimensions do not match the grid");
    if (codebook && codebook->antennas() != params.L) throw InvalidArgument("codebook dimension does not match L");

    Rng channel_rng = make_stream(config.seed, streams::channel);
    Rng bf_rng = make_stream(config.seed, streams::beamformer);
    ChannelState h = sample_isotropic_channel(params.L, channel_rng);
    cvec f = isotropic_unit_vector(params.L, bf_rng);

    RunStats stats;
    stats.reset(config.slots - config.warmup);
    for (std::size_t t = 0; t < config.slots; ++t) {
        if (t > 0) h = evolve_channel(h, params, channel_rng);
        double z = alignment(h.s, f);
        const auto [m, n] = quantize_state(h.g, z, spec);
        const bool feedback = policy(m, n);
        if (feedback) {
            f = fed_back(h, codebook);
            z = alignment(h.s, f);
        }
        if (t >= config.warmup) stats.add(std::log2(1.0 + rewards.P * h.g * z), feedback);
    }
    return stats.result(rewards.alpha);
}

std::vector<RunStats> periodic_profile(const FadingParams& params, double P, std::size_t max_period,
                                       const TrajectoryConfig& config, const Codebook* codebook) {
    config.validate();
    if (max_period == 0) throw InvalidArgument("max_period must be at least 1");
    if (codebook && codebook->antennas() != params.L) throw InvalidArgument("codebook dimension does not match L");

    Rng channel_rng = make_stream(config.seed, streams::channel);
    Rng bf_rng = make_stream(config.seed, streams::beamformer);
    ChannelState h = sample_isotropic_channel(params.L, channel_rng);
    const cvec f0 = isotropic_unit_vector(params.L, bf_rng);

    std::vector<cvec> f(max_period, f0);
    std::vector<RunStats> stats(max_period);
    for (auto& s : stats) s.reset(config.slots - config.warmup);
    for (std::size_t t = 0; t < config.slots; ++t) {
        if (t > 0) h = evolve_channel(h, params, channel_rng);
        std::optional<cvec> update;
        for (std::size_t k = 1; k <= max_period; ++k) {
            const bool feedback = t % k == 0;
            if (feedback) {
                if (!update) update = fed_back(h, codebook);
                f[k - 1] = *update;
            }
            if (t >= config.warmup)
                stats[k - 1].add(std::log2(1.0 + P * h.g * alignment(h.s, f[k - 1])), feedback);
        }
    }
    return stats;
}

PeriodicChoice best_period(const std::vector<RunStats>& profile, double alpha) {
    if (profile.empty()) throw InvalidArgument("empty periodic profile");
    PeriodicChoice best;
    best.result.net = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < profile.size(); ++k) {
        const EvalResult r = profile[k].result(alpha);
        if (r.net > best.result.net) {
            best.result = r;
            best.period = k + 1;
        }
    }
    return best;
}

PeriodicChoice periodic_baseline(const FadingParams& params, const RewardSpec& rewards, std::size_t max_period,
                                 const TrajectoryConfig& config, const Codebook* codebook) {
    rewards.validate();
    return best_period(periodic_profile(params, rewards.P, max_period, config, codebook), rewards.alpha);
}

double average_threshold(const ThresholdProfile& profile, const StationaryDistribution& pi) {
    if (!profile.is_threshold) throw InvalidArgument("average threshold needs a threshold-type policy");
    const Eigen::VectorXd marginal = pi.g_marginal();
    if (marginal.size() != profile.y.size()) throw InvalidArgument("threshold profile does not match pi");
    return profile.y.dot(marginal);
}

ControllerSetup build_setup(const FadingParams& params, double P, std::size_t M, std::size_t N,
                            std::size_t model_samples, std::uint64_t seed, std::optional<Codebook> codebook,
                            std::size_t eps_samples) {
    ControllerSetup setup;
    setup.spec = make_grid(params.L, M, N);
    setup.codebook = std::move(codebook);
    setup.model = estimate_transition_model(params, setup.spec, model_samples, seed,
                                            setup.codebook ? &*setup.codebook : nullptr);
    if (setup.codebook) {
        Rng rng = make_stream(seed, streams::eps_stats);
        setup.eps = epsilon_statistics(*setup.codebook, params.L, P, setup.spec.g_points, eps_samples, rng);
    }
    return setup;
}

SolveResult solve_for_alpha(const ControllerSetup& setup, double P, double alpha) {
    const RewardSpec rewards{P, alpha};
    const bool quantized = setup.codebook.has_value();
    const auto kind = quantized ? FeedbackKind::quantized : FeedbackKind::perfect;
    const ControlProblem problem =
        make_problem(setup.spec, setup.model, rewards, kind, kind, setup.eps ? &*setup.eps : nullptr);
    return policy_iteration_average(problem);
}

namespace {

void require_increasing(const std::vector<double>& alphas) {
    if (alphas.empty()) throw InvalidArgument("alpha list is empty");
    for (std::size_t i = 1; i < alphas.size(); ++i)
        if (!(alphas[i] > alphas[i - 1])) throw InvalidArgument("alphas must be strictly increasing");
}

} // namespace

Curve sweep_alpha(const std::vector<double>& alphas, const ControllerSetup& setup, const FadingParams& params,
                  double P, const TrajectoryConfig& config) {
    require_increasing(alphas);
    Curve curve;
    const Codebook* cb = setup.codebook ? &*setup.codebook : nullptr;
    for (const double alpha : alphas) {
        const SolveResult solved = solve_for_alpha(setup, P, alpha);
        const EvalResult eval = simulate_policy(solved.policy, setup.spec, params, RewardSpec{P, alpha}, config, cb);
        CurvePoint pt;
        pt.alpha = alpha;
        pt.net = eval.net;
        pt.throughput = eval.throughput;
        pt.feedback_rate = eval.feedback_rate;
        pt.std_error = eval.std_error;
        pt.avg_threshold = solved.threshold.is_threshold ? average_threshold(solved.threshold, solved.pi)
                                                        : std::numeric_limits<double>::quiet_NaN();
        curve.points.push_back(pt);
    }
    return curve;
}

PeriodicSweep sweep_periodic(const std::vector<double>& alphas, const FadingParams& params, double P,
                             std::size_t max_period, const TrajectoryConfig& config, const Codebook* codebook) {
    require_increasing(alphas);
    const auto profile = periodic_profile(params, P, max_period, config, codebook);
    PeriodicSweep out;
    for (const double alpha : alphas) {
        const PeriodicChoice best = best_period(profile, alpha);
        CurvePoint pt;
        pt.alpha = alpha;
        pt.net = best.result.net;
        pt.throughput = best.result.throughput;
        pt.feedback_rate = best.result.feedback_rate;
        pt.std_error = best.result.std_error;
        pt.avg_threshold = std::numeric_limits<double>::quiet_NaN();
        out.curve.points.push_back(pt);
        out.periods.push_back(best.period);
    }
    return out;
}

std::vector<RefinementRow> refinement_study(const std::vector<std::pair<std::size_t, std::size_t>>& sizes,
                                            const FadingParams& params, const RewardSpec& rewards,
                                            std::size_t samples_per_state, std::uint64_t seed) {
    rewards.validate();
    std::vector<RefinementRow> rows;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const auto [M, N] = sizes[i];
        if (i > 0 && M * N <= sizes[i - 1].first * sizes[i - 1].second)
            throw InvalidArgument("refinement sizes must increase");
        const std::size_t samples = std::max<std::size_t>(1, samples_per_state * M * N);
        const GridSpec spec = make_grid(params.L, M, N);
        const TransitionModel model = estimate_transition_model(params, spec, samples, seed);
        const SolveResult solved = policy_iteration_average(make_problem(spec, model, rewards));
        rows.push_back(RefinementRow{M, N, solved.J, solved.iterations, samples});
    }
    return rows;
}

} // namespace fbctl
