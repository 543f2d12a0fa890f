#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fbctl/errors.hpp"
#include "fbctl/simulator.hpp"

namespace py = pybind11;
using namespace fbctl;

namespace {

Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> policy_table(const Policy& p) {
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> t(p.M(), p.N());
    for (std::size_t m = 0; m < p.M(); ++m)
        for (std::size_t n = 0; n < p.N(); ++n) t(m, n) = p(m, n);
    return t;
}

Policy policy_from_table(const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& t) {
    Policy p(t.rows(), t.cols());
    for (Eigen::Index m = 0; m < t.rows(); ++m)
        for (Eigen::Index n = 0; n < t.cols(); ++n) p.set(m, n, t(m, n));
    return p;
}

const Codebook* opt(const std::optional<Codebook>& cb) { return cb ? &*cb : nullptr; }

} // namespace

PYBIND11_MODULE(_fbctl, m) {
    m.doc() = "Event-driven CSI feedback control for transmit beamforming.";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<NumericalFailure>(m, "NumericalFailure", PyExc_ArithmeticError);
    py::register_exception<EstimationFailure>(m, "EstimationFailure", PyExc_RuntimeError);

    m.def("bessel_j0", &bessel_j0, py::arg("x"));

    py::class_<FadingParams>(m, "FadingParams")
        .def_static("clarke", &FadingParams::clarke, py::arg("L"), py::arg("doppler"))
        .def_static("with_correlation", &FadingParams::with_correlation, py::arg("L"), py::arg("rho"))
        .def_readonly("L", &FadingParams::L)
        .def_readonly("doppler", &FadingParams::doppler_slot)
        .def_readonly("rho", &FadingParams::rho);

    py::class_<GridSpec>(m, "GridSpec")
        .def_readonly("M", &GridSpec::M)
        .def_readonly("N", &GridSpec::N)
        .def_readonly("g_edges", &GridSpec::g_edges)
        .def_readonly("g_points", &GridSpec::g_points)
        .def_readonly("z_edges", &GridSpec::z_edges)
        .def_readonly("z_points", &GridSpec::z_points);
    m.def("make_grid", &make_grid, py::arg("L"), py::arg("M"), py::arg("N"));

    py::class_<TransitionModel>(m, "TransitionModel")
        .def_readonly("Ptilde", &TransitionModel::Ptilde)
        .def_readonly("P0", &TransitionModel::P0)
        .def_readonly("P1_row", &TransitionModel::P1_row)
        .def_readonly("Peps1_row", &TransitionModel::Peps1_row)
        .def_readonly("sample_count", &TransitionModel::sample_count)
        .def_readonly("warnings", &TransitionModel::warnings);
    m.def(
        "estimate_transition_model",
        [](const FadingParams& params, const GridSpec& spec, std::size_t samples, std::uint64_t seed,
           const std::optional<Codebook>& codebook) {
            return estimate_transition_model(params, spec, samples, seed, opt(codebook));
        },
        py::arg("params"), py::arg("spec"), py::arg("samples"), py::arg("seed"), py::arg("codebook") = py::none());
    m.def("is_monotone_stochastic", &is_monotone_stochastic, py::arg("A"), py::arg("tol") = 1e-9);

    py::class_<Codebook>(m, "Codebook")
        .def_readonly("vectors", &Codebook::vectors)
        .def_readonly("method", &Codebook::method)
        .def("__len__", &Codebook::size);
    m.def(
        "random_codebook",
        [](std::size_t L, std::size_t size, std::uint64_t seed) {
            Rng rng = make_stream(seed, streams::codebook);
            Codebook cb = random_codebook(L, size, rng);
            cb.seed = seed;
            return cb;
        },
        py::arg("L"), py::arg("size"), py::arg("seed"));
    m.def(
        "lloyd_codebook",
        [](std::size_t L, std::size_t size, std::size_t training, std::size_t iterations, std::uint64_t seed) {
            Rng rng = make_stream(seed, streams::codebook);
            Codebook cb = lloyd_codebook(L, size, training, iterations, rng);
            cb.seed = seed;
            return cb;
        },
        py::arg("L"), py::arg("size"), py::arg("training") = 100000, py::arg("iterations") = 50,
        py::arg("seed") = 1);
    m.def(
        "quantize_shape",
        [](const cvec& s, const Codebook& cb) {
            const Quantized q = quantize_shape(s, cb);
            return py::make_tuple(q.index, q.eps);
        },
        py::arg("s"), py::arg("codebook"));

    py::class_<EpsStats>(m, "EpsStats")
        .def_readonly("mean_eps", &EpsStats::mean_eps)
        .def_readonly("mean_log2_eps", &EpsStats::mean_log2_eps)
        .def_readonly("mean_log2_eps_stderr", &EpsStats::mean_log2_eps_stderr)
        .def_readonly("per_g_rate", &EpsStats::per_g_rate)
        .def_readonly("sample_count", &EpsStats::sample_count);
    m.def(
        "epsilon_statistics",
        [](const Codebook& cb, double P, const Eigen::VectorXd& g_points, std::size_t samples, std::uint64_t seed) {
            Rng rng = make_stream(seed, streams::eps_stats);
            return epsilon_statistics(cb, cb.antennas(), P, g_points, samples, rng);
        },
        py::arg("codebook"), py::arg("P"), py::arg("g_points"), py::arg("samples") = 100000, py::arg("seed") = 1);
    m.def("price_increment_bound", &price_increment_bound, py::arg("L"), py::arg("size"));

    m.def("reward_per_stage",
          [](double g, double z, bool fb, double P, double alpha) { return reward_per_stage(g, z, fb, {P, alpha}); },
          py::arg("gbar"), py::arg("zbar"), py::arg("feedback"), py::arg("P"), py::arg("alpha"));
    m.def("threshold_lower_bound", &threshold_lower_bound, py::arg("gbar"), py::arg("P"), py::arg("alpha"));

    py::class_<SolveResult>(m, "SolveResult")
        .def_property_readonly("policy", [](const SolveResult& r) { return policy_table(r.policy); })
        .def_property_readonly("threshold", [](const SolveResult& r) { return r.threshold.y; })
        .def_property_readonly("is_threshold", [](const SolveResult& r) { return r.threshold.is_threshold; })
        .def_property_readonly("pi", [](const SolveResult& r) { return r.pi.pi; })
        .def_property_readonly("avg_threshold",
                               [](const SolveResult& r) { return average_threshold(r.threshold, r.pi); })
        .def_readonly("J", &SolveResult::J)
        .def_readonly("A", &SolveResult::A)
        .def_readonly("iterations", &SolveResult::iterations);
    m.def(
        "solve",
        [](const GridSpec& spec, const TransitionModel& model, double P, double alpha,
           const std::optional<EpsStats>& eps, std::size_t max_iter) {
            const auto kind = eps ? FeedbackKind::quantized : FeedbackKind::perfect;
            return policy_iteration_average(
                make_problem(spec, model, {P, alpha}, kind, kind, eps ? &*eps : nullptr), max_iter);
        },
        py::arg("spec"), py::arg("model"), py::arg("P"), py::arg("alpha"), py::arg("eps") = py::none(),
        py::arg("max_iter") = 100,
        "Average-reward policy iteration; passing eps selects quantized feedback.");

    py::class_<EvalResult>(m, "EvalResult")
        .def_readonly("throughput", &EvalResult::throughput)
        .def_readonly("feedback_rate", &EvalResult::feedback_rate)
        .def_readonly("net", &EvalResult::net)
        .def_readonly("stderr", &EvalResult::std_error)
        .def_readonly("alpha", &EvalResult::alpha)
        .def_readonly("slots", &EvalResult::slots);
    m.def(
        "simulate_policy",
        [](const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& policy, const GridSpec& spec,
           const FadingParams& params, double P, double alpha, std::size_t slots, std::size_t warmup,
           std::uint64_t seed, const std::optional<Codebook>& codebook) {
            return simulate_policy(policy_from_table(policy), spec, params, {P, alpha}, {slots, warmup, seed},
                                   opt(codebook));
        },
        py::arg("policy"), py::arg("spec"), py::arg("params"), py::arg("P"), py::arg("alpha"),
        py::arg("slots") = 1000000, py::arg("warmup") = 1000, py::arg("seed") = 1, py::arg("codebook") = py::none());
    m.def(
        "periodic_baseline",
        [](const FadingParams& params, double P, double alpha, std::size_t max_period, std::size_t slots,
           std::size_t warmup, std::uint64_t seed, const std::optional<Codebook>& codebook) {
            const PeriodicChoice c = periodic_baseline(params, {P, alpha}, max_period, {slots, warmup, seed},
                                                       opt(codebook));
            return py::make_tuple(c.period, c.result);
        },
        py::arg("params"), py::arg("P"), py::arg("alpha"), py::arg("max_period") = 64, py::arg("slots") = 1000000,
        py::arg("warmup") = 1000, py::arg("seed") = 1, py::arg("codebook") = py::none());
}
