#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fbctl/config.hpp"
#include "fbctl/errors.hpp"
#include "fbctl/io.hpp"
#include "fbctl/simulator.hpp"

using namespace fbctl;
using io::json;

namespace {

constexpr int kUsage = 1;
constexpr int kConfig = 2;
constexpr int kNumerical = 3;

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    bool quiet = false;
};

struct Run {
    ExperimentConfig cfg;
    std::string command;
    bool quiet = false;
    std::vector<std::pair<std::filesystem::path, std::string>> outputs;
    json meta = json::object();

    void log(const std::string& line) const {
        if (!quiet) std::cerr << line << '\n';
    }
    std::filesystem::path path(const std::string& suffix) const { return cfg.prefix + suffix; }
    void emit(const std::string& suffix, std::string text) { outputs.emplace_back(path(suffix), std::move(text)); }

    // Everything is rendered before the first write, so a failure leaves no outputs behind.
    void commit() {
        std::vector<std::string> names;
        for (const auto& [p, _] : outputs) names.push_back(p.string());
        meta["command"] = command;
        meta["outputs"] = names;
        meta["seed"] = cfg.trajectory.seed;
        meta["channel"] = {{"antennas", cfg.L}, {"doppler", cfg.doppler}, {"rho", cfg.fading().rho}};
        meta["grid"] = {{"M", cfg.M}, {"N", cfg.N}, {"model_samples", cfg.model_samples}};
        meta["reward"] = {{"snr", cfg.P}, {"snr_db", cfg.snr_db}, {"alpha", cfg.alphas}};
        meta["trajectory"] = {{"slots", cfg.trajectory.slots}, {"warmup", cfg.trajectory.warmup}};
        meta["codebook"] = {{"method", cfg.codebook_method}, {"size", cfg.codebook_size}};
        outputs.emplace_back(path(command + ".config.ini"), cfg.to_ini());
        outputs.emplace_back(path(command + ".meta.json"), meta.dump(2) + "\n");
        for (const auto& [p, text] : outputs) io::write_text_atomic(p, text);
        for (const auto& [p, _] : outputs) log("wrote " + p.string());
    }
};

std::optional<Codebook> acquire_codebook(const ExperimentConfig& cfg) {
    const std::uint64_t seed = cfg.trajectory.seed;
    Rng rng = make_stream(seed, streams::codebook);
    Codebook cb;
    if (cfg.codebook_method == "none") return std::nullopt;
    if (cfg.codebook_method == "random") {
        cb = random_codebook(cfg.L, cfg.codebook_size, rng);
    } else if (cfg.codebook_method == "lloyd") {
        cb = lloyd_codebook(cfg.L, cfg.codebook_size, cfg.codebook_training, cfg.codebook_iterations, rng);
    } else {
        cb = io::codebook_from_json(io::read_json(*cfg.codebook_path));
        if (cb.antennas() != cfg.L) throw ConfigError("codebook file does not match channel.antennas");
        return cb;
    }
    cb.seed = seed;
    return cb;
}

ControllerSetup acquire_setup(const ExperimentConfig& cfg, Run& run) {
    auto codebook = acquire_codebook(cfg);
    if (!cfg.model_path) {
        run.log("estimating transition model (" + std::to_string(cfg.model_samples) + " samples)");
        return build_setup(cfg.fading(), cfg.P, cfg.M, cfg.N, cfg.model_samples, cfg.trajectory.seed,
                           std::move(codebook), cfg.eps_samples);
    }
    ControllerSetup setup;
    io::model_from_json(io::read_json(*cfg.model_path), setup.spec, setup.model);
    if (setup.spec.M != cfg.M || setup.spec.N != cfg.N) throw ConfigError("model file does not match grid.M/grid.N");
    run.meta["model_file"] = cfg.model_path->string();
    if (codebook) {
        if (!setup.model.Peps1_row) throw ConfigError("model file has no quantized-feedback row for this codebook");
        Rng rng = make_stream(cfg.trajectory.seed, streams::eps_stats);
        setup.eps = epsilon_statistics(*codebook, cfg.L, cfg.P, setup.spec.g_points, cfg.eps_samples, rng);
        setup.codebook = std::move(codebook);
    }
    return setup;
}

SolveResult solve(const ControllerSetup& setup, const ExperimentConfig& cfg, double alpha) {
    const auto kind = setup.codebook ? FeedbackKind::quantized : FeedbackKind::perfect;
    const ControlProblem problem =
        make_problem(setup.spec, setup.model, RewardSpec{cfg.P, alpha}, kind, kind, setup.eps ? &*setup.eps : nullptr);
    return policy_iteration_average(problem, cfg.max_iter);
}

json solve_doc(const SolveResult& r, double alpha) {
    json doc = io::solve_to_json(r);
    doc["alpha"] = alpha;
    if (r.threshold.is_threshold) doc["avg_threshold"] = average_threshold(r.threshold, r.pi);
    return doc;
}

json one_or_many(const std::vector<json>& docs) { return docs.size() == 1 ? docs.front() : json(docs); }

void cmd_model(Run& run) {
    const ControllerSetup setup = acquire_setup(run.cfg, run);
    for (const auto& w : setup.model.warnings) run.log("warning: " + w);
    run.emit("model.json", io::model_to_json(setup.spec, setup.model).dump(2) + "\n");
}

void cmd_solve(Run& run) {
    const ControllerSetup setup = acquire_setup(run.cfg, run);
    std::vector<json> docs;
    for (const double alpha : run.cfg.alphas) {
        const SolveResult r = solve(setup, run.cfg, alpha);
        run.log("alpha " + std::to_string(alpha) + ": J = " + std::to_string(r.J) + " after " +
                std::to_string(r.iterations) + " iterations");
        docs.push_back(solve_doc(r, alpha));
    }
    run.emit("solve.json", one_or_many(docs).dump(2) + "\n");
}

Policy stored_policy(const json& doc, double alpha) {
    if (!doc.is_array()) return io::policy_from_json(doc);
    for (const auto& entry : doc)
        if (entry.contains("alpha") && entry["alpha"].get<double>() == alpha) return io::policy_from_json(entry);
    throw ConfigError("policy file has no solution for alpha = " + std::to_string(alpha));
}

void cmd_evaluate(Run& run) {
    const ExperimentConfig& cfg = run.cfg;
    const auto codebook = cfg.policy_path ? acquire_codebook(cfg) : std::nullopt;
    std::optional<ControllerSetup> setup;
    std::optional<json> stored;
    if (cfg.policy_path) {
        stored = io::read_json(*cfg.policy_path);
        run.meta["policy_file"] = cfg.policy_path->string();
    } else {
        setup = acquire_setup(cfg, run);
    }
    const GridSpec spec = setup ? setup->spec : make_grid(cfg.L, cfg.M, cfg.N);
    const Codebook* cb = setup ? (setup->codebook ? &*setup->codebook : nullptr) : (codebook ? &*codebook : nullptr);

    std::vector<json> docs;
    for (const double alpha : cfg.alphas) {
        const Policy policy = stored ? stored_policy(*stored, alpha) : solve(*setup, cfg, alpha).policy;
        if (policy.M() != spec.M || policy.N() != spec.N) throw ConfigError("policy does not match grid.M/grid.N");
        const EvalResult r = simulate_policy(policy, spec, cfg.fading(), RewardSpec{cfg.P, alpha}, cfg.trajectory, cb);
        run.log("alpha " + std::to_string(alpha) + ": net = " + std::to_string(r.net) + " +- " +
                std::to_string(r.std_error));
        docs.push_back(io::eval_to_json(r));
    }
    run.emit("eval.json", one_or_many(docs).dump(2) + "\n");
}

void cmd_sweep(Run& run) {
    const ExperimentConfig& cfg = run.cfg;
    const ControllerSetup setup = acquire_setup(cfg, run);
    run.log("controlled sweep over " + std::to_string(cfg.alphas.size()) + " prices");
    const Curve controlled = sweep_alpha(cfg.alphas, setup, cfg.fading(), cfg.P, cfg.trajectory);
    run.log("periodic baseline up to period " + std::to_string(cfg.max_period));
    const PeriodicSweep periodic = sweep_periodic(cfg.alphas, cfg.fading(), cfg.P, cfg.max_period, cfg.trajectory,
                                                  setup.codebook ? &*setup.codebook : nullptr);
    run.meta["periodic_best_period"] = periodic.periods;
    run.emit("sweep.csv", io::curve_to_csv(controlled));
    run.emit("periodic.csv", io::curve_to_csv(periodic.curve));
}

void cmd_codebook(Run& run) {
    if (!run.cfg.quantized()) throw ConfigError("codebook command needs codebook.method other than none");
    const Codebook cb = *acquire_codebook(run.cfg);
    Rng rng = make_stream(run.cfg.trajectory.seed, streams::eps_stats);
    const EpsStats eps = epsilon_statistics(cb, run.cfg.L, run.cfg.P, Eigen::VectorXd(), run.cfg.eps_samples, rng);
    run.log("mean eps = " + std::to_string(eps.mean_eps) + ", E[log2 eps] = " + std::to_string(eps.mean_log2_eps));
    run.meta["mean_eps"] = eps.mean_eps;
    run.meta["mean_log2_eps"] = eps.mean_log2_eps;
    run.meta["price_increment_bound"] = price_increment_bound(cb.antennas(), cb.size());
    run.emit("codebook.json", io::codebook_to_json(cb).dump(2) + "\n");
}

std::vector<double> price_grid(double hi, double step) {
    std::vector<double> a;
    for (int i = 0; i * step <= hi + 1e-12; ++i) a.push_back(i * step);
    return a;
}

std::string label(const std::string& kind, const ExperimentConfig& c) {
    std::ostringstream os;
    os << kind << "_L" << c.L << "_fd" << c.doppler;
    if (c.quantized()) os << "_" << c.codebook_method << c.codebook_size;
    return os.str();
}

// The canned figures keep the user's budgets (samples, slots, seed) and fix the physics.
void cmd_figure(Run& run, int figure) {
    const ExperimentConfig base = run.cfg;
    std::vector<ExperimentConfig> variants;
    auto variant = [&](std::size_t L, double doppler, const std::string& codebook) {
        ExperimentConfig c = base;
        c.L = L;
        c.doppler = doppler;
        c.codebook_method = codebook;
        c.codebook_size = 16;
        c.alphas = figure == 5 ? price_grid(40.0, 1.0) : price_grid(20.0, 0.5);
        c.validate();
        variants.push_back(c);
    };
    switch (figure) {
    case 3:
    case 5:
        variant(3, 0.1, "none");
        variant(3, 0.01, "none");
        break;
    case 4:
        variant(3, 0.1, "none");
        variant(4, 0.1, "none");
        break;
    case 6:
    case 7:
        variant(3, 0.1, "none");
        variant(3, 0.1, "lloyd");
        break;
    default:
        throw ConfigError("no canned configuration for figure " + std::to_string(figure));
    }

    std::vector<std::pair<std::string, Curve>> series;
    for (const ExperimentConfig& c : variants) {
        run.log("figure " + std::to_string(figure) + ": " + label("controlled", c));
        ControllerSetup setup = build_setup(c.fading(), c.P, c.M, c.N, c.model_samples, c.trajectory.seed,
                                            acquire_codebook(c), c.eps_samples);
        series.emplace_back(label("controlled", c), sweep_alpha(c.alphas, setup, c.fading(), c.P, c.trajectory));
        if (figure == 6 || figure == 7) continue;
        run.log("figure " + std::to_string(figure) + ": " + label("periodic", c));
        series.emplace_back(label("periodic", c),
                            sweep_periodic(c.alphas, c.fading(), c.P, c.max_period, c.trajectory).curve);
    }
    run.meta["figure"] = figure;
    json labels = json::array();
    for (const auto& [name, _] : series) labels.push_back(name);
    run.meta["series"] = labels;
    run.emit("fig" + std::to_string(figure) + ".csv", io::series_to_csv(series));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Event-driven CSI feedback control for transmit beamforming"};
    app.footer("\n" + config_reference());
    app.require_subcommand(1);

    Globals g;
    app.option_defaults()->always_capture_default();
    app.add_option("--config", g.config, "Experiment configuration (INI)");
    app.add_option("--seed", g.seed, "Seed for every random stream (overrides trajectory.seed)");
    app.add_option("--out", g.out, "Output path prefix (overrides output.prefix)");
    app.add_flag("--quiet,-q", g.quiet, "Suppress progress messages");

    auto* model = app.add_subcommand("model", "Estimate the transition model; writes <prefix>model.json");
    auto* solve_cmd = app.add_subcommand("solve", "Solve the control problem per alpha; writes <prefix>solve.json");
    auto* evaluate = app.add_subcommand("evaluate", "Simulate a policy per alpha; writes <prefix>eval.json");
    auto* sweep = app.add_subcommand("sweep", "Controlled and periodic curves; writes <prefix>sweep.csv");
    auto* codebook = app.add_subcommand("codebook", "Build a codebook; writes <prefix>codebook.json");
    auto* figure = app.add_subcommand("reproduce-fig", "Canned experiment; writes <prefix>fig<k>.csv");
    int figure_id = 0;
    figure->add_option("figure", figure_id, "Figure number")->required()->check(CLI::IsMember({3, 4, 5, 6, 7}));
    for (auto* sub : {model, solve_cmd, evaluate, sweep, codebook, figure}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsage;
    }

    try {
        Run run;
        run.quiet = g.quiet;
        run.cfg = g.config.empty() ? ExperimentConfig{} : load_config(g.config);
        if (g.seed) run.cfg.trajectory.seed = *g.seed;
        if (g.out) run.cfg.prefix = *g.out;
        if (!g.config.empty()) run.meta["config_file"] = g.config;

        if (model->parsed()) {
            run.command = "model";
            cmd_model(run);
        } else if (solve_cmd->parsed()) {
            run.command = "solve";
            cmd_solve(run);
        } else if (evaluate->parsed()) {
            run.command = "evaluate";
            cmd_evaluate(run);
        } else if (sweep->parsed()) {
            run.command = "sweep";
            cmd_sweep(run);
        } else if (codebook->parsed()) {
            run.command = "codebook";
            cmd_codebook(run);
        } else {
            run.command = "fig" + std::to_string(figure_id);
            cmd_figure(run, figure_id);
        }
        run.commit();
    } catch (const ConfigError& e) {
        std::cerr << "fbctl: config error: " << e.what() << '\n';
        return kConfig;
    } catch (const InvalidArgument& e) {
        std::cerr << "fbctl: invalid input: " << e.what() << '\n';
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "fbctl: " << e.what() << '\n';
        return kNumerical;
    }
    return 0;
}
