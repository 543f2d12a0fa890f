#include "fbctl/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fbctl/errors.hpp"

namespace fbctl {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"channel", {"antennas", "doppler"}},
        {"grid", {"M", "N", "model_samples", "model"}},
        {"reward", {"snr_db", "snr", "alpha"}},
        {"codebook", {"method", "size", "training", "iterations", "path", "eps_samples"}},
        {"trajectory", {"slots", "warmup", "seed"}},
        {"periodic", {"max_period"}},
        {"solver", {"max_iter"}},
        {"evaluate", {"policy"}},
        {"output", {"prefix"}},
    };
    return keys;
}

template <class T>
T get(const pt::ptree& tree, const std::string& key, T fallback) {
    const auto node = tree.get_optional<std::string>(key);
    if (!node) return fallback;
    try {
        if constexpr (std::is_same_v<T, std::string>) {
            return *node;
        } else {
            std::istringstream is(*node);
            T value{};
            if constexpr (std::is_unsigned_v<T>) {
                // accept 1e6-style counts
                double d = 0.0;
                is >> d;
                if (!is || !is.eof() || d < 0 || d != std::floor(d)) throw std::invalid_argument("");
                value = static_cast<T>(d);
            } else {
                is >> value;
                if (!is || !is.eof()) throw std::invalid_argument("");
            }
            return value;
        }
    } catch (const std::exception&) {
        throw ConfigError("invalid value for " + key + ": '" + *node + "'");
    }
}

std::vector<double> parse_list(const std::string& text, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::istringstream is(item);
        double v = 0.0;
        is >> v;
        if (is.fail() || !(is >> std::ws).eof()) throw ConfigError("invalid number in " + key + ": '" + item + "'");
        out.push_back(v);
    }
    return out;
}

std::string join(const std::vector<double>& values) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < values.size(); ++i) os << (i ? "," : "") << values[i];
    return os.str();
}

} // namespace

void ExperimentConfig::validate() const {
    if (L == 0) throw ConfigError("channel.antennas must be positive");
    if (!(doppler >= 0.0) || !std::isfinite(doppler)) throw ConfigError("channel.doppler must be nonnegative");
    if (M == 0 || N == 0) throw ConfigError("grid.M and grid.N must be positive");
    if (model_samples == 0) throw ConfigError("grid.model_samples must be positive");
    if (!(P > 0.0) || !std::isfinite(P)) throw ConfigError("reward SNR must be positive");
    if (alphas.empty()) throw ConfigError("reward.alpha needs at least one value");
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (!(alphas[i] >= 0.0) || !std::isfinite(alphas[i])) throw ConfigError("reward.alpha values must be >= 0");
        if (i > 0 && !(alphas[i] > alphas[i - 1])) throw ConfigError("reward.alpha values must be increasing");
    }
    static const std::set<std::string> methods{"none", "random", "lloyd", "file"};
    if (!methods.count(codebook_method)) throw ConfigError("codebook.method must be none, random, lloyd or file");
    if (codebook_method == "file" && !codebook_path) throw ConfigError("codebook.method = file needs codebook.path");
    if (codebook_size == 0) throw ConfigError("codebook.size must be positive");
    if (codebook_method == "lloyd" && codebook_training < 100 * codebook_size)
        throw ConfigError("codebook.training must be at least 100 * codebook.size");
    if (eps_samples < 10000) throw ConfigError("codebook.eps_samples must be at least 1e4");
    if (trajectory.slots == 0 || !(trajectory.slots > trajectory.warmup))
        throw ConfigError("trajectory.slots must exceed trajectory.warmup");
    if (max_period == 0) throw ConfigError("periodic.max_period must be positive");
    if (max_iter == 0) throw ConfigError("solver.max_iter must be positive");
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    pt::ptree tree;
    try {
        std::istringstream is(text);
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.message() + " (line " + std::to_string(e.line()) +
                          ")");
    }
    for (const auto& [section, body] : tree) {
        const auto it = known_keys().find(section);
        if (it == known_keys().end()) throw ConfigError("unknown config section [" + section + "]");
        if (!body.data().empty()) throw ConfigError("config key '" + section + "' must live inside a section");
        for (const auto& [key, _] : body)
            if (!it->second.count(key)) throw ConfigError("unknown config key " + section + "." + key);
    }
    const auto path_of = [&](const std::string& key) -> std::optional<std::filesystem::path> {
        const auto v = tree.get_optional<std::string>(key);
        if (!v || v->empty()) return std::nullopt;
        std::filesystem::path p(*v);
        return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    };

    ExperimentConfig c;
    c.L = get(tree, "channel.antennas", c.L);
    c.doppler = get(tree, "channel.doppler", c.doppler);
    c.M = get(tree, "grid.M", c.M);
    c.N = get(tree, "grid.N", c.N);
    c.model_samples = get(tree, "grid.model_samples", c.model_samples);
    c.model_path = path_of("grid.model");
    const bool has_db = tree.get_optional<std::string>("reward.snr_db").has_value();
    const bool has_linear = tree.get_optional<std::string>("reward.snr").has_value();
    if (has_db && has_linear) throw ConfigError("set either reward.snr_db or reward.snr, not both");
    if (has_linear) {
        c.P = get(tree, "reward.snr", c.P);
        c.snr_db = 10.0 * std::log10(c.P);
    } else {
        c.snr_db = get(tree, "reward.snr_db", c.snr_db);
        c.P = std::pow(10.0, c.snr_db / 10.0);
    }
    if (const auto a = tree.get_optional<std::string>("reward.alpha")) c.alphas = parse_list(*a, "reward.alpha");
    c.codebook_method = get(tree, "codebook.method", c.codebook_method);
    c.codebook_size = get(tree, "codebook.size", c.codebook_size);
    c.codebook_training = get(tree, "codebook.training", c.codebook_training);
    c.codebook_iterations = get(tree, "codebook.iterations", c.codebook_iterations);
    c.codebook_path = path_of("codebook.path");
    c.eps_samples = get(tree, "codebook.eps_samples", c.eps_samples);
    c.trajectory.slots = get(tree, "trajectory.slots", c.trajectory.slots);
    c.trajectory.warmup = get(tree, "trajectory.warmup", c.trajectory.warmup);
    c.trajectory.seed = get<std::uint64_t>(tree, "trajectory.seed", c.trajectory.seed);
    c.max_period = get(tree, "periodic.max_period", c.max_period);
    c.max_iter = get(tree, "solver.max_iter", c.max_iter);
    c.policy_path = path_of("evaluate.policy");
    c.prefix = get(tree, "output.prefix", c.prefix);
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

std::string ExperimentConfig::to_ini() const {
    std::ostringstream os;
    os.precision(17);
    os << "[channel]\nantennas = " << L << "\ndoppler = " << doppler << "\n\n";
    os << "[grid]\nM = " << M << "\nN = " << N << "\nmodel_samples = " << model_samples << "\n";
    if (model_path) os << "model = " << model_path->string() << "\n";
    os << "\n[reward]\nsnr = " << P << "\nalpha = " << join(alphas) << "\n\n";
    os << "[codebook]\nmethod = " << codebook_method << "\nsize = " << codebook_size
       << "\ntraining = " << codebook_training << "\niterations = " << codebook_iterations
       << "\neps_samples = " << eps_samples << "\n";
    if (codebook_path) os << "path = " << codebook_path->string() << "\n";
    os << "\n[trajectory]\nslots = " << trajectory.slots << "\nwarmup = " << trajectory.warmup
       << "\nseed = " << trajectory.seed << "\n\n";
    os << "[periodic]\nmax_period = " << max_period << "\n\n";
    os << "[solver]\nmax_iter = " << max_iter << "\n";
    if (policy_path) os << "\n[evaluate]\npolicy = " << policy_path->string() << "\n";
    os << "\n[output]\nprefix = " << prefix << "\n";
    return os.str();
}

std::string config_reference() {
    return R"(Configuration file (INI; every key optional, defaults shown):
  [channel]    antennas = 3            transmit antennas L
               doppler = 0.1           normalized Doppler f_D*T_c (rho = J0(2 pi f_D T_c))
  [grid]       M = 16, N = 16          g- and z-bins
               model_samples = 1e6     Monte Carlo draws for the transition model
               model = <path>          reuse a model JSON instead of estimating
  [reward]     snr_db = 20             transmit SNR in dB (or snr = linear value)
               alpha = 0.5             feedback price(s), comma-separated, increasing
  [codebook]   method = none           none | random | lloyd | file
               size = 16, training = 1e5, iterations = 50, eps_samples = 1e5
               path = <path>           codebook JSON for method = file
  [trajectory] slots = 1e6, warmup = 1000, seed = 1
  [periodic]   max_period = 64         longest feedback interval searched
  [solver]     max_iter = 100          policy-iteration limit
  [evaluate]   policy = <path>         solve JSON to evaluate (default: solve first)
  [output]     prefix = fbctl_         output path prefix
)";
}

} // namespace fbctl
