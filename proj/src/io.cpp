#include "fbctl/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "fbctl/errors.hpp"

namespace fbctl::io {

namespace {

json vector_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

json matrix_json(const Eigen::MatrixXd& A) {
    json out = json::array();
    for (Eigen::Index r = 0; r < A.rows(); ++r) out.push_back(vector_json(A.row(r).transpose()));
    return out;
}

Eigen::VectorXd vector_from(const json& j, const char* what) {
    if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
}

Eigen::MatrixXd matrix_from(const json& j, const char* what) {
    if (!j.is_array() || j.empty()) throw ConfigError(std::string(what) + " must be a non-empty array of rows");
    const auto cols = j[0].size();
    Eigen::MatrixXd A(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (j[r].size() != cols) throw ConfigError(std::string(what) + " rows differ in length");
        for (std::size_t c = 0; c < cols; ++c)
            A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
    return A;
}

std::string cell(double v) {
    if (std::isnan(v)) return "nan";
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

std::string row(const CurvePoint& p) {
    return cell(p.alpha) + "," + cell(p.net) + "," + cell(p.throughput) + "," + cell(p.feedback_rate) + "," +
           cell(p.avg_threshold) + "," + cell(p.std_error);
}

} // namespace

json model_to_json(const GridSpec& spec, const TransitionModel& model) {
    json doc;
    doc["M"] = spec.M;
    doc["N"] = spec.N;
    json edges = json::array();
    for (std::size_t m = 0; m <= spec.M; ++m) {
        if (std::isinf(spec.g_edges(m))) {
            edges.push_back("inf");
        } else {
            edges.push_back(spec.g_edges(m));
        }
    }
    doc["g_edges"] = edges;
    doc["g_points"] = vector_json(spec.g_points);
    doc["z_edges"] = vector_json(spec.z_edges);
    doc["z_points"] = vector_json(spec.z_points);
    doc["Ptilde"] = matrix_json(model.Ptilde);
    doc["P0"] = matrix_json(model.P0);
    doc["P1_row"] = vector_json(model.P1_row);
    if (model.Peps1_row) doc["Peps1_row"] = vector_json(*model.Peps1_row);
    doc["seed"] = model.seed;
    doc["sample_count"] = model.sample_count;
    if (!model.warnings.empty()) doc["warnings"] = model.warnings;
    return doc;
}

void model_from_json(const json& doc, GridSpec& spec, TransitionModel& model) {
    try {
        spec.M = doc.at("M").get<std::size_t>();
        spec.N = doc.at("N").get<std::size_t>();
        const json& edges = doc.at("g_edges");
        spec.g_edges.resize(static_cast<Eigen::Index>(edges.size()));
        for (std::size_t i = 0; i < edges.size(); ++i) {
            spec.g_edges(static_cast<Eigen::Index>(i)) =
                edges[i].is_string() && edges[i].get<std::string>() == "inf" ? std::numeric_limits<double>::infinity()
                                                                             : edges[i].get<double>();
        }
        spec.g_points = vector_from(doc.at("g_points"), "g_points");
        spec.z_edges = vector_from(doc.at("z_edges"), "z_edges");
        spec.z_points = vector_from(doc.at("z_points"), "z_points");
        spec.validate();
        model.Ptilde = matrix_from(doc.at("Ptilde"), "Ptilde");
        model.P0 = matrix_from(doc.at("P0"), "P0");
        model.P1_row = vector_from(doc.at("P1_row"), "P1_row");
        if (doc.contains("Peps1_row")) {
            model.Peps1_row = vector_from(doc.at("Peps1_row"), "Peps1_row");
        } else {
            model.Peps1_row.reset();
        }
        model.seed = doc.at("seed").get<std::uint64_t>();
        model.sample_count = doc.at("sample_count").get<std::size_t>();
        model.warnings = doc.value("warnings", std::vector<std::string>{});
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed model document: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("malformed model document: ") + e.what());
    }
    if (model.M() != spec.M || model.N() != spec.N) throw ConfigError("model matrices do not match M and N");
}

json solve_to_json(const SolveResult& result) {
    json doc;
    json policy = json::array();
    for (std::size_t m = 0; m < result.policy.M(); ++m) {
        json r = json::array();
        for (std::size_t n = 0; n < result.policy.N(); ++n) r.push_back(result.policy(m, n) ? 1 : 0);
        policy.push_back(r);
    }
    doc["policy"] = policy;
    doc["threshold"] = vector_json(result.threshold.y);
    doc["is_threshold"] = result.threshold.is_threshold;
    doc["J"] = result.J;
    doc["iterations"] = result.iterations;
    doc["pi"] = matrix_json(result.pi.pi);
    return doc;
}

Policy policy_from_json(const json& doc) {
    try {
        const json& rows = doc.at("policy");
        if (!rows.is_array() || rows.empty()) throw ConfigError("policy must be a non-empty array");
        const auto N = rows[0].size();
        Policy p(rows.size(), N);
        for (std::size_t m = 0; m < rows.size(); ++m) {
            if (rows[m].size() != N) throw ConfigError("policy rows differ in length");
            for (std::size_t n = 0; n < N; ++n) p.set(m, n, rows[m][n].get<int>() != 0);
        }
        return p;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed solve document: ") + e.what());
    }
}

json codebook_to_json(const Codebook& codebook) {
    json doc;
    doc["L"] = codebook.antennas();
    doc["size"] = codebook.size();
    doc["method"] = codebook.method;
    doc["seed"] = codebook.seed;
    json vectors = json::array();
    for (const auto& v : codebook.vectors) {
        json flat = json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            flat.push_back(v(i).real());
            flat.push_back(v(i).imag());
        }
        vectors.push_back(flat);
    }
    doc["vectors"] = vectors;
    return doc;
}

Codebook codebook_from_json(const json& doc) {
    Codebook cb;
    try {
        const auto L = doc.at("L").get<std::size_t>();
        cb.method = doc.value("method", std::string("explicit"));
        cb.seed = doc.value("seed", std::uint64_t{0});
        for (const auto& flat : doc.at("vectors")) {
            if (flat.size() != 2 * L) throw ConfigError("codebook vector length does not match L");
            cvec v(static_cast<Eigen::Index>(L));
            for (std::size_t i = 0; i < L; ++i)
                v(static_cast<Eigen::Index>(i)) = {flat[2 * i].get<double>(), flat[2 * i + 1].get<double>()};
            cb.vectors.push_back(v);
        }
        if (doc.contains("size") && doc.at("size").get<std::size_t>() != cb.vectors.size())
            throw ConfigError("codebook size field does not match the vectors");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed codebook document: ") + e.what());
    }
    try {
        cb.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("invalid codebook: ") + e.what());
    }
    return cb;
}

json eval_to_json(const EvalResult& result) {
    return json{{"alpha", result.alpha},
                {"throughput", result.throughput},
                {"feedback_rate", result.feedback_rate},
                {"net", result.net},
                {"stderr", result.std_error},
                {"slots", result.slots}};
}

std::string curve_to_csv(const Curve& curve) {
    std::string out = std::string(curve_header) + "\n";
    for (const auto& p : curve.points) out += row(p) + "\n";
    return out;
}

std::string series_to_csv(const std::vector<std::pair<std::string, Curve>>& series) {
    std::string out = std::string("series,") + curve_header + "\n";
    for (const auto& [label, curve] : series)
        for (const auto& p : curve.points) out += label + "," + row(p) + "\n";
    return out;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw Error("cannot open " + tmp.string() + " for writing");
        os << text;
        if (!os) throw Error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

json read_json(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read " + path.string());
    try {
        return json::parse(is);
    } catch (const json::exception& e) {
        throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
    }
}

} // namespace fbctl::io
