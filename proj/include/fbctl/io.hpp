#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "fbctl/codebook.hpp"
#include "fbctl/mdp.hpp"
#include "fbctl/simulator.hpp"
#include "fbctl/state_grid.hpp"

namespace fbctl::io {

using json = nlohmann::json;

/// Grid and transition model as one document; the last g edge is "inf".
json model_to_json(const GridSpec& spec, const TransitionModel& model);
void model_from_json(const json& doc, GridSpec& spec, TransitionModel& model);

json solve_to_json(const SolveResult& result);
/// Policy table, threshold and J from a solve document (A and pi are not restored).
Policy policy_from_json(const json& doc);

/// Vectors stored as interleaved [re, im, re, im, ...] arrays.
json codebook_to_json(const Codebook& codebook);
Codebook codebook_from_json(const json& doc);

json eval_to_json(const EvalResult& result);

inline constexpr const char* curve_header = "alpha,net,throughput,feedback_rate,avg_threshold,stderr";

/// CSV text for a curve, header included; NaN cells are written as "nan".
std::string curve_to_csv(const Curve& curve);

/// Long-format CSV for several labelled curves: "series," + curve_header.
std::string series_to_csv(const std::vector<std::pair<std::string, Curve>>& series);

/// Writes through a temporary sibling and renames, so readers never see partial files.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

json read_json(const std::filesystem::path& path);

} // namespace fbctl::io
