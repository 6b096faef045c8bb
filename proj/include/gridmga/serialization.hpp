#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "gridmga/eval_context.hpp"
#include "gridmga/hitl.hpp"
#include "gridmga/mga.hpp"
#include "gridmga/milp_solver.hpp"
#include "gridmga/reconfig_model.hpp"

namespace gridmga {

using Json = nlohmann::json;

Json to_json(const Topology& t);
Topology topology_from_json(const Json& j);
Json to_json(const Alternative& a);
Alternative alternative_from_json(const Json& j);
Json to_json(const SwitchingOptions& o);
SwitchingOptions switching_options_from_json(const Json& j);
Json to_json(const SolverSettings& s);
SolverSettings solver_settings_from_json(const Json& j);
Json to_json(const HitlParams& p);
HitlParams hitl_params_from_json(const Json& j);
Json to_json(const RankingFeedback& r);
RankingFeedback ranking_from_json(const Json& j);
Json to_json(const WeightVector& w);
Json to_json(const AlternativeSet& s);
AlternativeSet alternative_set_from_json(const Json& j);
Json to_json(const EvalContext& c);
EvalContext eval_context_from_json(const Json& j);

/// Everything needed to evaluate or extend an alternative set on its own.
struct AlternativeSetDocument {
    Network network;
    SwitchingOptions options;
    AlternativeSet set;
    /// The least-cost alternative, when known.
    std::optional<Alternative> least_cost;
};

std::string write_alternative_set_document(const AlternativeSetDocument& doc);
AlternativeSetDocument read_alternative_set_document(std::string_view text);

/// Parses text as JSON, turning syntax errors into ParseError with a line number.
Json parse_json_text(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file and renames it over `path`.
void write_text_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace gridmga
