// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "logitbayes/inference.hpp"
#include "logitbayes/metrics.hpp"
#include "logitbayes/tuner.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace logitbayes {

/// Logit CSV: header `id,label,logit_<class0>,logit_<class1>,...`; the label
/// column holds a class index or is empty for unlabeled rows.
struct LogitTable
{
  std::vector<std::string> class_names;
  std::vector<LogitSample> rows;

  std::size_t classes() const noexcept { return class_names.size(); }
};

LogitTable parse_logits(std::istream& in, std::string_view source = "<stream>");
LogitTable read_logits(const std::filesystem::path& path);
void write_logits(std::ostream& out, const LogitTable& table);
void write_logits(const std::filesystem::path& path, const LogitTable& table);

struct Provenance
{
  std::map<std::string, std::string> inputs; ///< role -> sha256 of the file
  std::optional<std::uint64_t> seed;
  std::optional<std::string> timestamp;

  bool operator==(const Provenance&) const = default;
};

/// Everything needed to rebuild a scorer bit-for-bit.
struct ModelArtifact
{
  BayesScorer scorer;
  std::vector<std::string> class_names;
  FitCondition condition = FitCondition::ground_truth;
  Provenance provenance;
};

inline constexpr std::string_view kModelFormat = "logitbayes-model";
inline constexpr int kModelVersion = 1;
inline constexpr std::string_view kParamsFormat = "logitbayes-params";
inline constexpr int kParamsVersion = 1;

std::string model_to_json(const ModelArtifact& artifact);
/// Throws FormatError on unknown format, unsupported version or invariant violations.
ModelArtifact model_from_json(std::string_view text);
void save_model(const std::filesystem::path& path, const ModelArtifact& artifact);
ModelArtifact load_model(const std::filesystem::path& path);

/// Tuned parameters as written by `tune` and accepted by `fit --params`.
struct ParamsFile
{
  Mode mode = Mode::ml;
  std::vector<std::string> class_names;
  HyperParams params;
  std::optional<double> validation_cost;
};

std::string params_to_json(const ParamsFile& params, const EvalReport* validation, const GaConfig* config);
ParamsFile params_from_json(std::string_view text);
ParamsFile load_params(const std::filesystem::path& path);

/// One line per generation: `generation,best_cost`.
void write_history(std::ostream& out, const std::vector<double>& history);

/// Per-sample output of `score`: `id,label,decision,score_<class>...`.
struct ScoredSample
{
  std::string id;
  std::optional<int> label;
  std::size_t decision;
  std::vector<double> scores;
};

void write_scores(std::ostream& out, const std::vector<std::string>& class_names, const std::vector<ScoredSample>& rows);
/// Reads the id, label and decision columns of a scores file; score columns are ignored.
std::vector<ScoredSample> parse_scores(std::istream& in, std::string_view source = "<stream>");
std::vector<ScoredSample> read_scores(const std::filesystem::path& path);

std::string report_to_json(const std::vector<std::pair<std::string, EvalReport>>& reports,
                           const std::vector<std::string>& class_names);
/// Aligned comparison table, one row per rule: FPR and F-score in percent and the cost.
std::string format_report_table(const std::vector<std::pair<std::string, EvalReport>>& reports,
                                const std::vector<std::string>& class_names);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);
/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

} // namespace logitbayes
