// SPDX-License-Identifier: Apache-2.0
#include "logitbayes/dataio.hpp"

#include "logitbayes/error.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <iterator>
#include <memory>
#include <ostream>
#include <sstream>

namespace logitbayes {
namespace {

using nlohmann::json;

std::vector<std::string_view> split_csv(std::string_view line)
{
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view trim_cr(std::string_view s)
{
  if (!s.empty() && s.back() == '\r')
    s.remove_suffix(1);
  return s;
}

std::string where(std::string_view source, std::size_t line)
{
  return std::string(source) + ":" + std::to_string(line) + ": ";
}

double parse_double(std::string_view text, std::string_view source, std::size_t line)
{
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty())
    throw ParseError(where(source, line) + "'" + std::string(text) + "' is not a number");
  if (!std::isfinite(value))
    throw ParseError(where(source, line) + "non-finite value '" + std::string(text) + "'");
  return value;
}

std::optional<int> parse_label(std::string_view text, std::size_t classes, std::string_view source, std::size_t line)
{
  if (text.empty())
    return std::nullopt;
  int value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size())
    throw ParseError(where(source, line) + "label '" + std::string(text) + "' is not a class index");
  if (value < 0 || static_cast<std::size_t>(value) >= classes)
    throw ParseError(where(source, line) + "label " + std::to_string(value) + " outside [0, " +
                     std::to_string(classes) + ")");
  return value;
}

json report_json(const EvalReport& r)
{
  json confusion = json::array();
  for (std::size_t t = 0; t < r.confusion.classes(); ++t) {
    json row = json::array();
    for (std::size_t p = 0; p < r.confusion.classes(); ++p)
      row.push_back(r.confusion(t, p));
    confusion.push_back(std::move(row));
  }
  return json{{"confusion", confusion},
              {"fpr_per_class", r.fpr_per_class},
              {"f1_per_class", r.f1_per_class},
              {"fpr_macro", r.fpr_macro},
              {"f1_macro", r.f1_macro},
              {"cost", r.cost}};
}

template <typename T>
T get_field(const json& j, const char* key)
{
  if (!j.contains(key))
    throw FormatError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("field '") + key + "': " + e.what());
  }
}

json parse_json(std::string_view text)
{
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed JSON: ") + e.what());
  }
}

} // namespace

std::string format_double(double value)
{
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc())
    throw ParameterError("cannot format number");
  return std::string(buf.data(), end);
}

LogitTable parse_logits(std::istream& in, std::string_view source)
{
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line))
    throw ParseError(where(source, 1) + "missing header");
  const auto header = split_csv(trim_cr(line));
  if (header.size() < 3 || header[0] != "id" || header[1] != "label")
    throw ParseError(where(source, 1) + "header must be 'id,label,logit_<class>,...'");
  LogitTable table;
  for (std::size_t c = 2; c < header.size(); ++c) {
    if (!header[c].starts_with("logit_") || header[c].size() == 6)
      throw ParseError(where(source, 1) + "column '" + std::string(header[c]) + "' is not of the form logit_<class>");
    table.class_names.emplace_back(header[c].substr(6));
  }
  const std::size_t nc = table.class_names.size();

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim_cr(line);
    if (row.empty())
      continue;
    const auto fields = split_csv(row);
    if (fields.size() != nc + 2)
      throw ParseError(where(source, line_no) + "expected " + std::to_string(nc + 2) + " columns, found " +
                       std::to_string(fields.size()));
    LogitSample s;
    s.id = std::string(fields[0]);
    s.label = parse_label(fields[1], nc, source, line_no);
    s.logits.reserve(nc);
    for (std::size_t c = 0; c < nc; ++c)
      s.logits.push_back(parse_double(fields[c + 2], source, line_no));
    table.rows.push_back(std::move(s));
  }
  return table;
}

LogitTable read_logits(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open logit file " + path.string());
  return parse_logits(in, path.string());
}

void write_logits(std::ostream& out, const LogitTable& table)
{
  out << "id,label";
  for (const auto& name : table.class_names)
    out << ",logit_" << name;
  out << '\n';
  for (const LogitSample& s : table.rows) {
    if (s.logits.size() != table.classes())
      throw ParameterError("row '" + s.id + "' does not match the table's class count");
    out << s.id << ',';
    if (s.label)
      out << *s.label;
    for (double v : s.logits)
      out << ',' << format_double(v);
    out << '\n';
  }
}

void write_logits(const std::filesystem::path& path, const LogitTable& table)
{
  std::ostringstream out;
  write_logits(out, table);
  write_text_file(path, out.str());
}

std::string model_to_json(const ModelArtifact& artifact)
{
  const BayesScorer& s = artifact.scorer;
  json classes = json::array();
  for (std::size_t i = 0; i < s.classes(); ++i) {
    const KdeModel& kde = s.likelihoods()[i];
    json entry{{"name", i < artifact.class_names.size() ? artifact.class_names[i] : std::to_string(i)},
               {"likelihood", {{"bandwidth", kde.bandwidth()}, {"observations", kde.observations()}}}};
    if (s.mode() == Mode::map) {
      const NhModel& nh = s.priors()[i];
      entry["prior"] = {{"edges", nh.edges()}, {"masses", nh.masses()}};
    }
    classes.push_back(std::move(entry));
  }
  json provenance{{"inputs", artifact.provenance.inputs}};
  if (artifact.provenance.seed)
    provenance["seed"] = *artifact.provenance.seed;
  if (artifact.provenance.timestamp)
    provenance["timestamp"] = *artifact.provenance.timestamp;

  const json doc{{"format", kModelFormat},
                 {"version", kModelVersion},
                 {"mode", to_string(s.mode())},
                 {"fit_condition", to_string(artifact.condition)},
                 {"lambda", s.lambda()},
                 {"classes", std::move(classes)},
                 {"provenance", std::move(provenance)}};
  return doc.dump(1) + "\n";
}

ModelArtifact model_from_json(std::string_view text)
{
  const json doc = parse_json(text);
  if (!doc.is_object() || get_field<std::string>(doc, "format") != kModelFormat)
    throw FormatError("not a logitbayes model file");
  const int version = get_field<int>(doc, "version");
  if (version != kModelVersion)
    throw FormatError("unsupported model version " + std::to_string(version) + " (this build reads version " +
                      std::to_string(kModelVersion) + ")");
  try {
    const Mode mode = parse_mode(get_field<std::string>(doc, "mode"));
    const FitCondition condition = parse_fit_condition(get_field<std::string>(doc, "fit_condition"));
    const double lambda = get_field<double>(doc, "lambda");
    const json& classes = doc.at("classes");
    if (!classes.is_array() || classes.empty())
      throw FormatError("model has no classes");

    std::vector<std::string> names;
    std::vector<KdeModel> likelihoods;
    std::vector<NhModel> priors;
    for (const json& c : classes) {
      names.push_back(get_field<std::string>(c, "name"));
      const json& like = c.at("likelihood");
      likelihoods.emplace_back(get_field<std::vector<double>>(like, "observations"),
                               get_field<double>(like, "bandwidth"));
      if (mode == Mode::map) {
        const json& prior = c.at("prior");
        priors.emplace_back(get_field<std::vector<double>>(prior, "edges"), get_field<std::vector<double>>(prior, "masses"));
      }
    }

    Provenance prov;
    if (doc.contains("provenance")) {
      const json& p = doc.at("provenance");
      if (p.contains("inputs"))
        prov.inputs = p.at("inputs").get<std::map<std::string, std::string>>();
      if (p.contains("seed"))
        prov.seed = p.at("seed").get<std::uint64_t>();
      if (p.contains("timestamp"))
        prov.timestamp = p.at("timestamp").get<std::string>();
    }
    return ModelArtifact{BayesScorer(mode, lambda, std::move(likelihoods), std::move(priors)), std::move(names),
                         condition, std::move(prov)};
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid model file: ") + e.what());
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(std::string("invalid model file: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const ModelArtifact& artifact)
{
  write_text_file(path, model_to_json(artifact));
}

ModelArtifact load_model(const std::filesystem::path& path)
{
  try {
    return model_from_json(read_text_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string params_to_json(const ParamsFile& params, const EvalReport* validation, const GaConfig* config)
{
  json doc{{"format", kParamsFormat},
           {"version", kParamsVersion},
           {"mode", to_string(params.mode)},
           {"classes", params.class_names},
           {"h", params.params.bandwidths},
           {"lambda", params.params.lambda}};
  if (params.mode == Mode::map)
    doc["nbins"] = params.params.nbins;
  if (validation != nullptr)
    doc["validation"] = report_json(*validation);
  if (config != nullptr)
    doc["ga"] = {{"population_size", config->population_size},
                 {"crossover_fraction", config->crossover_fraction},
                 {"max_generations", config->max_generations},
                 {"elite_count", config->elite_count},
                 {"mutation_scale", config->mutation_scale},
                 {"stall_generations", config->stall_generations},
                 {"seed", config->seed}};
  return doc.dump(1) + "\n";
}

ParamsFile params_from_json(std::string_view text)
{
  const json doc = parse_json(text);
  if (!doc.is_object() || get_field<std::string>(doc, "format") != kParamsFormat)
    throw FormatError("not a logitbayes parameter file");
  const int version = get_field<int>(doc, "version");
  if (version != kParamsVersion)
    throw FormatError("unsupported parameter file version " + std::to_string(version));
  ParamsFile p;
  try {
    p.mode = parse_mode(get_field<std::string>(doc, "mode"));
  } catch (const ParameterError& e) {
    throw FormatError(e.what());
  }
  p.class_names = get_field<std::vector<std::string>>(doc, "classes");
  p.params.bandwidths = get_field<std::vector<double>>(doc, "h");
  p.params.lambda = get_field<double>(doc, "lambda");
  if (p.mode == Mode::map)
    p.params.nbins = get_field<std::vector<int>>(doc, "nbins");
  if (p.params.bandwidths.size() != p.class_names.size() ||
      (p.mode == Mode::map && p.params.nbins.size() != p.class_names.size()))
    throw FormatError("parameter vectors do not match the class list");
  if (doc.contains("validation") && doc.at("validation").contains("cost"))
    p.validation_cost = doc.at("validation").at("cost").get<double>();
  return p;
}

ParamsFile load_params(const std::filesystem::path& path)
{
  try {
    return params_from_json(read_text_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_history(std::ostream& out, const std::vector<double>& history)
{
  out << "generation,best_cost\n";
  for (std::size_t g = 0; g < history.size(); ++g)
    out << g << ',' << format_double(history[g]) << '\n';
}

void write_scores(std::ostream& out, const std::vector<std::string>& class_names, const std::vector<ScoredSample>& rows)
{
  out << "id,label,decision";
  for (const auto& name : class_names)
    out << ",score_" << name;
  out << '\n';
  for (const ScoredSample& r : rows) {
    out << r.id << ',';
    if (r.label)
      out << *r.label;
    out << ',' << r.decision;
    for (double v : r.scores)
      out << ',' << format_double(v);
    out << '\n';
  }
}

std::vector<ScoredSample> parse_scores(std::istream& in, std::string_view source)
{
  std::string line;
  if (!std::getline(in, line))
    throw ParseError(where(source, 1) + "missing header");
  const auto header = split_csv(trim_cr(line));
  if (header.size() < 4 || header[0] != "id" || header[1] != "label" || header[2] != "decision")
    throw ParseError(where(source, 1) + "header must be 'id,label,decision,score_<class>,...'");
  const std::size_t nc = header.size() - 3;
  std::vector<ScoredSample> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim_cr(line);
    if (row.empty())
      continue;
    const auto fields = split_csv(row);
    if (fields.size() != header.size())
      throw ParseError(where(source, line_no) + "expected " + std::to_string(header.size()) + " columns, found " +
                       std::to_string(fields.size()));
    ScoredSample s;
    s.id = std::string(fields[0]);
    s.label = parse_label(fields[1], nc, source, line_no);
    const auto decision = parse_label(fields[2], nc, source, line_no);
    if (!decision)
      throw ParseError(where(source, line_no) + "missing decision");
    s.decision = static_cast<std::size_t>(*decision);
    for (std::size_t c = 0; c < nc; ++c)
      s.scores.push_back(parse_double(fields[c + 3], source, line_no));
    rows.push_back(std::move(s));
  }
  return rows;
}

std::vector<ScoredSample> read_scores(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open scores file " + path.string());
  return parse_scores(in, path.string());
}

std::string report_to_json(const std::vector<std::pair<std::string, EvalReport>>& reports,
                           const std::vector<std::string>& class_names)
{
  json rules = json::array();
  for (const auto& [name, report] : reports) {
    json r = report_json(report);
    r["rule"] = name;
    rules.push_back(std::move(r));
  }
  return json{{"classes", class_names}, {"reports", std::move(rules)}}.dump(1) + "\n";
}

std::string format_report_table(const std::vector<std::pair<std::string, EvalReport>>& reports,
                                const std::vector<std::string>& class_names)
{
  std::vector<int> widths;
  for (const auto& name : class_names)
    widths.push_back(std::max(14, static_cast<int>(name.size()) + 6));
  std::ostringstream out;
  out << std::left << std::setw(10) << "rule" << std::right << std::setw(12) << "FPR(%)" << std::setw(12)
      << "F-score(%)" << std::setw(12) << "cost";
  for (std::size_t c = 0; c < class_names.size(); ++c)
    out << std::setw(widths[c]) << ("FPR_" + class_names[c]);
  out << '\n';
  out << std::fixed;
  for (const auto& [rule, r] : reports) {
    out << std::left << std::setw(10) << rule << std::right << std::setprecision(4) << std::setw(12)
        << 100.0 * r.fpr_macro << std::setw(12) << 100.0 * r.f1_macro << std::setprecision(6) << std::setw(12)
        << r.cost;
    out << std::setprecision(4);
    for (std::size_t c = 0; c < r.fpr_per_class.size(); ++c)
      out << std::setw(c < widths.size() ? widths[c] : 14) << 100.0 * r.fpr_per_class[c];
    out << '\n';
  }
  return out.str();
}

std::string read_text_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_text_file(const std::filesystem::path& path, std::string_view text)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !out.write(text.data(), static_cast<std::streamsize>(text.size())))
    throw IoError("cannot write " + path.string());
}

std::string sha256_file(const std::filesystem::path& path)
{
  const std::string bytes = read_text_file(path);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1)
    throw IoError("sha256 failed for " + path.string());
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

} // namespace logitbayes
