// SPDX-License-Identifier: Apache-2.0
#include "logitbayes/cli.hpp"

#include "logitbayes/dataio.hpp"
#include "logitbayes/error.hpp"
#include "logitbayes/pointcloud.hpp"
#include "logitbayes/tuner.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace logitbayes {
namespace {

namespace fs = std::filesystem;

struct GlobalOptions
{
  std::uint64_t seed = 0;
  std::string classes;
  std::string output;
};

std::optional<std::string> source_date()
{
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch != nullptr && *epoch != '\0')
    return std::string(epoch);
  return std::nullopt;
}

std::vector<std::string> split_list(const std::string& text)
{
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    out.push_back(item);
  return out;
}

// --classes renames the classes of the input; the count has to agree.
std::vector<std::string> class_names(const GlobalOptions& g, const std::vector<std::string>& from_input)
{
  if (g.classes.empty())
    return from_input;
  auto names = split_list(g.classes);
  if (names.size() != from_input.size())
    throw ParameterError("--classes lists " + std::to_string(names.size()) + " names but the input has " +
                         std::to_string(from_input.size()) + " classes");
  return names;
}

void emit(const GlobalOptions& g, std::ostream& out, const std::string& text)
{
  if (g.output.empty() || g.output == "-")
    out << text;
  else
    write_text_file(g.output, text);
}

void require_output(const GlobalOptions& g, const char* what)
{
  if (g.output.empty())
    throw ParameterError(std::string("--output is required for ") + what);
}

template <typename T>
std::pair<T, T> parse_pair(const std::string& text, const char* flag)
{
  const auto parts = split_list(text);
  if (parts.size() != 2)
    throw ParameterError(std::string(flag) + " expects 'lower,upper'");
  try {
    if constexpr (std::is_same_v<T, int>)
      return {std::stoi(parts[0]), std::stoi(parts[1])};
    else
      return {std::stod(parts[0]), std::stod(parts[1])};
  } catch (const std::exception&) {
    throw ParameterError(std::string(flag) + " expects two numbers, got '" + text + "'");
  }
}

// ---- fit -------------------------------------------------------------------

struct FitOptions
{
  std::string train;
  std::string mode = "ml";
  std::vector<double> h;
  std::vector<int> nbins;
  double lambda = 1e-7;
  std::string params;
  std::string fit_on = "truth";
};

int run_fit(const GlobalOptions& g, const FitOptions& o, CLI::App& cmd)
{
  require_output(g, "fit");
  const LogitTable train = read_logits(o.train);
  ScorerParams sp;
  if (!o.params.empty()) {
    const ParamsFile pf = load_params(o.params);
    if (pf.class_names.size() != train.classes())
      throw ParameterError("parameter file has " + std::to_string(pf.class_names.size()) + " classes, training data " +
                           std::to_string(train.classes()));
    sp = to_scorer_params(pf.params, cmd.count("--mode") > 0 ? parse_mode(o.mode) : pf.mode,
                          parse_fit_condition(o.fit_on));
  } else {
    if (o.h.empty())
      throw ParameterError("fit needs --h (one bandwidth per class) or --params");
    sp.bandwidths = o.h;
    sp.nbins = o.nbins;
    sp.lambda = o.lambda;
    sp.mode = parse_mode(o.mode);
    sp.condition = parse_fit_condition(o.fit_on);
  }
  if (sp.bandwidths.size() != train.classes())
    throw ParameterError("got " + std::to_string(sp.bandwidths.size()) + " bandwidths for " +
                         std::to_string(train.classes()) + " classes");

  Provenance prov;
  prov.inputs["train"] = sha256_file(o.train);
  if (!o.params.empty())
    prov.inputs["params"] = sha256_file(o.params);
  prov.timestamp = source_date();
  ModelArtifact artifact{fit_scorer(train.rows, sp), class_names(g, train.class_names), sp.condition, prov};
  save_model(g.output, artifact);
  return kExitOk;
}

// ---- tune ------------------------------------------------------------------

struct TuneOptions
{
  std::string train;
  std::string val;
  std::string mode = "ml";
  std::string h_bounds;
  std::string lambda_bounds;
  std::string nbins_bounds;
  GaConfig ga;
  std::string fit_on = "truth";
  bool quiet = false;
};

int run_tune(const GlobalOptions& g, TuneOptions o, std::ostream& out, std::ostream& err)
{
  require_output(g, "tune (a directory)");
  const LogitTable train = read_logits(o.train);
  const LogitTable val = read_logits(o.val);
  if (train.classes() != val.classes())
    throw ParameterError("training and validation files disagree on the class count");
  const Mode mode = parse_mode(o.mode);
  const FitCondition condition = parse_fit_condition(o.fit_on);

  SearchBounds bounds;
  if (!o.h_bounds.empty()) {
    const auto [lo, hi] = parse_pair<double>(o.h_bounds, "--h-bounds");
    bounds.bandwidth = {lo, hi};
  }
  if (!o.lambda_bounds.empty()) {
    const auto [lo, hi] = parse_pair<double>(o.lambda_bounds, "--lambda-bounds");
    bounds.lambda = {lo, hi};
  }
  if (!o.nbins_bounds.empty()) {
    const auto [lo, hi] = parse_pair<int>(o.nbins_bounds, "--nbins-bounds");
    bounds.nbins = {lo, hi};
  }
  o.ga.seed = g.seed;
  if (o.ga.max_generations == 0)
    o.ga.max_generations = default_max_generations(variable_count(train.classes(), mode));

  GenerationObserver progress;
  if (!o.quiet)
    progress = [&](const GenerationSnapshot& s) {
      err << "generation " << s.generation << "/" << o.ga.max_generations << " best " << std::setprecision(9)
          << s.best_fitness << '\n';
    };
  const TuneResult result = tune(train.rows, val.rows, mode, bounds, o.ga, condition, progress);

  const fs::path dir(g.output);
  fs::create_directories(dir);
  const auto names = class_names(g, train.class_names);
  const ParamsFile pf{mode, names, result.params, result.report.cost};
  write_text_file(dir / "params.json", params_to_json(pf, &result.report, &o.ga));

  std::ostringstream history;
  write_history(history, result.history);
  write_text_file(dir / "history.csv", history.str());

  Provenance prov;
  prov.inputs["train"] = sha256_file(o.train);
  prov.inputs["val"] = sha256_file(o.val);
  prov.seed = g.seed;
  prov.timestamp = source_date();
  save_model(dir / "model.json",
             ModelArtifact{fit_scorer(train.rows, to_scorer_params(result.params, mode, condition)), names, condition,
                           prov});

  out << format_report_table({{std::string(to_string(mode)), result.report}}, names);
  return kExitOk;
}

// ---- score -----------------------------------------------------------------

struct ScoreOptions
{
  std::string model;
  std::string test;
  std::string rule;
};

int run_score(const GlobalOptions& g, const ScoreOptions& o, std::ostream& out)
{
  const ModelArtifact artifact = load_model(o.model);
  const LogitTable test = read_logits(o.test);
  if (test.classes() != artifact.scorer.classes())
    throw ParameterError("model has " + std::to_string(artifact.scorer.classes()) + " classes, test data " +
                         std::to_string(test.classes()));
  const Rule rule = o.rule.empty() ? (artifact.scorer.mode() == Mode::ml ? Rule::ml : Rule::map) : parse_rule(o.rule);
  std::vector<ScoredSample> rows;
  rows.reserve(test.rows.size());
  for (const LogitSample& s : test.rows) {
    Decision d = predict(rule, &artifact.scorer, s.logits);
    rows.push_back(ScoredSample{s.id, s.label, d.label, std::move(d.scores)});
  }
  std::ostringstream text;
  write_scores(text, class_names(g, artifact.class_names), rows);
  emit(g, out, text.str());
  return kExitOk;
}

// ---- eval ------------------------------------------------------------------

struct EvalOptions
{
  std::string decisions;
  std::string logits;
  std::vector<std::string> rules;
  std::string ml_model;
  std::string map_model;
  bool json = false;
};

int run_eval(const GlobalOptions& g, const EvalOptions& o, std::ostream& out)
{
  std::vector<std::pair<std::string, EvalReport>> reports;
  std::vector<std::string> names;

  if (!o.decisions.empty()) {
    if (!o.logits.empty())
      throw ParameterError("use either --decisions or --logits, not both");
    std::ifstream in(o.decisions);
    if (!in)
      throw IoError("cannot open scores file " + o.decisions);
    std::string header;
    std::getline(in, header);
    for (const auto& col : split_list(header))
      if (col.starts_with("score_"))
        names.push_back(col.substr(6));
    const auto rows = read_scores(o.decisions);
    std::vector<std::size_t> predictions;
    std::vector<std::size_t> labels;
    for (const auto& r : rows) {
      if (!r.label)
        throw ParameterError("sample '" + r.id + "' has no label; eval needs ground truth");
      predictions.push_back(r.decision);
      labels.push_back(static_cast<std::size_t>(*r.label));
    }
    names = class_names(g, names);
    reports.emplace_back(fs::path(o.decisions).stem().string(), evaluate(predictions, labels, names.size()));
  } else {
    if (o.logits.empty())
      throw ParameterError("eval needs --decisions or --logits");
    const LogitTable table = read_logits(o.logits);
    names = class_names(g, table.class_names);
    std::optional<ModelArtifact> ml;
    std::optional<ModelArtifact> map;
    if (!o.ml_model.empty())
      ml = load_model(o.ml_model);
    if (!o.map_model.empty())
      map = load_model(o.map_model);
    std::vector<std::string> rules = o.rules;
    if (rules.empty()) {
      rules.emplace_back("softmax");
      if (ml)
        rules.emplace_back("ml");
      if (map)
        rules.emplace_back("map");
    }
    for (const auto& text : rules) {
      const Rule rule = parse_rule(text);
      const BayesScorer* scorer = nullptr;
      if (rule == Rule::ml)
        scorer = ml ? &ml->scorer : (map ? &map->scorer : nullptr);
      if (rule == Rule::map)
        scorer = map ? &map->scorer : nullptr;
      if (rule != Rule::softmax && scorer == nullptr)
        throw ParameterError("rule '" + text + "' needs --" + text + "-model");
      if (scorer != nullptr && scorer->classes() != table.classes())
        throw ParameterError("model class count does not match the logit file");
      reports.emplace_back(std::string(to_string(rule)), evaluate_rule(rule, scorer, table.rows));
    }
  }

  out << format_report_table(reports, names);
  if (!g.output.empty())
    write_text_file(g.output, report_to_json(reports, names));
  else if (o.json)
    out << report_to_json(reports, names);
  return kExitOk;
}

// ---- point clouds ----------------------------------------------------------

struct CropCliOptions
{
  std::string cloud;
  std::string calib;
  std::vector<double> box;
  std::string camera = "P2";
  double near_cull = 5.0;
};

int run_pc_crop(const GlobalOptions& g, const CropCliOptions& o, std::ostream& out)
{
  require_output(g, "pc-crop");
  if (o.box.size() != 4)
    throw ParameterError("--box expects x_min,y_min,x_max,y_max");
  const pc::BBox2D box{o.box[0], o.box[1], o.box[2], o.box[3]};
  const auto cloud = pc::read_kitti_cloud(o.cloud);
  const auto calib = pc::read_kitti_calibration(o.calib, o.camera);
  const auto cropped = pc::crop_to_bbox(cloud, calib, box, pc::CropOptions{o.near_cull});
  pc::write_kitti_cloud(g.output, cropped);
  out << cropped.size() << " of " << cloud.size() << " points kept\n";
  return kExitOk;
}

int run_pc_cluster(const GlobalOptions& g, const std::string& cloud_path, double gap, double confidence,
                   std::ostream& out)
{
  require_output(g, "pc-cluster");
  const auto cloud = pc::read_kitti_cloud(cloud_path);
  const auto cluster = pc::cluster_foreground(cloud, gap, confidence);
  pc::write_kitti_cloud(g.output, cluster);
  out << cluster.size() << " of " << cloud.size() << " points in the selected cluster\n";
  return kExitOk;
}

int run_pc_resample(const GlobalOptions& g, const std::string& cloud_path, std::size_t target, std::size_t k,
                    std::ostream& out)
{
  require_output(g, "pc-resample");
  const auto cloud = pc::read_kitti_cloud(cloud_path);
  const auto resampled = pc::resample(cloud, pc::ResampleOptions{target, k, g.seed});
  pc::write_kitti_cloud(g.output, resampled);
  out << cloud.size() << " -> " << resampled.size() << " points\n";
  return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Bayesian ML/MAP re-scoring of classifier logits, with a LiDAR crop pipeline", "lbayes"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Seed for every random choice")->envname("LB_SEED");
  app.add_option("--classes", g.classes, "Comma-separated class names overriding the input header");
  app.add_option("--output", g.output, "Output file (directory for tune)");

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit an ML/MAP scorer on training logits");
  fit_cmd->add_option("--train", fit.train, "Training logit CSV")->required();
  fit_cmd->add_option("--mode", fit.mode, "ml or map");
  fit_cmd->add_option("--h", fit.h, "Per-class KDE bandwidths")->delimiter(',');
  fit_cmd->add_option("--nbins", fit.nbins, "Per-class histogram bin counts (map)")->delimiter(',');
  fit_cmd->add_option("--lambda", fit.lambda, "Additive smoothing");
  fit_cmd->add_option("--params", fit.params, "Parameter file written by tune");
  fit_cmd->add_option("--fit-on", fit.fit_on, "Density conditioning: truth or prediction");

  TuneOptions tune_opts;
  auto* tune_cmd = app.add_subcommand("tune", "Genetic-algorithm search of bandwidths, bins and lambda");
  tune_cmd->add_option("--train", tune_opts.train, "Training logit CSV")->required();
  tune_cmd->add_option("--val", tune_opts.val, "Validation logit CSV")->required();
  tune_cmd->add_option("--mode", tune_opts.mode, "ml or map");
  tune_cmd->add_option("--h-bounds", tune_opts.h_bounds, "lower,upper (default 0.01,5)");
  tune_cmd->add_option("--lambda-bounds", tune_opts.lambda_bounds, "lower,upper (default 1e-9,1e-5)");
  tune_cmd->add_option("--nbins-bounds", tune_opts.nbins_bounds, "lower,upper (default 2,64)");
  tune_cmd->add_option("--population", tune_opts.ga.population_size, "Population size");
  tune_cmd->add_option("--crossover", tune_opts.ga.crossover_fraction, "Crossover fraction");
  tune_cmd->add_option("--generations", tune_opts.ga.max_generations, "Generation cap (default 100 x variables)");
  tune_cmd->add_option("--elite", tune_opts.ga.elite_count, "Elite count");
  tune_cmd->add_option("--mutation-scale", tune_opts.ga.mutation_scale, "Mutation sd as a fraction of the range");
  tune_cmd->add_option("--stall", tune_opts.ga.stall_generations, "Stop after this many stalled generations");
  tune_cmd->add_option("--fit-on", tune_opts.fit_on, "Density conditioning: truth or prediction");
  tune_cmd->add_flag("--quiet", tune_opts.quiet, "No progress lines");

  ScoreOptions score;
  auto* score_cmd = app.add_subcommand("score", "Score test logits with a fitted model");
  score_cmd->add_option("--model", score.model, "Model file")->required();
  score_cmd->add_option("--test", score.test, "Test logit CSV")->required();
  score_cmd->add_option("--rule", score.rule, "softmax, ml or map (default: the model's mode)");

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Confusion matrix, macro FPR, F-score and cost");
  eval_cmd->add_option("--decisions", eval.decisions, "Scores file written by score");
  eval_cmd->add_option("--logits", eval.logits, "Labeled logit CSV");
  eval_cmd->add_option("--rule", eval.rules, "softmax, ml or map; repeatable");
  eval_cmd->add_option("--ml-model", eval.ml_model, "Model used by the ml rule");
  eval_cmd->add_option("--map-model", eval.map_model, "Model used by the map rule");
  eval_cmd->add_flag("--json", eval.json, "Also print the machine-readable report");

  CropCliOptions crop;
  auto* crop_cmd = app.add_subcommand("pc-crop", "Crop a LiDAR frame to the points inside a 2D box");
  crop_cmd->add_option("--cloud", crop.cloud, "KITTI velodyne .bin")->required();
  crop_cmd->add_option("--calib", crop.calib, "KITTI calibration text")->required();
  crop_cmd->add_option("--box", crop.box, "x_min,y_min,x_max,y_max")->delimiter(',')->required();
  crop_cmd->add_option("--camera", crop.camera, "Projection matrix key");
  crop_cmd->add_option("--near-cull", crop.near_cull, "Drop points with forward coordinate below this");

  std::string cluster_cloud;
  double gap = 0.25;
  double confidence = 1.0;
  auto* cluster_cmd = app.add_subcommand("pc-cluster", "Keep the dominant distance-gap cluster");
  cluster_cmd->add_option("--cloud", cluster_cloud, "KITTI velodyne .bin")->required();
  cluster_cmd->add_option("--gap", gap, "Distance gap that starts a new cluster");
  cluster_cmd->add_option("--confidence", confidence, "Confidence level of the cluster weighting");

  std::string resample_cloud;
  std::size_t target = 512;
  std::size_t neighbors = 4;
  auto* resample_cmd = app.add_subcommand("pc-resample", "Down- or up-sample a crop to a fixed size");
  resample_cmd->add_option("--cloud", resample_cloud, "KITTI velodyne .bin")->required();
  resample_cmd->add_option("--target", target, "Output point count");
  resample_cmd->add_option("--k", neighbors, "Nearest neighbors used for upsampling");

  std::vector<const char*> argv{"lbayes"};
  for (const auto& a : args)
    argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*fit_cmd)
      return run_fit(g, fit, *fit_cmd);
    if (*tune_cmd)
      return run_tune(g, tune_opts, out, err);
    if (*score_cmd)
      return run_score(g, score, out);
    if (*eval_cmd)
      return run_eval(g, eval, out);
    if (*crop_cmd)
      return run_pc_crop(g, crop, out);
    if (*cluster_cmd)
      return run_pc_cluster(g, cluster_cloud, gap, confidence, out);
    if (*resample_cmd)
      return run_pc_resample(g, resample_cloud, target, neighbors, out);
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kExitFormat;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const FitError& e) {
    err << "error: " << e.what() << '\n';
    return kExitFit;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return kExitFit;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

} // namespace logitbayes
