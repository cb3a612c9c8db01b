// SPDX-License-Identifier: Apache-2.0
#include "logitbayes/inference.hpp"

#include "logitbayes/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace logitbayes {
namespace {

void require_finite(std::span<const double> values)
{
  for (double v : values)
    if (!std::isfinite(v))
      throw ParameterError("logit values must be finite");
}

} // namespace

std::string_view to_string(Mode mode) noexcept
{
  return mode == Mode::ml ? "ml" : "map";
}

std::string_view to_string(Rule rule) noexcept
{
  switch (rule) {
  case Rule::softmax: return "softmax";
  case Rule::ml: return "ml";
  case Rule::map: return "map";
  }
  return "?";
}

std::string_view to_string(FitCondition condition) noexcept
{
  return condition == FitCondition::ground_truth ? "truth" : "prediction";
}

Mode parse_mode(std::string_view text)
{
  if (text == "ml")
    return Mode::ml;
  if (text == "map")
    return Mode::map;
  throw ParameterError("unknown mode '" + std::string(text) + "' (expected ml or map)");
}

Rule parse_rule(std::string_view text)
{
  if (text == "softmax" || text == "sm")
    return Rule::softmax;
  if (text == "ml")
    return Rule::ml;
  if (text == "map")
    return Rule::map;
  throw ParameterError("unknown rule '" + std::string(text) + "' (expected softmax, ml or map)");
}

FitCondition parse_fit_condition(std::string_view text)
{
  if (text == "truth")
    return FitCondition::ground_truth;
  if (text == "prediction")
    return FitCondition::prediction;
  throw ParameterError("unknown fit condition '" + std::string(text) + "' (expected truth or prediction)");
}

BayesScorer::BayesScorer(Mode mode, double lambda, std::vector<KdeModel> likelihoods, std::vector<NhModel> priors)
    : mode_(mode), lambda_(lambda), likelihoods_(std::move(likelihoods)), priors_(std::move(priors))
{
  if (likelihoods_.empty())
    throw ParameterError("scorer needs at least one class");
  // Kernel CDFs are exactly zero below their support, so lambda must be positive.
  if (!std::isfinite(lambda_) || lambda_ <= 0.0)
    throw ParameterError("lambda must be finite and positive");
  if (mode_ == Mode::map && priors_.size() != likelihoods_.size())
    throw ParameterError("MAP scorer needs one prior per class");
  if (mode_ == Mode::ml && !priors_.empty())
    throw ParameterError("ML scorer takes no priors");
}

void BayesScorer::check_query(std::span<const double> logits) const
{
  if (logits.size() != classes())
    throw ParameterError("expected " + std::to_string(classes()) + " logits, got " + std::to_string(logits.size()));
  require_finite(logits);
}

std::vector<double> BayesScorer::likelihood_values(std::span<const double> logits) const
{
  check_query(logits);
  std::vector<double> out(classes());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = likelihoods_[i].cdf(logits[i]);
  return out;
}

std::vector<double> BayesScorer::prior_values(std::span<const double> logits) const
{
  if (mode_ != Mode::map)
    throw ParameterError("scorer was fitted without priors (ML mode)");
  check_query(logits);
  std::vector<double> out(classes());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = priors_[i].cdf(logits[i]);
  return out;
}

std::vector<double> BayesScorer::ml_score(std::span<const double> logits) const
{
  return normalize_smoothed(likelihood_values(logits), lambda_);
}

std::vector<double> BayesScorer::map_score(std::span<const double> logits) const
{
  const std::vector<double> priors = prior_values(logits);
  std::vector<double> terms = likelihood_values(logits);
  for (std::size_t i = 0; i < terms.size(); ++i)
    terms[i] *= priors[i];
  return normalize_smoothed(terms, lambda_);
}

std::vector<double> BayesScorer::score(std::span<const double> logits) const
{
  return mode_ == Mode::ml ? ml_score(logits) : map_score(logits);
}

std::vector<std::vector<double>> split_by_class(std::span<const LogitSample> train,
                                                std::size_t classes,
                                                FitCondition condition)
{
  std::vector<std::vector<double>> per_class(classes);
  for (const LogitSample& s : train) {
    if (s.logits.size() != classes)
      throw ParameterError("sample '" + s.id + "' has " + std::to_string(s.logits.size()) + " logits, expected " +
                           std::to_string(classes));
    require_finite(s.logits);
    std::size_t cls = 0;
    if (condition == FitCondition::ground_truth) {
      if (!s.label)
        throw FitError("training sample '" + s.id + "' has no label");
      if (*s.label < 0 || static_cast<std::size_t>(*s.label) >= classes)
        throw FitError("training sample '" + s.id + "' has out-of-range label " + std::to_string(*s.label));
      cls = static_cast<std::size_t>(*s.label);
    } else {
      cls = argmax(s.logits);
    }
    per_class[cls].push_back(s.logits[cls]);
  }
  for (std::size_t i = 0; i < classes; ++i)
    if (per_class[i].size() < 2)
      throw FitError("class " + std::to_string(i) + " has " + std::to_string(per_class[i].size()) +
                     " training samples, at least 2 required");
  return per_class;
}

BayesScorer fit_scorer(std::span<const LogitSample> train, const ScorerParams& params)
{
  const std::size_t nc = params.bandwidths.size();
  if (nc == 0)
    throw ParameterError("need one bandwidth per class");
  if (params.mode == Mode::map && params.nbins.size() != nc)
    throw ParameterError("need one bin count per class in MAP mode, got " + std::to_string(params.nbins.size()) +
                         " for " + std::to_string(nc) + " classes");

  const auto per_class = split_by_class(train, nc, params.condition);
  std::vector<KdeModel> likelihoods;
  std::vector<NhModel> priors;
  likelihoods.reserve(nc);
  for (std::size_t i = 0; i < nc; ++i) {
    likelihoods.push_back(fit_kde(per_class[i], params.bandwidths[i]));
    if (params.mode == Mode::map)
      priors.push_back(fit_histogram(per_class[i], params.nbins[i]));
  }
  return BayesScorer(params.mode, params.lambda, std::move(likelihoods), std::move(priors));
}

std::vector<double> softmax(std::span<const double> logits)
{
  if (logits.empty())
    throw ParameterError("softmax of an empty vector");
  require_finite(logits);
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (double& v : out)
    v /= total;
  return out;
}

std::vector<double> normalize_smoothed(std::span<const double> terms, double lambda)
{
  if (terms.empty())
    throw ParameterError("cannot normalize an empty vector");
  if (!std::isfinite(lambda) || lambda < 0.0)
    throw ParameterError("lambda must be finite and non-negative");
  const double n = static_cast<double>(terms.size());
  std::vector<double> out(terms.size());
  const bool all_equal = std::all_of(terms.begin(), terms.end(), [&](double t) { return t == terms[0]; });
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = terms[i] + lambda;
    total += out[i];
  }
  if (all_equal || total == 0.0) {
    std::fill(out.begin(), out.end(), 1.0 / n);
    return out;
  }
  for (double& v : out)
    v /= total;
  return out;
}

std::size_t argmax(std::span<const double> scores)
{
  if (scores.empty())
    throw ParameterError("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best])
      best = i;
  return best;
}

Decision predict_softmax(std::span<const double> logits)
{
  std::vector<double> s = softmax(logits);
  const std::size_t label = argmax(s);
  return {label, std::move(s)};
}

Decision predict(const BayesScorer& scorer, std::span<const double> logits)
{
  std::vector<double> s = scorer.score(logits);
  const std::size_t label = argmax(s);
  return {label, std::move(s)};
}

Decision predict(Rule rule, const BayesScorer* scorer, std::span<const double> logits)
{
  if (rule == Rule::softmax)
    return predict_softmax(logits);
  if (scorer == nullptr)
    throw ParameterError(std::string("rule '") + std::string(to_string(rule)) + "' needs a fitted model");
  std::vector<double> s = rule == Rule::ml ? scorer->ml_score(logits) : scorer->map_score(logits);
  const std::size_t label = argmax(s);
  return {label, std::move(s)};
}

} // namespace logitbayes
