// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "logitbayes/density.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace logitbayes {

/// Bayesian decision rule: maximum likelihood or maximum a-posteriori.
enum class Mode
{
  ml,
  map
};

/// Any of the three decision rules that can be compared on the same logits.
enum class Rule
{
  softmax,
  ml,
  map
};

/// Which samples feed the density of class i during fitting.
enum class FitCondition
{
  ground_truth, ///< samples whose label is i
  prediction    ///< samples the network itself classified as i (argmax of logits)
};

std::string_view to_string(Mode mode) noexcept;
std::string_view to_string(Rule rule) noexcept;
std::string_view to_string(FitCondition condition) noexcept;
Mode parse_mode(std::string_view text);
Rule parse_rule(std::string_view text);
FitCondition parse_fit_condition(std::string_view text);

/// One classified object: its logit vector and optional ground-truth class.
struct LogitSample
{
  std::string id;
  std::vector<double> logits;
  std::optional<int> label;
};

struct ScorerParams
{
  std::vector<double> bandwidths; ///< one per class
  std::vector<int> nbins;         ///< one per class, MAP only
  double lambda = 1e-7;
  Mode mode = Mode::ml;
  FitCondition condition = FitCondition::ground_truth;
};

/// Fitted ML/MAP rule. Class i's likelihood (and prior) is evaluated at the
/// i-th component of the query logits; the normalized, lambda-smoothed
/// per-class terms form the score vector.
class BayesScorer
{
public:
  /// Throws ParameterError when the model counts do not match the mode or lambda <= 0.
  BayesScorer(Mode mode, double lambda, std::vector<KdeModel> likelihoods, std::vector<NhModel> priors = {});

  Mode mode() const noexcept { return mode_; }
  double lambda() const noexcept { return lambda_; }
  std::size_t classes() const noexcept { return likelihoods_.size(); }
  const std::vector<KdeModel>& likelihoods() const noexcept { return likelihoods_; }
  const std::vector<NhModel>& priors() const noexcept { return priors_; }

  /// Per-class likelihood CDF values L_i at the query.
  std::vector<double> likelihood_values(std::span<const double> logits) const;
  /// Per-class prior CDF values P_i at the query. MAP scorers only.
  std::vector<double> prior_values(std::span<const double> logits) const;

  std::vector<double> ml_score(std::span<const double> logits) const;
  /// Throws ParameterError when the scorer was fitted for ML only.
  std::vector<double> map_score(std::span<const double> logits) const;
  /// Score vector according to the scorer's own mode.
  std::vector<double> score(std::span<const double> logits) const;

private:
  void check_query(std::span<const double> logits) const;

  Mode mode_;
  double lambda_;
  std::vector<KdeModel> likelihoods_;
  std::vector<NhModel> priors_;
};

/// Component i of every training sample assigned to class i under `condition`.
/// Throws FitError when a class ends up with fewer than two values.
std::vector<std::vector<double>> split_by_class(std::span<const LogitSample> train,
                                                std::size_t classes,
                                                FitCondition condition);

BayesScorer fit_scorer(std::span<const LogitSample> train, const ScorerParams& params);

/// Exp-normalization with max subtraction.
std::vector<double> softmax(std::span<const double> logits);

/// (t_i + lambda) / sum_j (t_j + lambda). Equal terms, including an all-zero
/// sum, yield exactly 1/n.
std::vector<double> normalize_smoothed(std::span<const double> terms, double lambda);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> scores);

struct Decision
{
  std::size_t label;
  std::vector<double> scores;
};

Decision predict_softmax(std::span<const double> logits);
Decision predict(const BayesScorer& scorer, std::span<const double> logits);
/// Dispatch on `rule`; ml and map need a scorer of the matching mode.
Decision predict(Rule rule, const BayesScorer* scorer, std::span<const double> logits);

} // namespace logitbayes
