// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "logitbayes/inference.hpp"
#include "logitbayes/metrics.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace logitbayes {

/// Tuned quantities: per-class bandwidths, per-class bin counts (MAP only) and lambda.
struct HyperParams
{
  std::vector<double> bandwidths;
  std::vector<int> nbins;
  double lambda = 1e-7;

  bool operator==(const HyperParams&) const = default;
};

struct RealBounds
{
  double lower;
  double upper;
};

struct IntBounds
{
  int lower;
  int upper;
};

struct SearchBounds
{
  RealBounds bandwidth{0.01, 5.0};
  RealBounds lambda{1e-9, 1e-5};
  IntBounds nbins{2, 64};

  /// Throws ParameterError when lower > upper, bandwidth <= 0 or lambda <= 0.
  void validate() const;
  bool contains(const HyperParams& params) const;
};

struct GaConfig
{
  int population_size = 200;
  double crossover_fraction = 0.8;
  int max_generations = 0; ///< 0 means 100 x number of variables
  int elite_count = 2;
  double mutation_scale = 0.1; ///< Gaussian sd as a fraction of each gene's bound range
  int stall_generations = 0;   ///< 0 disables early stopping
  double stall_tolerance = 1e-9;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Number of tuned variables: nc bandwidths, nc bin counts for MAP, and lambda.
std::size_t variable_count(std::size_t classes, Mode mode) noexcept;
int default_max_generations(std::size_t variables) noexcept;

struct GenerationSnapshot
{
  int generation; ///< 0 is the initial population
  std::span<const HyperParams> population;
  std::span<const double> fitness;
  double best_fitness;
};

using GenerationObserver = std::function<void(const GenerationSnapshot&)>;

struct TuneResult
{
  HyperParams params;
  EvalReport report;           ///< validation report at `params`
  std::vector<double> history; ///< best fitness after each generation, initial population first
};

/// Fits on `train` with `params`, decides on `val` and returns the evaluation cost.
/// Parameter sets that cannot be fitted score +infinity.
double fitness(const HyperParams& params,
               std::span<const LogitSample> train,
               std::span<const LogitSample> val,
               Mode mode,
               FitCondition condition = FitCondition::ground_truth);

/// Genetic-algorithm search minimizing fitness(). Deterministic for a given config.seed.
TuneResult tune(std::span<const LogitSample> train,
                std::span<const LogitSample> val,
                Mode mode,
                const SearchBounds& bounds,
                const GaConfig& config,
                FitCondition condition = FitCondition::ground_truth,
                const GenerationObserver& observer = {});

ScorerParams to_scorer_params(const HyperParams& params, Mode mode, FitCondition condition);

/// Decisions of a fitted rule on labeled samples, returned as an evaluation report.
EvalReport evaluate_rule(Rule rule, const BayesScorer* scorer, std::span<const LogitSample> samples);

} // namespace logitbayes
