// SPDX-License-Identifier: Apache-2.0
#include "logitbayes/tuner.hpp"

#include "logitbayes/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>

namespace logitbayes {
namespace {

constexpr double kInfeasible = std::numeric_limits<double>::infinity();

// Gene layout: [h_0 .. h_{nc-1}, nbins_0 .. nbins_{nc-1} (MAP only), lambda].
// Bin-count genes always hold integral values.
struct GeneSpace
{
  std::size_t classes;
  Mode mode;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<bool> integral;

  GeneSpace(std::size_t nc, Mode m, const SearchBounds& b) : classes(nc), mode(m)
  {
    auto add = [&](double lo, double hi, bool is_int) {
      lower.push_back(lo);
      upper.push_back(hi);
      integral.push_back(is_int);
    };
    for (std::size_t i = 0; i < nc; ++i)
      add(b.bandwidth.lower, b.bandwidth.upper, false);
    if (mode == Mode::map)
      for (std::size_t i = 0; i < nc; ++i)
        add(b.nbins.lower, b.nbins.upper, true);
    add(b.lambda.lower, b.lambda.upper, false);
  }

  std::size_t size() const { return lower.size(); }

  double repair(std::size_t g, double value) const
  {
    if (integral[g])
      value = std::round(value);
    return std::clamp(value, lower[g], upper[g]);
  }

  HyperParams decode(const std::vector<double>& genes) const
  {
    HyperParams p;
    p.bandwidths.assign(genes.begin(), genes.begin() + static_cast<std::ptrdiff_t>(classes));
    if (mode == Mode::map)
      for (std::size_t i = 0; i < classes; ++i)
        p.nbins.push_back(static_cast<int>(genes[classes + i]));
    p.lambda = genes.back();
    return p;
  }
};

std::mt19937_64 stream_for(std::uint64_t seed, int generation, std::size_t individual)
{
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(generation),
                    static_cast<std::uint32_t>(individual)};
  return std::mt19937_64(seq);
}

std::size_t class_count(std::span<const LogitSample> train, std::span<const LogitSample> val)
{
  if (train.empty() || val.empty())
    throw ParameterError("training and validation splits must be non-empty");
  const std::size_t nc = train.front().logits.size();
  if (nc == 0)
    throw ParameterError("samples carry no logits");
  for (const auto* split : {&train, &val})
    for (const LogitSample& s : *split) {
      if (s.logits.size() != nc)
        throw ParameterError("sample '" + s.id + "' has " + std::to_string(s.logits.size()) +
                             " logits, expected " + std::to_string(nc));
    }
  for (const LogitSample& s : val)
    if (!s.label)
      throw ParameterError("validation sample '" + s.id + "' has no label");
  return nc;
}

// Fitness of many parameter sets on fixed splits. Class i's likelihood and
// prior values on the validation set depend only on (h_i, nbins_i), and
// crossover copies genes unchanged, so these columns are cached per class.
class ColumnEvaluator
{
public:
  ColumnEvaluator(std::span<const LogitSample> train,
                  std::span<const LogitSample> val,
                  std::size_t classes,
                  Mode mode,
                  FitCondition condition)
    : val_(val), classes_(classes), mode_(mode), kde_(classes), nh_(classes)
  {
    for (const LogitSample& s : val) {
      for (double x : s.logits)
        if (!std::isfinite(x))
          throw ParameterError("validation sample '" + s.id + "' has a non-finite logit");
      if (*s.label < 0 || static_cast<std::size_t>(*s.label) >= classes)
        throw ParameterError("validation sample '" + s.id + "' has out-of-range label " + std::to_string(*s.label));
      labels_.push_back(static_cast<std::size_t>(*s.label));
    }
    try {
      per_class_ = split_by_class(train, classes, condition);
    } catch (const FitError&) {
      feasible_ = false;
    }
  }

  double operator()(const HyperParams& p)
  {
    if (!feasible_)
      return kInfeasible;
    std::vector<const std::vector<double>*> like(classes_), prior(classes_);
    for (std::size_t c = 0; c < classes_; ++c) {
      like[c] = likelihood_column(c, p.bandwidths[c]);
      if (mode_ == Mode::map)
        prior[c] = prior_column(c, p.nbins[c]);
      if (like[c] == nullptr || (mode_ == Mode::map && prior[c] == nullptr))
        return kInfeasible;
    }
    std::vector<std::size_t> predictions(val_.size());
    std::vector<double> terms(classes_);
    for (std::size_t j = 0; j < val_.size(); ++j) {
      for (std::size_t c = 0; c < classes_; ++c) {
        terms[c] = (*like[c])[j];
        if (mode_ == Mode::map)
          terms[c] *= (*prior[c])[j];
      }
      predictions[j] = argmax(normalize_smoothed(terms, p.lambda));
    }
    return evaluate(predictions, labels_, classes_).cost;
  }

  /// Drops cached columns whose gene value no longer occurs in `population`.
  void retain(std::span<const HyperParams> population)
  {
    for (std::size_t c = 0; c < classes_; ++c) {
      std::erase_if(kde_[c], [&](const auto& entry) {
        return std::none_of(population.begin(), population.end(),
                            [&](const HyperParams& p) { return p.bandwidths[c] == entry.first; });
      });
    }
  }

private:
  using Column = std::optional<std::vector<double>>;

  const std::vector<double>* likelihood_column(std::size_t c, double h)
  {
    auto it = kde_[c].find(h);
    if (it == kde_[c].end()) {
      Column col;
      try {
        const KdeModel model = fit_kde(per_class_[c], h);
        col.emplace(val_.size());
        for (std::size_t j = 0; j < val_.size(); ++j)
          (*col)[j] = model.cdf(val_[j].logits[c]);
      } catch (const Error&) {
        col.reset();
      }
      it = kde_[c].emplace(h, std::move(col)).first;
    }
    return it->second ? &*it->second : nullptr;
  }

  const std::vector<double>* prior_column(std::size_t c, int nbins)
  {
    auto it = nh_[c].find(nbins);
    if (it == nh_[c].end()) {
      Column col;
      try {
        const NhModel model = fit_histogram(per_class_[c], nbins);
        col.emplace(val_.size());
        for (std::size_t j = 0; j < val_.size(); ++j)
          (*col)[j] = model.cdf(val_[j].logits[c]);
      } catch (const Error&) {
        col.reset();
      }
      it = nh_[c].emplace(nbins, std::move(col)).first;
    }
    return it->second ? &*it->second : nullptr;
  }

  std::span<const LogitSample> val_;
  std::size_t classes_;
  Mode mode_;
  bool feasible_ = true;
  std::vector<std::size_t> labels_;
  std::vector<std::vector<double>> per_class_;
  std::vector<std::map<double, Column>> kde_;
  std::vector<std::map<int, Column>> nh_;
};

} // namespace

void SearchBounds::validate() const
{
  if (!(bandwidth.lower <= bandwidth.upper) || !(bandwidth.lower > 0.0))
    throw ParameterError("bandwidth bounds must satisfy 0 < lower <= upper");
  if (!(lambda.lower <= lambda.upper) || !(lambda.lower > 0.0))
    throw ParameterError("lambda bounds must satisfy 0 < lower <= upper");
  if (nbins.lower > nbins.upper || nbins.lower < 1)
    throw ParameterError("nbins bounds must satisfy 1 <= lower <= upper");
  if (!std::isfinite(bandwidth.upper) || !std::isfinite(lambda.upper))
    throw ParameterError("bounds must be finite");
}

bool SearchBounds::contains(const HyperParams& params) const
{
  auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
  for (double h : params.bandwidths)
    if (!in(h, bandwidth.lower, bandwidth.upper))
      return false;
  for (int b : params.nbins)
    if (b < nbins.lower || b > nbins.upper)
      return false;
  return in(params.lambda, lambda.lower, lambda.upper);
}

void GaConfig::validate() const
{
  if (population_size < 2)
    throw ParameterError("population size must be at least 2");
  if (!(crossover_fraction >= 0.0 && crossover_fraction <= 1.0))
    throw ParameterError("crossover fraction must lie in [0, 1]");
  if (max_generations < 0)
    throw ParameterError("max generations must be positive (0 selects the default)");
  if (elite_count < 1)
    throw ParameterError("elite count must be at least 1 so the incumbent survives");
  if (!(mutation_scale >= 0.0) || !std::isfinite(mutation_scale))
    throw ParameterError("mutation scale must be finite and non-negative");
  if (stall_generations < 0)
    throw ParameterError("stall window must be non-negative");
}

std::size_t variable_count(std::size_t classes, Mode mode) noexcept
{
  return (mode == Mode::map ? 2 * classes : classes) + 1;
}

int default_max_generations(std::size_t variables) noexcept
{
  return static_cast<int>(100 * variables);
}

ScorerParams to_scorer_params(const HyperParams& params, Mode mode, FitCondition condition)
{
  ScorerParams sp;
  sp.bandwidths = params.bandwidths;
  if (mode == Mode::map)
    sp.nbins = params.nbins;
  sp.lambda = params.lambda;
  sp.mode = mode;
  sp.condition = condition;
  return sp;
}

EvalReport evaluate_rule(Rule rule, const BayesScorer* scorer, std::span<const LogitSample> samples)
{
  if (samples.empty())
    throw ParameterError("no samples to evaluate");
  const std::size_t nc = samples.front().logits.size();
  std::vector<std::size_t> predictions;
  std::vector<std::size_t> labels;
  predictions.reserve(samples.size());
  labels.reserve(samples.size());
  for (const LogitSample& s : samples) {
    if (!s.label)
      throw ParameterError("sample '" + s.id + "' has no label");
    if (*s.label < 0)
      throw ParameterError("sample '" + s.id + "' has a negative label");
    predictions.push_back(predict(rule, scorer, s.logits).label);
    labels.push_back(static_cast<std::size_t>(*s.label));
  }
  return evaluate(predictions, labels, nc);
}

double fitness(const HyperParams& params,
               std::span<const LogitSample> train,
               std::span<const LogitSample> val,
               Mode mode,
               FitCondition condition)
{
  try {
    const BayesScorer scorer = fit_scorer(train, to_scorer_params(params, mode, condition));
    return evaluate_rule(mode == Mode::ml ? Rule::ml : Rule::map, &scorer, val).cost;
  } catch (const FitError&) {
    return kInfeasible;
  } catch (const ParameterError&) {
    return kInfeasible;
  }
}

TuneResult tune(std::span<const LogitSample> train,
                std::span<const LogitSample> val,
                Mode mode,
                const SearchBounds& bounds,
                const GaConfig& config,
                FitCondition condition,
                const GenerationObserver& observer)
{
  bounds.validate();
  config.validate();
  const std::size_t nc = class_count(train, val);
  const GeneSpace space(nc, mode, bounds);
  const std::size_t genes = space.size();
  const auto pop_size = static_cast<std::size_t>(config.population_size);
  const int generations =
      config.max_generations > 0 ? config.max_generations : default_max_generations(genes);
  const std::size_t elites = std::min(static_cast<std::size_t>(config.elite_count), pop_size);
  const std::size_t offspring = pop_size - elites;
  const auto crossovers = static_cast<std::size_t>(std::lround(config.crossover_fraction * static_cast<double>(offspring)));

  ColumnEvaluator columns(train, val, nc, mode, condition);
  std::map<std::vector<double>, double> cache;
  auto evaluate_genes = [&](const std::vector<double>& g) {
    if (auto it = cache.find(g); it != cache.end())
      return it->second;
    const double f = columns(space.decode(g));
    cache.emplace(g, f);
    return f;
  };

  std::vector<std::vector<double>> population(pop_size, std::vector<double>(genes));
  std::vector<double> scores(pop_size);
  for (std::size_t i = 0; i < pop_size; ++i) {
    auto rng = stream_for(config.seed, 0, i);
    for (std::size_t g = 0; g < genes; ++g) {
      if (space.integral[g]) {
        std::uniform_int_distribution<int> pick(static_cast<int>(space.lower[g]), static_cast<int>(space.upper[g]));
        population[i][g] = pick(rng);
      } else {
        std::uniform_real_distribution<double> pick(space.lower[g], space.upper[g]);
        population[i][g] = space.repair(g, pick(rng));
      }
    }
    scores[i] = evaluate_genes(population[i]);
  }

  std::vector<HyperParams> decoded(pop_size);
  auto report = [&](int generation, double best) {
    for (std::size_t i = 0; i < pop_size; ++i)
      decoded[i] = space.decode(population[i]);
    columns.retain(decoded);
    if (!observer)
      return;
    observer(GenerationSnapshot{generation, decoded, scores, best});
  };

  TuneResult result;
  result.history.push_back(*std::min_element(scores.begin(), scores.end()));
  report(0, result.history.back());

  std::vector<std::size_t> order(pop_size);
  int stalled = 0;
  for (int gen = 1; gen <= generations; ++gen) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    std::vector<std::vector<double>> next(pop_size);
    std::vector<double> next_scores(pop_size);
    for (std::size_t e = 0; e < elites; ++e) {
      next[e] = population[order[e]];
      next_scores[e] = scores[order[e]];
    }
    for (std::size_t i = elites; i < pop_size; ++i) {
      auto rng = stream_for(config.seed, gen, i);
      std::uniform_int_distribution<std::size_t> any(0, pop_size - 1);
      auto tournament = [&]() {
        const std::size_t a = any(rng);
        const std::size_t b = any(rng);
        return scores[b] < scores[a] ? b : a;
      };
      std::vector<double> child;
      if (i - elites < crossovers) {
        const auto& first = population[tournament()];
        const auto& second = population[tournament()];
        std::bernoulli_distribution coin(0.5);
        child.resize(genes);
        for (std::size_t g = 0; g < genes; ++g)
          child[g] = coin(rng) ? first[g] : second[g];
      } else {
        child = population[tournament()];
        for (std::size_t g = 0; g < genes; ++g) {
          const double sd = config.mutation_scale * (space.upper[g] - space.lower[g]);
          if (sd > 0.0) {
            std::normal_distribution<double> noise(0.0, sd);
            child[g] = space.repair(g, child[g] + noise(rng));
          }
        }
      }
      next_scores[i] = evaluate_genes(child);
      next[i] = std::move(child);
    }
    population = std::move(next);
    scores = std::move(next_scores);

    const double best = *std::min_element(scores.begin(), scores.end());
    const double previous = result.history.back();
    result.history.push_back(best);
    report(gen, best);

    if (config.stall_generations > 0) {
      stalled = previous - best > config.stall_tolerance ? 0 : stalled + 1;
      if (stalled >= config.stall_generations)
        break;
    }
  }

  const auto best = static_cast<std::size_t>(std::min_element(scores.begin(), scores.end()) - scores.begin());
  result.params = space.decode(population[best]);
  if (!std::isfinite(scores[best]))
    throw FitError("no feasible parameter set found; every candidate failed to fit");
  const BayesScorer scorer = fit_scorer(train, to_scorer_params(result.params, mode, condition));
  result.report = evaluate_rule(mode == Mode::ml ? Rule::ml : Rule::map, &scorer, val);
  return result;
}

} // namespace logitbayes
