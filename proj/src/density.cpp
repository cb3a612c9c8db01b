// SPDX-License-Identifier: Apache-2.0
#include "logitbayes/density.hpp"

#include "logitbayes/error.hpp"
#include "logitbayes/normal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace logitbayes {
namespace {

void require_finite_query(double d)
{
  if (!std::isfinite(d))
    throw ParameterError("CDF query point must be finite");
}

} // namespace

KdeModel::KdeModel(std::vector<double> observations, double bandwidth)
    : observations_(std::move(observations)), bandwidth_(bandwidth)
{
  if (observations_.empty())
    throw FitError("cannot fit a KDE on an empty sample");
  if (!std::isfinite(bandwidth_) || bandwidth_ <= 0.0)
    throw ParameterError("KDE bandwidth must be finite and positive, got " + std::to_string(bandwidth_));
  for (double v : observations_)
    if (!std::isfinite(v))
      throw ParameterError("KDE observations must be finite");
  sorted_ = observations_;
  std::sort(sorted_.begin(), sorted_.end());
}

std::pair<double, double> KdeModel::support() const noexcept
{
  const double reach = kNormalTailCutoff * bandwidth_;
  return {sorted_.front() - reach, sorted_.back() + reach};
}

double KdeModel::cdf(double d) const
{
  require_finite_query(d);
  // Observations at or below d - 9h contribute exactly 1, those at or above
  // d + 9h exactly 0; only the window in between needs the kernel.
  const double reach = kNormalTailCutoff * bandwidth_;
  const auto lo = std::upper_bound(sorted_.begin(), sorted_.end(), d - reach);
  const auto hi = std::lower_bound(lo, sorted_.end(), d + reach);
  double sum = static_cast<double>(lo - sorted_.begin());
  const double inv_h = 1.0 / bandwidth_;
  for (auto it = lo; it != hi; ++it)
    sum += normal_cdf((d - *it) * inv_h);
  return std::min(1.0, sum / static_cast<double>(sorted_.size()));
}

double KdeModel::pdf(double d) const
{
  require_finite_query(d);
  double sum = 0.0;
  for (double x : sorted_)
    sum += normal_pdf((d - x) / bandwidth_);
  return sum / (static_cast<double>(sorted_.size()) * bandwidth_);
}

NhModel::NhModel(std::vector<double> edges, std::vector<double> masses)
    : edges_(std::move(edges)), masses_(std::move(masses))
{
  if (masses_.empty())
    throw FormatError("histogram needs at least one bin");
  if (edges_.size() != masses_.size() + 1)
    throw FormatError("histogram needs exactly nbins + 1 edges");
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    if (!std::isfinite(edges_[i]))
      throw FormatError("histogram edges must be finite");
    if (i > 0 && !(edges_[i] > edges_[i - 1]))
      throw FormatError("histogram edges must be strictly increasing");
  }
  for (double m : masses_)
    if (!std::isfinite(m) || m < 0.0)
      throw FormatError("histogram masses must be finite and non-negative");
  cumulative_.resize(masses_.size());
  std::partial_sum(masses_.begin(), masses_.end(), cumulative_.begin());
  if (std::abs(cumulative_.back() - 1.0) > 1e-12)
    throw FormatError("histogram masses must sum to 1");
}

double NhModel::cdf(double d) const
{
  require_finite_query(d);
  if (d < edges_.front())
    return 0.0;
  if (d >= edges_.back())
    return 1.0;
  // bin k covers [edges[k], edges[k+1])
  const auto it = std::upper_bound(edges_.begin(), edges_.end(), d);
  const auto k = static_cast<std::size_t>(it - edges_.begin()) - 1;
  const double below = k == 0 ? 0.0 : cumulative_[k - 1];
  const double fraction = (d - edges_[k]) / (edges_[k + 1] - edges_[k]);
  return std::min(1.0, below + masses_[k] * fraction);
}

KdeModel fit_kde(std::span<const double> values, double bandwidth)
{
  return KdeModel(std::vector<double>(values.begin(), values.end()), bandwidth);
}

NhModel fit_histogram(std::span<const double> values, int nbins)
{
  if (values.empty())
    throw FitError("cannot fit a histogram on an empty sample");
  if (nbins < 1)
    throw ParameterError("histogram needs nbins >= 1, got " + std::to_string(nbins));
  for (double v : values)
    if (!std::isfinite(v))
      throw ParameterError("histogram values must be finite");

  const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *min_it;
  const double hi = *max_it;
  if (lo == hi) {
    const double width = std::max(1e-9, std::abs(lo) * 1e-9);
    return NhModel({lo - 0.5 * width, lo + 0.5 * width}, {1.0});
  }

  const auto bins = static_cast<std::size_t>(nbins);
  const double width = (hi - lo) / static_cast<double>(nbins);
  std::vector<double> edges(bins + 1);
  for (std::size_t k = 0; k < bins; ++k)
    edges[k] = lo + static_cast<double>(k) * width;
  edges[bins] = hi;
  for (std::size_t k = 0; k < bins; ++k)
    if (!(edges[k + 1] > edges[k]))
      throw FitError("value range too narrow for " + std::to_string(nbins) + " histogram bins");

  std::vector<std::size_t> counts(bins, 0);
  for (double v : values) {
    // last bin is closed on the right
    auto k = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
    k = std::clamp<std::size_t>(k, 1, bins) - 1;
    ++counts[k];
  }
  std::vector<double> masses(bins);
  const auto total = static_cast<double>(values.size());
  for (std::size_t k = 0; k < bins; ++k)
    masses[k] = static_cast<double>(counts[k]) / total;
  return NhModel(std::move(edges), std::move(masses));
}

} // namespace logitbayes
