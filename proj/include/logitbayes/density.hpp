// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <utility>
#include <vector>

namespace logitbayes {

/// Gaussian kernel density estimate over one-dimensional logit values.
///
/// The model keeps the observations verbatim; cdf() evaluates the exact
/// mixture CDF (1/n) * sum_i Phi((d - x_i) / h) rather than integrating the
/// density numerically. Immutable after construction.
class KdeModel
{
public:
  /// Throws FitError on empty input, ParameterError on non-finite values or h <= 0.
  KdeModel(std::vector<double> observations, double bandwidth);

  double cdf(double d) const;
  double pdf(double d) const;

  const std::vector<double>& observations() const noexcept { return observations_; }
  double bandwidth() const noexcept { return bandwidth_; }
  std::size_t size() const noexcept { return observations_.size(); }

  /// Interval outside of which cdf() is exactly 0 (below) or exactly 1 (above).
  std::pair<double, double> support() const noexcept;

private:
  std::vector<double> observations_;
  std::vector<double> sorted_;
  double bandwidth_;
};

/// Equal-width normalized histogram with a piecewise-linear CDF.
class NhModel
{
public:
  /// Builds a model from explicit bin edges and masses (used when loading).
  /// Throws FormatError when the invariants do not hold.
  NhModel(std::vector<double> edges, std::vector<double> masses);

  double cdf(double d) const;

  const std::vector<double>& edges() const noexcept { return edges_; }
  const std::vector<double>& masses() const noexcept { return masses_; }
  const std::vector<double>& cumulative() const noexcept { return cumulative_; }
  std::size_t bins() const noexcept { return masses_.size(); }

private:
  std::vector<double> edges_;
  std::vector<double> masses_;
  std::vector<double> cumulative_;
};

KdeModel fit_kde(std::span<const double> values, double bandwidth);

/// Histogram over [min(values), max(values)] with `nbins` equal-width bins.
/// When every value is equal a single bin of width max(1e-9, |v| * 1e-9)
/// centered on the value is produced regardless of `nbins`.
NhModel fit_histogram(std::span<const double> values, int nbins);

inline double kde_cdf(const KdeModel& model, double d) { return model.cdf(d); }
inline double nh_cdf(const NhModel& model, double d) { return model.cdf(d); }

} // namespace logitbayes
