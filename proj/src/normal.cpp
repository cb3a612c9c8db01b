// SPDX-License-Identifier: Apache-2.0
#include "logitbayes/normal.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace logitbayes {
namespace {

constexpr int kNodesPerUnit = 64;
constexpr int kIntervals = static_cast<int>(2 * kNormalTailCutoff) * kNodesPerUnit;

// Per-interval quintic coefficients in the local coordinate t in [0, 1).
struct Segment
{
  double c0, c1, c2, c3, c4, c5;
};

using Table = std::array<Segment, kIntervals>;

Table build_table()
{
  Table table{};
  const double step = 1.0 / kNodesPerUnit;
  auto node = [&](int k) { return -kNormalTailCutoff + k * step; };
  for (int k = 0; k < kIntervals; ++k) {
    const double z0 = node(k);
    const double z1 = node(k + 1);
    const double p0 = normal_cdf_exact(z0);
    const double p1 = normal_cdf_exact(z1);
    // derivatives scaled to the unit interval
    const double m0 = normal_pdf(z0) * step;
    const double m1 = normal_pdf(z1) * step;
    const double a0 = -z0 * normal_pdf(z0) * step * step;
    const double a1 = -z1 * normal_pdf(z1) * step * step;
    const double dp = p1 - p0;
    table[k] = Segment{p0,
                       m0,
                       0.5 * a0,
                       10.0 * dp - 6.0 * m0 - 4.0 * m1 - 1.5 * a0 + 0.5 * a1,
                       -15.0 * dp + 8.0 * m0 + 7.0 * m1 + 1.5 * a0 - a1,
                       6.0 * dp - 3.0 * m0 - 3.0 * m1 - 0.5 * a0 + 0.5 * a1};
  }
  return table;
}

const Table& table()
{
  static const Table t = build_table();
  return t;
}

} // namespace

double normal_pdf(double z) noexcept
{
  constexpr double inv_sqrt_2pi = std::numbers::inv_sqrtpi / std::numbers::sqrt2;
  return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

double normal_cdf_exact(double z) noexcept
{
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double normal_cdf(double z) noexcept
{
  if (!(z > -kNormalTailCutoff))
    return std::isnan(z) ? z : 0.0;
  if (z >= kNormalTailCutoff)
    return 1.0;
  const double x = (z + kNormalTailCutoff) * kNodesPerUnit;
  int k = static_cast<int>(x);
  if (k >= kIntervals)
    k = kIntervals - 1;
  const double t = x - k;
  const Segment& s = table()[static_cast<std::size_t>(k)];
  return s.c0 + t * (s.c1 + t * (s.c2 + t * (s.c3 + t * (s.c4 + t * s.c5))));
}

} // namespace logitbayes
