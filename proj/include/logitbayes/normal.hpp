// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace logitbayes {

/// Beyond this many standard deviations the normal CDF is treated as exactly 0 or 1.
/// Phi(-9) is about 1.1e-19, below the resolution of any CDF sum of unit terms.
inline constexpr double kNormalTailCutoff = 9.0;

/// Standard normal density.
double normal_pdf(double z) noexcept;

/// Standard normal CDF.
///
/// Evaluated by quintic Hermite interpolation of a table built from std::erfc
/// (nodes every 1/64 on [-9, 9]); absolute error stays below 2e-15. Returns
/// exactly 0 for z <= -9 and exactly 1 for z >= 9. This is the hot path of
/// every likelihood evaluation, so it avoids calling erfc per point.
double normal_cdf(double z) noexcept;

/// Reference CDF via std::erfc, without tail truncation.
double normal_cdf_exact(double z) noexcept;

} // namespace logitbayes
