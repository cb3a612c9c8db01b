// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace logitbayes {

/// Square count matrix; rows are ground truth, columns are predictions.
class ConfusionMatrix
{
public:
  explicit ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {}

  std::size_t classes() const noexcept { return classes_; }
  std::size_t operator()(std::size_t truth, std::size_t predicted) const { return counts_[truth * classes_ + predicted]; }
  std::size_t& operator()(std::size_t truth, std::size_t predicted) { return counts_[truth * classes_ + predicted]; }
  std::size_t total() const noexcept;

  bool operator==(const ConfusionMatrix&) const = default;

private:
  std::size_t classes_;
  std::vector<std::size_t> counts_;
};

/// Macro-averaged one-vs-rest evaluation of one set of decisions.
///
/// Rates are fractions in [0, 1]. cost = (1 - f1_macro) + fpr_macro, the
/// quantity minimized by the tuner. A class with FP + TN = 0 has FPR 0; a
/// class with TP = 0 has F1 0.
struct EvalReport
{
  ConfusionMatrix confusion{0};
  std::vector<double> fpr_per_class;
  std::vector<double> f1_per_class;
  double fpr_macro = 0.0;
  double f1_macro = 0.0;
  double cost = 0.0;
};

ConfusionMatrix confusion_matrix(std::span<const std::size_t> predictions,
                                 std::span<const std::size_t> labels,
                                 std::size_t classes);

EvalReport evaluate(const ConfusionMatrix& confusion);
EvalReport evaluate(std::span<const std::size_t> predictions, std::span<const std::size_t> labels, std::size_t classes);

} // namespace logitbayes
