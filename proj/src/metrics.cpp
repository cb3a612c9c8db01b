// SPDX-License-Identifier: Apache-2.0
#include "logitbayes/metrics.hpp"

#include "logitbayes/error.hpp"

#include <numeric>
#include <string>

namespace logitbayes {

std::size_t ConfusionMatrix::total() const noexcept
{
  return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
}

ConfusionMatrix confusion_matrix(std::span<const std::size_t> predictions,
                                 std::span<const std::size_t> labels,
                                 std::size_t classes)
{
  if (predictions.size() != labels.size())
    throw ParameterError("predictions and labels differ in length (" + std::to_string(predictions.size()) + " vs " +
                         std::to_string(labels.size()) + ")");
  if (classes == 0)
    throw ParameterError("need at least one class");
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes || predictions[i] >= classes)
      throw ParameterError("class index out of range at sample " + std::to_string(i));
    ++cm(labels[i], predictions[i]);
  }
  return cm;
}

EvalReport evaluate(const ConfusionMatrix& confusion)
{
  const std::size_t nc = confusion.classes();
  if (nc == 0)
    throw ParameterError("need at least one class");
  const std::size_t total = confusion.total();

  EvalReport r;
  r.confusion = confusion;
  r.fpr_per_class.resize(nc);
  r.f1_per_class.resize(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    std::size_t tp = confusion(c, c);
    std::size_t actual = 0;
    std::size_t predicted = 0;
    for (std::size_t k = 0; k < nc; ++k) {
      actual += confusion(c, k);
      predicted += confusion(k, c);
    }
    const std::size_t fp = predicted - tp;
    const std::size_t fn = actual - tp;
    const std::size_t tn = total - tp - fp - fn;

    r.fpr_per_class[c] = fp + tn == 0 ? 0.0 : static_cast<double>(fp) / static_cast<double>(fp + tn);
    if (tp == 0) {
      r.f1_per_class[c] = 0.0;
    } else {
      const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
      const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
      r.f1_per_class[c] = 2.0 * precision * recall / (precision + recall);
    }
  }
  const double n = static_cast<double>(nc);
  r.fpr_macro = std::accumulate(r.fpr_per_class.begin(), r.fpr_per_class.end(), 0.0) / n;
  r.f1_macro = std::accumulate(r.f1_per_class.begin(), r.f1_per_class.end(), 0.0) / n;
  r.cost = (1.0 - r.f1_macro) + r.fpr_macro;
  return r;
}

EvalReport evaluate(std::span<const std::size_t> predictions, std::span<const std::size_t> labels, std::size_t classes)
{
  return evaluate(confusion_matrix(predictions, labels, classes));
}

} // namespace logitbayes
