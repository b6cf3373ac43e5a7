#include <cmath>

#include "rsica/error.hpp"
#include "rsica/metrics.hpp"

namespace rsica {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

}  // namespace

BinaryScores binary_metrics(std::span<const BinaryOutcome> outcomes) {
  if (outcomes.empty()) throw InvalidArgument("binary_metrics: no outcomes");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (const BinaryOutcome& o : outcomes) {
    // An unparseable prediction is the wrong answer.
    const bool predicted = o.predicted.value_or(!o.truth);
    if (predicted && o.truth) ++tp;
    else if (predicted && !o.truth) ++fp;
    else if (!predicted && o.truth) ++fn;
    else ++tn;
  }
  BinaryScores s;
  s.accuracy = ratio(tp + tn, outcomes.size());
  s.precision = ratio(tp, tp + fp);
  s.recall = ratio(tp, tp + fn);
  s.f1 = harmonic(s.precision, s.recall);
  return s;
}

CountScores count_metrics(std::span<const std::pair<int, int>> pairs) {
  if (pairs.empty()) throw InvalidArgument("count_metrics: no pairs");
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  for (const auto& [predicted, truth] : pairs) {
    const double d = static_cast<double>(predicted) - static_cast<double>(truth);
    abs_sum += std::abs(d);
    sq_sum += d * d;
  }
  const double n = static_cast<double>(pairs.size());
  return {abs_sum / n, std::sqrt(sq_sum / n)};
}

LocalizationScores localization_metrics(
    std::span<const std::pair<CellSet, CellSet>> pairs) {
  if (pairs.empty()) throw InvalidArgument("localization_metrics: no pairs");
  std::size_t hits = 0, predicted = 0, actual = 0, exact = 0;
  double jaccard_sum = 0.0;
  for (const auto& [pred, truth] : pairs) {
    const std::size_t inter = (pred & truth).size();
    const std::size_t uni = (pred | truth).size();
    hits += inter;
    predicted += pred.size();
    actual += truth.size();
    jaccard_sum += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    if (pred == truth) ++exact;
  }
  LocalizationScores s;
  if (predicted == 0 && actual == 0) {
    s.precision = s.recall = s.f1 = 1.0;
  } else {
    s.precision = ratio(hits, predicted);
    s.recall = ratio(hits, actual);
    s.f1 = harmonic(s.precision, s.recall);
  }
  s.jaccard = jaccard_sum / static_cast<double>(pairs.size());
  s.subset_accuracy = ratio(exact, pairs.size());
  return s;
}

}  // namespace rsica
