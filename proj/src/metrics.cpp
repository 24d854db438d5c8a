#include "cascadecl/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "cascadecl/error.hpp"

namespace cascadecl {

Confusion confusion(std::span<const std::size_t> predictions, std::span<const std::size_t> labels) {
  if (predictions.empty() || predictions.size() != labels.size()) {
    throw Error(ErrorCode::EmptyInput, "need equal-length, non-empty predictions and labels (" +
                                           std::to_string(predictions.size()) + " vs " +
                                           std::to_string(labels.size()) + ")");
  }
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool p = predictions[i] == 1;
    const bool y = labels[i] == 1;
    if (p && y) ++c.tp;
    else if (p && !y) ++c.fp;
    else if (!p && y) ++c.fn;
    else ++c.tn;
  }
  return c;
}

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

}  // namespace

Metrics metrics_from_confusion(const Confusion& c) {
  // class 1: positives are tp; class 0: its "true positives" are tn
  const double p1 = ratio(c.tp, c.tp + c.fp);
  const double r1 = ratio(c.tp, c.tp + c.fn);
  const double p0 = ratio(c.tn, c.tn + c.fn);
  const double r0 = ratio(c.tn, c.tn + c.fp);
  Metrics m;
  m.accuracy = ratio(c.tp + c.tn, c.total());
  m.precision = 0.5 * (p0 + p1);
  m.recall = 0.5 * (r0 + r1);
  m.f1 = 0.5 * (harmonic(p0, r0) + harmonic(p1, r1));
  return m;
}

Metrics compute_metrics(std::span<const std::size_t> predictions, std::span<const std::size_t> labels) {
  return metrics_from_confusion(confusion(predictions, labels));
}

Split stratified_split(std::span<const std::size_t> labels, double frac, std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (n < 4) throw Error(ErrorCode::TooSmall, "split needs at least 4 items, got " + std::to_string(n));
  if (!(frac > 0.0 && frac < 1.0)) throw Error(ErrorCode::InvalidConfig, "split fraction must be in (0,1)");

  std::mt19937_64 rng(seed);
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < n; ++i) by_class[labels[i] == 1 ? 1 : 0].push_back(i);
  for (auto& members : by_class) std::shuffle(members.begin(), members.end(), rng);

  const auto n_train = static_cast<std::size_t>(std::ceil(frac * static_cast<double>(n)));
  std::array<std::size_t, 2> quota{};
  std::array<double, 2> remainder{};
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < 2; ++c) {
    const double exact = frac * static_cast<double>(by_class[c].size());
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    remainder[c] = exact - static_cast<double>(quota[c]);
    assigned += quota[c];
  }
  while (assigned < n_train) {
    std::size_t pick;
    if (remainder[0] == remainder[1]) {
      pick = std::uniform_int_distribution<std::size_t>(0, 1)(rng);
    } else {
      pick = remainder[0] > remainder[1] ? 0 : 1;
    }
    if (quota[pick] >= by_class[pick].size()) pick = 1 - pick;
    ++quota[pick];
    remainder[pick] = -1.0;
    ++assigned;
  }

  Split s;
  for (std::size_t c = 0; c < 2; ++c) {
    s.train.insert(s.train.end(), by_class[c].begin(), by_class[c].begin() + static_cast<std::ptrdiff_t>(quota[c]));
    s.test.insert(s.test.end(), by_class[c].begin() + static_cast<std::ptrdiff_t>(quota[c]), by_class[c].end());
  }
  std::shuffle(s.train.begin(), s.train.end(), rng);
  std::shuffle(s.test.begin(), s.test.end(), rng);
  return s;
}

}  // namespace cascadecl
