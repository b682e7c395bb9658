#include "motionhmm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "motionhmm/errors.hpp"
#include "motionhmm/parallel.hpp"
#include "motionhmm/rng.hpp"
#include "motionhmm/text.hpp"

namespace motionhmm {

ConfusionCounts confusion(std::span<const std::uint8_t> truth,
                          std::span<const std::uint8_t> predicted) {
  if (truth.size() != predicted.size())
    throw validation_error("truth and prediction differ in length");
  ConfusionCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i]) {
      ++(predicted[i] ? c.tp : c.fn);
    } else {
      ++(predicted[i] ? c.fp : c.tn);
    }
  }
  return c;
}

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double accuracy(const ConfusionCounts& c) {
  return ratio(c.tp + c.tn, c.tp + c.tn + c.fp + c.fn);
}

double precision(const ConfusionCounts& c) { return ratio(c.tp, c.tp + c.fp); }

double recall(const ConfusionCounts& c) { return ratio(c.tp, c.tp + c.fn); }

double f1_score(const ConfusionCounts& c) {
  // harmonic mean of precision and recall, 0 whenever either is undefined
  double p = precision(c), r = recall(c);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

LabelMetrics metrics_from(const ConfusionCounts& c) {
  return {accuracy(c), precision(c), recall(c), f1_score(c)};
}

std::vector<LabelMetrics> per_label_metrics(const std::vector<LabelVector>& truth,
                                            const std::vector<LabelVector>& predicted) {
  if (truth.size() != predicted.size())
    throw validation_error("truth and prediction differ in length");
  if (truth.empty()) throw validation_error("no samples to score");
  const std::size_t L = truth.front().size();
  std::vector<ConfusionCounts> counts(L);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i].size() != L || predicted[i].size() != L)
      throw validation_error("ragged label rows");
    for (std::size_t l = 0; l < L; ++l) {
      if (truth[i][l]) {
        ++(predicted[i][l] ? counts[l].tp : counts[l].fn);
      } else {
        ++(predicted[i][l] ? counts[l].fp : counts[l].tn);
      }
    }
  }
  std::vector<LabelMetrics> out(L);
  for (std::size_t l = 0; l < L; ++l) out[l] = metrics_from(counts[l]);
  return out;
}

LabelMetrics macro_average(const std::vector<LabelMetrics>& per_label) {
  if (per_label.empty()) throw validation_error("no per-label metrics to average");
  LabelMetrics m;
  for (const auto& lm : per_label) {
    m.accuracy += lm.accuracy;
    m.precision += lm.precision;
    m.recall += lm.recall;
    m.f1 += lm.f1;
  }
  const double L = static_cast<double>(per_label.size());
  m.accuracy /= L;
  m.precision /= L;
  m.recall /= L;
  m.f1 /= L;
  return m;
}

double total_accuracy(const std::vector<LabelVector>& truth,
                      const std::vector<LabelVector>& predicted) {
  if (truth.size() != predicted.size())
    throw validation_error("truth and prediction differ in length");
  if (truth.empty()) throw validation_error("no samples to score");
  std::size_t exact = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (truth[i] == predicted[i]) ++exact;
  return static_cast<double>(exact) / static_cast<double>(truth.size());
}

std::vector<std::size_t> stratified_kfold(const std::vector<LabelVector>& labels,
                                          std::size_t k, std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (k < 2) throw validation_error("need at least two folds");
  if (n < k) throw validation_error("fewer samples than folds");
  const std::size_t L = n == 0 ? 0 : labels.front().size();
  for (const auto& row : labels)
    if (row.size() != L) throw validation_error("ragged label matrix");

  // The seed fixes the order samples are offered for assignment; every
  // other decision is a deterministic argmax with documented tie-breaks.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  constexpr std::size_t kUnassigned = static_cast<std::size_t>(-1);
  std::vector<std::size_t> fold_of(n, kUnassigned);

  // fractional targets: each fold wants positives_l / k of label l and
  // n / k samples in total
  std::vector<std::vector<double>> want(L, std::vector<double>(k));
  for (std::size_t l = 0; l < L; ++l) {
    std::size_t positives = 0;
    for (const auto& row : labels) positives += row[l];
    std::fill(want[l].begin(), want[l].end(),
              static_cast<double>(positives) / static_cast<double>(k));
  }
  std::vector<double> capacity(k, static_cast<double>(n) / static_cast<double>(k));

  auto assign = [&](std::size_t sample, std::size_t fold) {
    fold_of[sample] = fold;
    capacity[fold] -= 1.0;
    for (std::size_t l = 0; l < L; ++l)
      if (labels[sample][l]) want[l][fold] -= 1.0;
  };

  while (true) {
    // label with the fewest still-unassigned positives; ties to the lowest
    std::size_t scarce = L;
    std::size_t scarce_count = 0;
    for (std::size_t l = 0; l < L; ++l) {
      std::size_t remaining = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (fold_of[i] == kUnassigned && labels[i][l]) ++remaining;
      if (remaining > 0 && (scarce == L || remaining < scarce_count)) {
        scarce = l;
        scarce_count = remaining;
      }
    }
    if (scarce == L) break;

    for (std::size_t idx : order) {
      if (fold_of[idx] != kUnassigned || !labels[idx][scarce]) continue;
      std::size_t best = 0;
      for (std::size_t f = 1; f < k; ++f) {
        if (want[scarce][f] > want[scarce][best] ||
            (want[scarce][f] == want[scarce][best] && capacity[f] > capacity[best]))
          best = f;
      }
      assign(idx, best);
    }
  }

  // samples with no labels at all just fill the remaining capacity
  for (std::size_t idx : order) {
    if (fold_of[idx] != kUnassigned) continue;
    std::size_t best = 0;
    for (std::size_t f = 1; f < k; ++f)
      if (capacity[f] > capacity[best]) best = f;
    assign(idx, best);
  }
  return fold_of;
}

std::vector<GridResult> grid_search(std::span<const GridAxis> axes,
                                    const std::function<double(const GridPoint&)>& scorer,
                                    unsigned threads) {
  if (axes.empty()) throw validation_error("grid search needs at least one axis");
  std::size_t total = 1;
  for (const auto& axis : axes) {
    if (axis.values.empty())
      throw validation_error("grid axis '" + axis.name + "' has no values");
    total *= axis.values.size();
  }

  // Cartesian enumeration with the last axis varying fastest.
  std::vector<GridResult> results(total);
  for (std::size_t index = 0; index < total; ++index) {
    GridPoint point;
    std::size_t rest = index;
    for (std::size_t a = axes.size(); a-- > 0;) {
      const auto& axis = axes[a];
      point[axis.name] = axis.values[rest % axis.values.size()];
      rest /= axis.values.size();
    }
    results[index].index = index;
    results[index].params = std::move(point);
  }

  parallel_for(total, threads, [&](std::size_t i) {
    try {
      results[i].score = scorer(results[i].params);
    } catch (...) {
      results[i].score = std::numeric_limits<double>::quiet_NaN();
    }
  });

  std::sort(results.begin(), results.end(), [](const GridResult& a, const GridResult& b) {
    bool a_nan = std::isnan(a.score), b_nan = std::isnan(b.score);
    if (a_nan != b_nan) return b_nan;
    if (!a_nan && a.score != b.score) return a.score > b.score;
    return a.index < b.index;
  });
  return results;
}

std::string grid_results_csv(std::span<const GridResult> results) {
  if (results.empty()) return "index,score\n";
  // union of parameter names, sorted, for a stable column layout
  std::vector<std::string> names;
  for (const auto& [name, value] : results.front().params) names.push_back(name);

  std::ostringstream out;
  out << "index,score";
  for (const auto& name : names) out << ',' << name;
  out << '\n';
  for (const auto& r : results) {
    out << r.index << ',' << (std::isnan(r.score) ? "NaN" : format_double(r.score));
    for (const auto& name : names) {
      auto it = r.params.find(name);
      out << ',' << (it == r.params.end() ? "" : it->second);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace motionhmm
