#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "motionhmm/dataset.hpp"

namespace motionhmm {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
};

ConfusionCounts confusion(std::span<const std::uint8_t> truth,
                          std::span<const std::uint8_t> predicted);

// All four return 0 when their denominator is 0.
double accuracy(const ConfusionCounts& c);
double precision(const ConfusionCounts& c);
double recall(const ConfusionCounts& c);
double f1_score(const ConfusionCounts& c);

struct LabelMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

LabelMetrics metrics_from(const ConfusionCounts& c);

// Per-label metrics over N x L bit rows, plus their unweighted (macro) mean.
std::vector<LabelMetrics> per_label_metrics(const std::vector<LabelVector>& truth,
                                            const std::vector<LabelVector>& predicted);
LabelMetrics macro_average(const std::vector<LabelMetrics>& per_label);

// Fraction of rows predicted exactly (every label bit correct).
double total_accuracy(const std::vector<LabelVector>& truth,
                      const std::vector<LabelVector>& predicted);

// Iterative-stratification k-fold assignment: repeatedly takes the label
// with the fewest unassigned positives and deals its samples to the fold
// that most wants them (most remaining per-label demand, then most remaining
// capacity, then lowest fold index). Label-free samples fill remaining
// capacity. Returns a fold index per sample.
std::vector<std::size_t> stratified_kfold(const std::vector<LabelVector>& labels,
                                          std::size_t k, std::uint64_t seed);

// --- deterministic grid search ---

struct GridAxis {
  std::string name;
  std::vector<std::string> values;
};

using GridPoint = std::map<std::string, std::string>;

struct GridResult {
  std::size_t index = 0;  // position in the Cartesian enumeration
  GridPoint params;
  double score = 0.0;     // NaN when the evaluation failed
};

// Evaluates scorer on the full Cartesian product of the axes (last axis
// fastest). Failures become NaN rows instead of aborting the sweep. Results
// come back sorted by score descending, NaN last, ties by enumeration
// index. Evaluations may run in parallel; the outcome never depends on the
// thread count.
std::vector<GridResult> grid_search(std::span<const GridAxis> axes,
                                    const std::function<double(const GridPoint&)>& scorer,
                                    unsigned threads = 0);

std::string grid_results_csv(std::span<const GridResult> results);

}  // namespace motionhmm
