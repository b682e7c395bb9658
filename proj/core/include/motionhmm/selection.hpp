#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "motionhmm/dataset.hpp"
#include "motionhmm/features.hpp"
#include "motionhmm/systems.hpp"

namespace motionhmm {

// Separation between the positive and negative log-likelihood populations
// of one class: sqrt(|mu_p - mu_n| + sigma_p^2 + sigma_n^2 -
// 2*sqrt(sigma_p^2 * sigma_n^2)).
double wasserstein_distance(double mean_pos, double std_pos, double mean_neg,
                            double std_neg);

// Median of the per-class separations divided by the feature dimensionality
// (even count: mean of the two central values).
double score_feature_set(std::vector<double> per_class_distances,
                         std::size_t dimension);

struct SelectionConfig {
  std::size_t folds = 3;
  ModelConfig model;
  // Preprocessing flags shared by every candidate subset.
  bool normalized = true;
  bool smoothed = false;
  std::size_t window = 4;
  bool scaled = true;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::size_t min_features = 1;  // stop once this many remain
};

// Cross-validated score of one feature subset: per fold, train one model
// per label on the positive training samples, pool the test-split
// log-likelihoods of positives and negatives across folds, and score the
// per-label separations. NaN when a class cannot be evaluated.
double evaluate_feature_set(const Dataset& dataset,
                            const std::vector<std::string>& features,
                            const SelectionConfig& config);

struct EliminationRound {
  std::size_t round = 0;                  // 1-based
  std::string dropped;                    // feature removed this round
  std::vector<std::string> features;      // remaining set after the removal
  double score = 0.0;                     // score of the remaining set
  std::size_t dimension = 0;              // dimensionality of the remaining set
};

// Backward elimination: each round drops the feature whose removal yields
// the highest-scoring remaining set (ties to the lexicographically first
// name; NaN candidates never win — if every candidate is NaN the run
// aborts). One trace row per round; run to exhaustion the trace holds
// (candidate count - min_features) rows.
std::vector<EliminationRound> backward_eliminate(const Dataset& dataset,
                                                 std::vector<std::string> candidates,
                                                 const SelectionConfig& config);

std::string elimination_trace_csv(const std::vector<EliminationRound>& trace);
std::string elimination_trace_text(const std::vector<EliminationRound>& trace);

}  // namespace motionhmm
