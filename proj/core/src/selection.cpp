#include "motionhmm/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "motionhmm/errors.hpp"
#include "motionhmm/evaluation.hpp"
#include "motionhmm/parallel.hpp"
#include "motionhmm/rng.hpp"
#include "motionhmm/text.hpp"

namespace motionhmm {

double wasserstein_distance(double mean_pos, double std_pos, double mean_neg,
                            double std_neg) {
  if (std_pos < 0.0 || std_neg < 0.0)
    throw validation_error("standard deviations must be non-negative");
  // |dmu| (not squared) under the root, as the separation measure is defined
  double var_pos = std_pos * std_pos, var_neg = std_neg * std_neg;
  double inside = std::abs(mean_pos - mean_neg) + var_pos + var_neg -
                  2.0 * std::sqrt(var_pos * var_neg);
  return std::sqrt(std::max(0.0, inside));
}

double score_feature_set(std::vector<double> per_class_distances,
                         std::size_t dimension) {
  if (per_class_distances.empty())
    throw validation_error("no class distances to score");
  if (dimension == 0) throw validation_error("dimension must be positive");
  std::sort(per_class_distances.begin(), per_class_distances.end());
  const std::size_t n = per_class_distances.size();
  double median = n % 2 == 1
                      ? per_class_distances[n / 2]
                      : 0.5 * (per_class_distances[n / 2 - 1] +
                               per_class_distances[n / 2]);
  return median / static_cast<double>(dimension);
}

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

FeatureSpec spec_for(const std::vector<std::string>& features,
                     const SelectionConfig& config) {
  FeatureSpec spec;
  spec.features = features;
  spec.normalized = config.normalized;
  spec.smoothed = config.smoothed;
  spec.window = config.window;
  spec.scaled = config.scaled;
  return spec;
}

std::size_t set_dimension(const Dataset& dataset,
                          const std::vector<std::string>& features) {
  std::size_t dim = 0;
  for (const auto& f : features)
    dim += feature_dimension(dataset.samples.front().record, f);
  return dim;
}

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
};

Moments pooled_moments(const std::vector<double>& values) {
  Moments m;
  for (double v : values) m.mean += v;
  m.mean /= static_cast<double>(values.size());
  double acc = 0.0;
  for (double v : values) acc += (v - m.mean) * (v - m.mean);
  m.stddev = std::sqrt(acc / static_cast<double>(values.size()));
  return m;
}

}  // namespace

double evaluate_feature_set(const Dataset& dataset,
                            const std::vector<std::string>& features,
                            const SelectionConfig& config) {
  if (dataset.samples.empty()) throw validation_error("empty dataset");
  if (features.empty()) throw validation_error("empty feature set");
  const std::size_t L = dataset.vocabulary.size();

  FeatureSpec spec = spec_for(features, config);
  std::vector<std::size_t> folds =
      stratified_kfold(dataset.labels, config.folds, config.seed);

  // Loglikelihoods each class model assigns to its own motions versus
  // everyone else's, pooled over the test splits of every fold.
  std::vector<std::vector<double>> positive(L), negative(L);

  try {
    for (std::size_t f = 0; f < config.folds; ++f) {
      std::vector<std::size_t> train, test;
      for (std::size_t i = 0; i < dataset.size(); ++i)
        (folds[i] == f ? test : train).push_back(i);
      if (train.empty() || test.empty()) return kNan;

      std::vector<ObservationSequence> raw;
      raw.reserve(train.size());
      for (std::size_t i : train)
        raw.push_back(build_observation(dataset.samples[i].record, spec, nullptr));
      ScalerParams scaler = fit_scaler(raw);
      const ScalerParams* use_scaler = config.scaled ? &scaler : nullptr;

      TrainConfig tc;
      tc.iterations = config.model.iterations;
      tc.variance_floor = config.model.variance_floor;
      std::size_t chains =
          config.model.kind == SequenceModelKind::kFhmm ? config.model.num_chains : 1;
      std::uint64_t fold_seed = derive_seed(config.seed, "fold", f);

      std::vector<FhmmParams> models(L);
      for (std::size_t l = 0; l < L; ++l) {
        std::vector<ObservationSequence> sequences;
        for (std::size_t i : train)
          if (dataset.labels[i][l])
            sequences.push_back(
                build_observation(dataset.samples[i].record, spec, use_scaler));
        if (sequences.empty()) return kNan;  // class untrainable in this fold
        tc.seed = derive_seed(fold_seed, "model", l);
        models[l] = sequential_train(config.model.num_states, chains,
                                     config.model.topology,
                                     config.model.transition_init, sequences, tc);
      }

      for (std::size_t i : test) {
        ObservationSequence obs =
            build_observation(dataset.samples[i].record, spec, use_scaler);
        for (std::size_t l = 0; l < L; ++l) {
          double ll = log_likelihood(models[l], obs);
          (dataset.labels[i][l] ? positive[l] : negative[l]).push_back(ll);
        }
      }
    }
  } catch (const training_error&) {
    return kNan;
  } catch (const validation_error&) {
    return kNan;
  }

  std::vector<double> distances(L);
  for (std::size_t l = 0; l < L; ++l) {
    if (positive[l].empty() || negative[l].empty()) return kNan;
    Moments pos = pooled_moments(positive[l]);
    Moments neg = pooled_moments(negative[l]);
    if (!std::isfinite(pos.mean) || !std::isfinite(neg.mean)) return kNan;
    distances[l] = wasserstein_distance(pos.mean, pos.stddev, neg.mean, neg.stddev);
  }
  return score_feature_set(std::move(distances), set_dimension(dataset, features));
}

std::vector<EliminationRound> backward_eliminate(const Dataset& dataset,
                                                 std::vector<std::string> candidates,
                                                 const SelectionConfig& config) {
  if (candidates.size() < 2)
    throw validation_error("backward elimination needs at least two candidates");
  std::size_t keep = std::max<std::size_t>(config.min_features, 1);

  std::vector<EliminationRound> trace;
  std::vector<std::string> working = std::move(candidates);

  for (std::size_t round = 1; working.size() > keep; ++round) {
    // score every one-feature-removed subset; failures stay NaN and are
    // skipped below
    std::vector<double> scores(working.size(), kNan);
    parallel_for(working.size(), config.threads, [&](std::size_t c) {
      std::vector<std::string> subset;
      subset.reserve(working.size() - 1);
      for (std::size_t j = 0; j < working.size(); ++j)
        if (j != c) subset.push_back(working[j]);
      scores[c] = evaluate_feature_set(dataset, subset, config);
    });

    std::size_t drop = working.size();
    for (std::size_t c = 0; c < working.size(); ++c) {
      if (std::isnan(scores[c])) continue;
      if (drop == working.size() || scores[c] > scores[drop] ||
          (scores[c] == scores[drop] && working[c] < working[drop]))
        drop = c;
    }
    if (drop == working.size())
      throw training_error("round " + std::to_string(round) +
                           ": every candidate subset failed to evaluate");

    EliminationRound row;
    row.round = round;
    row.dropped = working[drop];
    row.score = scores[drop];
    working.erase(working.begin() + static_cast<std::ptrdiff_t>(drop));
    row.features = working;
    row.dimension = set_dimension(dataset, working);
    trace.push_back(std::move(row));
  }
  return trace;
}

std::string elimination_trace_csv(const std::vector<EliminationRound>& trace) {
  std::ostringstream out;
  out << "round,score,dimension,dropped\n";
  for (const auto& row : trace)
    out << row.round << ',' << format_double(row.score) << ',' << row.dimension
        << ',' << row.dropped << '\n';
  return out.str();
}

std::string elimination_trace_text(const std::vector<EliminationRound>& trace) {
  std::ostringstream out;
  for (const auto& row : trace) {
    out << "round " << row.round << ": dropped " << row.dropped << " (score "
        << format_double(row.score) << ", " << row.dimension
        << " dims remain)\n    remaining:";
    for (const auto& f : row.features) out << ' ' << f;
    out << '\n';
  }
  return out.str();
}

}  // namespace motionhmm
