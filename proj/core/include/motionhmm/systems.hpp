#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "motionhmm/classifiers.hpp"
#include "motionhmm/dataset.hpp"
#include "motionhmm/features.hpp"
#include "motionhmm/fhmm.hpp"
#include "motionhmm/hmm.hpp"

namespace motionhmm {

// Maps label combinations to substitute class ids. Combinations are
// registered in first-appearance order over the training set; only observed
// combinations exist (closed world).
struct PowersetCodec {
  std::vector<LabelVector> combinations;

  // Class id for a combination, if it was seen at training time.
  std::optional<std::size_t> encode(const LabelVector& labels) const;
  const LabelVector& decode(std::size_t class_id) const;
  std::size_t size() const { return combinations.size(); }
};

enum class SequenceModelKind { kHmm, kFhmm };

struct ModelConfig {
  SequenceModelKind kind = SequenceModelKind::kHmm;
  std::size_t num_states = 5;
  std::size_t num_chains = 2;  // FHMM only
  Topology topology{TopologyKind::kLeftToRight, 1};
  InitMode transition_init = InitMode::kUniform;
  unsigned iterations = 10;
  double variance_floor = 1e-4;
};

enum class SystemKind { kPowerset, kMultilabel };

// A trained classification system: one generative model per class (power
// set) or per label (multi-label), the feature pipeline that feeds them,
// and, for multi-label systems, the decision stage over the score vector.
struct SystemBundle {
  SystemKind kind = SystemKind::kPowerset;
  std::uint64_t seed = 0;
  std::vector<std::string> vocabulary;
  FeatureSpec feature_spec;
  ScalerParams scaler;
  ModelConfig model_config;
  PowersetCodec codec;               // power-set systems
  std::vector<FhmmParams> models;    // chains.size() == 1 for plain HMMs
  std::vector<std::string> model_names;
  DecisionMaker decision;            // multi-label systems
  // Classes that had to be trained on a single sequence.
  std::vector<std::string> sparse_classes;
};

// Trains a power-set system on the given samples (the index set must not be
// empty). Scaler fits on exactly these samples. Model i trains on the
// sequences of combination i with a per-model derived seed; training runs
// in parallel across models without affecting the result.
SystemBundle train_powerset(const Dataset& dataset,
                            std::span<const std::size_t> indices,
                            const FeatureSpec& spec, const ModelConfig& model,
                            std::uint64_t seed, unsigned threads = 0);

// Trains a multi-label system: one model per vocabulary label over the
// samples carrying that label, then the decision stage on the training
// score matrix.
SystemBundle train_multilabel(const Dataset& dataset,
                              std::span<const std::size_t> indices,
                              const FeatureSpec& spec, const ModelConfig& model,
                              const DecisionConfig& decision, std::uint64_t seed,
                              unsigned threads = 0);

struct Classification {
  LabelVector labels;                    // aligned to bundle vocabulary
  std::vector<double> log_likelihoods;   // one per model
};

Classification classify(const SystemBundle& bundle, const MotionRecord& record);

// N x num_models log-likelihood matrix for the given samples.
Matrix score_matrix(const SystemBundle& bundle, const Dataset& dataset,
                    std::span<const std::size_t> indices, unsigned threads = 0);

// Bundle directory: manifest plus one JSON file per model (and the decision
// stage when present).
void save_bundle(const SystemBundle& bundle, const std::string& directory);
SystemBundle load_bundle(const std::string& directory);

}  // namespace motionhmm
