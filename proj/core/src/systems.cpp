#include "motionhmm/systems.hpp"

#include <algorithm>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "motionhmm/errors.hpp"
#include "motionhmm/parallel.hpp"
#include "motionhmm/rng.hpp"
#include "motionhmm/text.hpp"

namespace motionhmm {

std::optional<std::size_t> PowersetCodec::encode(const LabelVector& labels) const {
  for (std::size_t c = 0; c < combinations.size(); ++c)
    if (combinations[c] == labels) return c;
  return std::nullopt;
}

const LabelVector& PowersetCodec::decode(std::size_t class_id) const {
  if (class_id >= combinations.size())
    throw validation_error("unknown substitute class id " + std::to_string(class_id));
  return combinations[class_id];
}

namespace {

void check_indices(const Dataset& dataset, std::span<const std::size_t> indices) {
  if (indices.empty()) throw validation_error("empty training index set");
  for (std::size_t i : indices)
    if (i >= dataset.size())
      throw validation_error("training index " + std::to_string(i) +
                             " is out of range");
}

// Joins a combination's label names, e.g. "fast+walk"; used for model and
// sparse-class names in power-set systems.
std::string combo_name(const LabelVector& bits,
                       const std::vector<std::string>& vocabulary) {
  std::string name;
  for (std::size_t l = 0; l < bits.size(); ++l) {
    if (!bits[l]) continue;
    if (!name.empty()) name += '+';
    name += vocabulary[l];
  }
  return name.empty() ? "(none)" : name;
}

// Scaler statistics must come from the training rows only, and from the
// unscaled feature values.
ScalerParams fit_training_scaler(const Dataset& dataset,
                                 std::span<const std::size_t> indices,
                                 const FeatureSpec& spec) {
  std::vector<ObservationSequence> raw;
  raw.reserve(indices.size());
  for (std::size_t i : indices)
    raw.push_back(build_observation(dataset.samples[i].record, spec, nullptr));
  return fit_scaler(raw);
}

FhmmParams train_one_model(const std::vector<ObservationSequence>& sequences,
                           const ModelConfig& config, std::uint64_t seed,
                           const std::string& name) {
  TrainConfig tc;
  tc.iterations = config.iterations;
  tc.variance_floor = config.variance_floor;
  tc.seed = seed;
  std::size_t chains =
      config.kind == SequenceModelKind::kFhmm ? config.num_chains : 1;
  try {
    return sequential_train(config.num_states, chains, config.topology,
                            config.transition_init, sequences, tc);
  } catch (const training_error& e) {
    throw training_error("model '" + name + "': " + e.what());
  } catch (const validation_error& e) {
    throw validation_error("model '" + name + "': " + e.what());
  }
}

std::vector<double> model_scores(const SystemBundle& bundle,
                                 const ObservationSequence& obs) {
  std::vector<double> scores(bundle.models.size());
  for (std::size_t m = 0; m < bundle.models.size(); ++m)
    scores[m] = log_likelihood(bundle.models[m], obs);
  return scores;
}

}  // namespace

SystemBundle train_powerset(const Dataset& dataset,
                            std::span<const std::size_t> indices,
                            const FeatureSpec& spec, const ModelConfig& model,
                            std::uint64_t seed, unsigned threads) {
  check_indices(dataset, indices);

  SystemBundle bundle;
  bundle.kind = SystemKind::kPowerset;
  bundle.seed = seed;
  bundle.vocabulary = dataset.vocabulary;
  bundle.feature_spec = spec;
  bundle.model_config = model;
  bundle.scaler = fit_training_scaler(dataset, indices, spec);

  // substitute classes in first-appearance order over the training rows
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t i : indices) {
    const LabelVector& bits = dataset.labels[i];
    auto id = bundle.codec.encode(bits);
    if (!id) {
      bundle.codec.combinations.push_back(bits);
      members.emplace_back();
      id = bundle.codec.size() - 1;
    }
    members[*id].push_back(i);
  }

  const ScalerParams* scaler = spec.scaled ? &bundle.scaler : nullptr;
  bundle.models.resize(bundle.codec.size());
  bundle.model_names.resize(bundle.codec.size());
  for (std::size_t c = 0; c < bundle.codec.size(); ++c)
    bundle.model_names[c] = combo_name(bundle.codec.combinations[c], bundle.vocabulary);

  parallel_for(bundle.codec.size(), threads, [&](std::size_t c) {
    std::vector<ObservationSequence> sequences;
    sequences.reserve(members[c].size());
    for (std::size_t i : members[c])
      sequences.push_back(build_observation(dataset.samples[i].record, spec, scaler));
    bundle.models[c] = train_one_model(sequences, model,
                                       derive_seed(seed, "model", c),
                                       bundle.model_names[c]);
  });

  for (std::size_t c = 0; c < bundle.codec.size(); ++c)
    if (members[c].size() == 1)
      bundle.sparse_classes.push_back(bundle.model_names[c]);
  return bundle;
}

SystemBundle train_multilabel(const Dataset& dataset,
                              std::span<const std::size_t> indices,
                              const FeatureSpec& spec, const ModelConfig& model,
                              const DecisionConfig& decision, std::uint64_t seed,
                              unsigned threads) {
  check_indices(dataset, indices);

  SystemBundle bundle;
  bundle.kind = SystemKind::kMultilabel;
  bundle.seed = seed;
  bundle.vocabulary = dataset.vocabulary;
  bundle.feature_spec = spec;
  bundle.model_config = model;
  bundle.scaler = fit_training_scaler(dataset, indices, spec);
  bundle.model_names = bundle.vocabulary;

  const std::size_t L = bundle.vocabulary.size();
  std::vector<std::vector<std::size_t>> positives(L);
  for (std::size_t i : indices)
    for (std::size_t l = 0; l < L; ++l)
      if (dataset.labels[i][l]) positives[l].push_back(i);

  const ScalerParams* scaler = spec.scaled ? &bundle.scaler : nullptr;
  bundle.models.resize(L);
  parallel_for(L, threads, [&](std::size_t l) {
    // A label with no positive rows cannot be fitted; fall back to a model
    // over all training rows so its scores stay finite, and report it.
    const std::vector<std::size_t>* rows = &positives[l];
    std::vector<std::size_t> everything;
    if (rows->empty()) {
      everything.assign(indices.begin(), indices.end());
      rows = &everything;
    }
    std::vector<ObservationSequence> sequences;
    sequences.reserve(rows->size());
    for (std::size_t i : *rows)
      sequences.push_back(build_observation(dataset.samples[i].record, spec, scaler));
    bundle.models[l] = train_one_model(sequences, model,
                                       derive_seed(seed, "model", l),
                                       bundle.vocabulary[l]);
  });

  for (std::size_t l = 0; l < L; ++l)
    if (positives[l].size() <= 1) bundle.sparse_classes.push_back(bundle.vocabulary[l]);

  Matrix scores = score_matrix(bundle, dataset, indices, threads);
  std::vector<LabelVector> truth;
  truth.reserve(indices.size());
  for (std::size_t i : indices) truth.push_back(dataset.labels[i]);
  bundle.decision = fit_decision(scores, truth, decision, derive_seed(seed, "decision", 0));
  return bundle;
}

Classification classify(const SystemBundle& bundle, const MotionRecord& record) {
  if (bundle.models.empty()) throw validation_error("system has no models");
  const ScalerParams* scaler = bundle.feature_spec.scaled ? &bundle.scaler : nullptr;
  ObservationSequence obs = build_observation(record, bundle.feature_spec, scaler);

  Classification result;
  result.log_likelihoods = model_scores(bundle, obs);

  if (bundle.kind == SystemKind::kPowerset) {
    std::size_t best = 0;
    for (std::size_t m = 1; m < result.log_likelihoods.size(); ++m)
      if (result.log_likelihoods[m] > result.log_likelihoods[best]) best = m;
    if (result.log_likelihoods[best] == kLogZero)
      throw validation_error("no substitute class explains the motion");
    result.labels = bundle.codec.decode(best);
  } else {
    result.labels = decide(bundle.decision, result.log_likelihoods);
  }
  return result;
}

Matrix score_matrix(const SystemBundle& bundle, const Dataset& dataset,
                    std::span<const std::size_t> indices, unsigned threads) {
  check_indices(dataset, indices);
  const ScalerParams* scaler = bundle.feature_spec.scaled ? &bundle.scaler : nullptr;
  Matrix scores(indices.size(), bundle.models.size());
  parallel_for(indices.size(), threads, [&](std::size_t row) {
    ObservationSequence obs =
        build_observation(dataset.samples[indices[row]].record, bundle.feature_spec,
                          scaler);
    for (std::size_t m = 0; m < bundle.models.size(); ++m)
      scores(row, m) = log_likelihood(bundle.models[m], obs);
  });
  return scores;
}

// ---------------------------------------------------------------------------
// bundle directories
// ---------------------------------------------------------------------------

namespace {

std::string model_file_name(std::size_t index) {
  return "model_" + std::to_string(index) + ".json";
}

nlohmann::json model_config_to_json(const ModelConfig& cfg) {
  nlohmann::json doc;
  doc["kind"] = cfg.kind == SequenceModelKind::kHmm ? "hmm" : "fhmm";
  doc["num_states"] = cfg.num_states;
  doc["num_chains"] = cfg.num_chains;
  doc["topology"]["kind"] =
      cfg.topology.kind == TopologyKind::kErgodic ? "ergodic" : "left_to_right";
  if (cfg.topology.max_skip.has_value())
    doc["topology"]["max_skip"] = *cfg.topology.max_skip;
  doc["transition_init"] =
      cfg.transition_init == InitMode::kUniform ? "uniform" : "random";
  doc["iterations"] = cfg.iterations;
  doc["variance_floor"] = cfg.variance_floor;
  return doc;
}

ModelConfig model_config_from_json(const nlohmann::json& doc) {
  ModelConfig cfg;
  std::string kind = doc.at("kind").get<std::string>();
  if (kind == "hmm")
    cfg.kind = SequenceModelKind::kHmm;
  else if (kind == "fhmm")
    cfg.kind = SequenceModelKind::kFhmm;
  else
    throw validation_error("unknown model kind '" + kind + "'");
  cfg.num_states = doc.at("num_states").get<std::size_t>();
  cfg.num_chains = doc.at("num_chains").get<std::size_t>();
  std::string topo = doc.at("topology").at("kind").get<std::string>();
  if (topo == "ergodic")
    cfg.topology.kind = TopologyKind::kErgodic;
  else if (topo == "left_to_right")
    cfg.topology.kind = TopologyKind::kLeftToRight;
  else
    throw validation_error("unknown topology kind '" + topo + "'");
  cfg.topology.max_skip.reset();
  if (doc.at("topology").contains("max_skip"))
    cfg.topology.max_skip = doc.at("topology").at("max_skip").get<unsigned>();
  std::string init = doc.at("transition_init").get<std::string>();
  if (init == "uniform")
    cfg.transition_init = InitMode::kUniform;
  else if (init == "random")
    cfg.transition_init = InitMode::kRandom;
  else
    throw validation_error("unknown transition init '" + init + "'");
  cfg.iterations = doc.at("iterations").get<unsigned>();
  cfg.variance_floor = doc.at("variance_floor").get<double>();
  return cfg;
}

}  // namespace

void save_bundle(const SystemBundle& bundle, const std::string& directory) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);

  nlohmann::json doc;
  doc["format"] = "motionhmm-system";
  doc["version"] = 1;
  doc["kind"] = bundle.kind == SystemKind::kPowerset ? "powerset" : "multilabel";
  doc["seed"] = bundle.seed;
  doc["vocabulary"] = bundle.vocabulary;
  doc["feature_spec"] = nlohmann::json::parse(feature_spec_to_json(bundle.feature_spec));
  doc["scaler"] = nlohmann::json::parse(scaler_to_json(bundle.scaler));
  doc["model_config"] = model_config_to_json(bundle.model_config);
  doc["model_names"] = bundle.model_names;
  doc["sparse_classes"] = bundle.sparse_classes;

  nlohmann::json files = nlohmann::json::array();
  for (std::size_t m = 0; m < bundle.models.size(); ++m) {
    files.push_back(model_file_name(m));
    write_text_file((fs::path(directory) / model_file_name(m)).string(),
                    fhmm_to_json(bundle.models[m]));
  }
  doc["models"] = std::move(files);

  if (bundle.kind == SystemKind::kPowerset) {
    nlohmann::json combos = nlohmann::json::array();
    for (const auto& bits : bundle.codec.combinations) combos.push_back(bits);
    doc["combinations"] = std::move(combos);
  } else {
    doc["decision"] = "decision.json";
    write_text_file((fs::path(directory) / "decision.json").string(),
                    decision_to_json(bundle.decision));
  }

  write_text_file((fs::path(directory) / "system.json").string(),
                  doc.dump(2) + "\n");
}

SystemBundle load_bundle(const std::string& directory) {
  namespace fs = std::filesystem;
  const std::string manifest_path = (fs::path(directory) / "system.json").string();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw validation_error("bad system manifest: " + std::string(e.what()));
  }
  if (doc.value("format", "") != "motionhmm-system")
    throw validation_error("not a system manifest: " + manifest_path);

  SystemBundle bundle;
  std::string kind = doc.at("kind").get<std::string>();
  if (kind == "powerset")
    bundle.kind = SystemKind::kPowerset;
  else if (kind == "multilabel")
    bundle.kind = SystemKind::kMultilabel;
  else
    throw validation_error("unknown system kind '" + kind + "'");
  bundle.seed = doc.at("seed").get<std::uint64_t>();
  bundle.vocabulary = doc.at("vocabulary").get<std::vector<std::string>>();
  bundle.feature_spec = feature_spec_from_json(doc.at("feature_spec").dump());
  bundle.scaler = scaler_from_json(doc.at("scaler").dump());
  bundle.model_config = model_config_from_json(doc.at("model_config"));
  bundle.model_names = doc.at("model_names").get<std::vector<std::string>>();
  bundle.sparse_classes = doc.at("sparse_classes").get<std::vector<std::string>>();

  for (const auto& file : doc.at("models")) {
    std::string path = (fs::path(directory) / file.get<std::string>()).string();
    bundle.models.push_back(fhmm_from_json(read_text_file(path)));
  }

  if (bundle.kind == SystemKind::kPowerset) {
    for (const auto& combo : doc.at("combinations"))
      bundle.codec.combinations.push_back(combo.get<LabelVector>());
  } else {
    std::string path =
        (fs::path(directory) / doc.at("decision").get<std::string>()).string();
    bundle.decision = decision_from_json(read_text_file(path));
  }
  return bundle;
}

}  // namespace motionhmm
