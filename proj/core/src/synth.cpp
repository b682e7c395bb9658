#include "motionhmm/synth.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "motionhmm/errors.hpp"
#include "motionhmm/hmm.hpp"
#include "motionhmm/rng.hpp"

namespace motionhmm {

namespace {

// Left-to-right generator for one class: state means march upward inside a
// band of width 2 centered 4 apart per class, narrow emissions, stay/advance
// at 50/50. Adjacent class bands end up several sigma apart, which is the
// point of the fixture: classification failures mean bugs, not bad luck.
HmmParams class_generator(std::size_t class_index, const SynthSpec& spec) {
  const std::size_t K = spec.states, D = spec.dim;
  HmmParams m;
  m.num_states = K;
  m.dim = D;
  m.topology = Topology{TopologyKind::kLeftToRight, 1};
  m.start.assign(K, 0.0);
  m.start[0] = 1.0;
  m.transition = Matrix(K, K);
  m.transition_mask.assign(K * K, 0);
  for (std::size_t i = 0; i < K; ++i) {
    if (i + 1 < K) {
      m.transition(i, i) = 0.5;
      m.transition(i, i + 1) = 0.5;
      m.transition_mask[i * K + i] = 1;
      m.transition_mask[i * K + i + 1] = 1;
    } else {
      m.transition(i, i) = 1.0;
      m.transition_mask[i * K + i] = 1;
    }
  }
  m.means = Matrix(K, D);
  m.covariances = Matrix(K, D, 0.09);
  const double center = 4.0 * static_cast<double>(class_index);
  for (std::size_t k = 0; k < K; ++k) {
    double phase = K == 1 ? 0.0
                          : 2.0 * (static_cast<double>(k) /
                                       static_cast<double>(K - 1) -
                                   0.5);
    for (std::size_t d = 0; d < D; ++d)
      m.means(k, d) = center + phase + 0.25 * static_cast<double>(d);
  }
  return m;
}

std::vector<Channel> synth_channels(const SynthSpec& spec) {
  std::vector<Channel> channels;
  channels.push_back({"root_pos", 3});
  if (spec.dim >= 6) channels.push_back({"root_rot", 3});
  if (spec.dim == 18) channels.push_back({"extremities_pos", 12});
  if (spec.noise_joint_dims > 0)
    channels.push_back({"joint_pos", spec.noise_joint_dims});
  return channels;
}

}  // namespace

Dataset synth_dataset(const SynthSpec& spec) {
  if (spec.classes.empty()) throw validation_error("no classes to generate");
  for (const auto& cls : spec.classes)
    if (cls.labels.empty())
      throw validation_error("every synthetic class needs at least one label");
  if (spec.dim != 3 && spec.dim != 6 && spec.dim != 18)
    throw validation_error("informative dimensionality must be 3, 6 or 18");
  if (spec.sequences_per_class == 0)
    throw validation_error("sequences_per_class must be positive");
  if (spec.frames < 2) throw validation_error("need at least two frames");
  if (spec.states == 0) throw validation_error("states must be positive");
  if (!(spec.sample_rate_hz > 0.0))
    throw validation_error("sample rate must be positive");

  const std::vector<Channel> channels = synth_channels(spec);
  const double dt = 1.0 / spec.sample_rate_hz;

  Dataset ds;
  std::size_t serial = 0;
  for (std::size_t c = 0; c < spec.classes.size(); ++c) {
    HmmParams generator = class_generator(c, spec);
    for (std::size_t n = 0; n < spec.sequences_per_class; ++n, ++serial) {
      ObservationSequence drawn =
          sample(generator, spec.frames, derive_seed(spec.seed, "sequence", serial), dt);

      MotionSample item;
      item.id = "synth_" + std::to_string(c) + "_" + std::to_string(n);
      item.label_names = spec.classes[c].labels;
      item.record.channels = channels;
      item.record.sample_rate_hz = spec.sample_rate_hz;
      item.record.frames = Matrix(spec.frames, spec.dim + spec.noise_joint_dims);
      for (std::size_t t = 0; t < spec.frames; ++t)
        for (std::size_t d = 0; d < spec.dim; ++d)
          item.record.frames(t, d) = drawn.frames(t, d);
      if (spec.noise_joint_dims > 0) {
        Rng noise(derive_seed(spec.seed, "noise", serial));
        for (std::size_t t = 0; t < spec.frames; ++t)
          for (std::size_t d = 0; d < spec.noise_joint_dims; ++d)
            item.record.frames(t, spec.dim + d) = noise.next_normal();
      }
      ds.samples.push_back(std::move(item));
    }
  }
  ds.rebuild_labels();
  validate_dataset(ds);
  return ds;
}

std::string synth_spec_to_json(const SynthSpec& spec) {
  nlohmann::json doc;
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& cls : spec.classes) classes.push_back(cls.labels);
  doc["classes"] = std::move(classes);
  doc["sequences_per_class"] = spec.sequences_per_class;
  doc["frames"] = spec.frames;
  doc["dim"] = spec.dim;
  doc["states"] = spec.states;
  doc["noise_joint_dims"] = spec.noise_joint_dims;
  doc["seed"] = spec.seed;
  doc["sample_rate_hz"] = spec.sample_rate_hz;
  return doc.dump(2) + "\n";
}

SynthSpec synth_spec_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw validation_error(std::string("bad synth spec JSON: ") + e.what());
  }
  SynthSpec spec;
  for (const auto& labels : doc.at("classes"))
    spec.classes.push_back({labels.get<std::vector<std::string>>()});
  spec.sequences_per_class = doc.at("sequences_per_class").get<std::size_t>();
  spec.frames = doc.at("frames").get<std::size_t>();
  spec.dim = doc.at("dim").get<std::size_t>();
  spec.states = doc.at("states").get<std::size_t>();
  spec.noise_joint_dims = doc.value("noise_joint_dims", std::size_t{0});
  spec.seed = doc.at("seed").get<std::uint64_t>();
  spec.sample_rate_hz = doc.value("sample_rate_hz", 100.0);
  return spec;
}

}  // namespace motionhmm
