#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "motionhmm/dataset.hpp"

namespace motionhmm {

// Fixture generation: each class is one label combination backed by its own
// left-to-right generator HMM with well-separated state means. Useful for
// smoke tests, demos and the ability to regenerate a known-truth corpus
// from a single seed.
struct SynthClass {
  std::vector<std::string> labels;
};

struct SynthSpec {
  std::vector<SynthClass> classes;
  std::size_t sequences_per_class = 20;
  std::size_t frames = 80;
  // Informative dimensionality; mapped onto raw channels as root_pos (3),
  // root_rot (3 more), extremities_pos (12 more). Allowed: 3, 6 or 18.
  std::size_t dim = 6;
  std::size_t states = 5;
  // Extra joint_pos columns of pure N(0,1) noise, identical in distribution
  // across classes.
  std::size_t noise_joint_dims = 0;
  std::uint64_t seed = 0;
  double sample_rate_hz = 100.0;
};

Dataset synth_dataset(const SynthSpec& spec);

std::string synth_spec_to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const std::string& text);

}  // namespace motionhmm
