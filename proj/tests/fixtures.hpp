// Shared random-model and random-series builders for the test suites.
#pragma once

#include "motionhmm/hmm.hpp"
#include "motionhmm/observation.hpp"
#include "motionhmm/rng.hpp"

namespace fixtures {

inline motionhmm::HmmParams random_hmm(std::size_t K, std::size_t D,
                                       motionhmm::Rng& rng) {
  motionhmm::HmmParams m;
  m.num_states = K;
  m.dim = D;
  m.start.resize(K);
  m.transition = motionhmm::Matrix(K, K);
  m.means = motionhmm::Matrix(K, D);
  m.covariances = motionhmm::Matrix(K, D);
  m.transition_mask.assign(K * K, 1);
  double ps = 0.0;
  for (std::size_t k = 0; k < K; ++k) ps += (m.start[k] = rng.uniform(0.1, 1.0));
  for (std::size_t k = 0; k < K; ++k) m.start[k] /= ps;
  for (std::size_t i = 0; i < K; ++i) {
    double rs = 0.0;
    for (std::size_t j = 0; j < K; ++j)
      rs += (m.transition(i, j) = rng.uniform(0.1, 1.0));
    for (std::size_t j = 0; j < K; ++j) m.transition(i, j) /= rs;
  }
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t d = 0; d < D; ++d) {
      m.means(k, d) = rng.uniform(-1.0, 1.0);
      m.covariances(k, d) = rng.uniform(0.05, 1.0);
    }
  return m;
}

inline motionhmm::ObservationSequence random_obs(std::size_t T, std::size_t D,
                                                 motionhmm::Rng& rng) {
  motionhmm::ObservationSequence s;
  s.frames = motionhmm::Matrix(T, D);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t d = 0; d < D; ++d) s.frames(t, d) = rng.uniform(-2.0, 2.0);
  return s;
}

}  // namespace fixtures
