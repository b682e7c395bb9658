#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "motionhmm/matrix.hpp"
#include "motionhmm/observation.hpp"

namespace motionhmm {

// Log-domain representation of "impossible": forbidden transitions, empty
// starts, and zero-probability observations all carry this value.
constexpr double kLogZero = -std::numeric_limits<double>::infinity();

enum class TopologyKind { kErgodic, kLeftToRight };

struct Topology {
  TopologyKind kind = TopologyKind::kErgodic;
  // Left-to-right only: states may advance by at most max_skip indices per
  // step. Unset means any forward jump is allowed.
  std::optional<unsigned> max_skip;
};

enum class InitMode { kUniform, kRandom };

// Gaussian-emission HMM with diagonal covariances. The transition mask
// fixes the support: entries where the mask is 0 are exactly 0.0 and stay
// that way through training.
struct HmmParams {
  std::size_t num_states = 0;  // K
  std::size_t dim = 0;         // D
  Topology topology;
  std::vector<double> start;             // K
  Matrix transition;                     // K x K
  Matrix means;                          // K x D
  Matrix covariances;                    // K x D, diagonal entries
  std::vector<std::uint8_t> transition_mask;  // K x K, row-major

  bool allows(std::size_t from, std::size_t to) const {
    return transition_mask[from * num_states + to] != 0;
  }
};

struct TrainConfig {
  unsigned iterations = 10;
  double variance_floor = 1e-4;
  std::uint64_t seed = 0;
  double log_zero = kLogZero;
};

struct TransitionInit {
  std::vector<double> start;
  Matrix transition;
  std::vector<std::uint8_t> mask;
};

// Start distribution, transition matrix and support mask for a topology.
// Uniform mode spreads each row evenly over its allowed successors; random
// mode multiplies those entries by U(0,1) draws and renormalizes (row-major
// transition draws first, then the start vector). Left-to-right always
// starts in state 0.
TransitionInit init_transition(std::size_t num_states, const Topology& topology,
                               InitMode mode, std::uint64_t seed);

// Random emission initialization: means uniform in [-1,1]^D, covariance
// R*R^T for a random DxD matrix R (or just its diagonal). Full matrices are
// only used to seed training; the model itself stores diagonals.
struct EmissionInit {
  Matrix means;                    // K x D
  std::vector<Matrix> covariances; // K matrices, D x D
};

EmissionInit init_emission_random(std::size_t num_states, std::size_t dim,
                                  bool diagonal, std::uint64_t seed);

// Lloyd's k-means over the pooled frames of all sequences: seeded choice of
// K distinct frames as initial centers, nearest-center assignment (ties to
// the lower cluster), empty clusters repaired by stealing the farthest
// frame, run to convergence or max_iterations. Per-cluster diagonal
// variances are floored.
struct KmeansInit {
  Matrix means;      // K x D
  Matrix variances;  // K x D
};

KmeansInit init_emission_kmeans(std::span<const ObservationSequence> sequences,
                                std::size_t num_states, std::uint64_t seed,
                                double variance_floor = 1e-4,
                                unsigned max_iterations = 300);

// Convenience: uniform-or-random transitions plus k-means emissions.
HmmParams make_hmm(std::size_t num_states, std::size_t dim, const Topology& topology,
                   InitMode transition_mode, std::uint64_t seed,
                   std::span<const ObservationSequence> sequences);

double diag_gaussian_log_density(std::span<const double> x,
                                 std::span<const double> mean,
                                 std::span<const double> variance);

// Log-domain forward/backward passes; rows are frames, columns states.
Matrix forward_log(const HmmParams& model, const ObservationSequence& sequence);
Matrix backward_log(const HmmParams& model, const ObservationSequence& sequence);

// log p(sequence | model); kLogZero when the sequence is impossible.
double log_likelihood(const HmmParams& model, const ObservationSequence& sequence);

// Posterior state occupancies gamma in linear space (T x K rows sum to 1).
Matrix state_posteriors(const HmmParams& model, const ObservationSequence& sequence);

struct ViterbiResult {
  std::vector<std::size_t> path;
  double log_prob = kLogZero;
};

// Most likely state path; ties resolve toward the lower state index. An
// impossible sequence yields an empty path with log_prob = kLogZero.
ViterbiResult viterbi(const HmmParams& model, const ObservationSequence& sequence);

// Baum-Welch over the pooled sequences: one E step across all sequences,
// then one M step, per iteration. Masked transitions stay exactly zero,
// variances are floored, and states with zero occupancy keep their previous
// parameters. When history is given it receives the total log-likelihood
// under the parameters at the start of each iteration (non-decreasing).
HmmParams train(const HmmParams& model,
                std::span<const ObservationSequence> sequences,
                const TrainConfig& config,
                std::vector<double>* history = nullptr);

// Draws a sequence from the model (inverse-CDF state draws, Box-Muller
// emissions); deterministic in the seed.
ObservationSequence sample(const HmmParams& model, std::size_t length,
                           std::uint64_t seed, double dt = 1.0);

std::string hmm_to_json(const HmmParams& model);
HmmParams hmm_from_json(const std::string& text);

// Shape/stochasticity/support checks; throws validation_error.
void validate_hmm(const HmmParams& model);

}  // namespace motionhmm
