#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "motionhmm/hmm.hpp"
#include "motionhmm/matrix.hpp"
#include "motionhmm/observation.hpp"

namespace motionhmm {

// Factorial HMM: M independent chains over a shared observation space. Each
// chain contributes weight * (its active state's mean); the combined
// emission for a joint state is Gaussian with mean weight * sum of chain
// means and variance weight^2 * sum of chain variances. All chains share K,
// D and topology, and weight is fixed to 1/M.
struct FhmmParams {
  std::vector<HmmParams> chains;
  double weight = 1.0;

  std::size_t num_chains() const { return chains.size(); }
  std::size_t num_states() const { return chains.empty() ? 0 : chains.front().num_states; }
  std::size_t dim() const { return chains.empty() ? 0 : chains.front().dim; }
};

// Expected emission of one chain: c_t = sum_k gamma_tk * mu_k (T x D).
Matrix chain_contribution(const HmmParams& chain, const ObservationSequence& sequence);

// Residual series a later chain trains on: (1/weight) * (o_t - sum_i weight
// * c_t^(i)) over the already-fitted chains' contributions.
ObservationSequence residual_series(const ObservationSequence& sequence,
                                    std::span<const Matrix> contributions,
                                    double weight);

// Fits chains one at a time: chain 1 is plain Baum-Welch on the raw data
// (bit-identical to hmm train for M = 1); every later chain runs k-means
// init plus Baum-Welch on the residual left by its predecessors, where each
// predecessor's contribution comes from a fresh forward-backward pass over
// the series that predecessor was trained on.
FhmmParams sequential_train(std::size_t num_states, std::size_t num_chains,
                            const Topology& topology, InitMode transition_mode,
                            std::span<const ObservationSequence> sequences,
                            const TrainConfig& config);

// Mixed-radix decode of a joint state: chain 0 is the most significant
// digit. joint = ((k_0 * K + k_1) * K + ...) + k_{M-1}.
std::vector<std::size_t> joint_state_decode(std::size_t joint, std::size_t num_states,
                                            std::size_t num_chains);

// Combined emission parameters for one joint state, written into mean/var
// (each of size D): mean = weight * sum_m mu^(m), var = weight^2 * sum_m
// sigma2^(m).
void combined_emission(const FhmmParams& model, std::span<const std::size_t> states,
                       std::span<double> mean, std::span<double> var);

// Exact joint log-likelihood by a forward pass over all K^M joint states,
// with transition and emission terms assembled from the chains on the fly.
// Guarded against K^M > 1e6.
double log_likelihood(const FhmmParams& model, const ObservationSequence& sequence);

// Equivalent single HMM over the K^M joint state space. Same guard.
HmmParams flatten(const FhmmParams& model);

std::string fhmm_to_json(const FhmmParams& model);
FhmmParams fhmm_from_json(const std::string& text);

void validate_fhmm(const FhmmParams& model);

}  // namespace motionhmm
