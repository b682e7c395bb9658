#include "motionhmm/fhmm.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "model_json.hpp"
#include "motionhmm/errors.hpp"

namespace motionhmm {

namespace {

double safe_log(double p) { return p > 0.0 ? std::log(p) : kLogZero; }

double logsumexp(std::span<const double> v) {
  double hi = kLogZero;
  for (double x : v) hi = std::max(hi, x);
  if (hi == kLogZero) return kLogZero;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

// The joint state space has K^M states; refuse anything past 1e6 before we
// allocate or iterate over it.
std::size_t checked_joint_states(const FhmmParams& model) {
  if (model.chains.empty())
    throw validation_error("factorial model has no chains");
  const std::size_t K = model.num_states();
  const std::size_t M = model.num_chains();
  if (std::pow(static_cast<double>(K), static_cast<double>(M)) > 1e6)
    throw validation_error("joint state space " + std::to_string(K) + "^" +
                           std::to_string(M) + " exceeds the 1e6 limit");
  std::size_t n = 1;
  for (std::size_t m = 0; m < M; ++m) n *= K;
  return n;
}

}  // namespace

Matrix chain_contribution(const HmmParams& chain, const ObservationSequence& sequence) {
  Matrix gamma = state_posteriors(chain, sequence);
  const std::size_t T = sequence.length(), D = chain.dim, K = chain.num_states;
  Matrix c(T, D);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t d = 0; d < D; ++d) {
      double acc = 0.0;
      for (std::size_t k = 0; k < K; ++k) acc += gamma(t, k) * chain.means(k, d);
      c(t, d) = acc;
    }
  return c;
}

ObservationSequence residual_series(const ObservationSequence& sequence,
                                    std::span<const Matrix> contributions,
                                    double weight) {
  const std::size_t T = sequence.length(), D = sequence.dim();
  for (const Matrix& c : contributions)
    if (c.rows() != T || c.cols() != D)
      throw validation_error("contribution shape does not match the sequence");
  if (!(weight > 0.0)) throw validation_error("chain weight must be positive");

  // Deliberately (1/W)(o - sum W c), not (o - sum W c): the residual is
  // expressed on the same scale a single chain emits at, so a chain that
  // fully explains the data leaves a residual of o * (1 - W) / W, not zero.
  const double inv = 1.0 / weight;
  ObservationSequence out;
  out.frames = Matrix(T, D);
  out.dt = sequence.dt;
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t d = 0; d < D; ++d) {
      double acc = sequence.frames(t, d);
      for (const Matrix& c : contributions) acc -= weight * c(t, d);
      out.frames(t, d) = inv * acc;
    }
  return out;
}

FhmmParams sequential_train(std::size_t num_states, std::size_t num_chains,
                            const Topology& topology, InitMode transition_mode,
                            std::span<const ObservationSequence> sequences,
                            const TrainConfig& config) {
  if (num_chains == 0) throw validation_error("need at least one chain");
  if (sequences.empty()) throw validation_error("no training sequences");
  const std::size_t D = sequences.front().dim();
  for (const auto& s : sequences)
    if (s.dim() != D)
      throw validation_error("training sequences disagree on dimension");

  FhmmParams model;
  model.weight = 1.0 / static_cast<double>(num_chains);

  // Per sequence, the expected emissions of every chain fitted so far; the
  // next chain trains on what they leave unexplained.
  std::vector<std::vector<Matrix>> fitted(sequences.size());
  std::vector<ObservationSequence> residuals;

  for (std::size_t m = 0; m < num_chains; ++m) {
    std::span<const ObservationSequence> data =
        m == 0 ? sequences : std::span<const ObservationSequence>(residuals);
    HmmParams chain =
        make_hmm(num_states, D, topology, transition_mode, config.seed, data);
    chain = train(chain, data, config);

    if (m + 1 < num_chains) {
      // Each chain's contribution comes from a fresh pass over the series it
      // was itself trained on, then the residual is rebuilt from the raw data.
      for (std::size_t n = 0; n < sequences.size(); ++n)
        fitted[n].push_back(chain_contribution(chain, data[n]));
      std::vector<ObservationSequence> next;
      next.reserve(sequences.size());
      for (std::size_t n = 0; n < sequences.size(); ++n)
        next.push_back(residual_series(sequences[n], fitted[n], model.weight));
      residuals = std::move(next);
    }
    model.chains.push_back(std::move(chain));
  }
  return model;
}

std::vector<std::size_t> joint_state_decode(std::size_t joint, std::size_t num_states,
                                            std::size_t num_chains) {
  std::vector<std::size_t> states(num_chains);
  for (std::size_t m = num_chains; m-- > 0;) {
    states[m] = joint % num_states;
    joint /= num_states;
  }
  return states;
}

void combined_emission(const FhmmParams& model, std::span<const std::size_t> states,
                       std::span<double> mean, std::span<double> var) {
  const std::size_t M = model.num_chains(), D = model.dim();
  if (states.size() != M)
    throw validation_error("joint state has the wrong number of digits");
  if (mean.size() != D || var.size() != D)
    throw validation_error("combined emission buffers have the wrong size");
  const double w = model.weight;
  for (std::size_t d = 0; d < D; ++d) {
    double mu = 0.0, s2 = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      mu += model.chains[m].means(states[m], d);
      s2 += model.chains[m].covariances(states[m], d);
    }
    // Sum first, scale once: keeps the result identical no matter how the
    // same joint state is reached.
    mean[d] = w * mu;
    var[d] = w * w * s2;
  }
}

double log_likelihood(const FhmmParams& model, const ObservationSequence& sequence) {
  const std::size_t n = checked_joint_states(model);
  const std::size_t K = model.num_states(), M = model.num_chains(), D = model.dim();
  if (sequence.dim() != D)
    throw validation_error("sequence dimension does not match the model");
  const std::size_t T = sequence.length();
  if (T == 0) throw validation_error("empty observation sequence");

  // Digit decomposition of every joint state, flattened n x M.
  std::vector<std::size_t> digits(n * M);
  for (std::size_t j = 0; j < n; ++j) {
    auto ks = joint_state_decode(j, K, M);
    std::copy(ks.begin(), ks.end(), digits.begin() + static_cast<std::ptrdiff_t>(j * M));
  }

  Matrix means(n, D), vars(n, D);
  std::vector<double> lstart(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::span<const std::size_t> ks(digits.data() + j * M, M);
    combined_emission(model, ks, means.row(j), vars.row(j));
    double lp = 0.0;
    for (std::size_t m = 0; m < M; ++m) lp += safe_log(model.chains[m].start[ks[m]]);
    lstart[j] = lp;
  }

  // Per-chain log transitions; the joint log transition is their sum over
  // digits, assembled on demand rather than stored as an n x n table.
  std::vector<Matrix> ltrans(M, Matrix(K, K));
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t a = 0; a < K; ++a)
      for (std::size_t b = 0; b < K; ++b)
        ltrans[m](a, b) = safe_log(model.chains[m].transition(a, b));

  std::vector<double> alpha(n), next(n), terms(n);
  for (std::size_t j = 0; j < n; ++j)
    alpha[j] = lstart[j] +
               diag_gaussian_log_density(sequence.frames.row(0), means.row(j), vars.row(j));

  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t* dj = digits.data() + j * M;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t* di = digits.data() + i * M;
        double la = 0.0;
        for (std::size_t m = 0; m < M; ++m) la += ltrans[m](di[m], dj[m]);
        terms[i] = alpha[i] + la;
      }
      next[j] = logsumexp(terms) +
                diag_gaussian_log_density(sequence.frames.row(t), means.row(j), vars.row(j));
    }
    alpha.swap(next);
  }
  return logsumexp(alpha);
}

HmmParams flatten(const FhmmParams& model) {
  const std::size_t n = checked_joint_states(model);
  const std::size_t K = model.num_states(), M = model.num_chains(), D = model.dim();

  HmmParams joint;
  joint.num_states = n;
  joint.dim = D;
  joint.topology = model.chains.front().topology;
  joint.start.assign(n, 0.0);
  joint.transition = Matrix(n, n);
  joint.means = Matrix(n, D);
  joint.covariances = Matrix(n, D);
  joint.transition_mask.assign(n * n, 0);

  std::vector<std::vector<std::size_t>> digits(n);
  for (std::size_t j = 0; j < n; ++j) digits[j] = joint_state_decode(j, K, M);

  for (std::size_t j = 0; j < n; ++j) {
    double p = 1.0;
    for (std::size_t m = 0; m < M; ++m) p *= model.chains[m].start[digits[j][m]];
    joint.start[j] = p;
    combined_emission(model, digits[j], joint.means.row(j), joint.covariances.row(j));
  }

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double a = 1.0;
      bool allowed = true;
      for (std::size_t m = 0; m < M; ++m) {
        a *= model.chains[m].transition(digits[i][m], digits[j][m]);
        allowed = allowed && model.chains[m].allows(digits[i][m], digits[j][m]);
      }
      joint.transition(i, j) = a;
      joint.transition_mask[i * n + j] = allowed ? 1 : 0;
    }
  return joint;
}

std::string fhmm_to_json(const FhmmParams& model) {
  nlohmann::json doc;
  doc["weight"] = model.weight;
  nlohmann::json chains = nlohmann::json::array();
  for (const auto& chain : model.chains)
    chains.push_back(detail::hmm_to_json_value(chain));
  doc["chains"] = std::move(chains);
  return doc.dump(2) + "\n";
}

FhmmParams fhmm_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw validation_error(std::string("bad model JSON: ") + e.what());
  }
  FhmmParams model;
  model.weight = doc.at("weight").get<double>();
  for (const auto& chain : doc.at("chains"))
    model.chains.push_back(detail::hmm_from_json_value(chain));
  return model;
}

void validate_fhmm(const FhmmParams& model) {
  if (model.chains.empty())
    throw validation_error("factorial model has no chains");
  const std::size_t K = model.num_states(), D = model.dim();
  for (const auto& chain : model.chains) {
    validate_hmm(chain);
    if (chain.num_states != K)
      throw validation_error("chains disagree on the number of states");
    if (chain.dim != D)
      throw validation_error("chains disagree on the observation dimension");
  }
  const double M = static_cast<double>(model.num_chains());
  if (std::abs(model.weight * M - 1.0) > 1e-12)
    throw validation_error("chain weight must be 1/M");
}

}  // namespace motionhmm
