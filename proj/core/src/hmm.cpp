#include "motionhmm/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "model_json.hpp"
#include "motionhmm/errors.hpp"
#include "motionhmm/rng.hpp"

namespace motionhmm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double logsumexp(std::span<const double> values) {
  double m = kLogZero;
  for (double v : values) m = std::max(m, v);
  if (m == kLogZero) return kLogZero;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - m);
  return m + std::log(sum);
}

double safe_log(double p) { return p > 0.0 ? std::log(p) : kLogZero; }

// Per-row list of allowed successor states for a topology.
std::vector<std::vector<std::size_t>> allowed_successors(std::size_t K,
                                                         const Topology& topology) {
  std::vector<std::vector<std::size_t>> allowed(K);
  for (std::size_t i = 0; i < K; ++i) {
    if (topology.kind == TopologyKind::kErgodic) {
      for (std::size_t j = 0; j < K; ++j) allowed[i].push_back(j);
    } else {
      std::size_t hi = K - 1;
      if (topology.max_skip.has_value())
        hi = std::min<std::size_t>(K - 1, i + *topology.max_skip);
      for (std::size_t j = i; j <= hi; ++j) allowed[i].push_back(j);
    }
  }
  return allowed;
}

void check_dimension(const HmmParams& model, const ObservationSequence& sequence) {
  if (sequence.dim() != model.dim)
    throw validation_error("observation dimension " + std::to_string(sequence.dim()) +
                           " does not match the model dimension " +
                           std::to_string(model.dim));
}

// log emission densities for every (frame, state) pair
Matrix emission_table(const HmmParams& model, const ObservationSequence& sequence) {
  Matrix b(sequence.length(), model.num_states);
  for (std::size_t t = 0; t < sequence.length(); ++t)
    for (std::size_t k = 0; k < model.num_states; ++k)
      b(t, k) = diag_gaussian_log_density(sequence.frames.row(t), model.means.row(k),
                                          model.covariances.row(k));
  return b;
}

Matrix log_transition(const HmmParams& model) {
  Matrix la(model.num_states, model.num_states);
  for (std::size_t i = 0; i < model.num_states; ++i)
    for (std::size_t j = 0; j < model.num_states; ++j)
      la(i, j) = safe_log(model.transition(i, j));
  return la;
}

}  // namespace

TransitionInit init_transition(std::size_t num_states, const Topology& topology,
                               InitMode mode, std::uint64_t seed) {
  if (num_states == 0) throw validation_error("a model needs at least one state");
  auto allowed = allowed_successors(num_states, topology);

  TransitionInit init;
  init.transition = Matrix(num_states, num_states);
  init.mask.assign(num_states * num_states, 0);
  for (std::size_t i = 0; i < num_states; ++i) {
    double share = 1.0 / static_cast<double>(allowed[i].size());
    for (std::size_t j : allowed[i]) {
      init.mask[i * num_states + j] = 1;
      init.transition(i, j) = share;
    }
  }
  if (topology.kind == TopologyKind::kLeftToRight) {
    init.start.assign(num_states, 0.0);
    init.start[0] = 1.0;
  } else {
    init.start.assign(num_states, 1.0 / static_cast<double>(num_states));
  }

  if (mode == InitMode::kRandom) {
    Rng rng(seed);
    for (std::size_t i = 0; i < num_states; ++i) {
      double sum = 0.0;
      for (std::size_t j : allowed[i]) {
        init.transition(i, j) *= rng.next_double();
        sum += init.transition(i, j);
      }
      // a row of all-zero draws is astronomically unlikely but cheap to fix
      if (sum == 0.0) {
        for (std::size_t j : allowed[i])
          init.transition(i, j) = 1.0 / static_cast<double>(allowed[i].size());
      } else {
        for (std::size_t j : allowed[i]) init.transition(i, j) /= sum;
      }
    }
    if (topology.kind == TopologyKind::kErgodic) {
      double sum = 0.0;
      for (auto& p : init.start) {
        p *= rng.next_double();
        sum += p;
      }
      if (sum > 0.0)
        for (auto& p : init.start) p /= sum;
      else
        init.start.assign(num_states, 1.0 / static_cast<double>(num_states));
    }
  }
  return init;
}

EmissionInit init_emission_random(std::size_t num_states, std::size_t dim,
                                  bool diagonal, std::uint64_t seed) {
  Rng rng(seed);
  EmissionInit init;
  init.means = Matrix(num_states, dim);
  init.covariances.reserve(num_states);
  for (std::size_t k = 0; k < num_states; ++k) {
    for (std::size_t d = 0; d < dim; ++d) init.means(k, d) = rng.uniform(-1.0, 1.0);
    Matrix r(dim, dim);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) r(i, j) = rng.uniform(-1.0, 1.0);
    Matrix cov(dim, dim);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) {
        double sum = 0.0;
        for (std::size_t l = 0; l < dim; ++l) sum += r(i, l) * r(j, l);
        cov(i, j) = sum;
      }
    if (diagonal) {
      for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j)
          if (i != j) cov(i, j) = 0.0;
    }
    init.covariances.push_back(std::move(cov));
  }
  return init;
}

KmeansInit init_emission_kmeans(std::span<const ObservationSequence> sequences,
                                std::size_t num_states, std::uint64_t seed,
                                double variance_floor, unsigned max_iterations) {
  std::size_t total = 0;
  std::size_t dim = 0;
  for (const auto& seq : sequences) {
    total += seq.length();
    dim = seq.dim();
  }
  if (total < num_states)
    throw validation_error("k-means needs at least as many frames as clusters");

  Matrix frames(total, dim);
  std::size_t row = 0;
  for (const auto& seq : sequences)
    for (std::size_t t = 0; t < seq.length(); ++t, ++row)
      for (std::size_t d = 0; d < dim; ++d) frames(row, d) = seq.frames(t, d);

  auto frames_equal = [&](std::size_t a, std::span<const double> b) {
    for (std::size_t d = 0; d < dim; ++d)
      if (frames(a, d) != b[d]) return false;
    return true;
  };

  // seeded draw of K distinct frames as the initial centers
  Rng rng(seed);
  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  rng.shuffle(order);
  Matrix centers(num_states, dim);
  std::size_t chosen = 0;
  for (std::size_t idx : order) {
    bool duplicate = false;
    for (std::size_t c = 0; c < chosen && !duplicate; ++c)
      duplicate = frames_equal(idx, centers.row(c));
    if (duplicate) continue;
    for (std::size_t d = 0; d < dim; ++d) centers(chosen, d) = frames(idx, d);
    if (++chosen == num_states) break;
  }
  if (chosen < num_states)
    throw validation_error("k-means: fewer distinct frames than clusters");

  auto sq_distance = [&](std::size_t frame, std::size_t center) {
    double sum = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      double diff = frames(frame, d) - centers(center, d);
      sum += diff * diff;
    }
    return sum;
  };

  std::vector<std::size_t> assign(total, 0);
  std::vector<std::size_t> counts(num_states, 0);
  for (unsigned iter = 0; iter < max_iterations; ++iter) {
    bool changed = iter == 0;
    counts.assign(num_states, 0);
    for (std::size_t f = 0; f < total; ++f) {
      std::size_t best = 0;
      double best_d = sq_distance(f, 0);
      for (std::size_t c = 1; c < num_states; ++c) {
        double d2 = sq_distance(f, c);
        if (d2 < best_d) {  // ties stay with the lower cluster
          best_d = d2;
          best = c;
        }
      }
      if (assign[f] != best) changed = true;
      assign[f] = best;
      ++counts[best];
    }

    // repair empty clusters by stealing the frame farthest from its center
    for (std::size_t c = 0; c < num_states; ++c) {
      if (counts[c] != 0) continue;
      std::size_t victim = total;
      double worst = -1.0;
      for (std::size_t f = 0; f < total; ++f) {
        if (counts[assign[f]] <= 1) continue;  // never empty another cluster
        double d2 = sq_distance(f, assign[f]);
        if (d2 > worst) {
          worst = d2;
          victim = f;
        }
      }
      if (victim == total)
        throw validation_error("k-means: cannot repair an empty cluster");
      --counts[assign[victim]];
      assign[victim] = c;
      ++counts[c];
      changed = true;
    }

    // recompute centers
    Matrix next(num_states, dim);
    for (std::size_t f = 0; f < total; ++f)
      for (std::size_t d = 0; d < dim; ++d) next(assign[f], d) += frames(f, d);
    for (std::size_t c = 0; c < num_states; ++c)
      for (std::size_t d = 0; d < dim; ++d)
        next(c, d) /= static_cast<double>(counts[c]);
    centers = std::move(next);
    if (!changed) break;
  }

  KmeansInit init;
  init.means = centers;
  init.variances = Matrix(num_states, dim);
  for (std::size_t f = 0; f < total; ++f)
    for (std::size_t d = 0; d < dim; ++d) {
      double diff = frames(f, d) - centers(assign[f], d);
      init.variances(assign[f], d) += diff * diff;
    }
  for (std::size_t c = 0; c < num_states; ++c)
    for (std::size_t d = 0; d < dim; ++d)
      init.variances(c, d) =
          std::max(variance_floor, init.variances(c, d) / static_cast<double>(counts[c]));
  return init;
}

HmmParams make_hmm(std::size_t num_states, std::size_t dim, const Topology& topology,
                   InitMode transition_mode, std::uint64_t seed,
                   std::span<const ObservationSequence> sequences) {
  TransitionInit tr = init_transition(num_states, topology, transition_mode, seed);
  KmeansInit em = init_emission_kmeans(sequences, num_states, seed);
  HmmParams model;
  model.num_states = num_states;
  model.dim = dim;
  model.topology = topology;
  model.start = std::move(tr.start);
  model.transition = std::move(tr.transition);
  model.transition_mask = std::move(tr.mask);
  model.means = std::move(em.means);
  model.covariances = std::move(em.variances);
  return model;
}

double diag_gaussian_log_density(std::span<const double> x,
                                 std::span<const double> mean,
                                 std::span<const double> variance) {
  double sum = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    double diff = x[d] - mean[d];
    sum += kLog2Pi + std::log(variance[d]) + diff * diff / variance[d];
  }
  return -0.5 * sum;
}

Matrix forward_log(const HmmParams& model, const ObservationSequence& sequence) {
  check_dimension(model, sequence);
  std::size_t T = sequence.length(), K = model.num_states;
  Matrix b = emission_table(model, sequence);
  Matrix la = log_transition(model);
  Matrix alpha(T, K, kLogZero);
  for (std::size_t k = 0; k < K; ++k)
    alpha(0, k) = safe_log(model.start[k]) + b(0, k);
  std::vector<double> terms(K);
  for (std::size_t t = 1; t < T; ++t)
    for (std::size_t j = 0; j < K; ++j) {
      for (std::size_t i = 0; i < K; ++i) terms[i] = alpha(t - 1, i) + la(i, j);
      alpha(t, j) = logsumexp(terms) + b(t, j);
    }
  return alpha;
}

Matrix backward_log(const HmmParams& model, const ObservationSequence& sequence) {
  check_dimension(model, sequence);
  std::size_t T = sequence.length(), K = model.num_states;
  Matrix b = emission_table(model, sequence);
  Matrix la = log_transition(model);
  Matrix beta(T, K, 0.0);
  std::vector<double> terms(K);
  for (std::size_t t = T - 1; t-- > 0;)
    for (std::size_t i = 0; i < K; ++i) {
      for (std::size_t j = 0; j < K; ++j)
        terms[j] = la(i, j) + b(t + 1, j) + beta(t + 1, j);
      beta(t, i) = logsumexp(terms);
    }
  return beta;
}

double log_likelihood(const HmmParams& model, const ObservationSequence& sequence) {
  if (sequence.length() == 0) return 0.0;
  Matrix alpha = forward_log(model, sequence);
  return logsumexp(alpha.row(alpha.rows() - 1));
}

Matrix state_posteriors(const HmmParams& model, const ObservationSequence& sequence) {
  Matrix alpha = forward_log(model, sequence);
  Matrix beta = backward_log(model, sequence);
  std::size_t T = sequence.length(), K = model.num_states;
  double ll = logsumexp(alpha.row(T - 1));
  if (ll == kLogZero)
    throw validation_error("sequence is impossible under the model");
  Matrix gamma(T, K);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t k = 0; k < K; ++k)
      gamma(t, k) = std::exp(alpha(t, k) + beta(t, k) - ll);
  return gamma;
}

ViterbiResult viterbi(const HmmParams& model, const ObservationSequence& sequence) {
  check_dimension(model, sequence);
  std::size_t T = sequence.length(), K = model.num_states;
  ViterbiResult result;
  if (T == 0) return result;

  Matrix b = emission_table(model, sequence);
  Matrix la = log_transition(model);
  Matrix delta(T, K, kLogZero);
  std::vector<std::vector<std::size_t>> psi(T, std::vector<std::size_t>(K, 0));
  for (std::size_t k = 0; k < K; ++k)
    delta(0, k) = safe_log(model.start[k]) + b(0, k);
  for (std::size_t t = 1; t < T; ++t)
    for (std::size_t j = 0; j < K; ++j) {
      std::size_t best_i = 0;
      double best = delta(t - 1, 0) + la(0, j);
      for (std::size_t i = 1; i < K; ++i) {
        double v = delta(t - 1, i) + la(i, j);
        if (v > best) {  // strict: ties keep the lower predecessor
          best = v;
          best_i = i;
        }
      }
      delta(t, j) = best + b(t, j);
      psi[t][j] = best_i;
    }

  std::size_t best_k = 0;
  double best = delta(T - 1, 0);
  for (std::size_t k = 1; k < K; ++k)
    if (delta(T - 1, k) > best) {
      best = delta(T - 1, k);
      best_k = k;
    }
  if (best == kLogZero) return result;  // no possible path

  result.log_prob = best;
  result.path.resize(T);
  result.path[T - 1] = best_k;
  for (std::size_t t = T - 1; t-- > 0;) result.path[t] = psi[t + 1][result.path[t + 1]];
  return result;
}

HmmParams train(const HmmParams& model, std::span<const ObservationSequence> sequences,
                const TrainConfig& config, std::vector<double>* history) {
  if (sequences.empty()) throw validation_error("training needs at least one sequence");
  for (const auto& seq : sequences) check_dimension(model, seq);

  std::size_t K = model.num_states, D = model.dim;
  HmmParams current = model;
  if (history) history->clear();

  for (unsigned iter = 0; iter < config.iterations; ++iter) {
    Matrix la = log_transition(current);
    std::vector<double> start_acc(K, 0.0);
    Matrix xi_acc(K, K);          // expected transition counts
    std::vector<double> occ(K, 0.0);  // expected state occupancy, all frames
    Matrix mean_acc(K, D);
    Matrix sq_acc(K, D);
    double total_ll = 0.0;

    for (const auto& seq : sequences) {
      std::size_t T = seq.length();
      if (T == 0) continue;
      Matrix b = emission_table(current, seq);
      Matrix alpha = forward_log(current, seq);
      Matrix beta = backward_log(current, seq);
      double ll = logsumexp(alpha.row(T - 1));
      if (!std::isfinite(ll))
        throw training_error("iteration " + std::to_string(iter + 1) +
                             ": a training sequence has zero probability");
      total_ll += ll;

      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t k = 0; k < K; ++k) {
          double g = std::exp(alpha(t, k) + beta(t, k) - ll);
          occ[k] += g;
          for (std::size_t d = 0; d < D; ++d) {
            double o = seq.frames(t, d);
            mean_acc(k, d) += g * o;
            sq_acc(k, d) += g * o * o;
          }
          if (t == 0) start_acc[k] += g;
        }

      for (std::size_t t = 0; t + 1 < T; ++t)
        for (std::size_t i = 0; i < K; ++i) {
          if (alpha(t, i) == kLogZero) continue;
          for (std::size_t j = 0; j < K; ++j) {
            if (!current.allows(i, j)) continue;
            double v = alpha(t, i) + la(i, j) + b(t + 1, j) + beta(t + 1, j) - ll;
            xi_acc(i, j) += std::exp(v);
          }
        }
    }
    if (!std::isfinite(total_ll))
      throw training_error("iteration " + std::to_string(iter + 1) +
                           ": non-finite total log-likelihood");
    if (history) history->push_back(total_ll);

    // M step
    double start_total = 0.0;
    for (double v : start_acc) start_total += v;
    if (start_total > 0.0)
      for (std::size_t k = 0; k < K; ++k) current.start[k] = start_acc[k] / start_total;

    for (std::size_t i = 0; i < K; ++i) {
      double row_total = 0.0;
      for (std::size_t j = 0; j < K; ++j) row_total += xi_acc(i, j);
      if (row_total <= 0.0) continue;  // unvisited state keeps its old row
      for (std::size_t j = 0; j < K; ++j)
        current.transition(i, j) = current.allows(i, j) ? xi_acc(i, j) / row_total : 0.0;
    }

    for (std::size_t k = 0; k < K; ++k) {
      if (occ[k] <= 0.0) continue;  // zero occupancy keeps old emission
      for (std::size_t d = 0; d < D; ++d) {
        double mu = mean_acc(k, d) / occ[k];
        double var = sq_acc(k, d) / occ[k] - mu * mu;
        current.means(k, d) = mu;
        current.covariances(k, d) = std::max(config.variance_floor, var);
      }
    }

    for (double v : current.start)
      if (!std::isfinite(v))
        throw training_error("iteration " + std::to_string(iter + 1) +
                             ": non-finite start probability");
  }
  return current;
}

ObservationSequence sample(const HmmParams& model, std::size_t length,
                           std::uint64_t seed, double dt) {
  Rng rng(seed);
  ObservationSequence seq;
  seq.dt = dt;
  seq.frames = Matrix(length, model.dim);

  auto draw_state = [&](std::span<const double> dist) {
    double u = rng.next_double();
    double cum = 0.0;
    for (std::size_t k = 0; k < dist.size(); ++k) {
      cum += dist[k];
      if (u < cum) return k;
    }
    return dist.size() - 1;  // guard against rounding in the row sum
  };

  std::size_t state = 0;
  for (std::size_t t = 0; t < length; ++t) {
    state = t == 0 ? draw_state(model.start) : draw_state(model.transition.row(state));
    for (std::size_t d = 0; d < model.dim; ++d)
      seq.frames(t, d) = model.means(state, d) +
                         std::sqrt(model.covariances(state, d)) * rng.next_normal();
  }
  return seq;
}

namespace detail {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& rows) {
  if (rows.empty()) return Matrix();
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c)
      m(r, c) = rows.at(r).at(c).get<double>();
  return m;
}

nlohmann::json hmm_to_json_value(const HmmParams& model) {
  nlohmann::json doc;
  doc["num_states"] = model.num_states;
  doc["dim"] = model.dim;
  doc["topology"]["kind"] =
      model.topology.kind == TopologyKind::kErgodic ? "ergodic" : "left_to_right";
  if (model.topology.max_skip.has_value())
    doc["topology"]["max_skip"] = *model.topology.max_skip;
  doc["start"] = model.start;
  doc["transition"] = matrix_to_json(model.transition);
  doc["means"] = matrix_to_json(model.means);
  doc["covariances"] = matrix_to_json(model.covariances);
  doc["mask"] = model.transition_mask;
  return doc;
}

HmmParams hmm_from_json_value(const nlohmann::json& doc) {
  HmmParams model;
  model.num_states = doc.at("num_states").get<std::size_t>();
  model.dim = doc.at("dim").get<std::size_t>();
  std::string kind = doc.at("topology").at("kind").get<std::string>();
  if (kind == "ergodic")
    model.topology.kind = TopologyKind::kErgodic;
  else if (kind == "left_to_right")
    model.topology.kind = TopologyKind::kLeftToRight;
  else
    throw validation_error("unknown topology kind '" + kind + "'");
  if (doc.at("topology").contains("max_skip"))
    model.topology.max_skip = doc.at("topology").at("max_skip").get<unsigned>();
  model.start = doc.at("start").get<std::vector<double>>();
  model.transition = matrix_from_json(doc.at("transition"));
  model.means = matrix_from_json(doc.at("means"));
  model.covariances = matrix_from_json(doc.at("covariances"));
  model.transition_mask = doc.at("mask").get<std::vector<std::uint8_t>>();
  return model;
}

}  // namespace detail

std::string hmm_to_json(const HmmParams& model) {
  return detail::hmm_to_json_value(model).dump(2) + "\n";
}

HmmParams hmm_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw validation_error(std::string("bad model JSON: ") + e.what());
  }
  return detail::hmm_from_json_value(doc);
}

void validate_hmm(const HmmParams& model) {
  std::size_t K = model.num_states, D = model.dim;
  if (K == 0 || D == 0) throw validation_error("model has zero states or dimensions");
  if (model.start.size() != K || model.transition.rows() != K ||
      model.transition.cols() != K || model.means.rows() != K ||
      model.means.cols() != D || model.covariances.rows() != K ||
      model.covariances.cols() != D || model.transition_mask.size() != K * K)
    throw validation_error("model parameter shapes are inconsistent");

  double start_sum = 0.0;
  for (double p : model.start) {
    if (!(p >= 0.0)) throw validation_error("negative start probability");
    start_sum += p;
  }
  if (std::abs(start_sum - 1.0) > 1e-9)
    throw validation_error("start probabilities do not sum to 1");

  for (std::size_t i = 0; i < K; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
      double a = model.transition(i, j);
      if (!(a >= 0.0)) throw validation_error("negative transition probability");
      if (!model.allows(i, j) && a != 0.0)
        throw validation_error("transition outside the topology support");
      row_sum += a;
    }
    if (std::abs(row_sum - 1.0) > 1e-9)
      throw validation_error("transition row " + std::to_string(i) +
                             " does not sum to 1");
  }

  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t d = 0; d < D; ++d) {
      double v = model.covariances(k, d);
      if (!std::isfinite(v) || v <= 0.0)
        throw validation_error("non-positive covariance entry");
    }
}

}  // namespace motionhmm
