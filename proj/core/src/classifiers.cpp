#include "motionhmm/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "motionhmm/errors.hpp"
#include "motionhmm/hmm.hpp"
#include "motionhmm/rng.hpp"

namespace motionhmm {

LabelVector max_decision(std::span<const double> scores) {
  if (scores.empty()) throw validation_error("empty score vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  if (scores[best] == kLogZero)
    throw validation_error("no model assigns the input nonzero probability");
  LabelVector out(scores.size(), 0);
  out[best] = 1;
  return out;
}

LabelVector threshold_decision(std::span<const double> scores,
                               std::span<const double> boundaries) {
  if (scores.size() != boundaries.size())
    throw validation_error("scores and boundaries differ in length");
  LabelVector out(scores.size(), 0);
  for (std::size_t i = 0; i < scores.size(); ++i)
    out[i] = scores[i] >= boundaries[i] ? 1 : 0;
  return out;
}

// ---------------------------------------------------------------------------
// linear models
// ---------------------------------------------------------------------------

namespace {

// log(1 + exp(-u)) without overflow for large |u|
double logistic_loss(double u) {
  return u > 0.0 ? std::log1p(std::exp(-u)) : -u + std::log1p(std::exp(u));
}

// d loss / d f where f is the raw score and u = sign * f the margin
double loss_dfdf(LinearLoss loss, double sign, double f) {
  double u = sign * f;
  switch (loss) {
    case LinearLoss::kLogistic:
      // -sign * sigmoid(-u), written to stay bounded
      return -sign / (1.0 + std::exp(u));
    case LinearLoss::kSquaredHinge:
      return u < 1.0 ? -2.0 * sign * (1.0 - u) : 0.0;
  }
  return 0.0;
}

double loss_value(LinearLoss loss, double sign, double f) {
  double u = sign * f;
  switch (loss) {
    case LinearLoss::kLogistic:
      return logistic_loss(u);
    case LinearLoss::kSquaredHinge: {
      double gap = std::max(0.0, 1.0 - u);
      return gap * gap;
    }
  }
  return 0.0;
}

double dot_row(const Matrix& x, std::size_t row, std::span<const double> w, double b) {
  double f = b;
  for (std::size_t j = 0; j < x.cols(); ++j) f += w[j] * x(row, j);
  return f;
}

void check_linear_shapes(const Matrix& features, std::span<const std::uint8_t> labels) {
  if (features.rows() == 0 || features.cols() == 0)
    throw validation_error("empty feature matrix");
  if (labels.size() != features.rows())
    throw validation_error("label count does not match the feature rows");
}

}  // namespace

double linear_objective_smooth(const Matrix& features,
                               std::span<const std::uint8_t> labels,
                               const LinearFitConfig& config,
                               std::span<const double> weights, double intercept) {
  check_linear_shapes(features, labels);
  double total = 0.0;
  for (std::size_t i = 0; i < features.rows(); ++i) {
    double sign = labels[i] ? 1.0 : -1.0;
    total += loss_value(config.loss, sign, dot_row(features, i, weights, intercept));
  }
  total *= config.C;
  if (config.penalty == Penalty::kL2)
    for (double w : weights) total += 0.5 * w * w;
  return total;
}

void linear_gradient_smooth(const Matrix& features,
                            std::span<const std::uint8_t> labels,
                            const LinearFitConfig& config,
                            std::span<const double> weights, double intercept,
                            std::span<double> grad_weights, double& grad_intercept) {
  check_linear_shapes(features, labels);
  std::fill(grad_weights.begin(), grad_weights.end(), 0.0);
  grad_intercept = 0.0;
  for (std::size_t i = 0; i < features.rows(); ++i) {
    double sign = labels[i] ? 1.0 : -1.0;
    double g = loss_dfdf(config.loss, sign, dot_row(features, i, weights, intercept));
    for (std::size_t j = 0; j < features.cols(); ++j)
      grad_weights[j] += g * features(i, j);
    grad_intercept += g;
  }
  for (std::size_t j = 0; j < features.cols(); ++j) grad_weights[j] *= config.C;
  grad_intercept *= config.C;
  if (config.penalty == Penalty::kL2)
    for (std::size_t j = 0; j < features.cols(); ++j) grad_weights[j] += weights[j];
}

double linear_objective(const Matrix& features, std::span<const std::uint8_t> labels,
                        const LinearFitConfig& config,
                        std::span<const double> weights, double intercept) {
  double total = linear_objective_smooth(features, labels, config, weights, intercept);
  if (config.penalty == Penalty::kL1)
    for (double w : weights) total += std::abs(w);
  return total;
}

LinearModel fit_linear(const Matrix& features, std::span<const std::uint8_t> labels,
                       const LinearFitConfig& config,
                       std::vector<double>* history) {
  check_linear_shapes(features, labels);
  if (!(config.C > 0.0)) throw validation_error("C must be positive");
  const std::size_t M = features.cols();

  bool any_pos = false, any_neg = false;
  for (std::uint8_t y : labels) (y ? any_pos : any_neg) = true;
  if (!any_pos || !any_neg) {
    // A one-class column carries no boundary information; emit the constant
    // predictor instead of chasing an unbounded optimum.
    LinearModel constant;
    constant.weights.assign(M, 0.0);
    constant.intercept = any_pos ? 1.0 : -1.0;
    if (history)
      history->push_back(linear_objective(features, labels, config,
                                          constant.weights, constant.intercept));
    return constant;
  }

  // ISTA: gradient step on the smooth part, then (for L1) a soft-threshold
  // on the weights. Backtracking halves the step until the quadratic upper
  // bound holds, which makes the full objective monotone.
  std::vector<double> w(M, 0.0), cand_w(M);
  double b = 0.0, cand_b = 0.0;
  std::vector<double> grad(M);
  double grad_b = 0.0;
  double step = 1.0;

  double smooth = linear_objective_smooth(features, labels, config, w, b);
  auto full = [&](std::span<const double> wv, double bv, double smooth_part) {
    double f = smooth_part;
    if (config.penalty == Penalty::kL1)
      for (double v : wv) f += std::abs(v);
    return f;
  };
  if (history) history->push_back(full(w, b, smooth));

  for (unsigned iter = 0; iter < config.max_iterations; ++iter) {
    linear_gradient_smooth(features, labels, config, w, b, grad, grad_b);

    double cand_smooth = 0.0;
    for (int shrink = 0; shrink < 80; ++shrink) {
      for (std::size_t j = 0; j < M; ++j) {
        double v = w[j] - step * grad[j];
        if (config.penalty == Penalty::kL1) {
          // soft-threshold at step * 1 (the L1 weight); exact zeros on purpose
          if (v > step)
            v -= step;
          else if (v < -step)
            v += step;
          else
            v = 0.0;
        }
        cand_w[j] = v;
      }
      cand_b = b - step * grad_b;

      cand_smooth = linear_objective_smooth(features, labels, config, cand_w, cand_b);
      double linearized = smooth, dist2 = 0.0;
      for (std::size_t j = 0; j < M; ++j) {
        double d = cand_w[j] - w[j];
        linearized += grad[j] * d;
        dist2 += d * d;
      }
      double db = cand_b - b;
      linearized += grad_b * db;
      dist2 += db * db;
      if (cand_smooth <= linearized + dist2 / (2.0 * step) + 1e-12) break;
      step *= 0.5;
    }

    // proximal gradient map, the optimality measure for both penalties
    double residual = std::abs(b - cand_b) / step;
    for (std::size_t j = 0; j < M; ++j)
      residual = std::max(residual, std::abs(w[j] - cand_w[j]) / step);

    w.swap(cand_w);
    b = cand_b;
    smooth = cand_smooth;
    if (history) history->push_back(full(w, b, smooth));
    if (residual <= config.tolerance) break;
  }

  LinearModel model;
  model.weights = std::move(w);
  model.intercept = b;
  return model;
}

int predict_linear(const LinearModel& model, std::span<const double> x) {
  if (x.size() != model.weights.size())
    throw validation_error("feature vector length does not match the model");
  double f = model.intercept;
  for (std::size_t j = 0; j < x.size(); ++j) f += model.weights[j] * x[j];
  return f > 0.0 ? 1 : 0;
}

std::vector<LinearModel> binary_relevance_fit(const Matrix& features,
                                              const std::vector<LabelVector>& labels,
                                              const LinearFitConfig& config) {
  if (labels.size() != features.rows())
    throw validation_error("label rows do not match the feature rows");
  if (labels.empty()) throw validation_error("empty training set");
  const std::size_t L = labels.front().size();
  for (const auto& row : labels)
    if (row.size() != L) throw validation_error("ragged label matrix");

  std::vector<LinearModel> models;
  models.reserve(L);
  std::vector<std::uint8_t> column(features.rows());
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t i = 0; i < features.rows(); ++i) column[i] = labels[i][l];
    models.push_back(fit_linear(features, column, config));
  }
  return models;
}

// ---------------------------------------------------------------------------
// trees and forests
// ---------------------------------------------------------------------------

namespace {

double binary_impurity(Impurity kind, double p) {
  switch (kind) {
    case Impurity::kGini:
      return 2.0 * p * (1.0 - p);
    case Impurity::kInfoGain: {
      if (p <= 0.0 || p >= 1.0) return 0.0;
      return -(p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p));
    }
  }
  return 0.0;
}

// mean binary impurity over the label columns of the given rows
double node_impurity(Impurity kind, const std::vector<LabelVector>& labels,
                     std::span<const std::size_t> rows, std::size_t num_labels) {
  double total = 0.0;
  for (std::size_t l = 0; l < num_labels; ++l) {
    std::size_t pos = 0;
    for (std::size_t r : rows) pos += labels[r][l];
    total += binary_impurity(kind, static_cast<double>(pos) /
                                       static_cast<double>(rows.size()));
  }
  return total / static_cast<double>(num_labels);
}

struct TreeBuilder {
  const Matrix& x;
  const std::vector<LabelVector>& y;
  const TreeConfig& cfg;
  std::size_t num_labels;
  Rng rng;
  std::vector<TreeNode> nodes;

  std::size_t build(std::vector<std::size_t> rows, unsigned depth) {
    std::size_t index = nodes.size();
    nodes.emplace_back();

    std::vector<double> fractions(num_labels, 0.0);
    for (std::size_t r : rows)
      for (std::size_t l = 0; l < num_labels; ++l) fractions[l] += y[r][l];
    for (double& f : fractions) f /= static_cast<double>(rows.size());

    bool pure = true;
    for (double f : fractions)
      if (f != 0.0 && f != 1.0) pure = false;

    std::size_t best_feature = 0;
    double best_threshold = 0.0, best_gain = 0.0;
    if (!pure && depth < cfg.max_depth) {
      double here = node_impurity(cfg.impurity, y, rows, num_labels);
      for (std::size_t f : candidate_features()) {
        auto [thr, gain] = best_split_on(f, rows, here);
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = f;
          best_threshold = thr;
        }
      }
    }

    if (best_gain <= 0.0) {
      nodes[index].leaf = true;
      nodes[index].fractions = std::move(fractions);
      return index;
    }

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows)
      (x(r, best_feature) <= best_threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    std::size_t left_index = build(std::move(left), depth + 1);
    std::size_t right_index = build(std::move(right), depth + 1);
    nodes[index].leaf = false;
    nodes[index].feature = best_feature;
    nodes[index].threshold = best_threshold;
    nodes[index].left = left_index;
    nodes[index].right = right_index;
    return index;
  }

  // all features, or a seeded sample without replacement (drawn in node
  // creation order, so rebuilding with the same seed replays the run)
  std::vector<std::size_t> candidate_features() {
    std::vector<std::size_t> all(x.cols());
    for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
    if (cfg.features_per_node == 0 || cfg.features_per_node >= all.size())
      return all;
    for (std::size_t i = 0; i < cfg.features_per_node; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng.next_below(all.size() - i));
      std::swap(all[i], all[j]);
    }
    all.resize(cfg.features_per_node);
    return all;
  }

  // best midpoint threshold on one feature; gain relative to `here`
  std::pair<double, double> best_split_on(std::size_t feature,
                                          std::span<const std::size_t> rows,
                                          double here) {
    std::vector<std::pair<double, std::size_t>> order;
    order.reserve(rows.size());
    for (std::size_t r : rows) order.emplace_back(x(r, feature), r);
    std::sort(order.begin(), order.end());

    double best_thr = 0.0, best_gain = 0.0;
    std::vector<std::size_t> left, right;
    for (std::size_t cut = 1; cut < order.size(); ++cut) {
      if (order[cut - 1].first == order[cut].first) continue;
      double thr = 0.5 * (order[cut - 1].first + order[cut].first);
      left.clear();
      right.clear();
      for (std::size_t i = 0; i < cut; ++i) left.push_back(order[i].second);
      for (std::size_t i = cut; i < order.size(); ++i) right.push_back(order[i].second);
      double child =
          (static_cast<double>(left.size()) *
               node_impurity(cfg.impurity, y, left, num_labels) +
           static_cast<double>(right.size()) *
               node_impurity(cfg.impurity, y, right, num_labels)) /
          static_cast<double>(order.size());
      double gain = here - child;
      if (gain > best_gain) {
        best_gain = gain;
        best_thr = thr;
      }
    }
    return {best_thr, best_gain};
  }
};

void check_tree_inputs(const Matrix& features, const std::vector<LabelVector>& labels) {
  if (features.rows() == 0 || features.cols() == 0)
    throw validation_error("empty feature matrix");
  if (labels.size() != features.rows())
    throw validation_error("label rows do not match the feature rows");
  if (labels.front().empty()) throw validation_error("empty label vectors");
  for (const auto& row : labels)
    if (row.size() != labels.front().size())
      throw validation_error("ragged label matrix");
}

}  // namespace

DecisionTree fit_tree(const Matrix& features, const std::vector<LabelVector>& labels,
                      const TreeConfig& config) {
  check_tree_inputs(features, labels);
  TreeBuilder builder{features, labels, config, labels.front().size(),
                      Rng(config.seed), {}};
  std::vector<std::size_t> rows(features.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  builder.build(std::move(rows), 0);
  return DecisionTree{std::move(builder.nodes)};
}

LabelVector predict_tree(const DecisionTree& tree, std::span<const double> x) {
  if (tree.nodes.empty()) throw validation_error("empty decision tree");
  std::size_t at = 0;
  while (!tree.nodes[at].leaf) {
    const TreeNode& n = tree.nodes[at];
    at = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  const auto& fractions = tree.nodes[at].fractions;
  LabelVector out(fractions.size(), 0);
  for (std::size_t l = 0; l < fractions.size(); ++l)
    out[l] = fractions[l] >= 0.5 ? 1 : 0;
  return out;
}

RandomForest fit_forest(const Matrix& features, const std::vector<LabelVector>& labels,
                        const ForestConfig& config) {
  check_tree_inputs(features, labels);
  if (config.num_trees == 0) throw validation_error("a forest needs at least one tree");
  const std::size_t N = features.rows();

  RandomForest forest;
  forest.trees.reserve(config.num_trees);
  for (std::size_t t = 0; t < config.num_trees; ++t) {
    Rng boot(derive_seed(config.seed, "bootstrap", t));
    Matrix resampled(N, features.cols());
    std::vector<LabelVector> relabeled(N);
    for (std::size_t i = 0; i < N; ++i) {
      std::size_t pick = static_cast<std::size_t>(boot.next_below(N));
      for (std::size_t j = 0; j < features.cols(); ++j)
        resampled(i, j) = features(pick, j);
      relabeled[i] = labels[pick];
    }
    TreeConfig tree_cfg = config.tree;
    tree_cfg.seed = derive_seed(config.seed, "tree", t);
    if (tree_cfg.features_per_node == 0)
      tree_cfg.features_per_node = static_cast<std::size_t>(
          std::ceil(std::sqrt(static_cast<double>(features.cols()))));
    forest.trees.push_back(fit_tree(resampled, relabeled, tree_cfg));
  }
  return forest;
}

LabelVector predict_forest(const RandomForest& forest, std::span<const double> x) {
  if (forest.trees.empty()) throw validation_error("empty forest");
  std::vector<std::size_t> votes;
  for (const auto& tree : forest.trees) {
    LabelVector v = predict_tree(tree, x);
    if (votes.empty()) votes.assign(v.size(), 0);
    for (std::size_t l = 0; l < v.size(); ++l) votes[l] += v[l];
  }
  LabelVector out(votes.size(), 0);
  for (std::size_t l = 0; l < votes.size(); ++l)
    out[l] = 2 * votes[l] >= forest.trees.size() ? 1 : 0;
  return out;
}

// ---------------------------------------------------------------------------
// decision makers
// ---------------------------------------------------------------------------

DecisionMaker fit_decision(const Matrix& scores, const std::vector<LabelVector>& labels,
                           const DecisionConfig& config, std::uint64_t seed) {
  DecisionMaker dm;
  dm.config = config;
  switch (config.kind) {
    case DecisionKind::kMax:
    case DecisionKind::kThreshold:
      break;  // nothing to fit
    case DecisionKind::kLinear:
      dm.linear_models = binary_relevance_fit(scores, labels, config.linear);
      break;
    case DecisionKind::kTree:
      dm.config.tree.seed = seed;
      dm.tree = fit_tree(scores, labels, dm.config.tree);
      break;
    case DecisionKind::kForest:
      dm.config.forest.seed = seed;
      dm.forest = fit_forest(scores, labels, dm.config.forest);
      break;
  }
  return dm;
}

LabelVector decide(const DecisionMaker& dm, std::span<const double> scores) {
  switch (dm.config.kind) {
    case DecisionKind::kMax:
      return max_decision(scores);
    case DecisionKind::kThreshold: {
      std::vector<double> bounds(scores.size(), dm.config.threshold);
      return threshold_decision(scores, bounds);
    }
    case DecisionKind::kLinear: {
      LabelVector out(dm.linear_models.size(), 0);
      for (std::size_t l = 0; l < dm.linear_models.size(); ++l)
        out[l] = static_cast<std::uint8_t>(predict_linear(dm.linear_models[l], scores));
      return out;
    }
    case DecisionKind::kTree:
      return predict_tree(dm.tree, scores);
    case DecisionKind::kForest:
      return predict_forest(dm.forest, scores);
  }
  throw validation_error("unknown decision kind");
}

namespace {

std::string kind_name(DecisionKind kind) {
  switch (kind) {
    case DecisionKind::kMax: return "max";
    case DecisionKind::kThreshold: return "threshold";
    case DecisionKind::kLinear: return "linear";
    case DecisionKind::kTree: return "tree";
    case DecisionKind::kForest: return "forest";
  }
  throw validation_error("unknown decision kind");
}

DecisionKind kind_from_name(const std::string& name) {
  if (name == "max") return DecisionKind::kMax;
  if (name == "threshold") return DecisionKind::kThreshold;
  if (name == "linear") return DecisionKind::kLinear;
  if (name == "tree") return DecisionKind::kTree;
  if (name == "forest") return DecisionKind::kForest;
  throw validation_error("unknown decision kind '" + name + "'");
}

nlohmann::json linear_config_to_json(const LinearFitConfig& cfg) {
  nlohmann::json doc;
  doc["loss"] = cfg.loss == LinearLoss::kLogistic ? "logistic" : "squared_hinge";
  doc["penalty"] = cfg.penalty == Penalty::kL1 ? "l1" : "l2";
  doc["C"] = cfg.C;
  doc["tolerance"] = cfg.tolerance;
  doc["max_iterations"] = cfg.max_iterations;
  return doc;
}

LinearFitConfig linear_config_from_json(const nlohmann::json& doc) {
  LinearFitConfig cfg;
  std::string loss = doc.at("loss").get<std::string>();
  if (loss == "logistic")
    cfg.loss = LinearLoss::kLogistic;
  else if (loss == "squared_hinge")
    cfg.loss = LinearLoss::kSquaredHinge;
  else
    throw validation_error("unknown loss '" + loss + "'");
  std::string penalty = doc.at("penalty").get<std::string>();
  if (penalty == "l1")
    cfg.penalty = Penalty::kL1;
  else if (penalty == "l2")
    cfg.penalty = Penalty::kL2;
  else
    throw validation_error("unknown penalty '" + penalty + "'");
  cfg.C = doc.at("C").get<double>();
  cfg.tolerance = doc.at("tolerance").get<double>();
  cfg.max_iterations = doc.at("max_iterations").get<unsigned>();
  return cfg;
}

nlohmann::json tree_config_to_json(const TreeConfig& cfg) {
  nlohmann::json doc;
  doc["impurity"] = cfg.impurity == Impurity::kGini ? "gini" : "info_gain";
  doc["max_depth"] = cfg.max_depth;
  doc["features_per_node"] = cfg.features_per_node;
  doc["seed"] = cfg.seed;
  return doc;
}

TreeConfig tree_config_from_json(const nlohmann::json& doc) {
  TreeConfig cfg;
  std::string imp = doc.at("impurity").get<std::string>();
  if (imp == "gini")
    cfg.impurity = Impurity::kGini;
  else if (imp == "info_gain")
    cfg.impurity = Impurity::kInfoGain;
  else
    throw validation_error("unknown impurity '" + imp + "'");
  cfg.max_depth = doc.at("max_depth").get<unsigned>();
  cfg.features_per_node = doc.at("features_per_node").get<std::size_t>();
  cfg.seed = doc.at("seed").get<std::uint64_t>();
  return cfg;
}

nlohmann::json nodes_to_json(const std::vector<TreeNode>& nodes) {
  nlohmann::json arr = nlohmann::json::array();
  for (const TreeNode& n : nodes) {
    nlohmann::json doc;
    if (n.leaf) {
      doc["fractions"] = n.fractions;
    } else {
      doc["feature"] = n.feature;
      doc["threshold"] = n.threshold;
      doc["left"] = n.left;
      doc["right"] = n.right;
    }
    arr.push_back(std::move(doc));
  }
  return arr;
}

std::vector<TreeNode> nodes_from_json(const nlohmann::json& arr) {
  std::vector<TreeNode> nodes;
  for (const auto& doc : arr) {
    TreeNode n;
    if (doc.contains("fractions")) {
      n.leaf = true;
      n.fractions = doc.at("fractions").get<std::vector<double>>();
    } else {
      n.leaf = false;
      n.feature = doc.at("feature").get<std::size_t>();
      n.threshold = doc.at("threshold").get<double>();
      n.left = doc.at("left").get<std::size_t>();
      n.right = doc.at("right").get<std::size_t>();
    }
    nodes.push_back(std::move(n));
  }
  return nodes;
}

}  // namespace

std::string decision_to_json(const DecisionMaker& dm) {
  nlohmann::json doc;
  doc["kind"] = kind_name(dm.config.kind);
  switch (dm.config.kind) {
    case DecisionKind::kMax:
      break;
    case DecisionKind::kThreshold:
      doc["threshold"] = dm.config.threshold;
      break;
    case DecisionKind::kLinear: {
      doc["config"] = linear_config_to_json(dm.config.linear);
      nlohmann::json models = nlohmann::json::array();
      for (const auto& m : dm.linear_models) {
        nlohmann::json entry;
        entry["weights"] = m.weights;
        entry["intercept"] = m.intercept;
        models.push_back(std::move(entry));
      }
      doc["models"] = std::move(models);
      break;
    }
    case DecisionKind::kTree:
      doc["config"] = tree_config_to_json(dm.config.tree);
      doc["nodes"] = nodes_to_json(dm.tree.nodes);
      break;
    case DecisionKind::kForest: {
      nlohmann::json cfg;
      cfg["num_trees"] = dm.config.forest.num_trees;
      cfg["seed"] = dm.config.forest.seed;
      cfg["tree"] = tree_config_to_json(dm.config.forest.tree);
      doc["config"] = std::move(cfg);
      nlohmann::json trees = nlohmann::json::array();
      for (std::size_t t = 0; t < dm.forest.trees.size(); ++t) {
        nlohmann::json entry;
        entry["bootstrap_seed"] = derive_seed(dm.config.forest.seed, "bootstrap", t);
        entry["nodes"] = nodes_to_json(dm.forest.trees[t].nodes);
        trees.push_back(std::move(entry));
      }
      doc["trees"] = std::move(trees);
      break;
    }
  }
  return doc.dump(2) + "\n";
}

DecisionMaker decision_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw validation_error(std::string("bad decision JSON: ") + e.what());
  }
  DecisionMaker dm;
  dm.config.kind = kind_from_name(doc.at("kind").get<std::string>());
  switch (dm.config.kind) {
    case DecisionKind::kMax:
      break;
    case DecisionKind::kThreshold:
      dm.config.threshold = doc.at("threshold").get<double>();
      break;
    case DecisionKind::kLinear:
      dm.config.linear = linear_config_from_json(doc.at("config"));
      for (const auto& entry : doc.at("models")) {
        LinearModel m;
        m.weights = entry.at("weights").get<std::vector<double>>();
        m.intercept = entry.at("intercept").get<double>();
        dm.linear_models.push_back(std::move(m));
      }
      break;
    case DecisionKind::kTree:
      dm.config.tree = tree_config_from_json(doc.at("config"));
      dm.tree.nodes = nodes_from_json(doc.at("nodes"));
      break;
    case DecisionKind::kForest: {
      const auto& cfg = doc.at("config");
      dm.config.forest.num_trees = cfg.at("num_trees").get<std::size_t>();
      dm.config.forest.seed = cfg.at("seed").get<std::uint64_t>();
      dm.config.forest.tree = tree_config_from_json(cfg.at("tree"));
      for (const auto& entry : doc.at("trees"))
        dm.forest.trees.push_back(DecisionTree{nodes_from_json(entry.at("nodes"))});
      break;
    }
  }
  return dm;
}

}  // namespace motionhmm
