#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "motionhmm/dataset.hpp"
#include "motionhmm/matrix.hpp"

namespace motionhmm {

// One-hot over the highest score; ties resolve to the lowest index. All
// scores equal to kLogZero means no model could explain the input at all.
LabelVector max_decision(std::span<const double> scores);

// Per-entry bit: scores[i] >= boundaries[i].
LabelVector threshold_decision(std::span<const double> scores,
                               std::span<const double> boundaries);

enum class LinearLoss { kLogistic, kSquaredHinge };
enum class Penalty { kL1, kL2 };

struct LinearModel {
  std::vector<double> weights;
  double intercept = 0.0;
};

struct LinearFitConfig {
  LinearLoss loss = LinearLoss::kLogistic;
  Penalty penalty = Penalty::kL2;
  double C = 1.0;               // loss weight: objective = C * sum loss + penalty
  double tolerance = 1e-6;      // on the (proximal) gradient infinity norm
  unsigned max_iterations = 10000;
};

// Minimizes C * sum_n loss(y_n, w'x_n + b) + penalty(w) by proximal
// gradient descent with backtracking line search (the intercept is never
// penalized). Labels are 0/1. The objective decreases monotonically; when
// history is given it records the objective per accepted step. A
// single-class label column short-circuits to the constant predictor w = 0,
// b = +-1.
LinearModel fit_linear(const Matrix& features, std::span<const std::uint8_t> labels,
                       const LinearFitConfig& config,
                       std::vector<double>* history = nullptr);

int predict_linear(const LinearModel& model, std::span<const double> x);

// Smooth part of the objective (C * sum loss, plus the L2 term when
// penalty is L2) and its gradient wrt (w, b); exposed for verification.
double linear_objective_smooth(const Matrix& features,
                               std::span<const std::uint8_t> labels,
                               const LinearFitConfig& config,
                               std::span<const double> weights, double intercept);
void linear_gradient_smooth(const Matrix& features,
                            std::span<const std::uint8_t> labels,
                            const LinearFitConfig& config,
                            std::span<const double> weights, double intercept,
                            std::span<double> grad_weights, double& grad_intercept);
double linear_objective(const Matrix& features, std::span<const std::uint8_t> labels,
                        const LinearFitConfig& config,
                        std::span<const double> weights, double intercept);

// One independent binary model per label column, all trained on the same
// feature rows.
std::vector<LinearModel> binary_relevance_fit(const Matrix& features,
                                              const std::vector<LabelVector>& labels,
                                              const LinearFitConfig& config);

enum class Impurity { kGini, kInfoGain };

struct TreeConfig {
  Impurity impurity = Impurity::kGini;
  unsigned max_depth = 15;
  // 0 = consider every feature at each node; otherwise sample this many
  // (without replacement, seeded) per node.
  std::size_t features_per_node = 0;
  std::uint64_t seed = 0;
};

// Multi-label CART node. Leaves carry the positive fraction per label;
// internal nodes route x[feature] <= threshold to the left child.
struct TreeNode {
  bool leaf = true;
  std::size_t feature = 0;
  double threshold = 0.0;
  std::size_t left = 0;
  std::size_t right = 0;
  std::vector<double> fractions;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
};

DecisionTree fit_tree(const Matrix& features, const std::vector<LabelVector>& labels,
                      const TreeConfig& config);

// Leaf fractions thresholded at 0.5; exactly 0.5 counts as positive.
LabelVector predict_tree(const DecisionTree& tree, std::span<const double> x);

struct ForestConfig {
  std::size_t num_trees = 40;
  TreeConfig tree;
  std::uint64_t seed = 0;
};

// Bagging: every tree sees a bootstrap resample (N seeded draws with
// replacement) and uses per-node feature subsets of size ceil(sqrt(M)).
// Prediction is a per-label majority vote; ties count as positive.
struct RandomForest {
  std::vector<DecisionTree> trees;
};

RandomForest fit_forest(const Matrix& features, const std::vector<LabelVector>& labels,
                        const ForestConfig& config);
LabelVector predict_forest(const RandomForest& forest, std::span<const double> x);

// --- multi-label decision makers over per-model score vectors ---

enum class DecisionKind {
  kMax,        // single best model
  kThreshold,  // fixed per-label boundaries
  kLinear,     // one linear model per label (logistic or squared hinge)
  kTree,
  kForest,
};

struct DecisionConfig {
  DecisionKind kind = DecisionKind::kLinear;
  double threshold = 0.0;    // kThreshold
  LinearFitConfig linear;    // kLinear
  TreeConfig tree;           // kTree
  ForestConfig forest;       // kForest
};

// A fitted decision stage: maps an L-column score row to label bits.
struct DecisionMaker {
  DecisionConfig config;
  std::vector<LinearModel> linear_models;  // kLinear, one per label
  DecisionTree tree;
  RandomForest forest;
};

DecisionMaker fit_decision(const Matrix& scores, const std::vector<LabelVector>& labels,
                           const DecisionConfig& config, std::uint64_t seed);
LabelVector decide(const DecisionMaker& dm, std::span<const double> scores);

std::string decision_to_json(const DecisionMaker& dm);
DecisionMaker decision_from_json(const std::string& text);

}  // namespace motionhmm
