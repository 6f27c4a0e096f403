#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ocrt/data_model.hpp"
#include "ocrt/prediction.hpp"

namespace ocrt {

/// Training method.
///  - Cart: unconstrained recursive partitioning (baseline).
///  - EOcrt: exhaustive split search with the constrained prediction solved
///    for every candidate child.
///  - MOcrt: per-node single-depth MIP, solved exactly by enumerating the
///    one-hot feature choice and the finitely many distinct thresholds.
///  - EpOcrt: grown like Cart, then every leaf is repaired with the
///    constrained prediction over its training rows.
enum class Method { Cart, EOcrt, MOcrt, EpOcrt };

std::string to_string(Method method);
Method parse_method(const std::string& name);
bool is_constrained(Method method);

struct TrainConfig {
  Method method = Method::Cart;
  std::size_t max_depth = 5;
  std::size_t min_samples_split = 10;
  std::size_t min_samples_leaf = 5;
  Loss loss = Loss::mse();
  std::optional<FeasibleSet> feasible_set;
  /// Number of features drawn per split (forests); all features when empty.
  std::optional<std::size_t> feature_subsample;
  std::uint64_t rng_seed = 0;
  /// Per-node deadline for the M-OCRT enumeration, in seconds.
  double node_time_budget = 120.0;
  /// Sibling subtrees are grown concurrently when greater than one.
  std::size_t threads = 1;

  void validate() const;
};

/// Loss used while growing unconstrained (Cart and the EP growth phase):
/// MSE, MAD and Poisson are kept, any other loss grows with MSE.
Loss growth_loss(const Loss& loss);

class SplitRejectedError : public Error {
 public:
  using Error::Error;
};

struct SplitDecision {
  std::size_t feature = 0;
  double threshold = 0.0;
  std::vector<Index> left_indices;   // x_j < threshold
  std::vector<Index> right_indices;  // x_j ≥ threshold
  Vector left_pred;
  Vector right_pred;
  /// α⇁·loss(left) + α↽·loss(right), α the child size fractions.
  double weighted_loss = 0.0;
  /// The M-OCRT enumeration hit its deadline; the split is the best found.
  bool timed_out = false;
};

/// Node prediction rule: constrained over `set` when given, else unconstrained.
class NodePredictor {
 public:
  NodePredictor(Loss loss, const FeasibleSet* set) : loss_(std::move(loss)), set_(set) {}

  PredictionResult operator()(const TargetRows& rows) const;
  /// True when the prediction depends on the rows only through their mean.
  bool mean_sufficient() const { return loss_.kind() == LossKind::Mse; }
  Vector from_mean(const Vector& mean) const;

  const Loss& loss() const { return loss_; }
  const FeasibleSet* set() const { return set_; }

 private:
  Loss loss_;
  const FeasibleSet* set_;
};

// ============================================================================
// Tree structure
// ============================================================================

struct TreeNode;

struct Leaf {
  Vector prediction;
  std::size_t n_samples = 0;
  double train_loss = 0.0;
  /// Training row indices (transient; not serialized).
  std::vector<Index> rows;
};

struct Branch {
  std::size_t feature = 0;
  double threshold = 0.0;
  std::unique_ptr<TreeNode> left;
  std::unique_ptr<TreeNode> right;
  /// Node loss and accepted split loss, kept for auditing.
  double node_loss = 0.0;
  double split_loss = 0.0;
  std::size_t n_samples = 0;
};

struct TreeNode {
  std::variant<Leaf, Branch> content;

  bool is_leaf() const { return std::holds_alternative<Leaf>(content); }
  const Leaf& leaf() const { return std::get<Leaf>(content); }
  Leaf& leaf() { return std::get<Leaf>(content); }
  const Branch& branch() const { return std::get<Branch>(content); }
  Branch& branch() { return std::get<Branch>(content); }
};

class Tree {
 public:
  Tree() = default;
  Tree(TreeNode root, std::size_t n_features, std::size_t n_targets, Method method)
      : root_(std::make_unique<TreeNode>(std::move(root))),
        n_features_(n_features),
        n_targets_(n_targets),
        method_(method) {}

  const TreeNode& root() const { return *root_; }
  TreeNode& root() { return *root_; }
  std::size_t n_features() const { return n_features_; }
  std::size_t n_targets() const { return n_targets_; }
  Method method() const { return method_; }

  std::size_t depth() const;
  std::size_t leaf_count() const;
  /// Leaves in depth-first (left before right) order.
  std::vector<const Leaf*> leaves() const;

  std::size_t timed_out_nodes = 0;

 private:
  std::unique_ptr<TreeNode> root_;
  std::size_t n_features_ = 0;
  std::size_t n_targets_ = 0;
  Method method_ = Method::Cart;
};

// ============================================================================
// Operations
// ============================================================================

/// Evaluates one candidate split of `node_rows` at x_j < v. Throws
/// SplitRejectedError when a child has fewer than `min_samples_leaf` rows.
SplitDecision split_gain(const Dataset& data, std::span<const Index> node_rows, std::size_t feature,
                         double threshold, const NodePredictor& predictor, std::size_t min_samples_leaf);

/// Candidate thresholds of one feature: midpoints of consecutive distinct
/// sorted values among `rows`.
std::vector<double> candidate_thresholds(const Dataset& data, std::span<const Index> rows, std::size_t feature);

/// Minimum-F split over the given features, thresholds at midpoints of
/// consecutive distinct values. Ties go to the lowest feature, then the lowest
/// threshold. Returns nothing when no admissible split exists.
std::optional<SplitDecision> best_split_exhaustive(const Dataset& data, std::span<const Index> node_rows,
                                                   const TrainConfig& config, const NodePredictor& predictor,
                                                   std::span<const std::size_t> features);

/// Overload using every feature and the predictor implied by `config`.
std::optional<SplitDecision> best_split_exhaustive(const Dataset& data, std::span<const Index> node_rows,
                                                   const TrainConfig& config);

/// Exact optimum of the single-depth MIP at a node: one-hot feature choice,
/// threshold b with z_i = [x_ij ≥ b], N_min ≤ Σz ≤ n − N_min, child
/// predictions in 𝕐, minimising the summed per-row loss over the node size.
/// Stops at `deadline` with the best split found so far.
std::optional<SplitDecision> solve_split_mip_exact(
    const Dataset& data, std::span<const Index> node_rows, const TrainConfig& config,
    const NodePredictor& predictor, std::span<const std::size_t> features,
    std::optional<std::chrono::steady_clock::time_point> deadline = std::nullopt);

std::optional<SplitDecision> solve_split_mip_exact(const Dataset& data, std::span<const Index> node_rows,
                                                   const TrainConfig& config);

Tree grow_tree(const Dataset& data, const TrainConfig& config);
/// Grows on a row multiset of `data` (bootstrap samples may repeat rows).
Tree grow_tree(const Dataset& data, std::span<const Index> rows, const TrainConfig& config);

/// Replaces every leaf prediction by the constrained prediction over the
/// leaf's training rows of `data`. Structure is unchanged.
void postprocess_leaves(Tree& tree, const Dataset& data, const FeasibleSet& set, const Loss& loss);

/// Routes x_j < v left, otherwise right, and returns the leaf prediction.
const Vector& tree_predict(const Tree& tree, const Vector& x);
const Leaf& tree_leaf(const Tree& tree, const Vector& x);

Matrix tree_predict(const Tree& tree, const Matrix& features);

/// Split acceptance slack: a split is accepted when F < parent − slack.
double acceptance_slack(double parent_loss);

}  // namespace ocrt
