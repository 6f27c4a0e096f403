#include "ocrt/tree.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>

#include "ocrt/random.hpp"

namespace ocrt {

namespace {

constexpr double kTieTol = 1e-12;

bool strictly_better(double candidate, double incumbent) {
  return candidate < incumbent - kTieTol * std::max(1.0, std::abs(incumbent));
}

// Midpoint of two consecutive distinct values, nudged so that lo < v ≤ hi.
double midpoint(double lo, double hi) {
  const double v = 0.5 * (lo + hi);
  return (lo < v && v <= hi) ? v : hi;
}

std::vector<Index> sorted_by_feature(const Dataset& data, std::span<const Index> rows, std::size_t feature) {
  std::vector<Index> order(rows.begin(), rows.end());
  const auto j = static_cast<Eigen::Index>(feature);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return data.features()(static_cast<Eigen::Index>(a), j) < data.features()(static_cast<Eigen::Index>(b), j);
  });
  return order;
}

std::vector<std::size_t> all_features(std::size_t p) {
  std::vector<std::size_t> f(p);
  std::iota(f.begin(), f.end(), std::size_t{0});
  return f;
}

// Feature subset for the node with heap id `node_id`; ascending.
std::vector<std::size_t> node_features(const TrainConfig& config, std::size_t p, std::uint64_t node_id) {
  if (!config.feature_subsample || *config.feature_subsample >= p) return all_features(p);
  Rng rng(derive_seed(config.rng_seed, node_id));
  auto f = all_features(p);
  const std::size_t take = std::max<std::size_t>(1, *config.feature_subsample);
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, p - 1);
    std::swap(f[i], f[pick(rng)]);
  }
  f.resize(take);
  std::sort(f.begin(), f.end());
  return f;
}

// Node loss of the MSE prediction `pred` from running sums of the rows.
double mse_from_sums(const Vector& mean, double sum_sq, double count, const Vector& pred) {
  const double within = std::max(0.0, 0.5 * (sum_sq / count - mean.squaredNorm()));
  return within + 0.5 * (pred - mean).squaredNorm();
}

struct Candidate {
  std::size_t feature = 0;
  double threshold = 0.0;
  double loss = 0.0;
};

// Exhaustive sweep over sorted cut positions of one feature.
void sweep_feature(const Dataset& data, std::span<const Index> rows, std::size_t feature,
                   const NodePredictor& predictor, std::size_t min_leaf, std::optional<Candidate>& best) {
  const std::size_t m = rows.size();
  const auto order = sorted_by_feature(data, rows, feature);
  const auto j = static_cast<Eigen::Index>(feature);
  auto x_at = [&](std::size_t pos) { return data.features()(static_cast<Eigen::Index>(order[pos]), j); };
  const Matrix& y = data.targets();
  const auto dim = y.cols();

  const bool incremental = predictor.mean_sufficient();
  Vector total_sum = Vector::Zero(dim);
  double total_sq = 0.0;
  if (incremental) {
    for (Index r : order) {
      total_sum += y.row(static_cast<Eigen::Index>(r)).transpose();
      total_sq += y.row(static_cast<Eigen::Index>(r)).squaredNorm();
    }
  }
  Vector left_sum = Vector::Zero(dim);
  double left_sq = 0.0;

  for (std::size_t pos = 1; pos < m; ++pos) {
    if (incremental) {
      left_sum += y.row(static_cast<Eigen::Index>(order[pos - 1])).transpose();
      left_sq += y.row(static_cast<Eigen::Index>(order[pos - 1])).squaredNorm();
    }
    if (!(x_at(pos - 1) < x_at(pos))) continue;
    const std::size_t n_left = pos;
    const std::size_t n_right = m - pos;
    if (n_left < min_leaf || n_right < min_leaf) continue;

    double f = 0.0;
    const double alpha_left = static_cast<double>(n_left) / static_cast<double>(m);
    const double alpha_right = static_cast<double>(n_right) / static_cast<double>(m);
    if (incremental) {
      const double nl = static_cast<double>(n_left);
      const double nr = static_cast<double>(n_right);
      const Vector mean_left = left_sum / nl;
      const Vector mean_right = (total_sum - left_sum) / nr;
      const double loss_left = mse_from_sums(mean_left, left_sq, nl, predictor.from_mean(mean_left));
      const double loss_right = mse_from_sums(mean_right, total_sq - left_sq, nr, predictor.from_mean(mean_right));
      f = alpha_left * loss_left + alpha_right * loss_right;
    } else {
      const std::span<const Index> left(order.data(), n_left);
      const std::span<const Index> right(order.data() + n_left, n_right);
      const TargetRows lrows(y, left), rrows(y, right);
      const double loss_left = loss_eval(predictor.loss(), predictor(lrows).yhat, lrows);
      const double loss_right = loss_eval(predictor.loss(), predictor(rrows).yhat, rrows);
      f = alpha_left * loss_left + alpha_right * loss_right;
    }
    if (!best || strictly_better(f, best->loss)) best = Candidate{feature, midpoint(x_at(pos - 1), x_at(pos)), f};
  }
}

}  // namespace

// ============================================================================
// Config and predictor
// ============================================================================

std::string to_string(Method method) {
  switch (method) {
    case Method::Cart: return "CART";
    case Method::EOcrt: return "E-OCRT";
    case Method::MOcrt: return "M-OCRT";
    case Method::EpOcrt: return "EP-OCRT";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  std::string key;
  for (char c : name) {
    if (c != '-' && c != '_') key.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  if (key == "CART" || key == "SKLEARN") return Method::Cart;
  if (key == "EOCRT") return Method::EOcrt;
  if (key == "MOCRT") return Method::MOcrt;
  if (key == "EPOCRT") return Method::EpOcrt;
  throw ConfigError("unknown tree method '" + name + "' (expected CART, E-OCRT, M-OCRT or EP-OCRT)");
}

bool is_constrained(Method method) { return method != Method::Cart; }

void TrainConfig::validate() const {
  if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be at least 1");
  if (min_samples_split < 2 * min_samples_leaf) {
    throw ConfigError("min_samples_split must be at least 2 * min_samples_leaf");
  }
  if (is_constrained(method) && !feasible_set) throw ConfigError(to_string(method) + " needs a feasible set");
  if (feature_subsample && *feature_subsample < 1) throw ConfigError("feature_subsample must be positive");
  if (!(node_time_budget > 0.0)) throw ConfigError("node_time_budget must be positive");
}

Loss growth_loss(const Loss& loss) {
  switch (loss.kind()) {
    case LossKind::Mse:
    case LossKind::Mad:
    case LossKind::PoissonDeviance:
      return loss;
    default:
      return Loss::mse();
  }
}

PredictionResult NodePredictor::operator()(const TargetRows& rows) const {
  if (set_) return predict_constrained(rows, *set_, loss_);
  PredictionResult result;
  result.yhat = predict_unconstrained(rows, loss_);
  result.objective = loss_eval(loss_, result.yhat, rows);
  return result;
}

Vector NodePredictor::from_mean(const Vector& mean) const {
  if (!mean_sufficient()) throw UnsupportedError("prediction is not a function of the mean for " + loss_.name());
  if (!set_) return mean;
  return constrained_mse_from_mean(mean, *set_).yhat;
}

// ============================================================================
// Tree queries
// ============================================================================

namespace {

std::size_t node_depth(const TreeNode& node) {
  if (node.is_leaf()) return 0;
  const auto& b = node.branch();
  return 1 + std::max(node_depth(*b.left), node_depth(*b.right));
}

void collect_leaves(const TreeNode& node, std::vector<const Leaf*>& out) {
  if (node.is_leaf()) {
    out.push_back(&node.leaf());
    return;
  }
  collect_leaves(*node.branch().left, out);
  collect_leaves(*node.branch().right, out);
}

template <typename Fn>
void for_each_leaf(TreeNode& node, Fn&& fn) {
  if (node.is_leaf()) {
    fn(node.leaf());
    return;
  }
  for_each_leaf(*node.branch().left, fn);
  for_each_leaf(*node.branch().right, fn);
}

}  // namespace

std::size_t Tree::depth() const { return node_depth(*root_); }

std::size_t Tree::leaf_count() const { return leaves().size(); }

std::vector<const Leaf*> Tree::leaves() const {
  std::vector<const Leaf*> out;
  collect_leaves(*root_, out);
  return out;
}

// ============================================================================
// Split search
// ============================================================================

SplitDecision split_gain(const Dataset& data, std::span<const Index> node_rows, std::size_t feature,
                         double threshold, const NodePredictor& predictor, std::size_t min_samples_leaf) {
  if (feature >= data.p()) throw DimensionError("split feature index out of range");
  SplitDecision split;
  split.feature = feature;
  split.threshold = threshold;
  const auto j = static_cast<Eigen::Index>(feature);
  for (Index r : node_rows) {
    (data.features()(static_cast<Eigen::Index>(r), j) < threshold ? split.left_indices : split.right_indices).push_back(r);
  }
  if (split.left_indices.size() < min_samples_leaf || split.right_indices.size() < min_samples_leaf) {
    throw SplitRejectedError("split leaves a child below min_samples_leaf");
  }
  const TargetRows left(data.targets(), split.left_indices);
  const TargetRows right(data.targets(), split.right_indices);
  split.left_pred = predictor(left).yhat;
  split.right_pred = predictor(right).yhat;
  const double n = static_cast<double>(node_rows.size());
  split.weighted_loss = static_cast<double>(left.size()) / n * loss_eval(predictor.loss(), split.left_pred, left) +
                        static_cast<double>(right.size()) / n * loss_eval(predictor.loss(), split.right_pred, right);
  return split;
}

std::vector<double> candidate_thresholds(const Dataset& data, std::span<const Index> rows, std::size_t feature) {
  std::vector<double> values;
  values.reserve(rows.size());
  for (Index r : rows) values.push_back(data.features()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(feature)));
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<double> thresholds;
  for (std::size_t i = 1; i < values.size(); ++i) thresholds.push_back(midpoint(values[i - 1], values[i]));
  return thresholds;
}

std::optional<SplitDecision> best_split_exhaustive(const Dataset& data, std::span<const Index> node_rows,
                                                   const TrainConfig& config, const NodePredictor& predictor,
                                                   std::span<const std::size_t> features) {
  if (node_rows.size() < config.min_samples_split) return std::nullopt;
  std::optional<Candidate> best;
  for (std::size_t feature : features) {
    sweep_feature(data, node_rows, feature, predictor, config.min_samples_leaf, best);
  }
  if (!best) return std::nullopt;
  return split_gain(data, node_rows, best->feature, best->threshold, predictor, config.min_samples_leaf);
}

namespace {

NodePredictor growth_predictor(const TrainConfig& config) {
  switch (config.method) {
    case Method::Cart:
    case Method::EpOcrt:
      return NodePredictor(growth_loss(config.loss), nullptr);
    case Method::EOcrt:
    case Method::MOcrt:
      return NodePredictor(config.loss, &*config.feasible_set);
  }
  throw ConfigError("unknown method");
}

}  // namespace

std::optional<SplitDecision> best_split_exhaustive(const Dataset& data, std::span<const Index> node_rows,
                                                   const TrainConfig& config) {
  config.validate();
  const auto features = all_features(data.p());
  return best_split_exhaustive(data, node_rows, config, growth_predictor(config), features);
}

std::optional<SplitDecision> solve_split_mip_exact(const Dataset& data, std::span<const Index> node_rows,
                                                   const TrainConfig& config, const NodePredictor& predictor,
                                                   std::span<const std::size_t> features,
                                                   std::optional<std::chrono::steady_clock::time_point> deadline) {
  const std::size_t n = node_rows.size();
  const std::size_t n_min = config.min_samples_leaf;
  if (n < config.min_samples_split || n < 2 * n_min) return std::nullopt;

  const Matrix& x = data.features();
  const Matrix& y = data.targets();
  std::optional<SplitDecision> best;
  bool timed_out = false;

  for (std::size_t feature : features) {
    // a = e_feature; b ranges over the distinct admissible thresholds.
    const auto j = static_cast<Eigen::Index>(feature);
    for (double b : candidate_thresholds(data, node_rows, feature)) {
      if (deadline && best && std::chrono::steady_clock::now() > *deadline) {
        timed_out = true;
        break;
      }
      std::vector<Index> left, right;  // z_i = 0, z_i = 1
      for (Index r : node_rows) (x(static_cast<Eigen::Index>(r), j) >= b ? right : left).push_back(r);
      if (right.size() < n_min || right.size() > n - n_min) continue;

      const TargetRows lrows(y, left), rrows(y, right);
      Vector left_pred = predictor(lrows).yhat;
      Vector right_pred = predictor(rrows).yhat;
      double total = 0.0;
      for (Index r : left) total += row_loss(predictor.loss(), left_pred, y.row(static_cast<Eigen::Index>(r)));
      for (Index r : right) total += row_loss(predictor.loss(), right_pred, y.row(static_cast<Eigen::Index>(r)));
      const double objective = total / static_cast<double>(n);

      if (!best || strictly_better(objective, best->weighted_loss)) {
        SplitDecision s;
        s.feature = feature;
        s.threshold = b;
        s.left_indices = std::move(left);
        s.right_indices = std::move(right);
        s.left_pred = std::move(left_pred);
        s.right_pred = std::move(right_pred);
        s.weighted_loss = objective;
        best = std::move(s);
      }
    }
    if (timed_out) break;
  }
  if (best) best->timed_out = timed_out;
  return best;
}

std::optional<SplitDecision> solve_split_mip_exact(const Dataset& data, std::span<const Index> node_rows,
                                                   const TrainConfig& config) {
  config.validate();
  const auto features = all_features(data.p());
  return solve_split_mip_exact(data, node_rows, config, growth_predictor(config), features);
}

double acceptance_slack(double parent_loss) { return 1e-12 * std::max(1.0, std::abs(parent_loss)); }

// ============================================================================
// Growth
// ============================================================================

namespace {

class Grower {
 public:
  Grower(const Dataset& data, const TrainConfig& config)
      : data_(data), config_(config), predictor_(growth_predictor(config)) {}

  TreeNode grow(std::vector<Index> rows, std::size_t depth, std::uint64_t node_id, std::size_t& timeouts) const {
    const TargetRows trows(data_.targets(), rows);
    const auto pred = predictor_(trows);
    const double node_loss = loss_eval(predictor_.loss(), pred.yhat, trows);

    if (depth < config_.max_depth && rows.size() >= config_.min_samples_split) {
      const auto features = node_features(config_, data_.p(), node_id);
      std::optional<SplitDecision> split;
      if (config_.method == Method::MOcrt) {
        const auto deadline = std::chrono::steady_clock::now() +
                              std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                  std::chrono::duration<double>(config_.node_time_budget));
        split = solve_split_mip_exact(data_, rows, config_, predictor_, features, deadline);
      } else {
        split = best_split_exhaustive(data_, rows, config_, predictor_, features);
      }
      if (split && split->weighted_loss < node_loss - acceptance_slack(node_loss)) {
        if (split->timed_out) ++timeouts;
        Branch branch;
        branch.feature = split->feature;
        branch.threshold = split->threshold;
        branch.node_loss = node_loss;
        branch.split_loss = split->weighted_loss;
        branch.n_samples = rows.size();
        std::size_t left_timeouts = 0;
        std::size_t right_timeouts = 0;
        const bool parallel = config_.threads > 1 && (std::size_t{1} << (depth + 1)) <= config_.threads;
        if (parallel) {
          auto left = std::async(std::launch::async, [&] {
            return grow(std::move(split->left_indices), depth + 1, 2 * node_id, left_timeouts);
          });
          TreeNode right = grow(std::move(split->right_indices), depth + 1, 2 * node_id + 1, right_timeouts);
          branch.left = std::make_unique<TreeNode>(left.get());
          branch.right = std::make_unique<TreeNode>(std::move(right));
        } else {
          branch.left = std::make_unique<TreeNode>(grow(std::move(split->left_indices), depth + 1, 2 * node_id, left_timeouts));
          branch.right = std::make_unique<TreeNode>(grow(std::move(split->right_indices), depth + 1, 2 * node_id + 1, right_timeouts));
        }
        timeouts += left_timeouts + right_timeouts;
        return TreeNode{std::move(branch)};
      }
    }

    Leaf leaf;
    leaf.prediction = pred.yhat;
    leaf.n_samples = rows.size();
    leaf.train_loss = node_loss;
    leaf.rows = std::move(rows);
    return TreeNode{std::move(leaf)};
  }

 private:
  const Dataset& data_;
  const TrainConfig& config_;
  NodePredictor predictor_;
};

}  // namespace

Tree grow_tree(const Dataset& data, const TrainConfig& config) {
  std::vector<Index> rows(data.n());
  std::iota(rows.begin(), rows.end(), Index{0});
  return grow_tree(data, rows, config);
}

Tree grow_tree(const Dataset& data, std::span<const Index> rows, const TrainConfig& config) {
  config.validate();
  if (rows.empty()) throw DimensionError("cannot grow a tree on zero rows");
  if (config.feasible_set && config.feasible_set->dim() != data.k()) {
    throw DimensionError("feasible set dimension differs from the number of targets");
  }
  Grower grower(data, config);
  std::size_t timeouts = 0;
  TreeNode root = grower.grow(std::vector<Index>(rows.begin(), rows.end()), 0, 1, timeouts);
  Tree tree(std::move(root), data.p(), data.k(), config.method);
  tree.timed_out_nodes = timeouts;
  if (config.method == Method::EpOcrt) postprocess_leaves(tree, data, *config.feasible_set, config.loss);
  return tree;
}

void postprocess_leaves(Tree& tree, const Dataset& data, const FeasibleSet& set, const Loss& loss) {
  for_each_leaf(tree.root(), [&](Leaf& leaf) {
    if (leaf.rows.empty()) throw ConfigError("leaf training rows were not retained");
    const TargetRows rows(data.targets(), leaf.rows);
    auto result = predict_constrained(rows, set, loss);
    leaf.prediction = std::move(result.yhat);
    leaf.train_loss = loss_eval(loss, leaf.prediction, rows);
  });
}

const Leaf& tree_leaf(const Tree& tree, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != tree.n_features()) {
    throw DimensionError("feature vector length differs from the tree's feature count");
  }
  const TreeNode* node = &tree.root();
  while (!node->is_leaf()) {
    const auto& b = node->branch();
    node = x(static_cast<Eigen::Index>(b.feature)) < b.threshold ? b.left.get() : b.right.get();
  }
  return node->leaf();
}

const Vector& tree_predict(const Tree& tree, const Vector& x) {
  return tree_leaf(tree, x).prediction;
}

Matrix tree_predict(const Tree& tree, const Matrix& features) {
  Matrix out(features.rows(), static_cast<Eigen::Index>(tree.n_targets()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const Vector x = features.row(i).transpose();
    out.row(i) = tree_leaf(tree, x).prediction.transpose();
  }
  return out;
}

}  // namespace ocrt
