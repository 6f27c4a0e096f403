#include "ocrt/ensemble.hpp"

#include <cmath>
#include <cstdlib>
#include <numeric>
#include <thread>

#include "ocrt/parallel.hpp"
#include "ocrt/random.hpp"

namespace ocrt {

std::size_t default_threads() {
  if (const char* env = std::getenv("OCRT_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("OCRT_THREADS must be a positive integer, got '") + env + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

Forest::Forest(std::vector<Tree> trees, std::vector<double> weights, Method base_method,
               std::vector<std::uint64_t> bootstrap_seeds)
    : trees_(std::move(trees)), weights_(std::move(weights)), base_method_(base_method), seeds_(std::move(bootstrap_seeds)) {
  if (trees_.empty()) throw ConfigError("a forest needs at least one tree");
  if (weights_.size() != trees_.size()) throw DimensionError("one weight per tree required");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw ConfigError("forest weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ConfigError("forest weights must sum to one");
  for (const auto& t : trees_) {
    if (t.n_features() != trees_.front().n_features() || t.n_targets() != trees_.front().n_targets()) {
      throw DimensionError("forest trees disagree on dimensions");
    }
  }
}

Forest train_forest(const Dataset& data, const TrainConfig& tree_config, std::size_t n_trees,
                    std::uint64_t rng_seed, const ForestOptions& options) {
  if (n_trees < 1) throw ConfigError("n_trees must be at least 1");
  TrainConfig config = tree_config;
  std::vector<std::string> notes;
  if (config.method == Method::MOcrt) {
    config.method = Method::EOcrt;
    notes.push_back("M-OCRT base trees are grown as E-OCRT (identical trees under MSE)");
  }
  config.feature_subsample = options.features_per_split
                                 ? *options.features_per_split
                                 : std::max<std::size_t>(1, (data.p() + 2) / 3);
  config.validate();

  std::vector<std::uint64_t> seeds(n_trees);
  for (std::size_t t = 0; t < n_trees; ++t) seeds[t] = derive_seed(rng_seed, t);

  std::vector<std::optional<Tree>> grown(n_trees);
  parallel_for(n_trees, options.threads, [&](std::size_t t) {
    TrainConfig local = config;
    local.rng_seed = derive_seed(seeds[t], 1);
    local.threads = 1;
    std::vector<Index> rows(data.n());
    if (options.bootstrap) {
      Rng rng(seeds[t]);
      std::uniform_int_distribution<std::size_t> draw(0, data.n() - 1);
      for (auto& r : rows) r = draw(rng);
      std::sort(rows.begin(), rows.end());
    } else {
      std::iota(rows.begin(), rows.end(), Index{0});
    }
    grown[t] = grow_tree(data, rows, local);
  });

  std::vector<Tree> trees;
  trees.reserve(n_trees);
  for (auto& t : grown) trees.push_back(std::move(*t));
  std::vector<double> weights(n_trees, 1.0 / static_cast<double>(n_trees));
  Forest forest(std::move(trees), std::move(weights), config.method, std::move(seeds));
  forest.notes = std::move(notes);
  return forest;
}

Vector forest_predict(const Forest& forest, const Vector& x) {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(forest.n_targets()));
  for (std::size_t t = 0; t < forest.size(); ++t) {
    out += forest.weights()[t] * tree_leaf(forest.trees()[t], x).prediction;
  }
  return out;
}

Matrix forest_predict(const Forest& forest, const Matrix& features) {
  Matrix out(features.rows(), static_cast<Eigen::Index>(forest.n_targets()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const Vector x = features.row(i).transpose();
    out.row(i) = forest_predict(forest, x).transpose();
  }
  return out;
}

}  // namespace ocrt
