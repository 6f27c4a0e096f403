#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ocrt/tree.hpp"

namespace ocrt {

/// Convex combination of trees. Weights are nonnegative and sum to one.
class Forest {
 public:
  Forest() = default;
  Forest(std::vector<Tree> trees, std::vector<double> weights, Method base_method,
         std::vector<std::uint64_t> bootstrap_seeds);

  const std::vector<Tree>& trees() const { return trees_; }
  const std::vector<double>& weights() const { return weights_; }
  Method base_method() const { return base_method_; }
  const std::vector<std::uint64_t>& bootstrap_seeds() const { return seeds_; }
  std::size_t size() const { return trees_.size(); }
  std::size_t n_features() const { return trees_.front().n_features(); }
  std::size_t n_targets() const { return trees_.front().n_targets(); }

  /// Free-form remarks from training (method aliasing and the like).
  std::vector<std::string> notes;

 private:
  std::vector<Tree> trees_;
  std::vector<double> weights_;
  Method base_method_ = Method::Cart;
  std::vector<std::uint64_t> seeds_;
};

struct ForestOptions {
  /// Resample n rows with replacement per tree; off trains every tree on all rows.
  bool bootstrap = true;
  /// Features drawn per split; max(1, ⌈p/3⌉) when empty.
  std::optional<std::size_t> features_per_split;
  /// Trees trained concurrently.
  std::size_t threads = 1;
};

Forest train_forest(const Dataset& data, const TrainConfig& tree_config, std::size_t n_trees,
                    std::uint64_t rng_seed, const ForestOptions& options = {});

Vector forest_predict(const Forest& forest, const Vector& x);
Matrix forest_predict(const Forest& forest, const Matrix& features);

}  // namespace ocrt
