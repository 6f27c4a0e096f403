#pragma once

#include <filesystem>
#include <variant>

#include <json.hpp>

#include "ocrt/ensemble.hpp"

namespace ocrt {

/// {"branch": {"j", "v", "left", "right"}} or {"leaf": {"pred", "n", "loss"}}.
nlohmann::json node_to_json(const TreeNode& node);
TreeNode node_from_json(const nlohmann::json& doc, std::size_t n_features, std::size_t n_targets);

/// {"kind": "tree", "method", "p", "K", "node": ...}
nlohmann::json to_json(const Tree& tree);
Tree tree_from_json(const nlohmann::json& doc);

/// {"kind": "forest", "method", "p", "K", "trees": [...], "weights", "seeds"}
nlohmann::json to_json(const Forest& forest);
Forest forest_from_json(const nlohmann::json& doc);

/// A trained tree or forest as stored in a model file.
class Model {
 public:
  explicit Model(Tree tree) : content_(std::move(tree)) {}
  explicit Model(Forest forest) : content_(std::move(forest)) {}

  bool is_forest() const { return std::holds_alternative<Forest>(content_); }
  const Tree& tree() const { return std::get<Tree>(content_); }
  const Forest& forest() const { return std::get<Forest>(content_); }

  Method method() const;
  std::size_t n_features() const;
  std::size_t n_targets() const;
  Matrix predict(const Matrix& features) const;
  /// Every leaf prediction of every tree.
  std::vector<Vector> leaf_predictions() const;

  nlohmann::json to_json() const;
  static Model from_json(const nlohmann::json& doc);

 private:
  std::variant<Tree, Forest> content_;
};

Model load_model(const std::filesystem::path& path);
void save_model(const Model& model, const std::filesystem::path& path);

}  // namespace ocrt
