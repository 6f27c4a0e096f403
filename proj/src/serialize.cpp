#include "ocrt/serialize.hpp"

#include "ocrt/io.hpp"

namespace ocrt {

namespace {

std::vector<double> as_std(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void check_kind(const nlohmann::json& doc, const char* kind) {
  if (doc.value("kind", std::string(kind)) != kind) {
    throw ConfigError(std::string("model document is not a ") + kind);
  }
}

}  // namespace

nlohmann::json node_to_json(const TreeNode& node) {
  if (node.is_leaf()) {
    const auto& l = node.leaf();
    return {{"leaf", {{"pred", as_std(l.prediction)}, {"n", l.n_samples}, {"loss", l.train_loss}}}};
  }
  const auto& b = node.branch();
  return {{"branch",
           {{"j", b.feature},
            {"v", b.threshold},
            {"n", b.n_samples},
            {"loss", b.node_loss},
            {"split_loss", b.split_loss},
            {"left", node_to_json(*b.left)},
            {"right", node_to_json(*b.right)}}}};
}

TreeNode node_from_json(const nlohmann::json& doc, std::size_t n_features, std::size_t n_targets) {
  if (doc.contains("leaf")) {
    const auto& l = doc["leaf"];
    const auto pred = l.at("pred").get<std::vector<double>>();
    if (pred.size() != n_targets) throw DimensionError("leaf prediction length differs from K");
    Leaf leaf;
    leaf.prediction = Eigen::Map<const Vector>(pred.data(), static_cast<Eigen::Index>(pred.size()));
    leaf.n_samples = l.value("n", std::size_t{0});
    leaf.train_loss = l.value("loss", 0.0);
    return TreeNode{std::move(leaf)};
  }
  if (!doc.contains("branch")) throw ConfigError("tree node is neither a branch nor a leaf");
  const auto& b = doc["branch"];
  Branch branch;
  branch.feature = b.at("j").get<std::size_t>();
  if (branch.feature >= n_features) throw DimensionError("branch feature index out of range");
  branch.threshold = b.at("v").get<double>();
  branch.n_samples = b.value("n", std::size_t{0});
  branch.node_loss = b.value("loss", 0.0);
  branch.split_loss = b.value("split_loss", 0.0);
  branch.left = std::make_unique<TreeNode>(node_from_json(b.at("left"), n_features, n_targets));
  branch.right = std::make_unique<TreeNode>(node_from_json(b.at("right"), n_features, n_targets));
  return TreeNode{std::move(branch)};
}

nlohmann::json to_json(const Tree& tree) {
  return {{"kind", "tree"},
          {"method", to_string(tree.method())},
          {"p", tree.n_features()},
          {"K", tree.n_targets()},
          {"node", node_to_json(tree.root())}};
}

Tree tree_from_json(const nlohmann::json& doc) {
  try {
    check_kind(doc, "tree");
    const auto p = doc.at("p").get<std::size_t>();
    const auto k = doc.at("K").get<std::size_t>();
    return Tree(node_from_json(doc.at("node"), p, k), p, k, parse_method(doc.value("method", std::string("CART"))));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed tree document: ") + e.what());
  }
}

nlohmann::json to_json(const Forest& forest) {
  auto trees = nlohmann::json::array();
  for (const auto& t : forest.trees()) trees.push_back(to_json(t));
  nlohmann::json doc = {{"kind", "forest"},
                        {"method", to_string(forest.base_method())},
                        {"p", forest.n_features()},
                        {"K", forest.n_targets()},
                        {"trees", std::move(trees)},
                        {"weights", forest.weights()},
                        {"seeds", forest.bootstrap_seeds()}};
  if (!forest.notes.empty()) doc["notes"] = forest.notes;
  return doc;
}

Forest forest_from_json(const nlohmann::json& doc) {
  try {
    check_kind(doc, "forest");
    std::vector<Tree> trees;
    for (const auto& t : doc.at("trees")) trees.push_back(tree_from_json(t));
    Forest forest(std::move(trees), doc.at("weights").get<std::vector<double>>(),
                  parse_method(doc.value("method", std::string("CART"))),
                  doc.value("seeds", std::vector<std::uint64_t>{}));
    forest.notes = doc.value("notes", std::vector<std::string>{});
    return forest;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed forest document: ") + e.what());
  }
}

Method Model::method() const { return is_forest() ? forest().base_method() : tree().method(); }

std::size_t Model::n_features() const { return is_forest() ? forest().n_features() : tree().n_features(); }

std::size_t Model::n_targets() const { return is_forest() ? forest().n_targets() : tree().n_targets(); }

Matrix Model::predict(const Matrix& features) const {
  if (static_cast<std::size_t>(features.cols()) != n_features()) {
    throw DimensionError("data has " + std::to_string(features.cols()) + " features, model expects " +
                         std::to_string(n_features()));
  }
  return is_forest() ? forest_predict(forest(), features) : tree_predict(tree(), features);
}

std::vector<Vector> Model::leaf_predictions() const {
  std::vector<Vector> out;
  auto add = [&](const Tree& t) {
    for (const Leaf* l : t.leaves()) out.push_back(l->prediction);
  };
  if (is_forest()) {
    for (const auto& t : forest().trees()) add(t);
  } else {
    add(tree());
  }
  return out;
}

nlohmann::json Model::to_json() const { return is_forest() ? ocrt::to_json(forest()) : ocrt::to_json(tree()); }

Model Model::from_json(const nlohmann::json& doc) {
  const auto kind = doc.value("kind", std::string("tree"));
  if (kind == "forest") return Model(forest_from_json(doc));
  if (kind == "tree") return Model(tree_from_json(doc));
  throw ConfigError("unknown model kind '" + kind + "'");
}

Model load_model(const std::filesystem::path& path) { return Model::from_json(read_json(path)); }

void save_model(const Model& model, const std::filesystem::path& path) { write_json(model.to_json(), path); }

}  // namespace ocrt
