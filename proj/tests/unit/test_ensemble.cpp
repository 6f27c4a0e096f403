#include <doctest.h>

#include "ocrt/datagen.hpp"
#include "ocrt/ensemble.hpp"
#include "ocrt/serialize.hpp"
#include "support/instances.hpp"
#include "support/trees.hpp"

using namespace ocrt;
using namespace ocrt::testing;

namespace {

Tree stump(const Vector& left, const Vector& right) {
  TreeNode l{Leaf{left, 1, 0.0, {}}};
  TreeNode r{Leaf{right, 1, 0.0, {}}};
  Branch b;
  b.feature = 0;
  b.threshold = 0.5;
  b.left = std::make_unique<TreeNode>(std::move(l));
  b.right = std::make_unique<TreeNode>(std::move(r));
  return Tree(TreeNode{std::move(b)}, 1, static_cast<std::size_t>(left.size()), Method::EOcrt);
}

Tree single_leaf(const Vector& v) {
  return Tree(TreeNode{Leaf{v, 1, 0.0, {}}}, 1, static_cast<std::size_t>(v.size()), Method::EOcrt);
}

}  // namespace

TEST_CASE("forest arithmetic") {
  std::vector<Tree> trees;
  trees.push_back(single_leaf(vec({1, 0})));
  trees.push_back(single_leaf(vec({0, 1})));
  const Forest f(std::move(trees), {0.5, 0.5}, Method::EOcrt, {1, 2});
  CHECK(forest_predict(f, vec({0.3})).isApprox(vec({0.5, 0.5})));
  CHECK_THROWS_AS(forest_predict(f, vec({0.3, 1})), DimensionError);

  std::vector<Tree> bad;
  bad.push_back(single_leaf(vec({1, 0})));
  CHECK_THROWS_AS(Forest(std::move(bad), {0.9}, Method::EOcrt, {1}), ConfigError);
}

TEST_CASE("a single tree without bootstrap equals the tree") {
  Rng rng(3);
  const Matrix x = uniform_features(rng, 150, 3);
  const Dataset d(x, simplex_targets(rng, x, 3, false));
  TrainConfig c;
  c.method = Method::EOcrt;
  c.feasible_set = simplex_set(3);
  c.max_depth = 4;
  ForestOptions opt;
  opt.bootstrap = false;
  opt.features_per_split = 3;
  const Forest f = train_forest(d, c, 1, 5, opt);
  const Tree t = grow_tree(d, c);
  CHECK(f.weights() == std::vector<double>{1.0});
  const Matrix xt = uniform_features(rng, 40, 3);
  CHECK((forest_predict(f, xt) - tree_predict(t, xt)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("forests over a convex set stay feasible") {
  Rng rng(21);
  const auto g = gen_synthetic({.n = 300, .p = 6, .k = 5, .seed = 2});
  for (Method m : {Method::EOcrt, Method::EpOcrt}) {
    TrainConfig c;
    c.method = m;
    c.feasible_set = g.set;
    c.max_depth = 4;
    const Forest f = train_forest(g.data, c, 20, 7);
    CHECK(f.size() == 20);
    for (double w : f.weights()) CHECK(w == doctest::Approx(0.05));
    std::normal_distribution<double> wide(0.5, 3.0);
    for (int t = 0; t < 200; ++t) {
      Vector x(6);
      for (Eigen::Index j = 0; j < 6; ++j) x(j) = wide(rng);
      CHECK(check_feasibility(forest_predict(f, x), g.set).feasible);
    }
  }
}

TEST_CASE("averaging sparse leaves can break a cardinality limit") {
  const FeasibleSet hts = build_hts_constraints(13, 15, 1, 15);
  Vector a = Vector::Zero(13), b = Vector::Zero(13);
  a(0) = 15;
  b(1) = 15;
  CHECK(check_feasibility(a, hts).feasible);
  CHECK(check_feasibility(b, hts).feasible);
  std::vector<Tree> trees;
  trees.push_back(single_leaf(a));
  trees.push_back(single_leaf(b));
  const Forest f(std::move(trees), {0.5, 0.5}, Method::EOcrt, {0, 1});
  const Vector avg = forest_predict(f, vec({0}));
  CHECK(avg(0) == doctest::Approx(7.5));
  CHECK(avg(1) == doctest::Approx(7.5));
  const auto report = check_feasibility(avg, hts);
  CHECK_FALSE(report.feasible);
  CHECK(report.support_size == 2);
}

TEST_CASE("M-OCRT forests alias E-OCRT") {
  const auto g = gen_synthetic({.n = 120, .p = 3, .k = 5, .seed = 4});
  TrainConfig c;
  c.feasible_set = g.set;
  c.max_depth = 3;
  c.method = Method::MOcrt;
  const Forest m = train_forest(g.data, c, 3, 11);
  c.method = Method::EOcrt;
  const Forest e = train_forest(g.data, c, 3, 11);
  CHECK(m.base_method() == Method::EOcrt);
  CHECK_FALSE(m.notes.empty());
  for (std::size_t t = 0; t < 3; ++t) CHECK(same_tree(m.trees()[t].root(), e.trees()[t].root(), 0.0));
}

TEST_CASE("seeded forests are deterministic") {
  const auto g = gen_synthetic({.n = 200, .p = 6, .k = 5, .seed = 9});
  TrainConfig c;
  c.method = Method::EOcrt;
  c.feasible_set = g.set;
  c.max_depth = 3;
  const Forest a = train_forest(g.data, c, 6, 123);
  ForestOptions par;
  par.threads = 3;
  const Forest b = train_forest(g.data, c, 6, 123, par);
  CHECK(to_json(a).dump() == to_json(b).dump());
  const Forest other = train_forest(g.data, c, 6, 124);
  CHECK(to_json(a).dump() != to_json(other).dump());
  const Forest back = forest_from_json(to_json(a));
  CHECK(to_json(back).dump() == to_json(a).dump());
  double sum = 0;
  for (double w : back.weights()) sum += w;
  CHECK(std::abs(sum - 1.0) <= 1e-12);
  CHECK(stump(vec({1}), vec({2})).leaf_count() == 2);
}
