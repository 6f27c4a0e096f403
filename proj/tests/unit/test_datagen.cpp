#include <doctest.h>

#include <set>

#include "ocrt/datagen.hpp"
#include "ocrt/projection.hpp"
#include "support/instances.hpp"

using namespace ocrt;
using namespace ocrt::testing;

namespace {

bool has_equality(const FeasibleSet& set, const Vector& a, double b) {
  for (const auto& c : set.equalities()) {
    if (c.a.size() == a.size() && (c.a - a).norm() < 1e-12 && std::abs(c.b - b) < 1e-12) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("synthetic constraint systems") {
  const FeasibleSet k5 = build_synthetic_constraints(5);
  CHECK(k5.equalities().size() == 2);
  CHECK(has_equality(k5, vec({1, -1, 0, 0, 0}), 0.1));
  CHECK(has_equality(k5, vec({1, 1, 0, 0, 0}), 1.0));
  CHECK(k5.inequalities().empty());
  CHECK(k5.nonneg() == std::vector<bool>(5, true));

  const FeasibleSet k9 = build_synthetic_constraints(9);
  CHECK(k9.equalities().size() == 3);
  CHECK(has_equality(k9, vec({0, 0, 1, -1, 0, 0, 0, 0, 0}), 0.1));
  CHECK(has_equality(k9, vec({0, 0, 0, 0, 1, -1, 0, 0, 0}), 0.2));
  CHECK(has_equality(k9, vec({1, 1, 1, 1, 0, 0, 0, 0, 0}), 1.0));

  const FeasibleSet k2 = build_synthetic_constraints(2);
  CHECK(k2.equalities().size() == 1);
  CHECK(has_equality(k2, vec({1, 0}), 1.0));

  CHECK_THROWS_AS(build_synthetic_constraints(1), DimensionError);

  // Always consistent: the projection of zero exists and is feasible.
  for (std::size_t k = 2; k <= 15; ++k) {
    const FeasibleSet s = build_synthetic_constraints(k);
    CHECK(check_feasibility(project_polyhedron(Vector::Zero(static_cast<Eigen::Index>(k)), s).yhat, s).feasible);
  }
}

TEST_CASE("gen_synthetic") {
  SyntheticRecipe r{.n = 500, .p = 6, .k = 5, .seed = 3, .noise_sd = 0.0};
  const auto g = gen_synthetic(r);
  CHECK(g.data.n() == 500);
  CHECK(g.data.p() == 6);
  CHECK(g.data.k() == 5);
  for (Eigen::Index i = 0; i < g.data.features().rows(); ++i) {
    for (Eigen::Index j = 0; j < 6; ++j) {
      const double v = g.data.features()(i, j) * 10.0;
      CHECK(std::abs(v - std::round(v)) < 1e-9);
      CHECK(v >= -1e-9);
      CHECK(v <= 10 + 1e-9);
    }
    const Vector y = g.data.targets().row(i).transpose();
    for (const auto& e : g.set.equalities()) CHECK(std::abs(e.a.dot(y) - e.b) < 1e-8);
  }

  r.noise_sd = 0.05;
  const auto a = gen_synthetic(r);
  const auto b = gen_synthetic(r);
  CHECK(a.data.targets() == b.data.targets());
  CHECK(a.data.features() == b.data.features());
  r.seed = 4;
  CHECK(gen_synthetic(r).data.targets() != a.data.targets());

  SyntheticRecipe bad;
  bad.noise_sd = -1;
  CHECK_THROWS_AS(gen_synthetic(bad), ConfigError);
}

TEST_CASE("HTS constraints") {
  const FeasibleSet s = build_hts_constraints(13, 15, 4, 15);
  REQUIRE(s.cardinality());
  CHECK(s.cardinality()->max_support == 4);
  CHECK(s.cardinality()->big_m == 15);
  CHECK_FALSE(s.is_convex());
  CHECK(build_hts_constraints(5, 15, 5, 15).simplified().is_convex());
  CHECK_THROWS_AS(build_hts_constraints(13, 15, 1, 10), InfeasibleSetError);
}

TEST_CASE("gen_hts") {
  HtsRecipe r{.n = 500, .seed = 7};
  const auto clean = gen_hts(r);
  std::set<std::vector<double>> distinct;
  for (Eigen::Index i = 0; i < clean.data.targets().rows(); ++i) {
    const Vector y = clean.data.targets().row(i).transpose();
    CHECK(check_feasibility(y, clean.set).feasible);
    distinct.insert(std::vector<double>(y.data(), y.data() + y.size()));
  }
  CHECK(distinct.size() > 10);

  r.noisy = true;
  const auto noisy = gen_hts(r);
  std::size_t violated = 0;
  for (Eigen::Index i = 0; i < noisy.data.targets().rows(); ++i) {
    if (!check_feasibility(noisy.data.targets().row(i).transpose(), noisy.set).feasible) ++violated;
  }
  CHECK(static_cast<double>(violated) / 500.0 > 0.99);
  CHECK(gen_hts(r).data.targets() == noisy.data.targets());
}

TEST_CASE("gen_end_to_end") {
  const auto e = gen_end_to_end(500, 6, 5, 1);
  CHECK(e.data.n() == 500);
  CHECK(e.knapsack.cap1 == 100);
  CHECK(e.knapsack.cap2 == 10);
  CHECK(e.knapsack.split == 2);
  CHECK(gen_end_to_end(500, 6, 5, 1).data.targets() == e.data.targets());
}

TEST_CASE("recipe JSON round trip") {
  SyntheticRecipe r{.n = 77, .p = 3, .k = 9, .seed = 5, .noise_sd = 0.2};
  nlohmann::json j = r;
  const auto back = j.get<SyntheticRecipe>();
  CHECK(back.n == 77);
  CHECK(back.k == 9);
  CHECK(back.noise_sd == 0.2);
  HtsRecipe h{.n = 50, .noisy = true};
  nlohmann::json jh = h;
  CHECK(jh.get<HtsRecipe>().noisy);
  CHECK(nlohmann::json::parse(R"({"K": 7})").get<SyntheticRecipe>().k == 7);
}
