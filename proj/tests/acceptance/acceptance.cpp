// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "ocrt/bench.hpp"
#include "ocrt/datagen.hpp"
#include "ocrt/downstream.hpp"
#include "ocrt/ensemble.hpp"
#include "ocrt/parallel.hpp"
#include "ocrt/prediction.hpp"
#include "ocrt/serialize.hpp"
#include "support/instances.hpp"
#include "support/oracle.hpp"
#include "support/trees.hpp"

using namespace ocrt;
using namespace ocrt::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

bool cells_ok(const std::vector<MetricsRow>& rows, std::string& why) {
  for (const auto& r : rows) {
    if (r.status.rfind("ok", 0) != 0) {
      why = r.dataset + "/" + r.method + ": " + r.status;
      return false;
    }
  }
  return true;
}

// 1. Every OCRT test prediction is feasible; CART is not.
Outcome feasibility_guarantee() {
  ExperimentConfig syn;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    DatasetSpec d;
    d.id = "syn_s" + std::to_string(s);
    d.synthetic = {.n = 500, .p = 6, .k = 5, .seed = s};
    syn.datasets.push_back(d);
  }
  for (const char* m : {"CART", "E-OCRT", "EP-OCRT", "M-OCRT", "E-RF", "EP-RF"}) syn.methods.push_back(MethodSpec::parse(m));
  syn.depths = {5};

  ExperimentConfig hts;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    DatasetSpec d;
    d.id = "hts_s" + std::to_string(s);
    d.kind = DatasetKind::Hts;
    d.hts = {.n = 500, .k = 13, .seed = s, .noisy = s % 2 == 0};
    hts.datasets.push_back(d);
  }
  for (const char* m : {"CART", "E-OCRT", "EP-OCRT", "M-OCRT"}) hts.methods.push_back(MethodSpec::parse(m));
  hts.depths = {5};

  std::size_t ocrt_cells = 0, violating_cells = 0;
  std::string why;
  std::string detail;
  bool pass = true;
  for (const ExperimentConfig* c : {&syn, &hts}) {
    const auto rows = run_cv_benchmark(*c).rows;
    if (!cells_ok(rows, why)) return {false, why};
    for (const auto& r : rows) {
      if (r.method == "CART") continue;
      ++ocrt_cells;
      if (*r.infeasibility_rate != 0.0) ++violating_cells;
    }
    const double cart = *mean_of(rows, &MetricsRow::infeasibility_rate, "CART");
    pass = pass && cart > 0.0;
    detail += std::string(c == &syn ? "synthetic" : "hts") + " CART infeasible " + fmt(100 * cart) + "%; ";
  }
  pass = pass && violating_cells == 0;
  return {pass, detail + std::to_string(violating_cells) + "/" + std::to_string(ocrt_cells) +
                    " OCRT cells with infeasible test predictions"};
}

// 2. M-OCRT and E-OCRT grow identical trees.
Outcome mip_equals_exhaustive() {
  Rng rng(2);
  std::uniform_int_distribution<std::size_t> n_dist(30, 100), p_dist(1, 4), k_dist(1, 3);
  std::size_t same = 0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = n_dist(rng), p = p_dist(rng), k = k_dist(rng);
    const Matrix x = uniform_features(rng, n, p);
    const auto inst = random_convex_instance(rng, k);
    // Targets spread around the set so constraints bind.
    Matrix y = simplex_targets(rng, x, k, false);
    y.array() += 0.3;
    const Dataset d(x, y);
    TrainConfig c;
    c.max_depth = 4;
    c.feasible_set = inst.set;
    c.method = Method::EOcrt;
    const Tree e = grow_tree(d, c);
    c.method = Method::MOcrt;
    const Tree m = grow_tree(d, c);
    if (same_tree(e.root(), m.root(), 1e-10) && m.timed_out_nodes == 0) ++same;
  }
  return {same == 20, std::to_string(same) + "/20 datasets identical"};
}

// 3. On feasible data E-OCRT is CART and leaves are means.
Outcome feasible_data_matches_cart() {
  Rng rng(3);
  std::size_t same = 0, total = 0;
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const std::size_t k = 2 + static_cast<std::size_t>(t % 3);
    const Matrix x = uniform_features(rng, 300, 4);
    const Dataset d(x, simplex_targets(rng, x, k, true));
    TrainConfig c;
    c.max_depth = 5;
    const Tree cart = grow_tree(d, c);
    c.method = Method::EOcrt;
    c.feasible_set = simplex_set(k);
    const Tree e = grow_tree(d, c);
    ++total;
    if (same_tree(cart.root(), e.root(), 1e-8)) ++same;
    for (const Leaf* leaf : e.leaves()) {
      worst = std::max(worst, (leaf->prediction - TargetRows(d.targets(), leaf->rows).mean()).cwiseAbs().maxCoeff());
    }
  }
  for (int t = 0; t < 5; ++t) {
    const Matrix x = uniform_features(rng, 300, 3);
    Matrix y = simplex_targets(rng, x, 3, true);
    y.array() = 4.0 * y.array() + 0.05;
    const Dataset d(x, y);
    const FeasibleSet set(3, {}, {{Vector::Ones(3), 4.2}}, {true, true, true});
    TrainConfig c;
    c.max_depth = 4;
    c.loss = Loss::poisson();
    const Tree cart = grow_tree(d, c);
    c.method = Method::EOcrt;
    c.feasible_set = set;
    const Tree e = grow_tree(d, c);
    ++total;
    if (same_tree(cart.root(), e.root(), 1e-8)) ++same;
    for (const Leaf* leaf : e.leaves()) {
      worst = std::max(worst, (leaf->prediction - TargetRows(d.targets(), leaf->rows).mean()).cwiseAbs().maxCoeff());
    }
  }
  return {same == total && worst <= 1e-8,
          std::to_string(same) + "/" + std::to_string(total) + " trees identical (10 MSE, 5 Poisson); max |leaf - mean| " +
              fmt(worst)};
}

// 4. Constrained MAD on the three unit vectors.
Outcome mad_simplex() {
  const Matrix y = rows_of({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  const FeasibleSet set = simplex_set(3);
  const Vector med = predict_unconstrained(TargetRows(y), Loss::mad());
  const auto r = predict_constrained(TargetRows(y), set, Loss::mad());
  const bool pass = med.isZero() && !check_feasibility(med, set).feasible && std::abs(r.yhat.sum() - 1.0) <= 1e-6 &&
                    r.yhat.minCoeff() >= -1e-6;
  return {pass, "median (" + fmt(med(0)) + "," + fmt(med(1)) + "," + fmt(med(2)) + "), constrained sum " +
                    fmt(r.yhat.sum()) + ", min " + fmt(r.yhat.minCoeff())};
}

// 5. Solvers against the grid oracle.
Outcome oracle_equivalence() {
  const double step = 0.01, slack = 0.04;
  Rng rng(5);
  std::size_t bad_proj = 0, bad_weighted = 0, bad_card = 0, bad_support = 0, ambiguous = 0, bad_e2e = 0;
  for (int t = 0; t < 100; ++t) {
    const auto inst = random_convex_instance(rng, 1 + static_cast<std::size_t>(t % 4));
    const TargetRows rows(inst.rows);
    const auto o = brute_force_prediction_oracle(rows, inst.set, Loss::mse(), step);
    const auto p = project_polyhedron(rows.mean(), inst.set);
    const double p_obj = loss_eval(Loss::mse(), p.yhat, rows);
    if (p_obj > o.objective + 1e-9 || o.objective - p_obj > slack) ++bad_proj;

    Vector w(inst.rows.cols());
    for (Eigen::Index c = 0; c < w.size(); ++c) w(c) = 0.1 + 0.9 * std::uniform_real_distribution<double>()(rng);
    const auto ow = brute_force_prediction_oracle(rows, inst.set, Loss::weighted(w), step);
    const auto pw = weighted_loss_prediction(rows, w, inst.set);
    if (pw.objective > ow.objective + 1e-9 || ow.objective - pw.objective > slack) ++bad_weighted;
  }
  for (int t = 0; t < 100; ++t) {
    const auto inst = random_cardinality_instance(rng);
    const TargetRows rows(inst.rows);
    const auto o = brute_force_prediction_oracle(rows, inst.set, Loss::mse(), step);
    const auto p = solve_cardinality_prediction(rows, inst.set);
    if (p.objective > o.objective + 1e-9 || o.objective - p.objective > slack) ++bad_card;
    const auto runner = runner_up_support_objective(rows, inst.set, Loss::mse(), step, *o.support);
    if (runner && *runner - o.objective <= slack) {
      ++ambiguous;
    } else if (p.support != o.support) {
      ++bad_support;
    }
  }
  for (int t = 0; t < 100; ++t) {
    // Regret is piecewise constant, so the oracle grids every coordinate; K stays at 2 or 3.
    const std::size_t k = 2 + static_cast<std::size_t>(t % 2);
    const auto inst = random_knapsack_instance(rng, k);
    const auto ks = TwoGroupKnapsack::halves(k);
    const TargetRows rows(inst.rows);
    const auto r = end_to_end_leaf_prediction(rows, inst.set, ks);
    const auto o = brute_force_prediction_oracle(rows, inst.set, Loss::regret(ks), step);
    const double mean = r.squared_regret_sum / static_cast<double>(rows.size());
    if (std::abs(mean - o.objective) > 1e-9 * std::max(1.0, mean)) ++bad_e2e;
  }
  const bool pass = bad_proj + bad_weighted + bad_card + bad_support + bad_e2e == 0;
  return {pass, "mismatches: projection " + std::to_string(bad_proj) + "/100, weighted " +
                    std::to_string(bad_weighted) + "/100, cardinality " + std::to_string(bad_card) +
                    "/100, support " + std::to_string(bad_support) + "/" + std::to_string(100 - ambiguous) +
                    " unambiguous, end-to-end " + std::to_string(bad_e2e) + "/100"};
}

// 6. Synthetic-grid direction at n=500, K=5, depth 5.
Outcome synthetic_direction() {
  ExperimentConfig c = preset("synthetic-grid");
  std::vector<DatasetSpec> keep;
  for (const auto& d : c.datasets) {
    if (d.synthetic.n == 500 && d.synthetic.k == 5) keep.push_back(d);
  }
  c.datasets = keep;
  c.depths = {5};
  c.methods = {MethodSpec::parse("CART"), MethodSpec::parse("E-OCRT"), MethodSpec::parse("EP-OCRT"),
               MethodSpec::parse("E-RF")};
  const auto rows = run_cv_benchmark(c).rows;
  std::string why;
  if (!cells_ok(rows, why)) return {false, why};
  const double e = *mean_of(rows, &MetricsRow::delta, "E-OCRT");
  const double ep = *mean_of(rows, &MetricsRow::delta, "EP-OCRT");
  const double rf = *mean_of(rows, &MetricsRow::delta, "E-RF");
  return {e <= ep && e > 0 && ep > 0 && rf <= e,
          "mean delta E-OCRT " + fmt(100 * e) + "%, EP-OCRT " + fmt(100 * ep) + "%, E-RF " + fmt(100 * rf) + "%"};
}

// 7. End-to-end direction at depth 5.
Outcome end_to_end_direction() {
  ExperimentConfig c = preset("end-to-end");
  c.depths = {5};
  const auto rows = run_cv_benchmark(c).rows;
  std::string why;
  if (!cells_ok(rows, why)) return {false, why};
  const double e = *mean_of(rows, &MetricsRow::delta_r, "E-OCRT");
  const double ep = *mean_of(rows, &MetricsRow::delta_r, "EP-OCRT");
  const double e2 = *mean_of(rows, &MetricsRow::delta_r2, "E-OCRT");
  const double ep2 = *mean_of(rows, &MetricsRow::delta_r2, "EP-OCRT");
  return {e < 0 && ep < 0 && e <= ep, "mean delta_r E-OCRT " + fmt(100 * e) + "%, EP-OCRT " + fmt(100 * ep) +
                                          "% (delta_r2 " + fmt(100 * e2) + "%, " + fmt(100 * ep2) + "%)"};
}

// 8. CART is infeasible at its best depth.
Outcome depth_tradeoff() {
  const ExperimentConfig c = preset("depth-tradeoff");
  const auto r = depth_tradeoff_experiment(c.datasets.front().synthetic, c.depths.back(), c);
  return {r.best_infeasible_percent > 0.0,
          "best depth " + std::to_string(r.best_depth) + ", CART infeasible " + fmt(r.best_infeasible_percent) + "%"};
}

// 9. Split acceptance, leaf sizes, serialization, determinism.
Outcome structural_invariants() {
  std::size_t problems = 0;
  std::string first;
  auto fail = [&](const std::string& what) {
    if (problems++ == 0) first = what;
  };
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto g = gen_synthetic({.n = 500, .p = 6, .k = 5, .seed = seed});
    for (Method m : {Method::Cart, Method::EOcrt, Method::MOcrt, Method::EpOcrt}) {
      TrainConfig c;
      c.method = m;
      c.max_depth = 5;
      if (is_constrained(m)) c.feasible_set = g.set;
      const Tree t = grow_tree(g.data, c);
      std::function<void(const TreeNode&)> walk = [&](const TreeNode& node) {
        if (node.is_leaf()) {
          if (node.leaf().n_samples < c.min_samples_leaf) fail("leaf below min_samples_leaf");
          return;
        }
        const Branch& b = node.branch();
        if (!(b.split_loss < b.node_loss - acceptance_slack(b.node_loss))) fail("split did not reduce loss");
        if (b.n_samples < c.min_samples_split) fail("branch below min_samples_split");
        walk(*b.left);
        walk(*b.right);
      };
      walk(t.root());
      const Tree back = tree_from_json(to_json(t));
      if (!same_tree(t.root(), back.root(), 0.0) || to_json(back).dump() != to_json(t).dump()) {
        fail("tree serialization round trip");
      }
      if (to_json(grow_tree(g.data, c)).dump() != to_json(t).dump()) fail("tree training not deterministic");
    }
    TrainConfig c;
    c.method = Method::EOcrt;
    c.feasible_set = g.set;
    c.max_depth = 4;
    const Forest f = train_forest(g.data, c, 5, seed);
    if (to_json(forest_from_json(to_json(f))).dump() != to_json(f).dump()) fail("forest serialization round trip");
    ForestOptions par;
    par.threads = 4;
    if (to_json(train_forest(g.data, c, 5, seed, par)).dump() != to_json(f).dump()) fail("forest not deterministic");
  }
  return {problems == 0, problems == 0 ? "all invariants hold over 12 trees and 3 forests" : first};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "feasibility guarantee", 600, feasibility_guarantee},
      {2, "M-OCRT equals E-OCRT", 60, mip_equals_exhaustive},
      {3, "feasible data reduces to CART", 60, feasible_data_matches_cart},
      {4, "constrained MAD on the simplex", 1, mad_simplex},
      {5, "solver-oracle equivalence", 300, oracle_equivalence},
      {6, "synthetic direction", 900, synthetic_direction},
      {7, "end-to-end direction", 600, end_to_end_direction},
      {8, "depth tradeoff", 300, depth_tradeoff},
      {9, "structural invariants", 60, structural_invariants},
  };
  std::printf("threads: %zu\n", default_threads());
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = secs <= c.budget_seconds;
    const bool pass = out.pass && in_budget;
    if (!pass) ++failures;
    std::printf("criterion %d %s: %s (%s; %.1fs of %.0fs%s)\n", c.id, c.name, pass ? "PASS" : "FAIL",
                out.detail.c_str(), secs, c.budget_seconds, in_budget ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
