#include "ocrt/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ocrt {

namespace {

// Strict-preference margin in the vertex regions; keeps solve_downstream(ŷ)
// equal to the chosen vertex under its lowest-index tie-break.
constexpr double kRegionMargin = 1e-9;

void check_knapsack(const TwoGroupKnapsack& knapsack, std::size_t dim) {
  if (knapsack.dim != dim) throw DimensionError("knapsack size differs from vector length");
  if (knapsack.split == 0 || knapsack.split >= knapsack.dim) {
    throw ConfigError("knapsack groups must both be nonempty");
  }
}

void fill_group(const Vector& y, std::size_t begin, std::size_t end, double cap, Vector& q) {
  std::size_t best = begin;
  for (std::size_t k = begin + 1; k < end; ++k) {
    if (y(static_cast<Eigen::Index>(k)) > y(static_cast<Eigen::Index>(best))) best = k;
  }
  if (y(static_cast<Eigen::Index>(best)) > 0.0) q(static_cast<Eigen::Index>(best)) = cap;
}

void group_region(std::optional<std::size_t> chosen, std::size_t begin, std::size_t end, std::size_t dim,
                  std::vector<LinearConstraint>& rows) {
  const auto n = static_cast<Eigen::Index>(dim);
  if (!chosen) {
    for (std::size_t k = begin; k < end; ++k) {
      Vector a = Vector::Zero(n);
      a(static_cast<Eigen::Index>(k)) = 1.0;
      rows.push_back({std::move(a), 0.0});
    }
    return;
  }
  const auto c = static_cast<Eigen::Index>(*chosen);
  for (std::size_t k = begin; k < end; ++k) {
    if (k == *chosen) continue;
    Vector a = Vector::Zero(n);
    a(static_cast<Eigen::Index>(k)) = 1.0;
    a(c) = -1.0;
    rows.push_back({std::move(a), k < *chosen ? -kRegionMargin : 0.0});
  }
  Vector a = Vector::Zero(n);
  a(c) = -1.0;
  rows.push_back({std::move(a), -kRegionMargin});
}

}  // namespace

Vector solve_downstream(const Vector& y, const TwoGroupKnapsack& knapsack) {
  check_knapsack(knapsack, static_cast<std::size_t>(y.size()));
  Vector q = Vector::Zero(y.size());
  fill_group(y, 0, knapsack.split, knapsack.cap1, q);
  fill_group(y, knapsack.split, knapsack.dim, knapsack.cap2, q);
  return q;
}

RegretMetrics regret_metrics(const Matrix& y_true, const Matrix& q_true, const Matrix& q_hat) {
  if (y_true.rows() != q_true.rows() || y_true.cols() != q_true.cols() || y_true.cols() != q_hat.cols()) {
    throw DimensionError("regret inputs have mismatched shapes");
  }
  if (q_hat.rows() != y_true.rows() && q_hat.rows() != 1) {
    throw DimensionError("q_hat needs one row per instance or a single shared row");
  }
  if (y_true.rows() == 0) throw DimensionError("regret over zero instances");
  RegretMetrics m;
  for (Eigen::Index i = 0; i < y_true.rows(); ++i) {
    const auto qh = q_hat.row(q_hat.rows() == 1 ? 0 : i);
    const double gap = y_true.row(i).dot(q_true.row(i)) - y_true.row(i).dot(qh);
    m.regret += gap;
    m.squared_regret += gap * gap;
  }
  const auto n = static_cast<double>(y_true.rows());
  m.regret /= n;
  m.squared_regret /= n;
  return m;
}

Matrix optimal_decisions(const TargetRows& rows, const TwoGroupKnapsack& knapsack) {
  Matrix q(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.dim()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    q.row(static_cast<Eigen::Index>(i)) = solve_downstream(rows.row(i).transpose(), knapsack).transpose();
  }
  return q;
}

std::vector<KnapsackVertex> knapsack_vertices(const TwoGroupKnapsack& knapsack) {
  check_knapsack(knapsack, knapsack.dim);
  std::vector<std::optional<std::size_t>> first, second;
  for (std::size_t k = 0; k < knapsack.split; ++k) first.emplace_back(k);
  first.emplace_back(std::nullopt);
  for (std::size_t k = knapsack.split; k < knapsack.dim; ++k) second.emplace_back(k);
  second.emplace_back(std::nullopt);

  std::vector<KnapsackVertex> out;
  out.reserve(first.size() * second.size());
  for (const auto& a : first) {
    for (const auto& b : second) out.push_back({a, b});
  }
  return out;
}

Vector vertex_allocation(const KnapsackVertex& v, const TwoGroupKnapsack& knapsack) {
  Vector q = Vector::Zero(static_cast<Eigen::Index>(knapsack.dim));
  if (v.item1) q(static_cast<Eigen::Index>(*v.item1)) = knapsack.cap1;
  if (v.item2) q(static_cast<Eigen::Index>(*v.item2)) = knapsack.cap2;
  return q;
}

std::vector<LinearConstraint> vertex_region(const KnapsackVertex& v, const TwoGroupKnapsack& knapsack) {
  std::vector<LinearConstraint> rows;
  group_region(v.item1, 0, knapsack.split, knapsack.dim, rows);
  group_region(v.item2, knapsack.split, knapsack.dim, knapsack.dim, rows);
  return rows;
}

EndToEndPrediction end_to_end_leaf_prediction(const TargetRows& rows, const FeasibleSet& set,
                                              const TwoGroupKnapsack& knapsack) {
  if (rows.empty()) throw DimensionError("prediction over an empty row subset");
  if (!set.is_convex()) throw UnsupportedError("end-to-end prediction needs a convex set");
  if (rows.dim() != set.dim()) throw DimensionError("target width differs from feasible set dimension");
  check_knapsack(knapsack, set.dim());

  // Each row's optimal value y_iᵀq_i.
  std::vector<double> best_value(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Vector y = rows.row(i).transpose();
    best_value[i] = y.dot(solve_downstream(y, knapsack));
  }

  const auto vertices = knapsack_vertices(knapsack);
  std::vector<double> objective(vertices.size());
  for (std::size_t c = 0; c < vertices.size(); ++c) {
    const Vector q = vertex_allocation(vertices[c], knapsack);
    double total = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double gap = best_value[i] - rows.row(i).dot(q.transpose());
      total += gap * gap;
    }
    objective[c] = total;
  }

  std::vector<std::size_t> order(vertices.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return objective[a] < objective[b]; });

  const Vector mean = rows.mean();
  auto witness = [&](std::size_t c) -> std::optional<Vector> {
    try {
      return project_polyhedron(mean, set, vertex_region(vertices[c], knapsack)).yhat;
    } catch (const InfeasibleSetError&) {
      return std::nullopt;
    }
  };

  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    auto y = witness(order[pos]);
    if (!y) continue;
    std::size_t chosen = order[pos];
    // Equal objectives resolve to the earliest vertex in enumeration order.
    const double tie = 1e-12 * std::max(1.0, objective[chosen]);
    for (std::size_t later = pos + 1; later < order.size(); ++later) {
      const std::size_t c = order[later];
      if (objective[c] > objective[chosen] + tie) break;
      if (c < chosen) {
        if (auto alt = witness(c)) {
          chosen = c;
          y = std::move(alt);
        }
      }
    }
    return {*y, vertex_allocation(vertices[chosen], knapsack), objective[chosen]};
  }
  throw InfeasibleSetError("no knapsack vertex is induced by any point of the feasible set");
}

}  // namespace ocrt
