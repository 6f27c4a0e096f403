#include "oracle.hpp"

#include <cmath>
#include <limits>

namespace ocrt::testing {

namespace {

constexpr double kFilterTol = 1e-9;

// y = base + coef * free, with `free` the listed coordinates.
struct Parameterization {
  std::vector<std::size_t> free;
  Vector base;
  Matrix coef;  // K × |free|
};

Parameterization eliminate(const std::vector<LinearConstraint>& eq, std::size_t dim) {
  const auto k = static_cast<Eigen::Index>(dim);
  Matrix a(static_cast<Eigen::Index>(eq.size()), k + 1);
  for (std::size_t r = 0; r < eq.size(); ++r) {
    a.row(static_cast<Eigen::Index>(r)).head(k) = eq[r].a.transpose();
    a(static_cast<Eigen::Index>(r), k) = eq[r].b;
  }
  std::vector<Eigen::Index> pivot_col;
  Eigen::Index row = 0;
  for (Eigen::Index c = 0; c < k && row < a.rows(); ++c) {
    Eigen::Index best = row;
    for (Eigen::Index r = row + 1; r < a.rows(); ++r) {
      if (std::abs(a(r, c)) > std::abs(a(best, c))) best = r;
    }
    if (std::abs(a(best, c)) < 1e-12) continue;
    a.row(best).swap(a.row(row));
    a.row(row) /= a(row, c);
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      if (r != row) a.row(r) -= a(r, c) * a.row(row);
    }
    pivot_col.push_back(c);
    ++row;
  }
  for (Eigen::Index r = row; r < a.rows(); ++r) {
    if (std::abs(a(r, k)) > 1e-9) throw InfeasibleSetError("oracle: inconsistent equalities");
  }
  Parameterization p;
  std::vector<bool> is_pivot(dim, false);
  for (auto c : pivot_col) is_pivot[static_cast<std::size_t>(c)] = true;
  for (std::size_t c = 0; c < dim; ++c) {
    if (!is_pivot[c]) p.free.push_back(c);
  }
  p.base = Vector::Zero(k);
  p.coef = Matrix::Zero(k, static_cast<Eigen::Index>(p.free.size()));
  for (std::size_t f = 0; f < p.free.size(); ++f) p.coef(static_cast<Eigen::Index>(p.free[f]), static_cast<Eigen::Index>(f)) = 1.0;
  for (std::size_t r = 0; r < pivot_col.size(); ++r) {
    const auto c = pivot_col[r];
    p.base(c) = a(static_cast<Eigen::Index>(r), k);
    for (std::size_t f = 0; f < p.free.size(); ++f) {
      p.coef(c, static_cast<Eigen::Index>(f)) = -a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(p.free[f]));
    }
  }
  return p;
}

struct Box {
  Vector lo, hi;
};

Box coordinate_box(const FeasibleSet& set) {
  const auto k = static_cast<Eigen::Index>(set.dim());
  Box box{Vector::Constant(k, -std::numeric_limits<double>::infinity()),
          Vector::Constant(k, std::numeric_limits<double>::infinity())};
  for (Eigen::Index c = 0; c < k; ++c) {
    if (set.nonneg()[static_cast<std::size_t>(c)]) box.lo(c) = 0.0;
    if (set.cardinality()) box.hi(c) = set.cardinality()->big_m;
  }
  for (const auto& r : set.inequalities()) {
    Eigen::Index nz = -1, count = 0;
    for (Eigen::Index c = 0; c < k; ++c) {
      if (r.a(c) != 0.0) {
        nz = c;
        ++count;
      }
    }
    if (count != 1) continue;
    const double bound = r.b / r.a(nz);
    if (r.a(nz) > 0) {
      box.hi(nz) = std::min(box.hi(nz), bound);
    } else {
      box.lo(nz) = std::max(box.lo(nz), bound);
    }
  }
  return box;
}

bool feasible(const Vector& y, const FeasibleSet& set) {
  for (const auto& r : set.inequalities()) {
    if (r.a.dot(y) - r.b > kFilterTol) return false;
  }
  for (std::size_t c = 0; c < set.dim(); ++c) {
    const double v = y(static_cast<Eigen::Index>(c));
    if (set.nonneg()[c] && v < -kFilterTol) return false;
    if (set.cardinality() && v > set.cardinality()->big_m + kFilterTol) return false;
  }
  for (const auto& r : set.equalities()) {
    if (std::abs(r.a.dot(y) - r.b) > 1e-7) return false;
  }
  return true;
}

struct Best {
  Vector y;
  double objective = std::numeric_limits<double>::infinity();
};

// Grid search over a convex set (cardinality ignored); `objective` maps a
// point of the set to the value being minimised.
template <typename Objective>
Best grid_convex(const FeasibleSet& set, double step, Objective&& objective) {
  const auto param = eliminate(set.equalities(), set.dim());
  const Box box = coordinate_box(set);
  const std::size_t d = param.free.size();
  std::vector<double> lo(d), hi(d);
  std::vector<std::size_t> count(d);
  for (std::size_t f = 0; f < d; ++f) {
    lo[f] = box.lo(static_cast<Eigen::Index>(param.free[f]));
    hi[f] = box.hi(static_cast<Eigen::Index>(param.free[f]));
    if (!std::isfinite(lo[f]) || !std::isfinite(hi[f])) {
      throw UnsupportedError("oracle: free coordinate without a finite box");
    }
    if (hi[f] < lo[f]) return {};
    count[f] = static_cast<std::size_t>(std::floor((hi[f] - lo[f]) / step + 1e-9)) + 1;
  }
  Best best;
  std::vector<std::size_t> idx(d, 0);
  Vector free(static_cast<Eigen::Index>(d));
  while (true) {
    for (std::size_t f = 0; f < d; ++f) {
      free(static_cast<Eigen::Index>(f)) = std::min(hi[f], lo[f] + static_cast<double>(idx[f]) * step);
    }
    const Vector y = param.base + param.coef * free;
    if (feasible(y, set)) {
      double obj;
      try {
        obj = objective(y);
      } catch (const DomainError&) {
        obj = std::numeric_limits<double>::infinity();
      }
      if (obj < best.objective) best = {y, obj};
    }
    std::size_t f = 0;
    while (f < d && ++idx[f] == count[f]) idx[f++] = 0;
    if (f == d) break;
  }
  return best;
}

// Restriction of `set` to the coordinates in `support` (others fixed at 0).
FeasibleSet restrict(const FeasibleSet& set, const std::vector<Index>& support) {
  const auto s = static_cast<Eigen::Index>(support.size());
  auto cut = [&](const std::vector<LinearConstraint>& rows) {
    std::vector<LinearConstraint> out;
    for (const auto& r : rows) {
      Vector a(s);
      for (Eigen::Index i = 0; i < s; ++i) a(i) = r.a(static_cast<Eigen::Index>(support[static_cast<std::size_t>(i)]));
      out.push_back({a, r.b});
    }
    return out;
  };
  std::vector<bool> nonneg;
  for (Index c : support) nonneg.push_back(set.nonneg()[c]);
  auto ineq = cut(set.inequalities());
  for (Eigen::Index i = 0; i < s; ++i) {
    Vector a = Vector::Zero(s);
    a(i) = 1.0;
    ineq.push_back({a, set.cardinality()->big_m});
  }
  return FeasibleSet(support.size(), cut(set.equalities()), std::move(ineq), std::move(nonneg));
}

template <typename Fn>
void for_each_support(std::size_t k, std::size_t s, Fn&& fn) {
  std::vector<Index> sup(s);
  for (std::size_t i = 0; i < s; ++i) sup[i] = i;
  while (true) {
    fn(sup);
    std::size_t i = s;
    while (i > 0 && sup[i - 1] == k - s + (i - 1)) --i;
    if (i == 0) return;
    ++sup[i - 1];
    for (std::size_t j = i; j < s; ++j) sup[j] = sup[j - 1] + 1;
  }
}

Vector scatter(const Vector& ys, const std::vector<Index>& support, std::size_t k) {
  Vector y = Vector::Zero(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < support.size(); ++i) y(static_cast<Eigen::Index>(support[i])) = ys(static_cast<Eigen::Index>(i));
  return y;
}

// Per-support best (objective against the full rows).
struct SupportBest {
  std::vector<Index> support;
  Best best;
};

std::vector<SupportBest> grid_supports(const TargetRows& rows, const FeasibleSet& set, const Loss& loss, double step) {
  std::vector<SupportBest> out;
  const std::size_t s = std::min(set.cardinality()->max_support, set.dim());
  for_each_support(set.dim(), s, [&](const std::vector<Index>& support) {
    Best best;
    try {
      const Best reduced = grid_convex(restrict(set, support), step, [&](const Vector& ys) {
        return loss_eval(loss, scatter(ys, support, set.dim()), rows);
      });
      if (std::isfinite(reduced.objective)) best = {scatter(reduced.y, support, set.dim()), reduced.objective};
    } catch (const InfeasibleSetError&) {
    }
    out.push_back({support, best});
  });
  return out;
}

}  // namespace

PredictionResult brute_force_prediction_oracle(const TargetRows& rows, const FeasibleSet& set, const Loss& loss,
                                               double grid_step) {
  if (set.dim() > 4) throw UnsupportedError("oracle refuses K > 4");
  if (!(grid_step > 0.0)) throw DomainError("grid_step must be positive");
  if (rows.dim() != set.dim()) throw DimensionError("oracle: row width differs from set dimension");
  PredictionResult result;
  if (!set.cardinality()) {
    const Best best = grid_convex(set, grid_step, [&](const Vector& y) { return loss_eval(loss, y, rows); });
    if (!std::isfinite(best.objective)) throw InfeasibleSetError("oracle: no feasible grid point");
    result.yhat = best.y;
    result.objective = best.objective;
    return result;
  }
  const auto all = grid_supports(rows, set, loss, grid_step);
  const SupportBest* best = nullptr;
  for (const auto& sb : all) {
    if (!best || sb.best.objective < best->best.objective) best = &sb;
  }
  if (!best || !std::isfinite(best->best.objective)) throw InfeasibleSetError("oracle: no feasible grid point");
  result.yhat = best->best.y;
  result.objective = best->best.objective;
  result.support = best->support;
  return result;
}

std::optional<double> runner_up_support_objective(const TargetRows& rows, const FeasibleSet& set, const Loss& loss,
                                                  double grid_step, const std::vector<Index>& exclude) {
  std::optional<double> out;
  for (const auto& sb : grid_supports(rows, set, loss, grid_step)) {
    if (sb.support == exclude || !std::isfinite(sb.best.objective)) continue;
    if (!out || sb.best.objective < *out) out = sb.best.objective;
  }
  return out;
}

double kkt_residual(const Vector& point, const Vector& yhat, const FeasibleSet& set,
                    const std::vector<LinearConstraint>& extra) {
  const auto k = static_cast<Eigen::Index>(set.dim());
  const double scale = std::max(1.0, point.lpNorm<Eigen::Infinity>());
  const double active_tol = 1e-8 * scale;
  double primal = 0.0;
  std::vector<Vector> normals;
  std::vector<bool> is_ineq;
  for (const auto& r : set.equalities()) {
    primal = std::max(primal, std::abs(r.a.dot(yhat) - r.b));
    normals.push_back(r.a);
    is_ineq.push_back(false);
  }
  auto add_ineq = [&](const Vector& a, double b) {
    const double slack = a.dot(yhat) - b;
    primal = std::max(primal, slack);
    if (slack > -active_tol) {
      normals.push_back(a);
      is_ineq.push_back(true);
    }
  };
  for (const auto& r : set.inequalities()) add_ineq(r.a, r.b);
  for (const auto& r : extra) add_ineq(r.a, r.b);
  for (Eigen::Index c = 0; c < k; ++c) {
    if (set.nonneg()[static_cast<std::size_t>(c)]) {
      Vector a = Vector::Zero(k);
      a(c) = -1.0;
      add_ineq(a, 0.0);
    }
  }
  // yhat − point + Σ λ_i a_i = 0, λ_i ≥ 0 on inequalities.
  const Vector g = point - yhat;
  double stationarity = g.lpNorm<Eigen::Infinity>();
  double dual = 0.0;
  if (!normals.empty()) {
    Eigen::MatrixXd a(k, static_cast<Eigen::Index>(normals.size()));
    for (std::size_t i = 0; i < normals.size(); ++i) a.col(static_cast<Eigen::Index>(i)) = normals[i];
    const Vector lambda = a.completeOrthogonalDecomposition().solve(g);
    stationarity = (a * lambda - g).lpNorm<Eigen::Infinity>();
    for (std::size_t i = 0; i < normals.size(); ++i) {
      if (is_ineq[i]) dual = std::max(dual, -lambda(static_cast<Eigen::Index>(i)));
    }
  }
  return std::max({primal, stationarity / scale, dual / scale});
}

}  // namespace ocrt::testing
