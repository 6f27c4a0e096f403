#include "ocrt/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ocrt/downstream.hpp"

namespace ocrt {

namespace {

constexpr double kTieTol = 1e-12;

bool strictly_better(double candidate, double incumbent) {
  return candidate < incumbent - kTieTol * std::max(1.0, std::abs(incumbent));
}

// {Σ y = total, y ≥ 0} plus a cardinality record whose big-M bound is slack.
std::optional<double> fixed_sum_total(const FeasibleSet& set) {
  if (set.equalities().size() != 1 || !set.inequalities().empty()) return std::nullopt;
  if (std::find(set.nonneg().begin(), set.nonneg().end(), false) != set.nonneg().end()) return std::nullopt;
  const auto& row = set.equalities().front();
  if (!(row.a.array() == 1.0).all()) return std::nullopt;
  return row.b;
}

// Advances `idx` to the next s-combination of {0..n-1} in lexicographic order.
bool next_combination(std::vector<Index>& idx, std::size_t n) {
  const std::size_t s = idx.size();
  for (std::size_t i = s; i-- > 0;) {
    if (idx[i] < n - s + i) {
      ++idx[i];
      for (std::size_t j = i + 1; j < s; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

// Constraints of `set` restricted to the coordinates in `support`, with the
// remaining coordinates fixed at zero and the big-M bound on the support.
FeasibleSet restrict_to_support(const FeasibleSet& set, const std::vector<Index>& support, double big_m) {
  const auto s = static_cast<Eigen::Index>(support.size());
  auto restrict = [&](const std::vector<LinearConstraint>& rows) {
    std::vector<LinearConstraint> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
      Vector a(s);
      for (Eigen::Index j = 0; j < s; ++j) a(j) = row.a(static_cast<Eigen::Index>(support[static_cast<std::size_t>(j)]));
      out.push_back({std::move(a), row.b});
    }
    return out;
  };
  auto ineq = restrict(set.inequalities());
  std::vector<bool> nonneg(support.size());
  for (std::size_t j = 0; j < support.size(); ++j) {
    nonneg[j] = set.nonneg()[support[j]];
    Vector a = Vector::Zero(s);
    a(static_cast<Eigen::Index>(j)) = 1.0;
    ineq.push_back({std::move(a), big_m});
  }
  return FeasibleSet(support.size(), restrict(set.equalities()), std::move(ineq), std::move(nonneg));
}

Vector gather(const Vector& v, const std::vector<Index>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out(static_cast<Eigen::Index>(j)) = v(static_cast<Eigen::Index>(idx[j]));
  return out;
}

Vector scatter(const Vector& v, const std::vector<Index>& idx, std::size_t dim) {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(dim));
  for (std::size_t j = 0; j < idx.size(); ++j) out(static_cast<Eigen::Index>(idx[j])) = v(static_cast<Eigen::Index>(j));
  return out;
}

// Projection of `mean` onto the support-restricted set, or nothing when the
// restriction is empty.
std::optional<Vector> project_on_support(const Vector& mean, const FeasibleSet& set,
                                         const std::vector<Index>& support, double big_m,
                                         std::optional<double> fixed_total) {
  if (fixed_total) {
    return scatter(project_simplex_fixed_sum(gather(mean, support), *fixed_total), support, set.dim());
  }
  try {
    const auto restricted = restrict_to_support(set, support, big_m);
    auto res = project_polyhedron(gather(mean, support), restricted);
    return scatter(res.yhat, support, set.dim());
  } catch (const InfeasibleSetError&) {
    return std::nullopt;
  }
}

PredictionResult subgradient_fallback(const TargetRows& rows, const FeasibleSet& set, const Loss& loss) {
  const bool poisson = loss.kind() == LossKind::PoissonDeviance;
  const auto dim = static_cast<Eigen::Index>(set.dim());
  const Vector mean = rows.mean();

  std::vector<LinearConstraint> floor_rows;
  if (poisson) {
    // Poisson deviance is only defined for positive predictions.
    for (Eigen::Index k = 0; k < dim; ++k) {
      Vector a = Vector::Zero(dim);
      a(k) = -1.0;
      floor_rows.push_back({std::move(a), -1e-9});
    }
  }

  const Vector start = predict_unconstrained(rows, loss);
  const bool start_positive = !poisson || (start.array() > 0.0).all();
  if (start_positive && check_feasibility(start, set, 1e-10).feasible) {
    return {start, loss_eval(loss, start, rows), std::nullopt, SolverStatus::Optimal};
  }

  Vector x = project_polyhedron(start, set, floor_rows).yhat;
  Vector best = x;
  double best_obj = loss_eval(loss, x, rows);
  Vector average = Vector::Zero(dim);

  double spread = 1.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    spread = std::max(spread, (rows.row(i).transpose() - mean).lpNorm<Eigen::Infinity>());
  }
  const double step0 = 0.5 * spread;

  for (std::size_t t = 0; t < kSubgradientIterations; ++t) {
    Vector g = Vector::Zero(dim);
    if (poisson) {
      g = (1.0 - mean.array() / x.array()).matrix();
    } else {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const Vector diff = x - rows.row(i).transpose();
        g += diff.unaryExpr([](double d) { return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0); });
      }
      g /= static_cast<double>(rows.size());
    }
    const double gnorm = g.norm();
    if (gnorm == 0.0) break;
    const double step = step0 / std::sqrt(static_cast<double>(t + 1));
    x = project_polyhedron(x - step * g / std::max(1.0, gnorm), set, floor_rows).yhat;
    average += (x - average) / static_cast<double>(t + 1);
    const double obj = loss_eval(loss, x, rows);
    if (obj < best_obj) {
      best_obj = obj;
      best = x;
    }
  }

  if (!poisson) {
    const Vector avg = project_polyhedron(average, set).yhat;
    const double obj = loss_eval(loss, avg, rows);
    if (obj < best_obj) {
      best_obj = obj;
      best = avg;
    }
  }
  return {best, best_obj, std::nullopt, SolverStatus::IterLimit};
}

}  // namespace

Vector predict_unconstrained(const TargetRows& rows, const Loss& loss) {
  if (rows.empty()) throw DimensionError("prediction over an empty row subset");
  if (loss.kind() == LossKind::Mad) return rows.median();
  return rows.mean();
}

PredictionResult cardinality_projection(const Vector& mean, const FeasibleSet& set) {
  const auto& card = set.cardinality();
  if (!card) throw UnsupportedError("cardinality solver needs a cardinality record");
  const std::size_t dim = set.dim();
  const std::size_t s = card->max_support;
  if (static_cast<std::size_t>(mean.size()) != dim) throw DimensionError("mean length differs from dim");

  auto fixed_total = fixed_sum_total(set);
  if (fixed_total) {
    if (*fixed_total < 0.0) throw InfeasibleSetError("negative fixed total with nonnegative targets");
    if (*fixed_total > static_cast<double>(s) * card->big_m * (1.0 + 1e-12)) {
      throw InfeasibleSetError("fixed total exceeds max_support * big_m");
    }
    // Simplex projections never exceed the total, so the big-M bound is slack.
    if (card->big_m < *fixed_total) fixed_total.reset();
  }

  PredictionResult result;
  if (dim > 25 && s > 5) {
    std::vector<Index> order(dim);
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return mean(static_cast<Eigen::Index>(a)) > mean(static_cast<Eigen::Index>(b)); });
    std::vector<Index> support(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(s));
    std::sort(support.begin(), support.end());
    auto y = project_on_support(mean, set, support, card->big_m, fixed_total);
    if (!y) throw InfeasibleSetError("greedy support admits no feasible point");
    result.yhat = *y;
    result.objective = 0.5 * (*y - mean).squaredNorm();
    result.support = support;
    result.status = SolverStatus::Heuristic;
    return result;
  }

  std::vector<Index> support(s);
  std::iota(support.begin(), support.end(), Index{0});
  bool found = false;
  do {
    auto y = project_on_support(mean, set, support, card->big_m, fixed_total);
    if (!y) continue;
    const double obj = 0.5 * (*y - mean).squaredNorm();
    if (!found || strictly_better(obj, result.objective)) {
      found = true;
      result.yhat = std::move(*y);
      result.objective = obj;
      result.support = support;
    }
  } while (next_combination(support, dim));
  if (!found) throw InfeasibleSetError("no support admits a feasible point");
  return result;
}

PredictionResult solve_cardinality_prediction(const TargetRows& rows, const FeasibleSet& set) {
  if (rows.empty()) throw DimensionError("prediction over an empty row subset");
  auto result = cardinality_projection(rows.mean(), set);
  result.objective = loss_eval(Loss::mse(), result.yhat, rows);
  return result;
}

PredictionResult constrained_mse_from_mean(const Vector& mean, const FeasibleSet& set) {
  if (set.is_convex()) return project_polyhedron(mean, set);
  return cardinality_projection(mean, set);
}

PredictionResult weighted_loss_prediction(const TargetRows& rows, const Vector& w, const FeasibleSet& set) {
  if (rows.empty()) throw DimensionError("prediction over an empty row subset");
  if (!set.is_convex()) throw UnsupportedError("weighted loss prediction needs a convex set");
  if (static_cast<std::size_t>(w.size()) != set.dim()) throw DimensionError("weight length differs from dim");
  if (w.isZero(0.0)) throw ConfigError("weight vector is all zero");

  const Vector mean = rows.mean();
  const double target = w.dot(mean);
  auto at_level = [&](double level) {
    return project_polyhedron(mean, set.with_equalities({{w, level}}));
  };

  PredictionResult result;
  try {
    result = at_level(target);
  } catch (const InfeasibleSetError&) {
    // The level c̄ is outside the range of wᵀy over 𝕐; bisect towards the
    // nearest attainable level starting from any feasible point.
    double feasible = w.dot(project_polyhedron(mean, set).yhat);
    double infeasible = target;
    const double scale = std::max({1.0, std::abs(feasible), std::abs(target)});
    result = at_level(feasible);
    for (int it = 0; it < 200 && std::abs(infeasible - feasible) > 1e-13 * scale; ++it) {
      const double mid = 0.5 * (feasible + infeasible);
      try {
        result = at_level(mid);
        feasible = mid;
      } catch (const InfeasibleSetError&) {
        infeasible = mid;
      }
    }
  }
  result.objective = loss_eval(Loss::weighted(w), result.yhat, rows);
  return result;
}

PredictionResult predict_constrained(const TargetRows& rows, const FeasibleSet& set, const Loss& loss) {
  if (rows.empty()) throw DimensionError("prediction over an empty row subset");
  if (rows.dim() != set.dim()) throw DimensionError("target width differs from feasible set dimension");

  switch (loss.kind()) {
    case LossKind::Mse: {
      if (!set.is_convex()) return solve_cardinality_prediction(rows, set);
      auto result = project_polyhedron(rows.mean(), set);
      result.objective = loss_eval(loss, result.yhat, rows);
      return result;
    }
    case LossKind::WeightedLinear:
      return weighted_loss_prediction(rows, loss.weights(), set);
    case LossKind::Regret: {
      if (!set.is_convex()) throw UnsupportedError("regret prediction needs a convex set");
      auto e2e = end_to_end_leaf_prediction(rows, set, loss.knapsack());
      PredictionResult result;
      result.yhat = std::move(e2e.yhat);
      result.objective = loss_eval(loss, result.yhat, rows);
      return result;
    }
    case LossKind::Mad:
    case LossKind::PoissonDeviance:
      if (!set.is_convex()) {
        throw UnsupportedError(loss.name() + " prediction over a non-convex set is not supported");
      }
      return subgradient_fallback(rows, set, loss);
  }
  throw UnsupportedError("unknown loss kind");
}

}  // namespace ocrt
