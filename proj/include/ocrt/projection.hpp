#pragma once

#include <optional>
#include <vector>

#include "ocrt/data_model.hpp"

namespace ocrt {

enum class SolverStatus { Optimal, IterLimit, Heuristic };

const char* to_string(SolverStatus status);

struct PredictionResult {
  Vector yhat;
  double objective = 0.0;
  /// Chosen support (0-based, ascending) when the set carries a cardinality limit.
  std::optional<std::vector<Index>> support;
  SolverStatus status = SolverStatus::Optimal;
};

/// Euclidean projection of `point` onto the convex part of `set` intersected
/// with `extra_ineq`: minimises ½‖ŷ − point‖² subject to the equalities,
/// inequalities and nonnegativity bounds. The returned objective is that
/// half squared distance.
///
/// Solved with a dual active-set method on the KKT system: the unconstrained
/// minimiser is moved onto the equalities first, then the most violated
/// inequality is added to the working set (lowest index on ties) and
/// constraints whose multipliers would turn negative are dropped, until the
/// iterate is primal feasible. Throws InfeasibleSetError when some constraint
/// cannot be satisfied together with the working set. Any cardinality record
/// on `set` is ignored.
PredictionResult project_polyhedron(const Vector& point, const FeasibleSet& set,
                                    const std::vector<LinearConstraint>& extra_ineq = {});

/// Projection onto {y ≥ 0, Σ y = total} by sort-and-threshold.
Vector project_simplex_fixed_sum(const Vector& v, double total);

}  // namespace ocrt
