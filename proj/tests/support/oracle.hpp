#pragma once

#include <optional>
#include <vector>

#include "ocrt/data_model.hpp"
#include "ocrt/projection.hpp"

namespace ocrt::testing {

/// Exhaustive grid search for min_{ŷ ∈ 𝕐} loss_eval(loss, ŷ, rows), K ≤ 4.
/// Equalities are eliminated by Gaussian elimination; the remaining free
/// coordinates are gridded inside the box implied by single-coordinate
/// bounds. Cardinality sets enumerate supports of size s in lexicographic
/// order and grid only the on-support coordinates.
PredictionResult brute_force_prediction_oracle(const TargetRows& rows, const FeasibleSet& set, const Loss& loss,
                                               double grid_step);

/// Objective of the best support other than `exclude` (cardinality sets).
/// Used to decide whether the optimal support is unambiguous at grid accuracy.
std::optional<double> runner_up_support_objective(const TargetRows& rows, const FeasibleSet& set, const Loss& loss,
                                                  double grid_step, const std::vector<Index>& exclude);

/// Largest KKT residual of `yhat` as the projection of `point` onto the set
/// plus `extra`: primal violation, stationarity with least-squares multipliers
/// on the active rows, dual sign violation.
double kkt_residual(const Vector& point, const Vector& yhat, const FeasibleSet& set,
                    const std::vector<LinearConstraint>& extra = {});

}  // namespace ocrt::testing
