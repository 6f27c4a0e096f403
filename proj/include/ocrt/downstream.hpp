#pragma once

#include <vector>

#include "ocrt/data_model.hpp"
#include "ocrt/projection.hpp"

namespace ocrt {

/// Optimal allocation for maximize yᵀq over the two-group knapsack: each group
/// puts its full capacity on its largest positive coefficient (lowest index on
/// ties), or nothing when no coefficient is positive.
Vector solve_downstream(const Vector& y, const TwoGroupKnapsack& knapsack);

struct RegretMetrics {
  double regret = 0.0;
  double squared_regret = 0.0;
};

/// regret = mean_i (y_iᵀq_i − y_iᵀq̂_i), squared_regret = mean of squares.
/// `q_hat` holds one decision per row (or a single row broadcast to all).
RegretMetrics regret_metrics(const Matrix& y_true, const Matrix& q_true, const Matrix& q_hat);

/// Per-row optimal decisions.
Matrix optimal_decisions(const TargetRows& rows, const TwoGroupKnapsack& knapsack);

struct EndToEndPrediction {
  Vector yhat;
  Vector q_hat;
  /// Σ_i (y_iᵀq_i − y_iᵀq̂)², summed (not averaged) over the leaf rows.
  double squared_regret_sum = 0.0;
};

/// Leaf-level bilevel prediction: picks the lower-level vertex q̂ that some
/// ŷ ∈ 𝕐 induces and that minimises the summed squared regret, returning
/// the projection of the leaf mean onto the region inducing q̂ as ŷ.
EndToEndPrediction end_to_end_leaf_prediction(const TargetRows& rows, const FeasibleSet& set,
                                              const TwoGroupKnapsack& knapsack);

/// Candidate lower-level vertex: item index chosen per group, or none.
struct KnapsackVertex {
  std::optional<std::size_t> item1;
  std::optional<std::size_t> item2;
};

/// All vertices in enumeration order (group-1 item, then group-2 item; "none" last).
std::vector<KnapsackVertex> knapsack_vertices(const TwoGroupKnapsack& knapsack);
Vector vertex_allocation(const KnapsackVertex& v, const TwoGroupKnapsack& knapsack);

/// Extra inequalities forcing solve_downstream(ŷ) to select `v`.
std::vector<LinearConstraint> vertex_region(const KnapsackVertex& v,
                                            const TwoGroupKnapsack& knapsack);

}  // namespace ocrt
