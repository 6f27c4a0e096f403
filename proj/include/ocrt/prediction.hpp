#pragma once

#include "ocrt/data_model.hpp"
#include "ocrt/projection.hpp"

namespace ocrt {

/// Unconstrained optimum: columnwise mean (MSE, Poisson) or median (MAD).
Vector predict_unconstrained(const TargetRows& rows, const Loss& loss);

/// Global MSE optimum over a set with a cardinality limit, found by
/// enumerating every support of size max_support in lexicographic order and
/// projecting the restricted mean. Ties keep the earliest support.
PredictionResult solve_cardinality_prediction(const TargetRows& rows, const FeasibleSet& set);

/// Same solver driven by the subset mean only (the MSE objective differs from
/// ½‖ŷ − mean‖² by a constant). The returned objective is that distance term.
PredictionResult cardinality_projection(const Vector& mean, const FeasibleSet& set);

/// MSE-optimal constrained prediction from the subset mean: a polyhedral
/// projection for convex sets, support enumeration otherwise. The objective
/// is ½‖ŷ − mean‖².
PredictionResult constrained_mse_from_mean(const Vector& mean, const FeasibleSet& set);

/// ŷ ∈ 𝕐 minimising (wᵀŷ − c̄)² with c̄ the mean of wᵀy_i; among minimisers,
/// the one closest to the columnwise mean.
PredictionResult weighted_loss_prediction(const TargetRows& rows, const Vector& w, const FeasibleSet& set);

/// Solves argmin_{ŷ ∈ 𝕐} Σ ℓ(ŷ, y_i) for the supported (set, loss) pairs and
/// reports the mean loss as the objective.
///
/// | loss              | convex set             | cardinality set |
/// |-------------------|------------------------|-----------------|
/// | MSE               | projection of the mean | enumeration     |
/// | WeightedLinear    | level-set projection   | unsupported     |
/// | Regret            | vertex enumeration     | unsupported     |
/// | MAD, Poisson      | projected subgradient  | unsupported     |
PredictionResult predict_constrained(const TargetRows& rows, const FeasibleSet& set, const Loss& loss);

/// Iteration cap of the projected (sub)gradient fallback.
inline constexpr std::size_t kSubgradientIterations = 10000;

}  // namespace ocrt
