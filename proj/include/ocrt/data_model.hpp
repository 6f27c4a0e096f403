#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ocrt/error.hpp"

namespace ocrt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = std::size_t;

inline constexpr double kDefaultFeasibilityTol = 1e-6;

// ============================================================================
// Dataset
// ============================================================================

/// n rows of p features paired with n rows of K targets. Entries are finite.
class Dataset {
 public:
  Dataset(Matrix features, Matrix targets, std::vector<std::string> feature_names = {},
          std::vector<std::string> target_names = {});

  std::size_t n() const { return static_cast<std::size_t>(features_.rows()); }
  std::size_t p() const { return static_cast<std::size_t>(features_.cols()); }
  std::size_t k() const { return static_cast<std::size_t>(targets_.cols()); }

  const Matrix& features() const { return features_; }
  const Matrix& targets() const { return targets_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::vector<std::string>& target_names() const { return target_names_; }

  /// Copy of the given rows, in order (duplicates allowed).
  Dataset subset(std::span<const Index> rows) const;

 private:
  Matrix features_;
  Matrix targets_;
  std::vector<std::string> feature_names_;
  std::vector<std::string> target_names_;
};

/// Non-owning view of a subset of target rows.
class TargetRows {
 public:
  /// All rows of `targets`.
  explicit TargetRows(const Matrix& targets) : targets_(&targets), all_(true) {}
  TargetRows(const Matrix& targets, std::span<const Index> rows)
      : targets_(&targets), rows_(rows), all_(false) {}

  std::size_t size() const {
    return all_ ? static_cast<std::size_t>(targets_->rows()) : rows_.size();
  }
  bool empty() const { return size() == 0; }
  std::size_t dim() const { return static_cast<std::size_t>(targets_->cols()); }

  auto row(std::size_t i) const { return targets_->row(static_cast<Eigen::Index>(index(i))); }
  Index index(std::size_t i) const { return all_ ? i : rows_[i]; }

  Vector mean() const;
  /// Columnwise median; even counts average the two middle values.
  Vector median() const;

 private:
  const Matrix* targets_;
  std::span<const Index> rows_;
  bool all_;
};

// ============================================================================
// Feasible set
// ============================================================================

/// aᵀy (= or ≤) b.
struct LinearConstraint {
  Vector a;
  double b = 0.0;
};

/// At most `max_support` coordinates nonzero, each bounded above by `big_m`.
struct Cardinality {
  std::size_t max_support = 1;
  double big_m = 1.0;
};

class FeasibleSet {
 public:
  FeasibleSet() = default;
  FeasibleSet(std::size_t dim, std::vector<LinearConstraint> equalities,
              std::vector<LinearConstraint> inequalities, std::vector<bool> nonneg,
              std::optional<Cardinality> cardinality = std::nullopt);

  /// The whole of R^dim.
  static FeasibleSet unconstrained(std::size_t dim);

  std::size_t dim() const { return dim_; }
  const std::vector<LinearConstraint>& equalities() const { return eq_; }
  const std::vector<LinearConstraint>& inequalities() const { return ineq_; }
  const std::vector<bool>& nonneg() const { return nonneg_; }
  const std::optional<Cardinality>& cardinality() const { return cardinality_; }

  bool is_convex() const { return !cardinality_.has_value(); }

  /// Same set without the cardinality record (the big-M bounds are dropped too).
  FeasibleSet without_cardinality() const;

  /// Replaces a vacuous cardinality restriction (max_support ≥ dim) by the
  /// equivalent upper bounds y_k ≤ M, which makes the set convex.
  FeasibleSet simplified() const;

  /// Copy with extra inequality rows appended.
  FeasibleSet with_inequalities(const std::vector<LinearConstraint>& extra) const;
  FeasibleSet with_equalities(const std::vector<LinearConstraint>& extra) const;

 private:
  std::size_t dim_ = 0;
  std::vector<LinearConstraint> eq_;
  std::vector<LinearConstraint> ineq_;
  std::vector<bool> nonneg_;
  std::optional<Cardinality> cardinality_;
};

struct ViolationReport {
  bool feasible = true;
  double max_abs_eq_violation = 0.0;
  /// Largest positive part over inequalities, nonnegativity and big-M bounds.
  double max_ineq_violation = 0.0;
  std::optional<std::size_t> support_size;
  double tolerance = kDefaultFeasibilityTol;
};

ViolationReport check_feasibility(const Vector& y, const FeasibleSet& set,
                                  double tol = kDefaultFeasibilityTol);

// ============================================================================
// Losses
// ============================================================================

/// Continuous knapsack with two capacity groups: items [0, split) share
/// capacity `cap1`, items [split, dim) share `cap2`.
struct TwoGroupKnapsack {
  std::size_t dim = 0;
  std::size_t split = 0;
  double cap1 = 100.0;
  double cap2 = 10.0;

  /// Groups {1..⌊K/2⌋} and the rest.
  static TwoGroupKnapsack halves(std::size_t dim, double cap1 = 100.0, double cap2 = 10.0);
};

enum class LossKind { Mse, Mad, PoissonDeviance, WeightedLinear, Regret };

class Loss {
 public:
  static Loss mse() { return Loss(LossKind::Mse); }
  static Loss mad() { return Loss(LossKind::Mad); }
  static Loss poisson() { return Loss(LossKind::PoissonDeviance); }
  static Loss weighted(Vector w);
  static Loss regret(TwoGroupKnapsack knapsack);

  LossKind kind() const { return kind_; }
  const Vector& weights() const { return weights_; }
  const TwoGroupKnapsack& knapsack() const { return knapsack_; }

  std::string name() const;

 private:
  explicit Loss(LossKind kind) : kind_(kind) {}
  LossKind kind_;
  Vector weights_;
  TwoGroupKnapsack knapsack_;
};

/// Loss contributed by one target row. MSE carries the factor ½.
double row_loss(const Loss& loss, const Vector& yhat, const Eigen::Ref<const Eigen::RowVectorXd>& y);

/// Mean over rows of row_loss.
double loss_eval(const Loss& loss, const Vector& yhat, const TargetRows& rows);

}  // namespace ocrt
