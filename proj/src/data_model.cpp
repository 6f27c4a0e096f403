#include "ocrt/data_model.hpp"

#include <algorithm>
#include <cmath>

#include "ocrt/downstream.hpp"

namespace ocrt {

namespace {

std::vector<std::string> default_names(const char* prefix, std::size_t count) {
  std::vector<std::string> names;
  names.reserve(count);
  for (std::size_t i = 0; i < count; ++i) names.push_back(prefix + std::to_string(i + 1));
  return names;
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw ConfigError(std::string(what) + " contain NaN or infinite entries");
}

}  // namespace

Dataset::Dataset(Matrix features, Matrix targets, std::vector<std::string> feature_names,
                 std::vector<std::string> target_names)
    : features_(std::move(features)),
      targets_(std::move(targets)),
      feature_names_(std::move(feature_names)),
      target_names_(std::move(target_names)) {
  if (features_.rows() < 1 || features_.cols() < 1 || targets_.cols() < 1) {
    throw DimensionError("dataset needs n >= 1, p >= 1 and K >= 1");
  }
  if (features_.rows() != targets_.rows()) {
    throw DimensionError("feature and target row counts differ");
  }
  require_finite(features_, "features");
  require_finite(targets_, "targets");
  if (feature_names_.empty()) feature_names_ = default_names("x", p());
  if (target_names_.empty()) target_names_ = default_names("y", k());
  if (feature_names_.size() != p() || target_names_.size() != k()) {
    throw DimensionError("column name count does not match matrix width");
  }
}

Dataset Dataset::subset(std::span<const Index> rows) const {
  Matrix x(static_cast<Eigen::Index>(rows.size()), features_.cols());
  Matrix y(static_cast<Eigen::Index>(rows.size()), targets_.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= n()) throw DimensionError("subset row index out of range");
    x.row(static_cast<Eigen::Index>(i)) = features_.row(static_cast<Eigen::Index>(rows[i]));
    y.row(static_cast<Eigen::Index>(i)) = targets_.row(static_cast<Eigen::Index>(rows[i]));
  }
  return Dataset(std::move(x), std::move(y), feature_names_, target_names_);
}

Vector TargetRows::mean() const {
  if (empty()) throw DimensionError("mean of an empty row subset");
  Vector sum = Vector::Zero(static_cast<Eigen::Index>(dim()));
  for (std::size_t i = 0; i < size(); ++i) sum += row(i).transpose();
  return sum / static_cast<double>(size());
}

Vector TargetRows::median() const {
  if (empty()) throw DimensionError("median of an empty row subset");
  const std::size_t m = size();
  Vector med(static_cast<Eigen::Index>(dim()));
  std::vector<double> column(m);
  for (std::size_t k = 0; k < dim(); ++k) {
    for (std::size_t i = 0; i < m; ++i) column[i] = row(i)(static_cast<Eigen::Index>(k));
    std::sort(column.begin(), column.end());
    med(static_cast<Eigen::Index>(k)) =
        (m % 2 == 1) ? column[m / 2] : 0.5 * (column[m / 2 - 1] + column[m / 2]);
  }
  return med;
}

// ============================================================================
// FeasibleSet
// ============================================================================

FeasibleSet::FeasibleSet(std::size_t dim, std::vector<LinearConstraint> equalities,
                         std::vector<LinearConstraint> inequalities, std::vector<bool> nonneg,
                         std::optional<Cardinality> cardinality)
    : dim_(dim),
      eq_(std::move(equalities)),
      ineq_(std::move(inequalities)),
      nonneg_(std::move(nonneg)),
      cardinality_(cardinality) {
  if (dim_ < 1) throw DimensionError("feasible set dimension must be positive");
  if (nonneg_.empty()) nonneg_.assign(dim_, false);
  if (nonneg_.size() != dim_) throw DimensionError("nonneg mask length differs from dim");
  auto check_rows = [&](const std::vector<LinearConstraint>& rows) {
    for (const auto& row : rows) {
      if (static_cast<std::size_t>(row.a.size()) != dim_) {
        throw DimensionError("constraint row length differs from dim");
      }
      if (!row.a.allFinite() || !std::isfinite(row.b)) {
        throw ConfigError("constraint rows must be finite");
      }
    }
  };
  check_rows(eq_);
  check_rows(ineq_);
  if (cardinality_) {
    if (!(cardinality_->big_m > 0.0)) throw ConfigError("big-M bound must be positive");
    if (cardinality_->max_support < 1 || cardinality_->max_support > dim_) {
      throw ConfigError("cardinality max_support must lie in [1, dim]");
    }
  }
}

FeasibleSet FeasibleSet::unconstrained(std::size_t dim) { return FeasibleSet(dim, {}, {}, {}); }

FeasibleSet FeasibleSet::without_cardinality() const {
  return FeasibleSet(dim_, eq_, ineq_, nonneg_, std::nullopt);
}

FeasibleSet FeasibleSet::simplified() const {
  if (!cardinality_ || cardinality_->max_support < dim_) return *this;
  auto ineq = ineq_;
  for (std::size_t k = 0; k < dim_; ++k) {
    Vector a = Vector::Zero(static_cast<Eigen::Index>(dim_));
    a(static_cast<Eigen::Index>(k)) = 1.0;
    ineq.push_back({a, cardinality_->big_m});
  }
  return FeasibleSet(dim_, eq_, std::move(ineq), nonneg_, std::nullopt);
}

FeasibleSet FeasibleSet::with_inequalities(const std::vector<LinearConstraint>& extra) const {
  auto ineq = ineq_;
  ineq.insert(ineq.end(), extra.begin(), extra.end());
  return FeasibleSet(dim_, eq_, std::move(ineq), nonneg_, cardinality_);
}

FeasibleSet FeasibleSet::with_equalities(const std::vector<LinearConstraint>& extra) const {
  auto eq = eq_;
  eq.insert(eq.end(), extra.begin(), extra.end());
  return FeasibleSet(dim_, std::move(eq), ineq_, nonneg_, cardinality_);
}

ViolationReport check_feasibility(const Vector& y, const FeasibleSet& set, double tol) {
  if (static_cast<std::size_t>(y.size()) != set.dim()) {
    throw DimensionError("vector length differs from feasible set dimension");
  }
  if (!(tol > 0.0)) throw DomainError("feasibility tolerance must be positive");

  ViolationReport report;
  report.tolerance = tol;
  for (const auto& row : set.equalities()) {
    report.max_abs_eq_violation = std::max(report.max_abs_eq_violation, std::abs(row.a.dot(y) - row.b));
  }
  for (const auto& row : set.inequalities()) {
    report.max_ineq_violation = std::max(report.max_ineq_violation, row.a.dot(y) - row.b);
  }
  for (std::size_t k = 0; k < set.dim(); ++k) {
    if (set.nonneg()[k]) {
      report.max_ineq_violation = std::max(report.max_ineq_violation, -y(static_cast<Eigen::Index>(k)));
    }
  }
  bool support_ok = true;
  if (const auto& card = set.cardinality()) {
    std::size_t support = 0;
    for (Eigen::Index k = 0; k < y.size(); ++k) {
      if (std::abs(y(k)) > tol) ++support;
      report.max_ineq_violation = std::max(report.max_ineq_violation, y(k) - card->big_m);
    }
    report.support_size = support;
    support_ok = support <= card->max_support;
  }
  report.feasible = report.max_abs_eq_violation <= tol && report.max_ineq_violation <= tol && support_ok &&
                    y.allFinite();
  return report;
}

// ============================================================================
// Losses
// ============================================================================

TwoGroupKnapsack TwoGroupKnapsack::halves(std::size_t dim, double cap1, double cap2) {
  if (dim < 2) throw DimensionError("two-group knapsack needs at least two items");
  if (!(cap1 > 0.0) || !(cap2 > 0.0)) throw ConfigError("knapsack capacities must be positive");
  return TwoGroupKnapsack{dim, dim / 2, cap1, cap2};
}

Loss Loss::weighted(Vector w) {
  if (w.size() == 0 || w.isZero(0.0)) throw ConfigError("weighted loss needs a nonzero weight vector");
  Loss loss(LossKind::WeightedLinear);
  loss.weights_ = std::move(w);
  return loss;
}

Loss Loss::regret(TwoGroupKnapsack knapsack) {
  if (knapsack.split == 0 || knapsack.split >= knapsack.dim) {
    throw ConfigError("knapsack groups must both be nonempty");
  }
  Loss loss(LossKind::Regret);
  loss.knapsack_ = knapsack;
  return loss;
}

std::string Loss::name() const {
  switch (kind_) {
    case LossKind::Mse: return "mse";
    case LossKind::Mad: return "mad";
    case LossKind::PoissonDeviance: return "poisson";
    case LossKind::WeightedLinear: return "weighted";
    case LossKind::Regret: return "regret";
  }
  return "unknown";
}

double row_loss(const Loss& loss, const Vector& yhat, const Eigen::Ref<const Eigen::RowVectorXd>& y) {
  if (yhat.size() != y.size()) throw DimensionError("prediction and target lengths differ");
  switch (loss.kind()) {
    case LossKind::Mse:
      return 0.5 * (yhat - y.transpose()).squaredNorm();
    case LossKind::Mad:
      return (yhat - y.transpose()).cwiseAbs().sum();
    case LossKind::PoissonDeviance: {
      double total = 0.0;
      for (Eigen::Index k = 0; k < y.size(); ++k) {
        const double mu = yhat(k);
        const double obs = y(k);
        if (!(mu > 0.0)) throw DomainError("Poisson deviance needs strictly positive predictions");
        if (obs < 0.0) throw DomainError("Poisson deviance needs nonnegative targets");
        total += (obs > 0.0 ? obs * std::log(obs / mu) : 0.0) + mu - obs;
      }
      return total;
    }
    case LossKind::WeightedLinear: {
      const Vector& w = loss.weights();
      if (w.size() != y.size()) throw DimensionError("weight vector length differs from K");
      const double diff = w.dot(yhat) - y.dot(w.transpose());
      return diff * diff;
    }
    case LossKind::Regret: {
      const auto& knapsack = loss.knapsack();
      if (knapsack.dim != static_cast<std::size_t>(y.size())) {
        throw DimensionError("knapsack size differs from K");
      }
      const Vector profit = y.transpose();
      const double best = profit.dot(solve_downstream(profit, knapsack));
      const double achieved = profit.dot(solve_downstream(yhat, knapsack));
      const double gap = best - achieved;
      return gap * gap;
    }
  }
  throw UnsupportedError("unknown loss kind");
}

double loss_eval(const Loss& loss, const Vector& yhat, const TargetRows& rows) {
  if (rows.empty()) throw DimensionError("loss over an empty row subset");
  if (static_cast<std::size_t>(yhat.size()) != rows.dim()) {
    throw DimensionError("prediction length differs from target width");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) total += row_loss(loss, yhat, rows.row(i));
  return total / static_cast<double>(rows.size());
}

}  // namespace ocrt
