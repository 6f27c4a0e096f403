#include "ocrt/projection.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace ocrt {

const char* to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::Optimal: return "optimal";
    case SolverStatus::IterLimit: return "iter_limit";
    case SolverStatus::Heuristic: return "heuristic";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// nᵀx = d (equality) or nᵀx ≥ d.
struct Row {
  Vector n;
  double d = 0.0;
  bool equality = false;
};

std::vector<Row> collect_rows(const FeasibleSet& set, const std::vector<LinearConstraint>& extra) {
  std::vector<Row> rows;
  rows.reserve(set.equalities().size() + set.inequalities().size() + extra.size() + set.dim());
  for (const auto& c : set.equalities()) rows.push_back({c.a, c.b, true});
  for (const auto& c : set.inequalities()) rows.push_back({-c.a, -c.b, false});
  for (const auto& c : extra) {
    if (static_cast<std::size_t>(c.a.size()) != set.dim()) {
      throw DimensionError("extra inequality length differs from dim");
    }
    rows.push_back({-c.a, -c.b, false});
  }
  for (std::size_t k = 0; k < set.dim(); ++k) {
    if (!set.nonneg()[k]) continue;
    Vector n = Vector::Zero(static_cast<Eigen::Index>(set.dim()));
    n(static_cast<Eigen::Index>(k)) = 1.0;
    rows.push_back({std::move(n), 0.0, false});
  }
  return rows;
}

class ActiveSetProjector {
 public:
  ActiveSetProjector(const Vector& point, std::vector<Row> rows)
      : point_(point), rows_(std::move(rows)), dim_(point.size()) {}

  PredictionResult solve() {
    x_ = point_;
    PredictionResult result;
    if (all_satisfied(1e-13)) {
      result.yhat = x_;
      return result;
    }
    refactor();
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (rows_[i].equality) add_equality(i);
    }

    const std::size_t max_iter = 50 * (rows_.size() + static_cast<std::size_t>(dim_)) + 100;
    std::size_t iter = 0;
    bool converged = false;
    while (iter < max_iter) {
      const auto violated = most_violated();
      if (!violated) {
        converged = true;
        break;
      }
      if (!add_inequality(*violated, iter, max_iter)) break;
    }
    result.yhat = x_;
    result.objective = 0.5 * (x_ - point_).squaredNorm();
    result.status = converged ? SolverStatus::Optimal : SolverStatus::IterLimit;
    return result;
  }

 private:
  double tol(std::size_t i) const {
    const double scale = std::max({1.0, std::abs(rows_[i].d), rows_[i].n.lpNorm<1>() * x_.lpNorm<Eigen::Infinity>()});
    return 1e-11 * scale;
  }

  double slack(std::size_t i) const { return rows_[i].n.dot(x_) - rows_[i].d; }

  bool all_satisfied(double rel) const {
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      const double scale = std::max({1.0, std::abs(rows_[i].d), rows_[i].n.lpNorm<1>() * x_.lpNorm<Eigen::Infinity>()});
      const double s = slack(i);
      if (rows_[i].equality ? std::abs(s) > rel * scale : s < -rel * scale) return false;
    }
    return true;
  }

  bool is_active(std::size_t i) const {
    return std::find(active_.begin(), active_.end(), i) != active_.end();
  }

  std::optional<std::size_t> most_violated() const {
    std::optional<std::size_t> worst;
    double worst_ratio = 0.0;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (rows_[i].equality || is_active(i)) continue;
      const double s = slack(i);
      if (s >= -tol(i)) continue;
      // Violation measured in distance units so rows are comparable.
      const double ratio = -s / rows_[i].n.norm();
      if (!worst || ratio > worst_ratio) {
        worst = i;
        worst_ratio = ratio;
      }
    }
    return worst;
  }

  void refactor() {
    const auto q = static_cast<Eigen::Index>(active_.size());
    if (q == 0) {
      q_mat_ = Eigen::MatrixXd::Identity(dim_, dim_);
      r_mat_.resize(0, 0);
      return;
    }
    Eigen::MatrixXd normals(dim_, q);
    for (Eigen::Index j = 0; j < q; ++j) normals.col(j) = rows_[active_[static_cast<std::size_t>(j)]].n;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(normals);
    q_mat_ = qr.householderQ() * Eigen::MatrixXd::Identity(dim_, dim_);
    r_mat_ = qr.matrixQR().topLeftCorner(q, q).triangularView<Eigen::Upper>();
  }

  // Primal direction z (component of n orthogonal to the active normals) and
  // the change r of the active multipliers per unit step.
  void directions(const Vector& n, Vector& z, Vector& r) const {
    const auto q = static_cast<Eigen::Index>(active_.size());
    const Eigen::MatrixXd q2 = q_mat_.rightCols(dim_ - q);
    z = q2 * (q2.transpose() * n);
    if (q == 0) {
      r.resize(0);
      return;
    }
    const Vector proj = q_mat_.leftCols(q).transpose() * n;
    r = r_mat_.topLeftCorner(q, q).triangularView<Eigen::Upper>().solve(proj);
  }

  bool null_direction(const Vector& z, const Vector& n) const { return z.norm() <= 1e-10 * n.norm(); }

  void append_active(std::size_t i, double multiplier) {
    active_.push_back(i);
    u_.conservativeResize(u_.size() + 1);
    u_(u_.size() - 1) = multiplier;
    refactor();
  }

  void drop_active(std::size_t pos) {
    active_.erase(active_.begin() + static_cast<std::ptrdiff_t>(pos));
    Vector u(u_.size() - 1);
    for (Eigen::Index j = 0, m = 0; j < u_.size(); ++j) {
      if (j != static_cast<Eigen::Index>(pos)) u(m++) = u_(j);
    }
    u_ = std::move(u);
    refactor();
  }

  void add_equality(std::size_t i) {
    Vector z, r;
    directions(rows_[i].n, z, r);
    const double s = slack(i);
    if (null_direction(z, rows_[i].n)) {
      if (std::abs(s) > 1e3 * tol(i)) throw InfeasibleSetError("inconsistent equality constraints");
      return;
    }
    const double t = -s / z.dot(rows_[i].n);
    x_ += t * z;
    if (r.size() > 0) u_ -= t * r;
    append_active(i, t);
  }

  // One outer iteration of the dual method for violated row p. Returns false
  // when the iteration budget ran out.
  bool add_inequality(std::size_t p, std::size_t& iter, std::size_t max_iter) {
    double u_new = 0.0;
    while (iter++ < max_iter) {
      Vector z, r;
      directions(rows_[p].n, z, r);

      std::optional<std::size_t> block;
      double t1 = kInf;
      for (std::size_t pos = 0; pos < active_.size(); ++pos) {
        if (rows_[active_[pos]].equality) continue;
        const double rj = r(static_cast<Eigen::Index>(pos));
        if (rj <= 1e-14) continue;
        const double ratio = u_(static_cast<Eigen::Index>(pos)) / rj;
        if (ratio < t1 || (ratio == t1 && block && active_[pos] < active_[*block])) {
          t1 = ratio;
          block = pos;
        }
      }
      const bool primal_step = !null_direction(z, rows_[p].n);
      const double t2 = primal_step ? -slack(p) / z.dot(rows_[p].n) : kInf;
      const double t = std::min(t1, t2);
      if (t == kInf) throw InfeasibleSetError("constraint system is infeasible");

      if (primal_step) x_ += t * z;
      if (r.size() > 0) u_ -= t * r;
      u_new += t;
      if (primal_step && t2 <= t1) {
        append_active(p, u_new);
        return true;
      }
      drop_active(*block);
    }
    return false;
  }

  const Vector& point_;
  std::vector<Row> rows_;
  Eigen::Index dim_;
  Vector x_;
  std::vector<std::size_t> active_;
  Vector u_;
  Eigen::MatrixXd q_mat_;
  Eigen::MatrixXd r_mat_;
};

}  // namespace

PredictionResult project_polyhedron(const Vector& point, const FeasibleSet& set,
                                    const std::vector<LinearConstraint>& extra_ineq) {
  if (static_cast<std::size_t>(point.size()) != set.dim()) {
    throw DimensionError("point length differs from feasible set dimension");
  }
  if (!point.allFinite()) throw DomainError("cannot project a non-finite point");
  ActiveSetProjector projector(point, collect_rows(set, extra_ineq));
  return projector.solve();
}

Vector project_simplex_fixed_sum(const Vector& v, double total) {
  if (v.size() < 1) throw DimensionError("simplex projection of an empty vector");
  if (total < 0.0) throw DomainError("simplex total must be nonnegative");
  std::vector<double> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double threshold = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumulative += sorted[j];
    const double candidate = (cumulative - total) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) threshold = candidate;
  }
  if (total == 0.0) return Vector::Zero(v.size());
  return (v.array() - threshold).cwiseMax(0.0).matrix();
}

}  // namespace ocrt
