#include "ocrt/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "ocrt/projection.hpp"
#include "ocrt/random.hpp"

namespace ocrt {

namespace {

enum class FunctionKind { Sine, Cosine, Tangent, Linear, Polynomial };

struct Term {
  FunctionKind kind = FunctionKind::Linear;
  double weight = 1.0;
  double freq = 1.0;
  std::vector<double> coef;  // linear: {b, a}; polynomial: ascending powers

  double operator()(double x, const SyntheticRecipe& r) const {
    switch (kind) {
      case FunctionKind::Sine: return weight * std::sin(std::numbers::pi * freq * x);
      case FunctionKind::Cosine: return weight * std::cos(std::numbers::pi * freq * x);
      case FunctionKind::Tangent:
        return weight * std::clamp(std::tan(r.tan_scale * (2.0 * x - 1.0)), -r.tan_clip, r.tan_clip);
      case FunctionKind::Linear:
      case FunctionKind::Polynomial: {
        double v = 0.0;
        for (std::size_t d = coef.size(); d-- > 0;) v = v * x + coef[d];
        return weight * v;
      }
    }
    return 0.0;
  }
};

Matrix discrete_features(std::size_t n, std::size_t p, Rng& rng) {
  std::uniform_int_distribution<int> level(0, 10);
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = level(rng) / 10.0;
  }
  return x;
}

Term draw_term(const SyntheticRecipe& r, Rng& rng) {
  std::uniform_int_distribution<int> pick(0, 4);
  std::uniform_real_distribution<double> weight(r.weight_min, r.weight_max);
  std::uniform_real_distribution<double> freq(r.freq_min, r.freq_max);
  std::uniform_real_distribution<double> coef(-r.coef_range, r.coef_range);
  Term t;
  t.kind = static_cast<FunctionKind>(pick(rng));
  t.weight = weight(rng);
  if (t.kind == FunctionKind::Sine || t.kind == FunctionKind::Cosine) t.freq = freq(rng);
  if (t.kind == FunctionKind::Linear) t.coef = {coef(rng), coef(rng)};
  if (t.kind == FunctionKind::Polynomial) {
    const int degree = std::uniform_int_distribution<int>(2, 3)(rng);
    for (int d = 0; d <= degree; ++d) t.coef.push_back(coef(rng));
  }
  return t;
}

Vector unit(std::size_t k, std::size_t i) {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(k));
  v(static_cast<Eigen::Index>(i)) = 1.0;
  return v;
}

}  // namespace

void SyntheticRecipe::validate() const {
  if (n < 1 || p < 1) throw ConfigError("synthetic recipe needs n ≥ 1 and p ≥ 1");
  if (k < 2) throw ConfigError("synthetic recipe needs K ≥ 2");
  if (!(noise_sd >= 0.0)) throw ConfigError("noise_sd must be nonnegative");
  if (!(weight_min <= weight_max) || !(freq_min <= freq_max) || !(coef_range >= 0.0)) {
    throw ConfigError("synthetic parameter ranges are inverted");
  }
}

void HtsRecipe::validate() const {
  if (n < 1 || p < 1 || k < 1) throw ConfigError("HTS recipe needs n, p, K ≥ 1");
  if (!(noise_sd >= 0.0)) throw ConfigError("noise_sd must be nonnegative");
  if (max_support < 1 || max_support > k) throw ConfigError("max_support must lie in [1, K]");
}

FeasibleSet build_synthetic_constraints(std::size_t k) {
  if (k < 2) throw DimensionError("synthetic constraints need K ≥ 2");
  const std::size_t half = k / 2;
  std::vector<LinearConstraint> eq;
  const std::size_t count = (k - half) / 2;
  for (std::size_t j = 0; j < count; ++j) {
    const std::size_t kj = half + 2 * j;  // 1-based index
    if (kj < 2) continue;                 // K = 3 would reference y_0
    eq.push_back({unit(k, kj - 2) - unit(k, kj - 1), static_cast<double>(j + 1) / 10.0});
  }
  Vector sum = Vector::Zero(static_cast<Eigen::Index>(k));
  sum.head(static_cast<Eigen::Index>(half)).setOnes();
  eq.push_back({sum, 1.0});
  return FeasibleSet(k, std::move(eq), {}, std::vector<bool>(k, true));
}

GeneratedData gen_synthetic(const SyntheticRecipe& recipe) {
  recipe.validate();
  Rng rng(recipe.seed);
  std::vector<Term> terms;  // index j * K + k
  for (std::size_t j = 0; j < recipe.p; ++j) {
    for (std::size_t k = 0; k < recipe.k; ++k) terms.push_back(draw_term(recipe, rng));
  }
  Matrix x = discrete_features(recipe.n, recipe.p, rng);

  const FeasibleSet set = build_synthetic_constraints(recipe.k);
  const FeasibleSet equalities_only(recipe.k, set.equalities(), {}, std::vector<bool>(recipe.k, false));

  Matrix y(static_cast<Eigen::Index>(recipe.n), static_cast<Eigen::Index>(recipe.k));
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < recipe.n; ++i) {
    Vector raw = Vector::Zero(static_cast<Eigen::Index>(recipe.k));
    for (std::size_t j = 0; j < recipe.p; ++j) {
      const double xij = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      for (std::size_t k = 0; k < recipe.k; ++k) raw(static_cast<Eigen::Index>(k)) += terms[j * recipe.k + k](xij, recipe);
    }
    y.row(static_cast<Eigen::Index>(i)) = project_polyhedron(raw, equalities_only).yhat.transpose();
  }
  if (recipe.noise_sd > 0.0) {
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      for (Eigen::Index k = 0; k < y.cols(); ++k) y(i, k) += recipe.noise_sd * noise(rng);
    }
  }
  return {Dataset(std::move(x), std::move(y)), set};
}

FeasibleSet build_hts_constraints(std::size_t k, double total, std::size_t max_support, double big_m) {
  if (k < 1) throw DimensionError("HTS constraints need K ≥ 1");
  if (max_support < 1 || max_support > k) throw ConfigError("max_support must lie in [1, K]");
  if (!(big_m > 0.0)) throw ConfigError("big_m must be positive");
  if (total < 0.0) throw InfeasibleSetError("a negative total cannot be met by nonnegative targets");
  if (total > static_cast<double>(max_support) * big_m) {
    throw InfeasibleSetError("total exceeds max_support * big_m; the set is empty");
  }
  std::vector<LinearConstraint> eq{{Vector::Ones(static_cast<Eigen::Index>(k)), total}};
  return FeasibleSet(k, std::move(eq), {}, std::vector<bool>(k, true), Cardinality{max_support, big_m});
}

GeneratedData gen_hts(const HtsRecipe& recipe) {
  recipe.validate();
  FeasibleSet set = build_hts_constraints(recipe.k, recipe.total, recipe.max_support, recipe.big_m);
  Rng rng(recipe.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto kk = static_cast<Eigen::Index>(recipe.k);
  Matrix coef(kk, static_cast<Eigen::Index>(recipe.p));
  for (Eigen::Index k = 0; k < kk; ++k) {
    for (Eigen::Index j = 0; j < coef.cols(); ++j) coef(k, j) = 2.0 * normal(rng);
  }
  Vector offset(kk);
  for (Eigen::Index k = 0; k < kk; ++k) offset(k) = normal(rng);

  Matrix x = discrete_features(recipe.n, recipe.p, rng);
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(recipe.n), kk);
  std::vector<std::size_t> order(recipe.k);
  for (std::size_t i = 0; i < recipe.n; ++i) {
    const Vector score = coef * x.row(static_cast<Eigen::Index>(i)).transpose() + offset;
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return score(static_cast<Eigen::Index>(a)) > score(static_cast<Eigen::Index>(b));
    });
    order.resize(recipe.max_support);

    // Softmax mass over the support, water-filled under the big-M cap.
    std::vector<double> weight(order.size());
    const double top = score(static_cast<Eigen::Index>(order.front()));
    for (std::size_t s = 0; s < order.size(); ++s) weight[s] = std::exp(score(static_cast<Eigen::Index>(order[s])) - top);
    std::vector<double> mass(order.size(), 0.0);
    std::vector<bool> capped(order.size(), false);
    double remaining = recipe.total;
    for (bool changed = true; changed;) {
      changed = false;
      double free_weight = 0.0;
      for (std::size_t s = 0; s < order.size(); ++s) {
        if (!capped[s]) free_weight += weight[s];
      }
      for (std::size_t s = 0; s < order.size(); ++s) {
        if (!capped[s]) mass[s] = remaining * weight[s] / free_weight;
      }
      for (std::size_t s = 0; s < order.size(); ++s) {
        if (!capped[s] && mass[s] > recipe.big_m) {
          capped[s] = true;
          mass[s] = recipe.big_m;
          remaining -= recipe.big_m;
          changed = true;
        }
      }
    }
    for (std::size_t s = 0; s < order.size(); ++s) {
      y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(order[s])) = mass[s];
    }
  }
  if (recipe.noisy && recipe.noise_sd > 0.0) {
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      for (Eigen::Index k = 0; k < kk; ++k) y(i, k) += recipe.noise_sd * normal(rng);
    }
  }
  return {Dataset(std::move(x), std::move(y)), std::move(set)};
}

EndToEndData gen_end_to_end(std::size_t n, std::size_t p, std::size_t k, std::uint64_t seed, double noise_sd) {
  SyntheticRecipe recipe;
  recipe.n = n;
  recipe.p = p;
  recipe.k = k;
  recipe.seed = seed;
  recipe.noise_sd = noise_sd;
  auto generated = gen_synthetic(recipe);
  return {std::move(generated.data), std::move(generated.set), TwoGroupKnapsack::halves(k)};
}

void to_json(nlohmann::json& j, const SyntheticRecipe& r) {
  j = {{"kind", "synthetic"}, {"n", r.n}, {"p", r.p}, {"K", r.k}, {"seed", r.seed}, {"noise_sd", r.noise_sd},
       {"weight_min", r.weight_min}, {"weight_max", r.weight_max}, {"freq_min", r.freq_min},
       {"freq_max", r.freq_max}, {"coef_range", r.coef_range}, {"tan_scale", r.tan_scale},
       {"tan_clip", r.tan_clip}};
}

void from_json(const nlohmann::json& j, SyntheticRecipe& r) {
  r.n = j.value("n", r.n);
  r.p = j.value("p", r.p);
  r.k = j.value("K", r.k);
  r.seed = j.value("seed", r.seed);
  r.noise_sd = j.value("noise_sd", r.noise_sd);
  r.weight_min = j.value("weight_min", r.weight_min);
  r.weight_max = j.value("weight_max", r.weight_max);
  r.freq_min = j.value("freq_min", r.freq_min);
  r.freq_max = j.value("freq_max", r.freq_max);
  r.coef_range = j.value("coef_range", r.coef_range);
  r.tan_scale = j.value("tan_scale", r.tan_scale);
  r.tan_clip = j.value("tan_clip", r.tan_clip);
}

void to_json(nlohmann::json& j, const HtsRecipe& r) {
  j = {{"kind", "hts"}, {"n", r.n}, {"p", r.p}, {"K", r.k}, {"seed", r.seed}, {"total", r.total},
       {"max_support", r.max_support}, {"big_m", r.big_m}, {"noisy", r.noisy}, {"noise_sd", r.noise_sd}};
}

void from_json(const nlohmann::json& j, HtsRecipe& r) {
  r.n = j.value("n", r.n);
  r.p = j.value("p", r.p);
  r.k = j.value("K", r.k);
  r.seed = j.value("seed", r.seed);
  r.total = j.value("total", r.total);
  r.max_support = j.value("max_support", r.max_support);
  r.big_m = j.value("big_m", r.big_m);
  r.noisy = j.value("noisy", r.noisy);
  r.noise_sd = j.value("noise_sd", r.noise_sd);
}

}  // namespace ocrt
