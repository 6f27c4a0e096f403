#pragma once

#include <cstdint>
#include <utility>

#include <json.hpp>

#include "ocrt/data_model.hpp"

namespace ocrt {

/// y_ik = Σ_j w_jk f_jk(x_ij; θ_jk), projected onto the equality system, plus
/// Gaussian noise. Each f_jk is drawn from {sine, cosine, tangent, linear,
/// polynomial}.
struct SyntheticRecipe {
  std::size_t n = 500;
  std::size_t p = 6;
  std::size_t k = 5;
  std::uint64_t seed = 0;
  double noise_sd = 0.05;
  double weight_min = 0.5;
  double weight_max = 2.0;
  double freq_min = 1.0;
  double freq_max = 3.0;
  /// Slope, intercept and polynomial coefficients are uniform on [-coef_range, coef_range].
  double coef_range = 1.0;
  /// Tangent inputs are mapped to (-tan_scale, tan_scale), outputs clipped to ±tan_clip.
  double tan_scale = 1.2;
  double tan_clip = 10.0;

  void validate() const;
};

struct HtsRecipe {
  std::size_t n = 500;
  std::size_t p = 6;
  std::size_t k = 13;
  std::uint64_t seed = 0;
  double total = 15.0;
  std::size_t max_support = 4;
  double big_m = 15.0;
  bool noisy = false;
  double noise_sd = 0.5;

  void validate() const;
};

struct GeneratedData {
  Dataset data;
  FeasibleSet set;
};

/// Equalities y_{k_j−1} − y_{k_j} = (j+1)/10 for k_j = ⌊K/2⌋ + 2j (1-based),
/// Σ_{k ≤ ⌊K/2⌋} y_k = 1, and y ≥ 0.
FeasibleSet build_synthetic_constraints(std::size_t k);

GeneratedData gen_synthetic(const SyntheticRecipe& recipe);

/// Σ y_k = total, y ≥ 0, at most `max_support` nonzeros each ≤ big_m.
FeasibleSet build_hts_constraints(std::size_t k, double total, std::size_t max_support, double big_m);

GeneratedData gen_hts(const HtsRecipe& recipe);

struct EndToEndData {
  Dataset data;
  FeasibleSet set;
  TwoGroupKnapsack knapsack;
};

/// Synthetic targets used as knapsack profits; capacities 100 and 10.
EndToEndData gen_end_to_end(std::size_t n, std::size_t p, std::size_t k, std::uint64_t seed, double noise_sd = 0.05);

void to_json(nlohmann::json& j, const SyntheticRecipe& r);
void from_json(const nlohmann::json& j, SyntheticRecipe& r);
void to_json(nlohmann::json& j, const HtsRecipe& r);
void from_json(const nlohmann::json& j, HtsRecipe& r);

}  // namespace ocrt
