#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ocrt/datagen.hpp"
#include "ocrt/tree.hpp"

namespace ocrt {

/// A trained model family: a single tree or a forest over a tree method.
struct MethodSpec {
  Method base = Method::Cart;
  bool forest = false;

  std::string name() const;
  static MethodSpec parse(const std::string& name);
  bool operator==(const MethodSpec&) const = default;
};

enum class DatasetKind { Synthetic, Hts, EndToEnd, Files };

struct DatasetSpec {
  std::string id;
  DatasetKind kind = DatasetKind::Synthetic;
  SyntheticRecipe synthetic;
  HtsRecipe hts;
  std::filesystem::path data_path;
  std::filesystem::path constraints_path;
};

enum class BenchLoss { Mse, Weighted, Regret };

struct ExperimentConfig {
  std::string name = "custom";
  std::string description;
  std::vector<DatasetSpec> datasets;
  std::vector<MethodSpec> methods;
  std::vector<std::size_t> depths{5, 7};
  std::size_t min_samples_split = 10;
  std::size_t min_samples_leaf = 5;
  std::size_t n_trees = 20;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  double node_time_budget = 120.0;
  BenchLoss loss = BenchLoss::Mse;
  /// Weighted-loss runs: vectors drawn per dataset, entries uniform on [weight_min, 1].
  std::size_t weight_vectors = 3;
  double weight_min = 0.1;
  /// Baseline for the Δ columns.
  MethodSpec baseline{Method::Cart, false};
  /// Depth-tradeoff runs only.
  bool depth_tradeoff = false;
  double holdout_fraction = 0.2;
  /// Worker count; OCRT_THREADS or hardware concurrency when empty.
  std::optional<std::size_t> threads;

  void validate() const;
};

/// One (dataset, method, depth, fold) cell. Optional fields are empty when
/// they do not apply or the cell failed.
struct MetricsRow {
  std::string dataset;
  std::string method;
  std::size_t depth = 0;
  std::size_t fold = 0;
  std::optional<double> loss;
  std::optional<double> test_mse;
  std::optional<double> delta;
  std::optional<double> infeasibility_rate;
  std::optional<double> train_seconds;
  std::optional<double> regret;
  std::optional<double> squared_regret;
  std::optional<double> delta_r;
  std::optional<double> delta_r2;
  std::optional<double> weighted_loss;
  std::optional<double> delta_w;
  std::string status = "ok";
};

const std::vector<std::string>& metrics_columns();

struct BenchResult {
  std::vector<MetricsRow> rows;
  /// dataset id, row index, fold
  std::vector<std::tuple<std::string, std::size_t, std::size_t>> folds;
};

BenchResult run_cv_benchmark(const ExperimentConfig& config);

struct DepthTradeoffRow {
  std::size_t depth = 0;
  double test_mse = 0.0;
  double infeasible_percent = 0.0;
  std::size_t leaves = 0;
};

struct DepthTradeoffResult {
  std::vector<DepthTradeoffRow> rows;
  std::size_t best_depth = 0;
  double best_infeasible_percent = 0.0;
};

DepthTradeoffResult depth_tradeoff_experiment(const SyntheticRecipe& recipe, std::size_t max_depth,
                                              const ExperimentConfig& config);

const std::vector<std::string>& preset_names();
ExperimentConfig preset(const std::string& name);

ExperimentConfig experiment_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ExperimentConfig& config);

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::filesystem::path& path);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);
/// Per (method, depth) means over datasets and folds.
void write_summary_csv(const std::vector<MetricsRow>& rows, const std::filesystem::path& path);
void write_depth_tradeoff_csv(const DepthTradeoffResult& result, const std::filesystem::path& path);

/// Runs `config` and writes the metrics CSV at `out` plus sidecars
/// (`<stem>.summary.csv`, `<stem>.folds.csv`, `<stem>.meta.json`).
void run_benchmark_to(const ExperimentConfig& config, const std::filesystem::path& out);

/// Mean of the present values; empty when none.
std::optional<double> mean_of(const std::vector<MetricsRow>& rows, std::optional<double> MetricsRow::*field,
                              const std::string& method, std::optional<std::size_t> depth = std::nullopt);

}  // namespace ocrt
