#include "ocrt/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "ocrt/downstream.hpp"
#include "ocrt/ensemble.hpp"
#include "ocrt/io.hpp"
#include "ocrt/parallel.hpp"
#include "ocrt/random.hpp"

namespace ocrt {

// ============================================================================
// Config
// ============================================================================

std::string MethodSpec::name() const {
  if (!forest) return to_string(base);
  switch (base) {
    case Method::Cart: return "RF";
    case Method::EOcrt: return "E-RF";
    case Method::MOcrt: return "M-RF";
    case Method::EpOcrt: return "EP-RF";
  }
  return "unknown";
}

MethodSpec MethodSpec::parse(const std::string& name) {
  std::string key;
  for (char c : name) {
    if (c != '-' && c != '_') key.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  if (key == "RF") return {Method::Cart, true};
  if (key == "ERF") return {Method::EOcrt, true};
  if (key == "MRF") return {Method::MOcrt, true};
  if (key == "EPRF") return {Method::EpOcrt, true};
  return {parse_method(name), false};
}

void ExperimentConfig::validate() const {
  if (datasets.empty()) throw ConfigError("experiment has no datasets");
  if (depths.empty()) throw ConfigError("experiment has no depths");
  if (depth_tradeoff) {
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) throw ConfigError("holdout_fraction must lie in (0, 1)");
    for (const auto& d : datasets) {
      if (d.kind != DatasetKind::Synthetic) throw ConfigError("depth tradeoff runs on synthetic recipes only");
    }
    return;
  }
  if (methods.empty()) throw ConfigError("experiment needs at least one method");
  if (folds < 2) throw ConfigError("folds must be at least 2");
  if (n_trees < 1) throw ConfigError("n_trees must be at least 1");
  if (min_samples_leaf < 1 || min_samples_split < 2 * min_samples_leaf) {
    throw ConfigError("need min_samples_leaf ≥ 1 and min_samples_split ≥ 2 * min_samples_leaf");
  }
  if (!(node_time_budget > 0.0)) throw ConfigError("node_time_budget must be positive");
  if (loss == BenchLoss::Weighted && (weight_vectors < 1 || !(weight_min > 0.0 && weight_min <= 1.0))) {
    throw ConfigError("weighted runs need weight_vectors ≥ 1 and weight_min in (0, 1]");
  }
  if (threads && *threads < 1) throw ConfigError("threads must be positive");
}

const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> cols{
      "dataset", "method", "depth", "fold", "loss", "test_mse", "delta", "infeasibility_rate",
      "train_seconds", "regret", "squared_regret", "delta_r", "delta_r2", "weighted_loss", "delta_w", "status"};
  return cols;
}

// ============================================================================
// Cross-validation
// ============================================================================

namespace {

struct Prepared {
  std::string id;
  Dataset data;
  FeasibleSet set;
  Loss loss;
  std::vector<std::size_t> fold_of;
  std::string source;
};

std::vector<std::size_t> assign_folds(std::size_t n, std::size_t folds, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> fold_of(n);
  for (std::size_t pos = 0; pos < n; ++pos) fold_of[order[pos]] = pos * folds / n;
  return fold_of;
}

GeneratedData load_dataset(const DatasetSpec& spec) {
  switch (spec.kind) {
    case DatasetKind::Synthetic:
    case DatasetKind::EndToEnd:
      return gen_synthetic(spec.synthetic);
    case DatasetKind::Hts:
      return gen_hts(spec.hts);
    case DatasetKind::Files:
      return {read_dataset_csv(spec.data_path), read_feasible_set(spec.constraints_path)};
  }
  throw ConfigError("unknown dataset kind");
}

std::vector<Prepared> prepare(const ExperimentConfig& config) {
  std::vector<Prepared> out;
  for (std::size_t d = 0; d < config.datasets.size(); ++d) {
    const auto& spec = config.datasets[d];
    auto gen = load_dataset(spec);
    if (gen.set.dim() != gen.data.k()) throw DimensionError(spec.id + ": constraint dimension differs from K");
    const auto fold_of = assign_folds(gen.data.n(), config.folds, derive_seed(config.seed, d));
    if (gen.data.n() < config.folds) throw ConfigError(spec.id + ": fewer rows than folds");
    switch (config.loss) {
      case BenchLoss::Mse:
        out.push_back({spec.id, gen.data, gen.set, Loss::mse(), fold_of, spec.id});
        break;
      case BenchLoss::Regret:
        out.push_back({spec.id, gen.data, gen.set, Loss::regret(TwoGroupKnapsack::halves(gen.data.k())), fold_of, spec.id});
        break;
      case BenchLoss::Weighted: {
        Rng rng(derive_seed(config.seed ^ 0x5745494748545356ULL, d));
        std::uniform_real_distribution<double> draw(config.weight_min, 1.0);
        for (std::size_t v = 0; v < config.weight_vectors; ++v) {
          Vector w(static_cast<Eigen::Index>(gen.data.k()));
          for (Eigen::Index k = 0; k < w.size(); ++k) w(k) = draw(rng);
          out.push_back({spec.id + "/w" + std::to_string(v), gen.data, gen.set, Loss::weighted(w), fold_of, spec.id});
        }
        break;
      }
    }
  }
  return out;
}

struct Cell {
  std::size_t dataset;
  std::size_t method;
  std::size_t depth;
  std::size_t fold;
};

MetricsRow run_cell(const ExperimentConfig& config, const Prepared& prep, const Cell& cell) {
  const MethodSpec& spec = config.methods[cell.method];
  MetricsRow row;
  row.dataset = prep.id;
  row.method = spec.name();
  row.depth = config.depths[cell.depth];
  row.fold = cell.fold;

  std::vector<Index> train, test;
  for (std::size_t i = 0; i < prep.data.n(); ++i) (prep.fold_of[i] == cell.fold ? test : train).push_back(i);

  TrainConfig tc;
  tc.method = spec.base;
  tc.max_depth = row.depth;
  tc.min_samples_split = config.min_samples_split;
  tc.min_samples_leaf = config.min_samples_leaf;
  tc.loss = prep.loss;
  if (is_constrained(spec.base)) tc.feasible_set = prep.set;
  tc.node_time_budget = config.node_time_budget;
  tc.rng_seed = derive_seed(config.seed, cell.dataset * 1000003 + cell.fold);

  try {
    Matrix test_x(static_cast<Eigen::Index>(test.size()), static_cast<Eigen::Index>(prep.data.p()));
    for (std::size_t i = 0; i < test.size(); ++i) {
      test_x.row(static_cast<Eigen::Index>(i)) = prep.data.features().row(static_cast<Eigen::Index>(test[i]));
    }
    Matrix yhat;
    const auto start = std::chrono::steady_clock::now();
    if (spec.forest) {
      const Dataset train_data = prep.data.subset(train);
      const Forest forest = train_forest(train_data, tc, config.n_trees, tc.rng_seed);
      row.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      yhat = forest_predict(forest, test_x);
    } else {
      const Tree tree = grow_tree(prep.data, train, tc);
      row.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      yhat = tree_predict(tree, test_x);
      if (tree.timed_out_nodes > 0) row.status = "ok;timed_out_nodes=" + std::to_string(tree.timed_out_nodes);
    }

    const TargetRows truth(prep.data.targets(), test);
    double loss = 0.0, sq = 0.0, wl = 0.0;
    std::size_t infeasible = 0;
    Matrix y_true(static_cast<Eigen::Index>(test.size()), static_cast<Eigen::Index>(prep.data.k()));
    for (std::size_t i = 0; i < test.size(); ++i) {
      const Vector pred = yhat.row(static_cast<Eigen::Index>(i)).transpose();
      const auto y = truth.row(i);
      y_true.row(static_cast<Eigen::Index>(i)) = y;
      loss += row_loss(prep.loss, pred, y);
      sq += (pred.transpose() - y).squaredNorm();
      if (prep.loss.kind() == LossKind::WeightedLinear) {
        const double gap = prep.loss.weights().dot(pred) - y.dot(prep.loss.weights().transpose());
        wl += gap * gap;
      }
      if (!check_feasibility(pred, prep.set, kDefaultFeasibilityTol).feasible) ++infeasible;
    }
    const auto m = static_cast<double>(test.size());
    row.loss = loss / m;
    row.test_mse = sq / m;
    row.infeasibility_rate = static_cast<double>(infeasible) / m;
    if (prep.loss.kind() == LossKind::WeightedLinear) row.weighted_loss = wl / m;
    if (prep.loss.kind() == LossKind::Regret) {
      const auto& knapsack = prep.loss.knapsack();
      const Matrix q_true = optimal_decisions(truth, knapsack);
      const Matrix q_hat = optimal_decisions(TargetRows(yhat), knapsack);
      const auto r = regret_metrics(y_true, q_true, q_hat);
      row.regret = r.regret;
      row.squared_regret = r.squared_regret;
    }
  } catch (const Error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    row.status = "error: " + msg;
  }
  return row;
}

std::optional<double> relative_gap(const std::optional<double>& value, const std::optional<double>& base) {
  if (!value || !base || *base == 0.0) return std::nullopt;
  return (*value - *base) / *base;
}

}  // namespace

BenchResult run_cv_benchmark(const ExperimentConfig& config) {
  config.validate();
  if (config.depth_tradeoff) throw ConfigError("depth tradeoff configs run through depth_tradeoff_experiment");
  const auto prepared = prepare(config);

  std::vector<Cell> cells;
  for (std::size_t d = 0; d < prepared.size(); ++d) {
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
      for (std::size_t z = 0; z < config.depths.size(); ++z) {
        for (std::size_t f = 0; f < config.folds; ++f) cells.push_back({d, m, z, f});
      }
    }
  }
  std::vector<MetricsRow> rows(cells.size());
  const std::size_t threads = config.threads ? *config.threads : default_threads();
  parallel_for(cells.size(), threads, [&](std::size_t c) { rows[c] = run_cell(config, prepared[cells[c].dataset], cells[c]); });

  const auto base = std::find(config.methods.begin(), config.methods.end(), config.baseline);
  if (base != config.methods.end()) {
    const auto base_index = static_cast<std::size_t>(base - config.methods.begin());
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::size_t> lookup;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (cells[c].method == base_index) lookup[{cells[c].dataset, cells[c].depth, cells[c].fold}] = c;
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto& b = rows[lookup.at({cells[c].dataset, cells[c].depth, cells[c].fold})];
      auto& r = rows[c];
      r.delta = relative_gap(r.test_mse, b.test_mse);
      r.delta_r = relative_gap(r.regret, b.regret);
      r.delta_r2 = relative_gap(r.squared_regret, b.squared_regret);
      r.delta_w = relative_gap(r.weighted_loss, b.weighted_loss);
    }
  }

  BenchResult result;
  result.rows = std::move(rows);
  std::string last;
  for (const auto& p : prepared) {
    if (p.source == last) continue;
    last = p.source;
    for (std::size_t i = 0; i < p.fold_of.size(); ++i) result.folds.emplace_back(p.source, i, p.fold_of[i]);
  }
  return result;
}

// ============================================================================
// Depth trade-off
// ============================================================================

DepthTradeoffResult depth_tradeoff_experiment(const SyntheticRecipe& recipe, std::size_t max_depth,
                                              const ExperimentConfig& config) {
  const auto gen = gen_synthetic(recipe);
  const std::size_t n = gen.data.n();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(config.seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(config.holdout_fraction * static_cast<double>(n)));
  if (n_test < 1 || n_test >= n) throw ConfigError("holdout leaves an empty train or test set");
  std::vector<Index> test(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<Index> train(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());

  DepthTradeoffResult result;
  result.rows.resize(max_depth + 1);
  const std::size_t threads = config.threads ? *config.threads : default_threads();
  parallel_for(max_depth + 1, threads, [&](std::size_t depth) {
    TrainConfig tc;
    tc.method = Method::Cart;
    tc.max_depth = depth;
    tc.min_samples_split = config.min_samples_split;
    tc.min_samples_leaf = config.min_samples_leaf;
    const Tree tree = grow_tree(gen.data, train, tc);
    double sq = 0.0;
    std::size_t infeasible = 0;
    for (Index i : test) {
      const Vector x = gen.data.features().row(static_cast<Eigen::Index>(i)).transpose();
      const Vector& pred = tree_predict(tree, x);
      sq += (pred.transpose() - gen.data.targets().row(static_cast<Eigen::Index>(i))).squaredNorm();
      if (!check_feasibility(pred, gen.set).feasible) ++infeasible;
    }
    const auto m = static_cast<double>(test.size());
    result.rows[depth] = {depth, sq / m, 100.0 * static_cast<double>(infeasible) / m, tree.leaf_count()};
  });
  for (const auto& r : result.rows) {
    if (r.test_mse < result.rows[result.best_depth].test_mse) result.best_depth = r.depth;
  }
  result.best_infeasible_percent = result.rows[result.best_depth].infeasible_percent;
  return result;
}

// ============================================================================
// Presets
// ============================================================================

namespace {

DatasetSpec synthetic_spec(std::size_t n, std::size_t p, std::size_t k, std::uint64_t seed) {
  DatasetSpec d;
  d.kind = DatasetKind::Synthetic;
  d.synthetic.n = n;
  d.synthetic.p = p;
  d.synthetic.k = k;
  d.synthetic.seed = seed;
  d.id = "syn_n" + std::to_string(n) + "_p" + std::to_string(p) + "_K" + std::to_string(k) + "_s" + std::to_string(seed);
  return d;
}

std::vector<MethodSpec> methods(std::initializer_list<const char*> names) {
  std::vector<MethodSpec> out;
  for (const char* n : names) out.push_back(MethodSpec::parse(n));
  return out;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"synthetic-grid", "synthetic-large", "hts",
                                              "generalized-loss", "end-to-end", "depth-tradeoff"};
  return names;
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  if (name == "synthetic-grid") {
    c.description = "n in {500,1000,2000}, K in {5,9}, p=6, three seeds (18 datasets); depths 5 and 7; 20-tree forests";
    for (std::uint64_t s = 1; s <= 3; ++s) {
      for (std::size_t n : {500, 1000, 2000}) {
        for (std::size_t k : {5, 9}) c.datasets.push_back(synthetic_spec(n, 6, k, s));
      }
    }
    c.methods = methods({"CART", "E-OCRT", "M-OCRT", "EP-OCRT", "RF", "E-RF", "EP-RF"});
  } else if (name == "synthetic-large") {
    c.description = "n in {1000,5000,10000}, p in {6,9,12}, K=5, one seed; M-OCRT left out at this scale";
    for (std::size_t n : {1000, 5000, 10000}) {
      for (std::size_t p : {6, 9, 12}) c.datasets.push_back(synthetic_spec(n, p, 5, 1));
    }
    c.methods = methods({"CART", "E-OCRT", "EP-OCRT"});
  } else if (name == "hts") {
    c.description = "n=500, p=6, K=13, sum 15 with at most 4 nonzeros each <= 15; noise-free and noisy (sd 0.5), three seeds";
    for (std::uint64_t s = 1; s <= 3; ++s) {
      for (bool noisy : {false, true}) {
        DatasetSpec d;
        d.kind = DatasetKind::Hts;
        d.hts.seed = s;
        d.hts.noisy = noisy;
        d.id = std::string("hts_") + (noisy ? "noisy" : "clean") + "_s" + std::to_string(s);
        c.datasets.push_back(d);
      }
    }
    c.methods = methods({"CART", "E-OCRT", "M-OCRT", "EP-OCRT"});
  } else if (name == "generalized-loss") {
    c.description = "weighted-sum loss; three synthetic datasets (n=500, K=5) x three weight vectors with entries U[0.1,1]";
    for (std::uint64_t s = 1; s <= 3; ++s) c.datasets.push_back(synthetic_spec(500, 6, 5, s));
    c.methods = methods({"CART", "E-OCRT", "EP-OCRT"});
    c.loss = BenchLoss::Weighted;
  } else if (name == "end-to-end") {
    c.description = "n=500, K=5 synthetic profits with a two-group knapsack (capacities 100 and 10); squared-regret leaves";
    for (std::uint64_t s = 1; s <= 3; ++s) {
      auto d = synthetic_spec(500, 6, 5, s);
      d.kind = DatasetKind::EndToEnd;
      d.id = "e2e_s" + std::to_string(s);
      c.datasets.push_back(d);
    }
    c.methods = methods({"CART", "E-OCRT", "EP-OCRT"});
    c.loss = BenchLoss::Regret;
  } else if (name == "depth-tradeoff") {
    c.description = "CART on n=4000, K=5 synthetic data; depths 0..12 on an 80/20 holdout";
    c.datasets.push_back(synthetic_spec(4000, 6, 5, 1));
    c.methods = methods({"CART"});
    c.depths.clear();
    for (std::size_t d = 0; d <= 12; ++d) c.depths.push_back(d);
    c.depth_tradeoff = true;
  } else {
    std::string valid;
    for (const auto& n : preset_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "'; valid presets: " + valid);
  }
  return c;
}

// ============================================================================
// JSON
// ============================================================================

namespace {

std::string kind_name(DatasetKind k) {
  switch (k) {
    case DatasetKind::Synthetic: return "synthetic";
    case DatasetKind::Hts: return "hts";
    case DatasetKind::EndToEnd: return "end-to-end";
    case DatasetKind::Files: return "files";
  }
  return "unknown";
}

std::string loss_name(BenchLoss l) {
  switch (l) {
    case BenchLoss::Mse: return "mse";
    case BenchLoss::Weighted: return "weighted";
    case BenchLoss::Regret: return "regret";
  }
  return "unknown";
}

BenchLoss parse_loss(const std::string& s) {
  if (s == "mse") return BenchLoss::Mse;
  if (s == "weighted") return BenchLoss::Weighted;
  if (s == "regret") return BenchLoss::Regret;
  throw ConfigError("unknown loss '" + s + "' (expected mse, weighted or regret)");
}

DatasetSpec dataset_from_json(const nlohmann::json& j) {
  DatasetSpec d;
  const auto kind = j.value("kind", std::string("synthetic"));
  if (kind == "synthetic" || kind == "end-to-end") {
    d.kind = kind == "synthetic" ? DatasetKind::Synthetic : DatasetKind::EndToEnd;
    d.synthetic = j.get<SyntheticRecipe>();
  } else if (kind == "hts") {
    d.kind = DatasetKind::Hts;
    d.hts = j.get<HtsRecipe>();
  } else if (kind == "files") {
    d.kind = DatasetKind::Files;
    d.data_path = j.at("data").get<std::string>();
    d.constraints_path = j.at("constraints").get<std::string>();
  } else {
    throw ConfigError("unknown dataset kind '" + kind + "'");
  }
  d.id = j.value("id", kind + "_" + std::to_string(j.value("seed", 0)));
  return d;
}

nlohmann::json dataset_to_json(const DatasetSpec& d) {
  nlohmann::json j;
  switch (d.kind) {
    case DatasetKind::Synthetic:
    case DatasetKind::EndToEnd:
      j = d.synthetic;
      break;
    case DatasetKind::Hts:
      j = d.hts;
      break;
    case DatasetKind::Files:
      j = {{"data", d.data_path.string()}, {"constraints", d.constraints_path.string()}};
      break;
  }
  j["kind"] = kind_name(d.kind);
  j["id"] = d.id;
  return j;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const nlohmann::json& doc) {
  try {
    ExperimentConfig c = doc.contains("preset") ? preset(doc["preset"].get<std::string>()) : ExperimentConfig{};
    c.name = doc.value("name", c.name);
    c.description = doc.value("description", c.description);
    if (doc.contains("datasets")) {
      c.datasets.clear();
      for (const auto& d : doc["datasets"]) c.datasets.push_back(dataset_from_json(d));
    }
    if (doc.contains("methods")) {
      c.methods.clear();
      for (const auto& m : doc["methods"]) c.methods.push_back(MethodSpec::parse(m.get<std::string>()));
    }
    c.depths = doc.value("depths", c.depths);
    c.min_samples_split = doc.value("min_samples_split", c.min_samples_split);
    c.min_samples_leaf = doc.value("min_samples_leaf", c.min_samples_leaf);
    c.n_trees = doc.value("n_trees", c.n_trees);
    c.folds = doc.value("folds", c.folds);
    c.seed = doc.value("seed", c.seed);
    c.node_time_budget = doc.value("node_time_budget", c.node_time_budget);
    if (doc.contains("loss")) c.loss = parse_loss(doc["loss"].get<std::string>());
    c.weight_vectors = doc.value("weight_vectors", c.weight_vectors);
    c.weight_min = doc.value("weight_min", c.weight_min);
    if (doc.contains("baseline")) c.baseline = MethodSpec::parse(doc["baseline"].get<std::string>());
    c.depth_tradeoff = doc.value("depth_tradeoff", c.depth_tradeoff);
    c.holdout_fraction = doc.value("holdout_fraction", c.holdout_fraction);
    if (doc.contains("threads") && !doc["threads"].is_null()) c.threads = doc["threads"].get<std::size_t>();
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json doc;
  doc["name"] = c.name;
  doc["description"] = c.description;
  doc["datasets"] = nlohmann::json::array();
  for (const auto& d : c.datasets) doc["datasets"].push_back(dataset_to_json(d));
  doc["methods"] = nlohmann::json::array();
  for (const auto& m : c.methods) doc["methods"].push_back(m.name());
  doc["depths"] = c.depths;
  doc["min_samples_split"] = c.min_samples_split;
  doc["min_samples_leaf"] = c.min_samples_leaf;
  doc["n_trees"] = c.n_trees;
  doc["folds"] = c.folds;
  doc["seed"] = c.seed;
  doc["node_time_budget"] = c.node_time_budget;
  doc["loss"] = loss_name(c.loss);
  doc["weight_vectors"] = c.weight_vectors;
  doc["weight_min"] = c.weight_min;
  doc["baseline"] = c.baseline.name();
  doc["depth_tradeoff"] = c.depth_tradeoff;
  doc["holdout_fraction"] = c.holdout_fraction;
  return doc;
}

// ============================================================================
// CSV output
// ============================================================================

namespace {

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::optional<double> parse_optional(const std::string& s) {
  if (s.empty()) return std::nullopt;
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw ConfigError("metrics CSV: not a number: '" + s + "'");
  }
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string c;
  std::istringstream in(line);
  while (std::getline(in, c, ',')) out.push_back(c);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

using Field = std::optional<double> MetricsRow::*;

const std::vector<std::pair<const char*, Field>>& summary_fields() {
  static const std::vector<std::pair<const char*, Field>> fields{
      {"loss", &MetricsRow::loss},
      {"test_mse", &MetricsRow::test_mse},
      {"delta", &MetricsRow::delta},
      {"infeasibility_rate", &MetricsRow::infeasibility_rate},
      {"train_seconds", &MetricsRow::train_seconds},
      {"regret", &MetricsRow::regret},
      {"squared_regret", &MetricsRow::squared_regret},
      {"delta_r", &MetricsRow::delta_r},
      {"delta_r2", &MetricsRow::delta_r2},
      {"weighted_loss", &MetricsRow::weighted_loss},
      {"delta_w", &MetricsRow::delta_w}};
  return fields;
}

}  // namespace

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  const auto& cols = metrics_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << '\n';
  for (const auto& r : rows) {
    out << r.dataset << ',' << r.method << ',' << r.depth << ',' << r.fold;
    for (const auto& [name, field] : summary_fields()) out << ',' << cell(r.*field);
    out << ',' << r.status << '\n';
  }
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (split(line) != metrics_columns()) throw ConfigError(path.string() + ": unexpected metrics header");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != metrics_columns().size()) throw ConfigError(path.string() + ": malformed metrics row");
    MetricsRow r;
    r.dataset = cells[0];
    r.method = cells[1];
    r.depth = std::stoul(cells[2]);
    r.fold = std::stoul(cells[3]);
    std::size_t c = 4;
    for (const auto& [name, field] : summary_fields()) r.*field = parse_optional(cells[c++]);
    r.status = cells[c];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::optional<double> mean_of(const std::vector<MetricsRow>& rows, Field field, const std::string& method,
                              std::optional<std::size_t> depth) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& r : rows) {
    if (r.method != method || (depth && r.depth != *depth) || !(r.*field)) continue;
    total += *(r.*field);
    ++count;
  }
  if (count == 0) return std::nullopt;
  return total / static_cast<double>(count);
}

void write_summary_csv(const std::vector<MetricsRow>& rows, const std::filesystem::path& path) {
  std::vector<std::pair<std::string, std::size_t>> keys;
  for (const auto& r : rows) {
    const std::pair<std::string, std::size_t> key{r.method, r.depth};
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "method,depth,cells,failures";
  for (const auto& [name, field] : summary_fields()) out << ',' << name;
  out << '\n';
  for (const auto& [method, depth] : keys) {
    std::size_t cells = 0, failures = 0;
    for (const auto& r : rows) {
      if (r.method == method && r.depth == depth) {
        ++cells;
        if (r.status.rfind("error", 0) == 0) ++failures;
      }
    }
    out << method << ',' << depth << ',' << cells << ',' << failures;
    for (const auto& [name, field] : summary_fields()) out << ',' << cell(mean_of(rows, field, method, depth));
    out << '\n';
  }
}

void write_depth_tradeoff_csv(const DepthTradeoffResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "depth,test_mse,infeasible_percent,leaves,best\n";
  for (const auto& r : result.rows) {
    out << r.depth << ',' << format_double(r.test_mse) << ',' << format_double(r.infeasible_percent) << ','
        << r.leaves << ',' << (r.depth == result.best_depth ? 1 : 0) << '\n';
  }
}

void run_benchmark_to(const ExperimentConfig& config, const std::filesystem::path& out) {
  config.validate();
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  auto sidecar = [&](const std::string& suffix) {
    auto p = out;
    p.replace_filename(out.stem().string() + suffix);
    return p;
  };
  nlohmann::json meta;
  meta["config"] = to_json(config);
  if (config.depth_tradeoff) {
    const std::size_t max_depth = *std::max_element(config.depths.begin(), config.depths.end());
    const auto result = depth_tradeoff_experiment(config.datasets.front().synthetic, max_depth, config);
    write_depth_tradeoff_csv(result, out);
    meta["best_depth"] = result.best_depth;
    meta["best_depth_infeasible_percent"] = result.best_infeasible_percent;
    meta["notes"] = {"test_mse is the mean squared Euclidean error per row on the holdout split",
                     "infeasibility uses tolerance 1e-6"};
  } else {
    const auto result = run_cv_benchmark(config);
    write_metrics_csv(result.rows, out);
    write_summary_csv(result.rows, sidecar(".summary.csv"));
    std::ofstream folds(sidecar(".folds.csv"));
    folds << "dataset,row,fold\n";
    for (const auto& [id, row, fold] : result.folds) folds << id << ',' << row << ',' << fold << '\n';
    meta["notes"] = {
        "delta columns are per-fold relative gaps (method - baseline) / baseline as fractions; summary means are "
        "unweighted over datasets and folds",
        "baseline: " + config.baseline.name() + " trained on the same fold",
        "test_mse is the mean squared Euclidean error per row; loss is the configured loss on the test fold",
        "infeasibility uses tolerance 1e-6",
        "train_seconds is wall time around training only and is excluded from determinism checks"};
  }
  write_json(meta, sidecar(".meta.json"));
}

}  // namespace ocrt
