// ocrt: generate datasets, train and apply constrained trees, run benchmarks.

#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ocrt/bench.hpp"
#include "ocrt/datagen.hpp"
#include "ocrt/io.hpp"
#include "ocrt/parallel.hpp"
#include "ocrt/serialize.hpp"

namespace fs = std::filesystem;
using namespace ocrt;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitConfig = 3;

void cmd_generate(const fs::path& recipe_path, const fs::path& out) {
  const auto recipe = read_json(recipe_path);
  const auto kind = recipe.value("kind", std::string("synthetic"));
  fs::create_directories(out);
  GeneratedData gen{Dataset(Matrix::Zero(1, 1), Matrix::Zero(1, 1)), FeasibleSet::unconstrained(1)};
  nlohmann::json sidecar;
  if (kind == "synthetic" || kind == "end-to-end") {
    const auto r = recipe.get<SyntheticRecipe>();
    gen = gen_synthetic(r);
    sidecar = r;
    sidecar["kind"] = kind;
    if (kind == "end-to-end") {
      const auto ks = TwoGroupKnapsack::halves(r.k);
      write_json({{"dim", ks.dim}, {"split", ks.split}, {"cap1", ks.cap1}, {"cap2", ks.cap2}}, out / "knapsack.json");
    }
  } else if (kind == "hts") {
    const auto r = recipe.get<HtsRecipe>();
    gen = gen_hts(r);
    sidecar = r;
  } else {
    throw ConfigError("unknown recipe kind '" + kind + "' (expected synthetic, hts or end-to-end)");
  }
  write_dataset_csv(gen.data, out / "data.csv");
  write_feasible_set(gen.set, out / "constraints.json");
  write_json(sidecar, out / "recipe.json");
  std::cout << "wrote " << gen.data.n() << " rows to " << (out / "data.csv").string() << '\n';
}

Loss parse_loss(const std::string& name, const std::string& weights, std::size_t k) {
  if (name == "mse") return Loss::mse();
  if (name == "mad") return Loss::mad();
  if (name == "poisson") return Loss::poisson();
  if (name == "regret") return Loss::regret(TwoGroupKnapsack::halves(k));
  if (name == "weighted") {
    std::vector<double> w;
    std::istringstream in(weights);
    std::string cell;
    while (std::getline(in, cell, ',')) w.push_back(std::stod(cell));
    if (w.size() != k) throw ConfigError("--weights needs " + std::to_string(k) + " comma-separated values");
    return Loss::weighted(Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size())));
  }
  throw ConfigError("unknown loss '" + name + "' (expected mse, mad, poisson, weighted or regret)");
}

struct TrainArgs {
  fs::path data, constraints, out;
  std::string method = "CART";
  std::size_t depth = 5;
  std::size_t min_split = 10;
  std::size_t min_leaf = 5;
  std::string loss = "mse";
  std::string weights;
  std::size_t trees = 20;
  std::uint64_t seed = 0;
  double time_budget = 120.0;
};

void cmd_train(const TrainArgs& a) {
  const Dataset data = read_dataset_csv(a.data);
  const MethodSpec spec = MethodSpec::parse(a.method);
  TrainConfig tc;
  tc.method = spec.base;
  tc.max_depth = a.depth;
  tc.min_samples_split = a.min_split;
  tc.min_samples_leaf = a.min_leaf;
  tc.loss = parse_loss(a.loss, a.weights, data.k());
  tc.rng_seed = a.seed;
  tc.node_time_budget = a.time_budget;
  if (!a.constraints.empty()) {
    FeasibleSet set = read_feasible_set(a.constraints);
    if (set.dim() != data.k()) throw DimensionError("constraint dimension differs from the number of targets");
    if (is_constrained(spec.base)) tc.feasible_set = std::move(set);
  }
  if (spec.forest) {
    ForestOptions opts;
    opts.threads = default_threads();
    Forest forest = train_forest(data, tc, a.trees, a.seed, opts);
    for (const auto& note : forest.notes) std::cerr << "note: " << note << '\n';
    save_model(Model(std::move(forest)), a.out);
  } else {
    tc.threads = default_threads();
    Tree tree = grow_tree(data, tc);
    std::cout << to_string(tree.method()) << ": depth " << tree.depth() << ", " << tree.leaf_count() << " leaves";
    if (tree.timed_out_nodes) std::cout << ", " << tree.timed_out_nodes << " nodes hit the time budget";
    std::cout << '\n';
    save_model(Model(std::move(tree)), a.out);
  }
}

void cmd_predict(const fs::path& model_path, const fs::path& data_path, const fs::path& out) {
  const Model model = load_model(model_path);
  const Matrix x = read_features_csv(data_path);
  const Matrix yhat = model.predict(x);
  std::vector<std::string> header;
  for (std::size_t k = 1; k <= model.n_targets(); ++k) header.push_back("y" + std::to_string(k));
  write_matrix_csv(yhat, header, out);
}

int cmd_check(const fs::path& model_path, const fs::path& constraints_path, const fs::path& data_path, double tol) {
  const Model model = load_model(model_path);
  const FeasibleSet set = read_feasible_set(constraints_path);
  if (set.dim() != model.n_targets()) throw DimensionError("constraint dimension differs from the model's K");
  std::vector<Vector> preds;
  std::string what = "leaf predictions";
  if (!data_path.empty()) {
    const Matrix yhat = model.predict(read_features_csv(data_path));
    for (Eigen::Index i = 0; i < yhat.rows(); ++i) preds.push_back(yhat.row(i).transpose());
    what = "predictions";
  } else if (model.is_forest() && !set.is_convex()) {
    std::cerr << "note: leaves of individual trees are audited; averaged forest outputs over a non-convex set "
                 "may still be infeasible (pass --data to audit them)\n";
    preds = model.leaf_predictions();
  } else {
    preds = model.leaf_predictions();
  }
  std::size_t bad = 0;
  double worst_eq = 0.0, worst_ineq = 0.0;
  for (const auto& p : preds) {
    const auto r = check_feasibility(p, set, tol);
    if (!r.feasible) ++bad;
    worst_eq = std::max(worst_eq, r.max_abs_eq_violation);
    worst_ineq = std::max(worst_ineq, r.max_ineq_violation);
  }
  std::cout << bad << " of " << preds.size() << " " << what << " infeasible at tol " << tol
            << " (max equality violation " << worst_eq << ", max inequality violation " << worst_ineq << ")\n";
  return bad == 0 ? 0 : kExitFailure;
}

void cmd_bench(const std::string& preset_name, const fs::path& config_path, const fs::path& out) {
  ExperimentConfig config = config_path.empty() ? preset(preset_name) : experiment_config_from_json(read_json(config_path));
  if (!config.threads) config.threads = default_threads();
  std::cerr << "running " << config.name << " with " << *config.threads << " worker(s)\n";
  run_benchmark_to(config, out);
  std::cout << "wrote " << out.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Output-constrained multi-target regression trees"};
  app.require_subcommand(1);

  fs::path recipe, gen_out;
  auto* gen = app.add_subcommand("generate", "Generate a dataset and its feasible set from a JSON recipe");
  gen->add_option("--recipe", recipe, "Recipe JSON (kind: synthetic, hts or end-to-end)")->required();
  gen->add_option("--out", gen_out, "Output directory")->required();

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a tree or forest");
  train->add_option("--data", ta.data, "Dataset CSV with x1..xp,y1..yK")->required();
  train->add_option("--constraints", ta.constraints, "Feasible set JSON");
  train->add_option("--method", ta.method, "CART, E-OCRT, M-OCRT, EP-OCRT, RF, E-RF, EP-RF")->capture_default_str();
  train->add_option("--depth", ta.depth, "Maximum depth")->capture_default_str();
  train->add_option("--out", ta.out, "Model JSON")->required();
  train->add_option("--min-split", ta.min_split, "Minimum rows to split a node")->capture_default_str();
  train->add_option("--min-leaf", ta.min_leaf, "Minimum rows per leaf")->capture_default_str();
  train->add_option("--loss", ta.loss, "mse, mad, poisson, weighted or regret")->capture_default_str();
  train->add_option("--weights", ta.weights, "Comma-separated weights for --loss weighted");
  train->add_option("--trees", ta.trees, "Forest size")->capture_default_str();
  train->add_option("--seed", ta.seed, "Random seed")->capture_default_str();
  train->add_option("--time-budget", ta.time_budget, "Per-node seconds for M-OCRT")->capture_default_str();

  fs::path model, data, pred_out;
  auto* predict = app.add_subcommand("predict", "Predict targets for a feature CSV");
  predict->add_option("--model", model, "Model JSON")->required();
  predict->add_option("--data", data, "CSV with feature columns")->required();
  predict->add_option("--out", pred_out, "Output CSV")->required();

  std::string preset_name;
  fs::path config_path, bench_out;
  auto* bench = app.add_subcommand("bench", "Run a benchmark preset or config");
  auto* p_opt = bench->add_option("--preset", preset_name, "One of: synthetic-grid, synthetic-large, hts, "
                                                           "generalized-loss, end-to-end, depth-tradeoff");
  auto* c_opt = bench->add_option("--config", config_path, "Experiment config JSON");
  p_opt->excludes(c_opt);
  bench->add_option("--out", bench_out, "Metrics CSV")->required();

  fs::path check_model, check_constraints, check_data;
  double tol = kDefaultFeasibilityTol;
  auto* check = app.add_subcommand("check", "Audit model predictions against a feasible set");
  check->add_option("--model", check_model, "Model JSON")->required();
  check->add_option("--constraints", check_constraints, "Feasible set JSON")->required();
  check->add_option("--data", check_data, "Optional feature CSV; leaf predictions are audited otherwise");
  check->add_option("--tol", tol, "Feasibility tolerance")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) cmd_generate(recipe, gen_out);
    if (*train) cmd_train(ta);
    if (*predict) cmd_predict(model, data, pred_out);
    if (*bench) {
      if (preset_name.empty() && config_path.empty()) throw ConfigError("bench needs --preset or --config");
      cmd_bench(preset_name, config_path, bench_out);
    }
    if (*check) return cmd_check(check_model, check_constraints, check_data, tol);
  } catch (const InfeasibleSetError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return 0;
}
