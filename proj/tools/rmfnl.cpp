// Copyright 2026 The RMFNL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <CLI11.hpp>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "rmfnl/workbench.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace rmfnl;

namespace {

struct CliError {
  std::string code;
  std::string message;
};

[[noreturn]] void fail(const std::string& code, const std::string& message) {
  throw CliError{code, message};
}

void write_factors(const FactorPair& factors, const fs::path& dir) {
  auto dump = [](const Matrix& m, const fs::path& path) {
    std::ofstream out(path);
    out.precision(17);
    out << "#rmfnl-factors " << m.rows() << ' ' << m.cols() << '\n';
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index q = 0; q < m.cols(); ++q)
        out << (q ? "\t" : "") << m(i, q);
      out << '\n';
    }
  };
  dump(factors.u, dir / "U.tsv");
  dump(factors.v, dir / "V.tsv");
}

Matrix read_factor(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail("io", "cannot open '" + path.string() + "'");
  std::string tag;
  Index rows = 0, cols = 0;
  in >> tag >> rows >> cols;
  if (tag != "#rmfnl-factors" || rows <= 0 || cols <= 0)
    fail("parse", "missing factor header in '" + path.string() + "'");
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index q = 0; q < cols; ++q)
      if (!(in >> m(i, q)))
        fail("parse", "truncated factor file '" + path.string() + "'");
  return m;
}

struct FitOptions {
  std::string loss = "lsp";
  double theta = 1.0;
  double delta = 0.05;
  int rank = 5;
  std::string lambda = "auto";
  double outer_tol = 1e-4;
  double inner_tol = 1e-6;
  int max_inner = 300;
  int max_outer = 100;
  bool warm_start = false;
  std::uint64_t seed = 0;
  std::string init = "spectral";
  double init_scale = 1.0;
  double init_clip = 1.5;
};

void add_fit_options(CLI::App* cmd, FitOptions& opt) {
  cmd->add_option("--loss", opt.loss, "one of l1,lsp,geman,laplace,mcp,scad")
      ->check(CLI::IsMember({"l1", "lsp", "geman", "laplace", "mcp", "scad"}));
  cmd->add_option("--theta", opt.theta);
  cmd->add_option("--delta", opt.delta);
  cmd->add_option("--rank", opt.rank);
  cmd->add_option("--lambda", opt.lambda, "'auto' (20/(m+n)) or a value");
  cmd->add_option("--outer-tol", opt.outer_tol);
  cmd->add_option("--inner-tol", opt.inner_tol);
  cmd->add_option("--max-inner", opt.max_inner);
  cmd->add_option("--max-outer", opt.max_outer);
  cmd->add_flag("--warm-start", opt.warm_start);
  cmd->add_option("--seed", opt.seed);
  cmd->add_option("--init", opt.init,
                  "starting point: spectral (deterministic) or gaussian")
      ->check(CLI::IsMember({"spectral", "gaussian"}));
  cmd->add_option("--init-scale", opt.init_scale,
                  "stddev of the gaussian start");
  cmd->add_option("--init-clip", opt.init_clip,
                  "winsorization level of the spectral start");
}

RmfnlConfig make_config(const FitOptions& opt) {
  RmfnlConfig config;
  config.rank = opt.rank;
  config.penalty = Penalty::from_name(opt.loss, opt.theta, opt.delta);
  if (opt.lambda != "auto") {
    try {
      config.lambda = std::stod(opt.lambda);
    } catch (const std::exception&) {
      fail("config", "--lambda must be 'auto' or a number");
    }
  }
  config.outer_tol = opt.outer_tol;
  config.max_outer = opt.max_outer;
  config.inner.inner_tol = opt.inner_tol;
  config.inner.max_inner = opt.max_inner;
  config.inner.warm_start = opt.warm_start;
  if (opt.init == "spectral") {
    config.init = InitSpec::spectral(opt.init_clip);
  } else {
    // Decorrelate the factor stream from the data-generation stream so
    // that `--seed k` never initializes at the very factors a synthetic
    // dataset with the same seed was built from.
    config.init = InitSpec::gaussian(
        opt.seed * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull,
        opt.init_scale);
  }
  return config;
}

int run_synth(const SyntheticSpec& spec, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  SyntheticBundle bundle = generate_synthetic(spec);
  save_observed(bundle.train, (out_dir / "train.tsv").string());
  save_mask(bundle.validation, bundle.train.rows(), bundle.train.cols(),
            (out_dir / "validation.tsv").string());
  save_mask(bundle.test, bundle.train.rows(), bundle.train.cols(),
            (out_dir / "test.tsv").string());
  json meta = {{"m", spec.m},
               {"true_rank", spec.true_rank},
               {"noise_variance", spec.noise_variance},
               {"outlier_fraction", spec.outlier_fraction},
               {"outlier_magnitude", spec.outlier_magnitude},
               {"observed_fraction", spec.observed_fraction()},
               {"train_nnz", bundle.train.nnz()},
               {"seed", spec.seed}};
  std::ofstream(out_dir / "meta.json") << meta.dump(2) << '\n';
  std::cout << meta.dump(2) << std::endl;
  return 0;
}

struct RunResult {
  double rmse_value = std::numeric_limits<double>::quiet_NaN();
  double mae_value = std::numeric_limits<double>::quiet_NaN();
  double objective = 0.0;
  double seconds = 0.0;
  int iters = 0;
  FitTrace trace;
  bool failed = false;
  std::string error;
};

RunResult run_one_fit(const ObservedMatrix& train, const RmfnlConfig& config,
                      const EvalMask* test) {
  RunResult result;
  const auto tic = std::chrono::steady_clock::now();
  auto [factors, trace] = fit(train, config);
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - tic)
          .count();
  result.objective =
      trace.records.empty() ? 0.0 : trace.records.back().objective;
  result.iters = static_cast<int>(trace.records.size());
  if (test) {
    result.rmse_value = rmse(factors, *test);
    result.mae_value = mae(factors, *test);
  }
  result.trace = std::move(trace);
  return result;
}

int run_fit(const std::string& data_path, const FitOptions& opt,
            const std::string& validation_path, const std::string& test_path,
            const fs::path& out_dir) {
  if (!fs::exists(data_path)) fail("io", "no such file: " + data_path);
  const ObservedMatrix train = load_any(data_path);
  RmfnlConfig config = make_config(opt);
  fs::create_directories(out_dir);

  const auto tic = std::chrono::steady_clock::now();
  auto [factors, trace] = fit(train, config);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - tic)
          .count();

  write_factors(factors, out_dir);
  {
    std::ofstream csv(out_dir / "trace.csv");
    trace.write_csv(csv);
    std::ofstream js(out_dir / "trace.json");
    trace.write_json(js);
  }

  json summary = {{"loss", opt.loss},
                  {"rank", config.rank},
                  {"lambda", factors.lambda},
                  {"outer_iters", trace.records.size()},
                  {"final_objective", trace.records.empty()
                                          ? 0.0
                                          : trace.records.back().objective},
                  {"seconds", seconds}};
  if (!validation_path.empty()) {
    const EvalMask mask = load_mask(validation_path);
    summary["validation_rmse"] = rmse(factors, mask);
    summary["validation_mae"] = mae(factors, mask);
  }
  if (!test_path.empty()) {
    const EvalMask mask = load_mask(test_path);
    summary["rmse"] = rmse(factors, mask);
    summary["mae"] = mae(factors, mask);
  }
  std::ofstream(out_dir / "summary.json") << summary.dump(2) << '\n';
  std::cout << summary.dump(2) << std::endl;
  return 0;
}

int run_evaluate(const fs::path& factors_dir, const std::string& mask_path) {
  FactorPair factors;
  factors.u = read_factor(factors_dir / "U.tsv");
  factors.v = read_factor(factors_dir / "V.tsv");
  const EvalMask mask = load_mask(mask_path);
  json out = {{"rmse", rmse(factors, mask)},
              {"mae", mae(factors, mask)},
              {"count", mask.omega.size()}};
  std::cout << out.dump(2) << std::endl;
  return 0;
}

struct BenchCell {
  std::string method;  // rmfnl loss name or "l2"
  int rep = 0;
  RunResult result;
};

int run_bench(Index synth_m, const std::string& data_path,
              const std::string& split,
              const std::vector<std::string>& losses, const FitOptions& opt,
              int reps, double attack_fraction, int jobs,
              const fs::path& out_dir) {
  fs::create_directories(out_dir);
  fs::create_directories(out_dir / "traces");

  // One dataset per repetition, derived from seed + rep.
  struct RepData {
    ObservedMatrix train;
    EvalMask test;
  };
  std::vector<RepData> data;
  data.reserve(reps);
  for (int rep = 0; rep < reps; ++rep) {
    const std::uint64_t rep_seed = opt.seed + static_cast<std::uint64_t>(rep);
    if (!data_path.empty()) {
      ObservedMatrix full = load_any(data_path);
      if (attack_fraction > 0)
        full = love_hate_attack(full, attack_fraction, rep_seed);
      // 50/25/25 split of the observed ratings.
      std::mt19937_64 rng(rep_seed ^ 0xabcdef12345678ull);
      std::vector<Index> order(full.nnz());
      std::iota(order.begin(), order.end(), Index{0});
      std::shuffle(order.begin(), order.end(), rng);
      const Index n_train = full.nnz() / 2;
      const Index n_val = full.nnz() / 4;
      std::vector<IndexPair> train_idx;
      EvalMask test;
      std::vector<double> train_vals, test_vals;
      for (Index k = 0; k < full.nnz(); ++k) {
        const Index t = order[k];
        const IndexPair p{full.row_index()[t], full.col_index()[t]};
        if (k < n_train) {
          train_idx.push_back(p);
          train_vals.push_back(full.values()[t]);
        } else if (k >= n_train + n_val) {
          test.omega.push_back(p);
          test_vals.push_back(full.values()[t]);
        }
      }
      test.values = Eigen::Map<Vector>(test_vals.data(),
                                       static_cast<Index>(test_vals.size()));
      data.push_back(
          {ObservedMatrix(full.rows(), full.cols(), std::move(train_idx),
                          Eigen::Map<Vector>(
                              train_vals.data(),
                              static_cast<Index>(train_vals.size()))),
           std::move(test)});
    } else {
      SyntheticSpec spec;
      spec.m = synth_m;
      spec.seed = rep_seed;
      SyntheticBundle bundle = generate_synthetic(spec);
      // With the hyper-parameters fixed there is nothing to validate,
      // so --split all folds the validation entries into training.
      ObservedMatrix train =
          split == "all" ? merge_observed(bundle.train, bundle.validation)
                         : std::move(bundle.train);
      data.push_back({std::move(train), std::move(bundle.test)});
    }
  }

  std::vector<BenchCell> cells;
  for (const auto& loss : losses)
    for (int rep = 0; rep < reps; ++rep) cells.push_back({loss, rep, {}});
  for (int rep = 0; rep < reps; ++rep) cells.push_back({"l2", rep, {}});

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= cells.size()) return;
      BenchCell& cell = cells[c];
      const RepData& rd = data[cell.rep];
      try {
        if (cell.method == "l2") {
          const auto tic = std::chrono::steady_clock::now();
          const double lambda =
              opt.lambda == "auto"
                  ? 20.0 / static_cast<double>(rd.train.rows() +
                                               rd.train.cols())
                  : std::stod(opt.lambda);
          FactorPair factors = l2_baseline_fit(
              rd.train, opt.rank, lambda, 50,
              opt.seed + static_cast<std::uint64_t>(cell.rep));
          cell.result.seconds =
              std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            tic)
                  .count();
          cell.result.rmse_value = rmse(factors, rd.test);
          cell.result.mae_value = mae(factors, rd.test);
        } else {
          FitOptions cell_opt = opt;
          cell_opt.loss = cell.method;
          cell_opt.seed = opt.seed + static_cast<std::uint64_t>(cell.rep);
          cell.result = run_one_fit(rd.train, make_config(cell_opt), &rd.test);
        }
      } catch (const std::exception& e) {
        cell.result.failed = true;
        cell.result.error = e.what();
      }
    }
  };
  if (jobs > 1) {
    std::vector<std::thread> pool;
    for (int w = 0; w < jobs; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  } else {
    worker();
  }

  // Per-run rows and plot-ready long-format traces.
  std::ofstream runs(out_dir / "results.csv");
  runs.precision(17);
  runs << "method,rep,rmse,mae,seconds,final_objective,outer_iters,error\n";
  std::ofstream plot(out_dir / "plot_data.csv");
  plot.precision(17);
  plot << "run,iter,metric,value\n";
  std::size_t failures = 0;
  for (const auto& cell : cells) {
    runs << cell.method << ',' << cell.rep << ',' << cell.result.rmse_value
         << ',' << cell.result.mae_value << ',' << cell.result.seconds << ','
         << cell.result.objective << ',' << cell.result.iters << ','
         << (cell.result.failed ? cell.result.error : "") << '\n';
    if (cell.result.failed) {
      ++failures;
      continue;
    }
    const std::string run_name =
        cell.method + "_rep" + std::to_string(cell.rep);
    if (!cell.result.trace.records.empty()) {
      std::ofstream tr(out_dir / "traces" / ("run_" + run_name + ".csv"));
      cell.result.trace.write_csv(tr);
      for (const auto& r : cell.result.trace.records) {
        plot << run_name << ',' << r.iter << ",objective," << r.objective
             << '\n';
        plot << run_name << ',' << r.iter << ",seconds," << r.seconds << '\n';
      }
    }
  }

  // Aggregate mean +- std per method.
  std::vector<std::string> methods = losses;
  methods.push_back("l2");
  std::ofstream table(out_dir / "results.txt");
  json agg = json::array();
  table << "method        RMSE (mean+-std)      MAE (mean+-std)       "
           "seconds\n";
  for (const auto& method : methods) {
    std::vector<double> r, a, s;
    for (const auto& cell : cells)
      if (cell.method == method && !cell.result.failed) {
        r.push_back(cell.result.rmse_value);
        a.push_back(cell.result.mae_value);
        s.push_back(cell.result.seconds);
      }
    auto mean = [](const std::vector<double>& v) {
      double sum = 0;
      for (double x : v) sum += x;
      return v.empty() ? 0.0 : sum / static_cast<double>(v.size());
    };
    auto stddev = [&](const std::vector<double>& v) {
      if (v.size() < 2) return 0.0;
      const double mu = mean(v);
      double sum = 0;
      for (double x : v) sum += (x - mu) * (x - mu);
      return std::sqrt(sum / static_cast<double>(v.size() - 1));
    };
    char line[256];
    std::snprintf(line, sizeof(line),
                  "%-12s  %8.4f +- %6.4f   %8.4f +- %6.4f   %8.2f\n",
                  method.c_str(), mean(r), stddev(r), mean(a), stddev(a),
                  mean(s));
    table << line;
    agg.push_back({{"method", method},
                   {"rmse_mean", mean(r)},
                   {"rmse_std", stddev(r)},
                   {"mae_mean", mean(a)},
                   {"mae_std", stddev(a)},
                   {"seconds_mean", mean(s)},
                   {"runs", r.size()}});
  }
  std::ofstream(out_dir / "results.json") << agg.dump(2) << '\n';
  std::cout << agg.dump(2) << std::endl;

  if (failures == cells.size()) fail("internal", "all bench cells failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust matrix factorization with nonconvex losses"};
  app.require_subcommand(1);

  // synth
  SyntheticSpec spec;
  std::string synth_out = "synth_out";
  auto* synth = app.add_subcommand("synth", "generate a synthetic bundle");
  synth->add_option("--m", spec.m);
  synth->add_option("--true-rank", spec.true_rank);
  synth->add_option("--sigma2", spec.noise_variance);
  synth->add_option("--outlier-frac", spec.outlier_fraction);
  synth->add_option("--outlier-mag", spec.outlier_magnitude);
  synth->add_option("--seed", spec.seed);
  synth->add_option("--out", synth_out);

  // attack
  std::string attack_data, attack_out = "attacked.tsv";
  double item_fraction = 0.03;
  std::uint64_t attack_seed = 0;
  auto* attack = app.add_subcommand("attack", "apply a love/hate attack");
  attack->add_option("--data", attack_data)->required();
  attack->add_option("--item-fraction", item_fraction);
  attack->add_option("--seed", attack_seed);
  attack->add_option("--out", attack_out);

  // fit
  FitOptions fit_opt;
  std::string fit_data, fit_validation, fit_test, fit_out = "fit_out";
  auto* fit_cmd = app.add_subcommand("fit", "run the factorization");
  fit_cmd->add_option("--data", fit_data)->required();
  add_fit_options(fit_cmd, fit_opt);
  fit_cmd->add_option("--validation", fit_validation);
  fit_cmd->add_option("--test", fit_test);
  fit_cmd->add_option("--out", fit_out);

  // evaluate
  std::string eval_factors, eval_mask;
  auto* evaluate = app.add_subcommand("evaluate", "score saved factors");
  evaluate->add_option("--factors", eval_factors)->required();
  evaluate->add_option("--mask", eval_mask)->required();

  // bench
  FitOptions bench_opt;
  Index bench_m = 250;
  std::string bench_data, bench_out = "bench_out";
  std::vector<std::string> bench_losses = {"lsp", "geman", "laplace", "l1"};
  int reps = 5, jobs = 1;
  double attack_frac = 0.0;
  auto* bench = app.add_subcommand("bench", "repeated-trial comparison");
  bench->add_option("--m", bench_m, "synthetic size (when no --data)");
  bench->add_option("--data", bench_data, "ratings or bundle file");
  bench->add_option("--attack-fraction", attack_frac,
                    "love/hate attack before splitting (ratings data)");
  std::string bench_split = "half";
  bench->add_option("--split", bench_split,
                    "synthetic training set: the train half only, or all "
                    "observed entries (train + validation)")
      ->check(CLI::IsMember({"half", "all"}));
  bench->add_option("--losses", bench_losses)->delimiter(',');
  add_fit_options(bench, bench_opt);
  bench->add_option("--reps", reps);
  bench->add_option("--jobs", jobs);
  bench->add_option("--out", bench_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return run_synth(spec, synth_out);
    if (attack->parsed()) {
      if (!fs::exists(attack_data)) fail("io", "no such file: " + attack_data);
      save_observed(love_hate_attack(load_any(attack_data), item_fraction,
                                     attack_seed),
                    attack_out);
      return 0;
    }
    if (fit_cmd->parsed())
      return run_fit(fit_data, fit_opt, fit_validation, fit_test, fit_out);
    if (evaluate->parsed()) return run_evaluate(eval_factors, eval_mask);
    if (bench->parsed()) {
      if (reps < 1) fail("config", "--reps must be >= 1");
      return run_bench(bench_m, bench_data, bench_split, bench_losses,
                       bench_opt, reps, attack_frac, jobs, bench_out);
    }
  } catch (const CliError& e) {
    json err = {{"error", {{"code", e.code}, {"message", e.message}}}};
    std::cerr << err.dump() << std::endl;
    return 1;
  } catch (const ParseError& e) {
    json err = {{"error",
                 {{"code", "parse"}, {"message", e.what()},
                  {"line", e.line()}}}};
    std::cerr << err.dump() << std::endl;
    return 1;
  } catch (const ConfigError& e) {
    json err = {{"error", {{"code", "config"}, {"message", e.what()}}}};
    std::cerr << err.dump() << std::endl;
    return 1;
  } catch (const DataError& e) {
    json err = {{"error", {{"code", "data"}, {"message", e.what()}}}};
    std::cerr << err.dump() << std::endl;
    return 1;
  } catch (const NumericalError& e) {
    json err = {{"error", {{"code", "numeric"}, {"message", e.what()}}}};
    std::cerr << err.dump() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    json err = {{"error", {{"code", "internal"}, {"message", e.what()}}}};
    std::cerr << err.dump() << std::endl;
    return 1;
  }
  return 0;
}
