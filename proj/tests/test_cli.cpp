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

// End-to-end checks of the command-line binary. The path to the built
// binary is passed as the first program argument (see CMakeLists.txt).

#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <json.hpp>
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

using json = nlohmann::json;

namespace {

std::string g_binary;

struct RunOutput {
  int status = -1;
  std::string out;
  std::string err;
};

RunOutput run(const std::string& args) {
  const std::string out_path = "cli_stdout.txt";
  const std::string err_path = "cli_stderr.txt";
  const std::string cmd =
      g_binary + " " + args + " > " + out_path + " 2> " + err_path;
  RunOutput result;
  const int raw = std::system(cmd.c_str());
  result.status = raw == -1 ? -1 : WEXITSTATUS(raw);
  auto slurp = [](const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  result.out = slurp(out_path);
  result.err = slurp(err_path);
  return result;
}

std::string slurp_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("synth then fit then evaluate pipeline") {
  RunOutput synth =
      run("synth --m 60 --seed 3 --out cli_synth");
  REQUIRE(synth.status == 0);
  const json meta = json::parse(slurp_file("cli_synth/meta.json"));
  CHECK(meta["m"] == 60);
  CHECK(meta["train_nnz"].get<long>() > 0);

  RunOutput fitted = run(
      "fit --data cli_synth/train.tsv --test cli_synth/test.tsv "
      "--loss lsp --theta 1 --rank 5 --lambda auto --seed 1 "
      "--out cli_fit");
  REQUIRE(fitted.status == 0);
  const json summary = json::parse(slurp_file("cli_fit/summary.json"));
  CHECK(summary.contains("rmse"));
  CHECK(summary["rmse"].get<double>() > 0.0);
  CHECK(summary["rmse"].get<double>() < 2.0);
  CHECK(summary["lambda"].get<double>() ==
        doctest::Approx(20.0 / 120).epsilon(1e-12));

  // Trace CSV has the documented header and a monotone objective column.
  std::ifstream trace("cli_fit/trace.csv");
  std::string header;
  std::getline(trace, header);
  CHECK(header == "iter,objective,surrogate,u_inc,v_inc,inner_iters,seconds");
  double prev = 1e300;
  std::string line;
  int rows = 0;
  while (std::getline(trace, line)) {
    std::istringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');  // iter
    std::getline(ss, field, ',');  // objective
    const double obj = std::stod(field);
    CHECK(obj <= prev + 1e-8);
    prev = obj;
    ++rows;
  }
  CHECK(rows >= 1);

  RunOutput scored =
      run("evaluate --factors cli_fit --mask cli_synth/test.tsv");
  REQUIRE(scored.status == 0);
  const json eval = json::parse(scored.out);
  CHECK(eval["rmse"].get<double>() ==
        doctest::Approx(summary["rmse"].get<double>()).epsilon(1e-9));
}

TEST_CASE("l1 reduction runs through the same plumbing") {
  RunOutput fitted = run(
      "fit --data cli_synth/train.tsv --loss l1 --rank 3 --max-outer 10 "
      "--seed 2 --out cli_fit_l1");
  REQUIRE(fitted.status == 0);
  const json summary = json::parse(slurp_file("cli_fit_l1/summary.json"));
  CHECK(summary["loss"] == "l1");
}

TEST_CASE("determinism: identical recipe gives identical factors") {
  for (const char* dir : {"cli_det_a", "cli_det_b"}) {
    RunOutput fitted = run(std::string(
        "fit --data cli_synth/train.tsv --loss geman --rank 4 --seed 9 "
        "--max-outer 8 --out ") + dir);
    REQUIRE(fitted.status == 0);
  }
  CHECK(slurp_file("cli_det_a/U.tsv") == slurp_file("cli_det_b/U.tsv"));
  CHECK(slurp_file("cli_det_a/V.tsv") == slurp_file("cli_det_b/V.tsv"));
}

TEST_CASE("missing input path yields error JSON with code io") {
  RunOutput fitted = run("fit --data cli_no_such_file.tsv --out cli_fit_err");
  CHECK(fitted.status != 0);
  const json err = json::parse(fitted.err);
  CHECK(err["error"]["code"] == "io");
}

TEST_CASE("config errors are machine readable") {
  RunOutput fitted = run(
      "fit --data cli_synth/train.tsv --lambda bogus --out cli_fit_err");
  CHECK(fitted.status != 0);
  CHECK(json::parse(fitted.err)["error"]["code"] == "config");

  RunOutput parse_err = run("evaluate --factors cli_fit --mask "
                            "cli_synth/train.tsv");
  CHECK(parse_err.status != 0);
  CHECK(json::parse(parse_err.err)["error"]["code"] == "parse");
}

TEST_CASE("attack subcommand writes a perturbed bundle") {
  RunOutput attacked = run(
      "attack --data cli_synth/train.tsv --item-fraction 0.05 --seed 4 "
      "--out cli_attacked.tsv");
  REQUIRE(attacked.status == 0);
  const std::string text = slurp_file("cli_attacked.tsv");
  CHECK(text.rfind("#rmfnl ", 0) == 0);
}

TEST_CASE("bench emits tables and plot data; reps=1 gives zero std") {
  RunOutput bench = run(
      "bench --m 40 --losses lsp,l1 --reps 1 --rank 3 --max-outer 6 "
      "--seed 5 --jobs 2 --out cli_bench");
  REQUIRE(bench.status == 0);
  const json agg = json::parse(slurp_file("cli_bench/results.json"));
  REQUIRE(agg.size() == 3);  // lsp, l1, l2
  for (const auto& row : agg) {
    CHECK(row["runs"].get<int>() == 1);
    CHECK(row["rmse_std"].get<double>() == 0.0);
  }
  const std::string results = slurp_file("cli_bench/results.csv");
  CHECK(results.rfind("method,rep,rmse,mae,seconds,final_objective,"
                      "outer_iters,error\n", 0) == 0);
  const std::string plot = slurp_file("cli_bench/plot_data.csv");
  CHECK(plot.rfind("run,iter,metric,value\n", 0) == 0);
  CHECK(plot.find("lsp_rep0") != std::string::npos);
}

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: test_cli <path-to-rmfnl-binary>\n");
    return 2;
  }
  g_binary = argv[1];
  doctest::Context context;
  context.applyCommandLine(argc - 1, argv + 1);
  return context.run();
}
