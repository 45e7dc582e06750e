#include <doctest.h>

#include <string>

#include "stsep/experiment.hpp"

using namespace stsep;

namespace {

ExperimentConfig tiny_burst() {
  ExperimentConfig cfg;
  cfg.model = ExperimentModel::Burst;
  cfg.burst_base = BurstBase::Uniform;
  cfg.target_n = 120.0;
  cfg.sweep = {0.0, 30.0};
  cfg.repetitions = 2;
  cfg.test.n_perm = 9;
  cfg.test.alpha = 0.2;
  cfg.test.nx = 8;
  cfg.test.ny = 8;
  cfg.test.nt = 6;
  cfg.statistics = {Statistic::S, Statistic::SDev};
  cfg.run_chisq = true;
  cfg.chisq_kx = cfg.chisq_ky = cfg.chisq_kt = 2;
  cfg.seed = 5;
  cfg.threads = 1;
  return cfg;
}

}  // namespace

TEST_CASE("zero repetitions yield an empty table") {
  ExperimentConfig cfg = tiny_burst();
  cfg.repetitions = 0;
  CHECK(run_experiment(cfg).empty());
}

TEST_CASE("experiment rows aggregate the sweep") {
  ExperimentConfig cfg = tiny_burst();
  std::vector<ExperimentRow> rows = run_experiment(cfg);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].model == "burst-i");
  CHECK(rows[0].sweep_value == 0.0);
  CHECK(rows[1].sweep_value == 30.0);
  for (const ExperimentRow& r : rows) {
    CHECK(r.repetitions == 2);
    CHECK(r.mean_n > 60.0);
    CHECK(r.mean_n < 220.0);
    REQUIRE(r.rejection.size() == 2);
    for (double rate : r.rejection) {
      CHECK(rate >= 0.0);
      CHECK(rate <= 1.0);
    }
    CHECK(r.chisq_rejection >= 0.0);
    CHECK(r.chisq_rejection <= 1.0);
  }

  // Deterministic in the seed and independent of the worker count.
  std::vector<ExperimentRow> again = run_experiment(cfg);
  ExperimentConfig threaded = cfg;
  threaded.threads = 4;
  std::vector<ExperimentRow> par = run_experiment(threaded);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(again[i].mean_n == rows[i].mean_n);
    CHECK(par[i].mean_n == rows[i].mean_n);
    CHECK(again[i].rejection == rows[i].rejection);
    CHECK(par[i].rejection == rows[i].rejection);
    CHECK(par[i].chisq_rejection == rows[i].chisq_rejection);
  }

  std::string table = format_experiment_table(cfg, rows);
  CHECK(table.find("S_d") != std::string::npos);
  CHECK(table.find("chisq") != std::string::npos);
  CHECK(table.find("burst-i") != std::string::npos);
  int lines = 0;
  for (char c : table)
    if (c == '\n') ++lines;
  CHECK(lines == 3);  // header plus one row per sweep value
}

TEST_CASE("lgcp experiment labels and runs") {
  ExperimentConfig cfg;
  cfg.model = ExperimentModel::Lgcp;
  cfg.lgcp.beta0 = 4.0;
  cfg.lgcp.nx = cfg.lgcp.ny = 10;
  cfg.lgcp.nt = 8;
  cfg.sweep = {0.0};
  cfg.repetitions = 2;
  cfg.test.n_perm = 9;
  cfg.test.alpha = 0.2;
  cfg.test.nx = 8;
  cfg.test.ny = 8;
  cfg.test.nt = 6;
  cfg.statistics = {Statistic::S};
  cfg.run_chisq = false;
  cfg.seed = 9;
  cfg.threads = 1;
  std::vector<ExperimentRow> rows = run_experiment(cfg);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].model == "lgcp");
  CHECK(rows[0].mean_n > 10.0);
  REQUIRE(rows[0].rejection.size() == 1);
}
