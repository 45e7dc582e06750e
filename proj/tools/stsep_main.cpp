// stsep: first-order separability testing for spatio-temporal point
// patterns. Subcommands: simulate, estimate, test perm|chisq|recon,
// reconstruct, experiment. Exit codes: 0 success, 1 usage, 2 data error,
// 3 numerical failure.

#include <array>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "stsep/errors.hpp"
#include "stsep/experiment.hpp"
#include "stsep/io.hpp"
#include "stsep/parallel.hpp"
#include "stsep/recon.hpp"

namespace {

using stsep::data_error;

struct GlobalOpts {
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string manifest;  // write a run manifest here when nonempty
};

std::string join_args(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

stsep::BurstBase base_from_case(const std::string& c) {
  if (c == "i") return stsep::BurstBase::Uniform;
  if (c == "ii") return stsep::BurstBase::TimeNormal;
  if (c == "iii") return stsep::BurstBase::SpaceNormal;
  if (c == "iv") return stsep::BurstBase::Both;
  throw data_error("unknown model case \"" + c + "\" (expected i|ii|iii|iv)");
}

std::array<int, 3> as_dims(const std::vector<int>& v, const char* what) {
  if (v.size() != 3)
    throw data_error(std::string(what) + " needs three comma-separated values");
  return {v[0], v[1], v[2]};
}

std::optional<stsep::Bandwidths> fixed_bandwidths(
    const std::optional<double>& bs, const std::optional<double>& bt) {
  if (bs.has_value() != bt.has_value())
    throw data_error("--bw-space and --bw-time must be given together");
  if (!bs) return std::nullopt;
  return stsep::Bandwidths{*bs, *bt};
}

stsep::BandwidthMethod method_from_name(const std::string& m) {
  if (m == "auto") return stsep::BandwidthMethod::RuleOfThumb;
  if (m == "cv") return stsep::BandwidthMethod::LikelihoodCV;
  throw data_error("unknown bandwidth method \"" + m + "\" (auto|cv)");
}

void maybe_write_manifest(const GlobalOpts& g, const std::string& command,
                          const std::vector<std::string>& inputs,
                          const std::string& config_text,
                          double wall_seconds) {
  if (g.manifest.empty()) return;
  stsep::RunManifest m;
  m.command_line = command;
  m.config_digest = stsep::digest_string(config_text);
  m.seed = g.seed;
  for (const std::string& path : inputs)
    m.input_digests.emplace_back(path, stsep::digest_file(path));
  m.wall_seconds = wall_seconds;
  stsep::write_manifest(m, g.manifest);
}

void emit_result(const stsep::MonteCarloTestResult& res,
                 const std::string& out_path) {
  if (out_path.empty())
    std::fputs(stsep::result_to_json(res).c_str(), stdout);
  else
    stsep::write_result(res, out_path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"first-order separability tests for spatio-temporal point patterns"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", stsep::kVersion);

  GlobalOpts g;
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--threads", g.threads,
                 "worker threads (0 = STSEP_THREADS or hardware)")
      ->capture_default_str();
  app.add_option("--manifest", g.manifest, "write a run manifest (JSON)");

  const std::string command = join_args(argc, argv);
  const auto started = std::chrono::steady_clock::now();
  const auto elapsed = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         started)
        .count();
  };

  // ---- simulate ----
  CLI::App* sim = app.add_subcommand("simulate", "draw synthetic patterns");
  sim->require_subcommand(1);

  CLI::App* sim_burst = sim->add_subcommand(
      "burst", "separable base plus a localized space-time burst");
  std::string burst_case = "i";
  double burst_gamma = 0.0, burst_target = 600.0;
  double burst_base_sd = 0.2, burst_burst_sd = 0.05;
  std::string burst_out, burst_window_out;
  sim_burst->add_option("--case", burst_case, "base shape i|ii|iii|iv")
      ->capture_default_str();
  sim_burst->add_option("--gamma", burst_gamma, "burst weight")
      ->capture_default_str();
  sim_burst->add_option("--target-n", burst_target, "expected point count")
      ->capture_default_str();
  sim_burst->add_option("--base-sd", burst_base_sd, "base normal sd")
      ->capture_default_str();
  sim_burst->add_option("--burst-sd", burst_burst_sd, "burst normal sd")
      ->capture_default_str();
  sim_burst->add_option("-o,--out", burst_out, "output pattern CSV")
      ->required();
  sim_burst->add_option("--window-out", burst_window_out,
                        "also write the unit-cube window file");
  sim_burst->callback([&] {
    const stsep::BurstModel model =
        stsep::calibrate_burst(base_from_case(burst_case), burst_gamma,
                               burst_target, burst_base_sd, burst_burst_sd);
    stsep::Rng rng(g.seed);
    const stsep::PointPattern p = stsep::simulate_burst(model, rng);
    stsep::write_pattern_csv(p, burst_out);
    if (!burst_window_out.empty())
      stsep::write_window(stsep::Window::unit_cube(), burst_window_out);
    std::fprintf(stdout, "n=%zu nu=%s\n", p.size(),
                 stsep::format_double(model.nu).c_str());
    maybe_write_manifest(g, command, {}, "burst " + burst_case, elapsed());
  });

  CLI::App* sim_lgcp =
      sim->add_subcommand("lgcp", "log-Gaussian Cox process on a grid");
  stsep::LgcpModel lgcp_model;
  std::vector<int> lgcp_grid{20, 20, 20};
  std::string lgcp_out, lgcp_window_in, lgcp_window_out;
  sim_lgcp->add_option("--beta0", lgcp_model.beta0)->capture_default_str();
  sim_lgcp->add_option("--beta1", lgcp_model.beta1)->capture_default_str();
  sim_lgcp->add_option("--gamma-prime", lgcp_model.gamma_prime)
      ->capture_default_str();
  sim_lgcp->add_option("--gamma-dprime", lgcp_model.gamma_dprime)
      ->capture_default_str();
  sim_lgcp->add_option("--sigma1", lgcp_model.sigma1)->capture_default_str();
  sim_lgcp->add_option("--sigma2", lgcp_model.sigma2)->capture_default_str();
  sim_lgcp->add_option("--phi1", lgcp_model.phi1)->capture_default_str();
  sim_lgcp->add_option("--phi2", lgcp_model.phi2)->capture_default_str();
  sim_lgcp->add_option("--grid", lgcp_grid, "field grid NX,NY,NT")
      ->delimiter(',')
      ->capture_default_str();
  sim_lgcp->add_option("--window", lgcp_window_in,
                       "window file (default unit cube)");
  sim_lgcp->add_option("-o,--out", lgcp_out, "output pattern CSV")->required();
  sim_lgcp->add_option("--window-out", lgcp_window_out,
                       "also write the window file");
  sim_lgcp->callback([&] {
    const auto dims = as_dims(lgcp_grid, "--grid");
    lgcp_model.nx = dims[0];
    lgcp_model.ny = dims[1];
    lgcp_model.nt = dims[2];
    const stsep::Window w = lgcp_window_in.empty()
                                ? stsep::Window::unit_cube()
                                : stsep::read_window(lgcp_window_in);
    stsep::Rng rng(g.seed);
    const stsep::LgcpRealization real = stsep::simulate_lgcp(lgcp_model, w, rng);
    stsep::write_pattern_csv(real.pattern, lgcp_out);
    if (!lgcp_window_out.empty()) stsep::write_window(w, lgcp_window_out);
    std::fprintf(stdout, "n=%zu\n", real.pattern.size());
    std::vector<std::string> inputs;
    if (!lgcp_window_in.empty()) inputs.push_back(lgcp_window_in);
    maybe_write_manifest(g, command, inputs, "lgcp", elapsed());
  });

  // ---- estimate ----
  CLI::App* est = app.add_subcommand(
      "estimate", "kernel intensity estimates exported as plot-ready grids");
  std::string est_pattern, est_window, est_outdir, est_bw_mode = "auto";
  std::vector<int> est_grid{25, 25, 20};
  std::optional<double> est_bw_space, est_bw_time;
  est->add_option("pattern", est_pattern, "pattern CSV")->required();
  est->add_option("window", est_window, "window file")->required();
  est->add_option("--grid", est_grid, "evaluation grid NX,NY,NT")
      ->delimiter(',')
      ->capture_default_str();
  est->add_option("--bw", est_bw_mode, "bandwidth selector auto|cv")
      ->capture_default_str();
  est->add_option("--bw-space", est_bw_space, "fixed spatial bandwidth");
  est->add_option("--bw-time", est_bw_time, "fixed temporal bandwidth");
  est->add_option("-o,--out", est_outdir, "output directory")->required();
  est->callback([&] {
    const stsep::Window w = stsep::read_window(est_window);
    const stsep::PointPattern p = stsep::read_pattern_csv(est_pattern, w);
    const auto dims = as_dims(est_grid, "--grid");
    const auto fixed = fixed_bandwidths(est_bw_space, est_bw_time);
    const stsep::Bandwidths bw =
        fixed ? *fixed
              : stsep::select_bandwidths(p, method_from_name(est_bw_mode));
    const stsep::Grid3 grid = stsep::build_grid(w, dims[0], dims[1], dims[2]);
    const stsep::IntensityField field = stsep::estimate_rho_st(p, bw, grid);

    std::filesystem::create_directories(est_outdir);
    const std::filesystem::path out(est_outdir);
    stsep::write_grid_csv(grid, field.rho_st, (out / "rho_st.csv").string());
    stsep::write_grid_csv(grid, field.rho_sep, (out / "rho_sep.csv").string());
    Eigen::MatrixXd ratio =
        Eigen::MatrixXd::Zero(grid.spatial_cells(), grid.nt);
    for (int it = 0; it < grid.nt; ++it)
      for (int s = 0; s < grid.spatial_cells(); ++s)
        if (field.cell_valid(s, it))
          ratio(s, it) = field.rho_st(s, it) / field.rho_sep(s, it);
    stsep::write_grid_csv(grid, ratio, (out / "s_ratio.csv").string());

    nlohmann::json j;
    j["bandwidth_space"] = bw.space;
    j["bandwidth_time"] = bw.time;
    j["grid"] = dims;
    j["mass_sep"] = field.mass_sep();
    j["mass_space"] = field.mass_space();
    j["mass_st"] = field.mass_st();
    j["mass_time"] = field.mass_time();
    j["n"] = p.size();
    stsep::write_text_file((out / "summary.json").string(), j.dump(2) + "\n");
    std::fprintf(stdout, "n=%zu bw_space=%s bw_time=%s\n", p.size(),
                 stsep::format_double(bw.space).c_str(),
                 stsep::format_double(bw.time).c_str());
    maybe_write_manifest(g, command, {est_pattern, est_window}, est_bw_mode,
                         elapsed());
  });

  // ---- test ----
  CLI::App* test = app.add_subcommand("test", "separability tests");
  test->require_subcommand(1);

  CLI::App* tperm = test->add_subcommand(
      "perm", "permutation-based Monte Carlo test (global envelope)");
  std::string tp_pattern, tp_window, tp_stat = "S", tp_out, tp_bw_mode = "auto";
  int tp_nperm = 999;
  double tp_alpha = 0.05;
  std::vector<int> tp_grid{25, 25, 20};
  std::optional<double> tp_bw_space, tp_bw_time;
  tperm->add_option("pattern", tp_pattern, "pattern CSV")->required();
  tperm->add_option("window", tp_window, "window file")->required();
  tperm->add_option("--stat", tp_stat, "S|Sspace|Stime|Sd")
      ->capture_default_str();
  tperm->add_option("--nperm", tp_nperm, "number of permutations")
      ->capture_default_str();
  tperm->add_option("--alpha", tp_alpha, "significance level")
      ->capture_default_str();
  tperm->add_option("--grid", tp_grid, "evaluation grid NX,NY,NT")
      ->delimiter(',')
      ->capture_default_str();
  tperm->add_option("--bw", tp_bw_mode, "bandwidth selector auto|cv")
      ->capture_default_str();
  tperm->add_option("--bw-space", tp_bw_space, "fixed spatial bandwidth");
  tperm->add_option("--bw-time", tp_bw_time, "fixed temporal bandwidth");
  tperm->add_option("-o,--out", tp_out, "result JSON path (default stdout)");
  tperm->callback([&] {
    const stsep::Window w = stsep::read_window(tp_window);
    const stsep::PointPattern p = stsep::read_pattern_csv(tp_pattern, w);
    stsep::PermTestConfig cfg;
    cfg.statistic = stsep::statistic_from_name(tp_stat);
    cfg.n_perm = tp_nperm;
    cfg.alpha = tp_alpha;
    const auto dims = as_dims(tp_grid, "--grid");
    cfg.nx = dims[0];
    cfg.ny = dims[1];
    cfg.nt = dims[2];
    cfg.bandwidths = fixed_bandwidths(tp_bw_space, tp_bw_time);
    cfg.bw_method = method_from_name(tp_bw_mode);
    cfg.seed = g.seed;
    cfg.threads = g.threads;
    const stsep::MonteCarloTestResult res = stsep::run_permutation_test(p, cfg);
    emit_result(res, tp_out);
    maybe_write_manifest(g, command, {tp_pattern, tp_window}, tp_stat,
                         elapsed());
  });

  CLI::App* tchi = test->add_subcommand(
      "chisq", "chi-square independence test on quantile cells");
  std::string tc_pattern, tc_window, tc_out;
  std::vector<int> tc_cells{4, 4, 4};
  tchi->add_option("pattern", tc_pattern, "pattern CSV")->required();
  tchi->add_option("window", tc_window, "window file")->required();
  tchi->add_option("--cells", tc_cells, "quantile cells KX,KY,KT")
      ->delimiter(',')
      ->capture_default_str();
  tchi->add_option("-o,--out", tc_out, "result JSON path (default stdout)");
  tchi->callback([&] {
    const stsep::Window w = stsep::read_window(tc_window);
    const stsep::PointPattern p = stsep::read_pattern_csv(tc_pattern, w);
    const auto dims = as_dims(tc_cells, "--cells");
    const stsep::ChiSqResult res =
        stsep::chisq_test(p, dims[0], dims[1], dims[2]);
    nlohmann::json j;
    j["cells"] = dims;
    j["df"] = res.df;
    j["p_value"] = res.p_value;
    j["small_expected_warning"] = res.small_expected_warning;
    j["statistic"] = res.statistic;
    const std::string text = j.dump(2) + "\n";
    if (tc_out.empty())
      std::fputs(text.c_str(), stdout);
    else
      stsep::write_text_file(tc_out, text);
    maybe_write_manifest(g, command, {tc_pattern, tc_window}, "chisq",
                         elapsed());
  });

  CLI::App* trec = test->add_subcommand(
      "recon", "Monte Carlo test with stochastic reconstructions");
  std::string tr_pattern, tr_window, tr_stat = "S", tr_out, tr_config;
  std::string tr_bw_mode = "auto";
  int tr_nperm = 99;
  double tr_alpha = 0.05;
  std::vector<int> tr_grid{25, 25, 20};
  std::optional<double> tr_bw_space, tr_bw_time;
  std::optional<long> tr_iters;
  trec->add_option("pattern", tr_pattern, "pattern CSV")->required();
  trec->add_option("window", tr_window, "window file")->required();
  trec->add_option("--stat", tr_stat, "S|Sspace|Stime|Sd")
      ->capture_default_str();
  trec->add_option("--nperm", tr_nperm, "number of reconstructions")
      ->capture_default_str();
  trec->add_option("--alpha", tr_alpha, "significance level")
      ->capture_default_str();
  trec->add_option("--grid", tr_grid, "evaluation grid NX,NY,NT")
      ->delimiter(',')
      ->capture_default_str();
  trec->add_option("--bw", tr_bw_mode, "bandwidth selector auto|cv")
      ->capture_default_str();
  trec->add_option("--bw-space", tr_bw_space, "fixed spatial bandwidth");
  trec->add_option("--bw-time", tr_bw_time, "fixed temporal bandwidth");
  trec->add_option("--config", tr_config, "reconstruction config file");
  trec->add_option("--iters", tr_iters, "override reconstruction max_iter");
  trec->add_option("-o,--out", tr_out, "result JSON path (default stdout)");
  trec->callback([&] {
    const stsep::Window w = stsep::read_window(tr_window);
    const stsep::PointPattern p = stsep::read_pattern_csv(tr_pattern, w);
    stsep::ReconConfig rc;
    if (!tr_config.empty()) rc = stsep::read_recon_config(tr_config, rc);
    if (tr_iters) rc.max_iter = *tr_iters;
    stsep::PermTestConfig cfg;
    cfg.statistic = stsep::statistic_from_name(tr_stat);
    cfg.n_perm = tr_nperm;
    cfg.alpha = tr_alpha;
    const auto dims = as_dims(tr_grid, "--grid");
    cfg.nx = dims[0];
    cfg.ny = dims[1];
    cfg.nt = dims[2];
    cfg.bandwidths = fixed_bandwidths(tr_bw_space, tr_bw_time);
    cfg.bw_method = method_from_name(tr_bw_mode);
    cfg.seed = g.seed;
    cfg.threads = g.threads;
    rc.nx = cfg.nx;
    rc.ny = cfg.ny;
    rc.nt = cfg.nt;
    const stsep::MonteCarloTestResult res =
        stsep::run_reconstruction_test(p, rc, cfg);
    emit_result(res, tr_out);
    std::vector<std::string> inputs{tr_pattern, tr_window};
    if (!tr_config.empty()) inputs.push_back(tr_config);
    maybe_write_manifest(g, command, inputs, tr_stat, elapsed());
  });

  // ---- reconstruct ----
  CLI::App* rec = app.add_subcommand(
      "reconstruct", "energy-minimizing reconstructions of a pattern");
  std::string rc_pattern, rc_window, rc_outdir, rc_config;
  int rc_count = 1;
  std::optional<long> rc_iters;
  rec->add_option("pattern", rc_pattern, "pattern CSV")->required();
  rec->add_option("window", rc_window, "window file")->required();
  rec->add_option("--config", rc_config, "reconstruction config file");
  rec->add_option("-n,--count", rc_count, "number of reconstructions")
      ->capture_default_str();
  rec->add_option("--iters", rc_iters, "override max_iter");
  rec->add_option("-o,--out", rc_outdir, "output directory")->required();
  rec->callback([&] {
    if (rc_count < 1) throw data_error("count must be >= 1");
    const stsep::Window w = stsep::read_window(rc_window);
    const stsep::PointPattern p = stsep::read_pattern_csv(rc_pattern, w);
    stsep::ReconConfig cfg;
    if (!rc_config.empty()) cfg = stsep::read_recon_config(rc_config, cfg);
    if (rc_iters) cfg.max_iter = *rc_iters;
    cfg.seed = g.seed;
    cfg.threads = g.threads;
    const stsep::SummaryCache cache = stsep::build_summary_cache(p, cfg);

    std::filesystem::create_directories(rc_outdir);
    const std::filesystem::path out(rc_outdir);
    std::vector<std::optional<stsep::ReconResult>> results(
        static_cast<std::size_t>(rc_count));
    stsep::parallel_for(static_cast<std::size_t>(rc_count), g.threads,
                        [&](std::size_t r) {
                          stsep::Rng rng =
                              stsep::Rng::for_replicate(g.seed, r + 1);
                          results[r] = stsep::reconstruct_cached(cache, cfg, rng);
                        });

    nlohmann::json runs = nlohmann::json::array();
    for (int r = 0; r < rc_count; ++r) {
      const stsep::ReconResult& rr = *results[static_cast<std::size_t>(r)];
      char name[32];
      std::snprintf(name, sizeof name, "recon_%04d.csv", r + 1);
      stsep::write_pattern_csv(rr.pattern, (out / name).string());
      nlohmann::json jr;
      jr["accepted"] = rr.accepted;
      jr["energies"] = rr.accepted_energies;
      jr["file"] = name;
      jr["proposals"] = rr.proposals;
      runs.push_back(std::move(jr));
    }
    stsep::write_text_file((out / "runs.json").string(), runs.dump(2) + "\n");
    std::fprintf(stdout, "wrote %d reconstructions to %s\n", rc_count,
                 rc_outdir.c_str());
    std::vector<std::string> inputs{rc_pattern, rc_window};
    if (!rc_config.empty()) inputs.push_back(rc_config);
    maybe_write_manifest(g, command, inputs,
                         rc_config.empty() ? "" : rc_config, elapsed());
  });

  // ---- experiment ----
  CLI::App* exp = app.add_subcommand(
      "experiment", "repeated simulate-test cycles with rejection rates");
  std::string ex_model = "burst", ex_case = "i", ex_out, ex_bw_mode = "auto";
  std::vector<double> ex_sweep{0.0};
  int ex_reps = 1000, ex_nperm = 1999;
  double ex_alpha = 0.05, ex_target = 600.0;
  std::vector<int> ex_grid{25, 25, 20}, ex_cells{4, 4, 4};
  std::optional<double> ex_bw_space, ex_bw_time;
  stsep::LgcpModel ex_lgcp;
  bool ex_no_chisq = false;
  exp->add_option("--model", ex_model, "burst|lgcp")->capture_default_str();
  exp->add_option("--case", ex_case, "burst base i|ii|iii|iv")
      ->capture_default_str();
  exp->add_option("--gamma", ex_sweep,
                  "swept values: burst gamma or LGCP gamma-dprime")
      ->delimiter(',')
      ->capture_default_str();
  exp->add_option("--reps", ex_reps, "repetitions per value")
      ->capture_default_str();
  exp->add_option("--nperm", ex_nperm, "permutations per test")
      ->capture_default_str();
  exp->add_option("--alpha", ex_alpha, "significance level")
      ->capture_default_str();
  exp->add_option("--target-n", ex_target, "burst expected count")
      ->capture_default_str();
  exp->add_option("--grid", ex_grid, "evaluation grid NX,NY,NT")
      ->delimiter(',')
      ->capture_default_str();
  exp->add_option("--chisq-cells", ex_cells, "chi-square cells KX,KY,KT")
      ->delimiter(',')
      ->capture_default_str();
  exp->add_flag("--no-chisq", ex_no_chisq, "skip the chi-square test");
  exp->add_option("--bw", ex_bw_mode, "bandwidth selector auto|cv")
      ->capture_default_str();
  exp->add_option("--bw-space", ex_bw_space, "fixed spatial bandwidth");
  exp->add_option("--bw-time", ex_bw_time, "fixed temporal bandwidth");
  exp->add_option("--beta0", ex_lgcp.beta0)->capture_default_str();
  exp->add_option("--beta1", ex_lgcp.beta1)->capture_default_str();
  exp->add_option("--gamma-prime", ex_lgcp.gamma_prime)->capture_default_str();
  exp->add_option("--sigma1", ex_lgcp.sigma1)->capture_default_str();
  exp->add_option("--sigma2", ex_lgcp.sigma2)->capture_default_str();
  exp->add_option("--phi1", ex_lgcp.phi1)->capture_default_str();
  exp->add_option("--phi2", ex_lgcp.phi2)->capture_default_str();
  exp->add_option("-o,--out", ex_out, "also write the table to this file");
  exp->callback([&] {
    stsep::ExperimentConfig cfg;
    if (ex_model == "burst")
      cfg.model = stsep::ExperimentModel::Burst;
    else if (ex_model == "lgcp")
      cfg.model = stsep::ExperimentModel::Lgcp;
    else
      throw data_error("unknown model \"" + ex_model + "\" (burst|lgcp)");
    cfg.burst_base = base_from_case(ex_case);
    cfg.target_n = ex_target;
    cfg.lgcp = ex_lgcp;
    cfg.sweep = ex_sweep;
    cfg.repetitions = ex_reps;
    cfg.test.n_perm = ex_nperm;
    cfg.test.alpha = ex_alpha;
    const auto dims = as_dims(ex_grid, "--grid");
    cfg.test.nx = dims[0];
    cfg.test.ny = dims[1];
    cfg.test.nt = dims[2];
    cfg.test.bandwidths = fixed_bandwidths(ex_bw_space, ex_bw_time);
    cfg.test.bw_method = method_from_name(ex_bw_mode);
    cfg.run_chisq = !ex_no_chisq;
    const auto cells = as_dims(ex_cells, "--chisq-cells");
    cfg.chisq_kx = cells[0];
    cfg.chisq_ky = cells[1];
    cfg.chisq_kt = cells[2];
    cfg.seed = g.seed;
    cfg.threads = g.threads;
    const std::vector<stsep::ExperimentRow> rows = stsep::run_experiment(cfg);
    const std::string table = stsep::format_experiment_table(cfg, rows);
    std::fputs(table.c_str(), stdout);
    if (!ex_out.empty()) stsep::write_text_file(ex_out, table);
    maybe_write_manifest(g, command, {}, ex_model + " " + ex_case, elapsed());
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const stsep::data_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const stsep::numeric_error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "failure: %s\n", e.what());
    return 3;
  }
  return 0;
}
