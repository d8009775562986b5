#include "ngpf/cli.hpp"

#include "ngpf/baselines.hpp"
#include "ngpf/synth.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

namespace ngpf {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Index env_thread_cap() {
  if (const char* env = std::getenv("NGPF_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<Index>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<Index>(hw) : 1;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir.string() + "'");
}

// Window [first, end) of a full-window summary, for new-data-only emission.
ChainSummary slice_summary(const ChainSummary& s, Index first) {
  ChainSummary out;
  out.prob = s.prob;
  const Index T = s.mu_mean.cols();
  out.mu_mean = s.mu_mean.rightCols(T - first);
  out.mu_lo = s.mu_lo.rightCols(T - first);
  out.mu_hi = s.mu_hi.rightCols(T - first);
  out.sigma_mean.assign(s.sigma_mean.begin() + first, s.sigma_mean.end());
  out.sigma_lo.assign(s.sigma_lo.begin() + first, s.sigma_lo.end());
  out.sigma_hi.assign(s.sigma_hi.begin() + first, s.sigma_hi.end());
  return out;
}

MeanCovPath truth_from_dir(const fs::path& dir) {
  MeanCovPath truth;
  truth.mu = read_mu_csv(dir / "truth_mu.csv");
  truth.sigma = read_sigma_csv(dir / "truth_sigma.csv");
  return truth;
}

void write_error_summary_csv(const fs::path& path, const ErrorSummary& s,
                             const std::string& method) {
  const bool fresh = !fs::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  if (fresh) out << "block,method,mean,q90,q95,max\n";
  out << "sigma," << method << "," << fmt(s.sigma.mean) << "," << fmt(s.sigma.q90) << ","
      << fmt(s.sigma.q95) << "," << fmt(s.sigma.max) << "\n";
  out << "mu," << method << "," << fmt(s.mu.mean) << "," << fmt(s.mu.q90) << ","
      << fmt(s.mu.q95) << "," << fmt(s.mu.max) << "\n";
}

MeanCovPath posterior_mean_path(const ChainSummary& s) {
  MeanCovPath path;
  path.mu = s.mu_mean;
  path.sigma = s.sigma_mean;
  return path;
}

Dataset read_tail(const fs::path& dir) { return ingest_csv(dir / "tail.csv"); }

struct FitProducts {
  std::vector<Chain> chains;
  Chain pooled;
  ChainSummary summary;
  FixedParams fixed;
};

FitProducts fit_dataset(const FitConfig& cfg, const Dataset& data, Index n_chains,
                        const GibbsOptions& options = {}) {
  FitProducts out;
  out.chains = run_chains(cfg, data, n_chains, options);
  out.pooled.grid = out.chains[0].grid;
  out.pooled.n_iter = cfg.n_iter;
  out.pooled.burn_in = cfg.burn_in;
  out.pooled.thin = cfg.thin;
  out.pooled.seed = cfg.seed;
  for (const Chain& c : out.chains)
    out.pooled.draws.insert(out.pooled.draws.end(), c.draws.begin(), c.draws.end());
  out.summary = summarize_chain(out.pooled);
  out.fixed = extract_fixed_params(out.pooled);
  return out;
}

void write_fit_outputs(const fs::path& dir, const FitConfig& cfg, const Dataset& data,
                       const FitProducts& fit, RunManifest manifest) {
  ensure_dir(dir);
  for (std::size_t i = 0; i < fit.chains.size(); ++i) {
    const fs::path chain_path = dir / ("chain_" + std::to_string(i) + ".bin");
    write_chain_trace(chain_path, fit.chains[i]);
    manifest.outputs.push_back(chain_path.string());
  }
  write_mu_summary_csv(dir / "summary_mu.csv", fit.pooled.grid.raw, fit.summary);
  write_sigma_summary_csv(dir / "summary_sigma.csv", fit.pooled.grid.raw, fit.summary);
  write_fitted_state(dir / "fitted.json", fit.fixed, cfg);
  const Index tail_len = std::min<Index>(32, data.step_count());
  write_dataset_csv(dir / "tail.csv",
                    data.slice_steps(data.step_count() - tail_len, tail_len));
  manifest.outputs.push_back((dir / "summary_mu.csv").string());
  manifest.outputs.push_back((dir / "summary_sigma.csv").string());
  manifest.outputs.push_back((dir / "fitted.json").string());
  write_manifest(dir / "manifest.json", manifest);
}

int cmd_simulate(const std::string& scenario, std::uint64_t seed, Index T,
                 const fs::path& out_dir) {
  ScenarioSpec spec = scenario == "B" ? ScenarioSpec::scenario_b()
                                      : ScenarioSpec::scenario_a();
  spec.T = T;
  spec.seed = seed;
  RngStream rng(seed);
  auto [data, truth] = generate(spec, rng);

  ensure_dir(out_dir);
  write_dataset_csv(out_dir / "data.csv", data);
  write_mu_csv(out_dir / "truth_mu.csv", truth.grid.raw, truth.gamma.mu);
  write_sigma_csv(out_dir / "truth_sigma.csv", truth.grid.raw, truth.gamma.sigma);

  RunManifest manifest;
  manifest.command = "simulate --scenario " + scenario;
  manifest.seed = seed;
  manifest.outputs = {(out_dir / "data.csv").string(), (out_dir / "truth_mu.csv").string(),
                      (out_dir / "truth_sigma.csv").string()};
  write_manifest(out_dir / "manifest.json", manifest);
  return 0;
}

int cmd_fit(const fs::path& data_path, const std::string& config_path, Index chains,
            std::int64_t seed_override, const fs::path& out_dir,
            const std::string& truth_dir, bool quiet) {
  const Dataset data = ingest_csv(data_path);
  FitConfig cfg;
  if (!config_path.empty()) cfg = read_config(config_path);
  if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
  if (cfg.p == 0) cfg.p = data.series_count();
  throw_if_invalid(cfg);

  if (!quiet)
    std::cerr << "fit: " << data.series_count() << " series, " << data.step_count()
              << " steps, " << chains << " chain(s), " << cfg.n_iter << " iterations\n";
  GibbsOptions options;
  if (!quiet && chains == 1) {
    const Index every = std::max<Index>(1, cfg.n_iter / 10);
    options.progress = [every](Index iter, double loglik) {
      if (iter % every == 0)
        std::cerr << "  iteration " << iter << ", loglik " << loglik << "\n";
    };
  }
  const FitProducts fit = fit_dataset(cfg, data, chains, options);

  RunManifest manifest;
  manifest.command = "fit";
  manifest.config = cfg;
  manifest.seed = cfg.seed;
  manifest.inputs = {data_path.string()};
  write_fit_outputs(out_dir, cfg, data, fit, std::move(manifest));

  if (!truth_dir.empty()) {
    const MeanCovPath truth = truth_from_dir(truth_dir);
    const ErrorSummary errs = standardized_errors(posterior_mean_path(fit.summary), truth);
    write_error_summary_csv(out_dir / "error_summary.csv", errs, "model");
    if (!quiet)
      std::cerr << "fit: standardized sigma error mean " << errs.sigma.mean << "\n";
  }
  return 0;
}

int cmd_update(const fs::path& fitted_dir, const fs::path& new_data_path, Index warm_k,
               Index n_iter, Index burn_in, std::int64_t seed_override,
               const fs::path& out_dir) {
  auto [fixed, cfg] = read_fitted_state(fitted_dir / "fitted.json");
  cfg.n_iter = n_iter;
  cfg.burn_in = burn_in;
  if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);

  const Dataset new_data = ingest_csv(new_data_path);
  Dataset tail = read_tail(fitted_dir);
  if (warm_k > tail.step_count())
    throw DataError("warm-start k=" + std::to_string(warm_k) +
                    " exceeds the stored tail of " + std::to_string(tail.step_count()) +
                    " observations");
  tail = tail.slice_steps(tail.step_count() - warm_k, warm_k);

  RngStream rng(cfg.seed);
  const OnlineResult result = online_update(fixed, new_data, tail, cfg, rng);
  const ChainSummary full = summarize_chain(result.chain);
  const ChainSummary fresh = slice_summary(full, result.new_begin);
  const std::vector<double> new_times(result.chain.grid.raw.begin() + result.new_begin,
                                      result.chain.grid.raw.end());

  ensure_dir(out_dir);
  write_mu_summary_csv(out_dir / "summary_mu.csv", new_times, fresh);
  write_sigma_summary_csv(out_dir / "summary_sigma.csv", new_times, fresh);

  // Refreshed fitted state so updates can be chained.
  const FixedParams advanced = refresh_fixed_params(fixed, result);
  write_fitted_state(out_dir / "fitted.json", advanced, cfg);
  const Dataset window = warm_k > 0 ? tail.concat(new_data) : new_data;
  const Index tail_len = std::min<Index>(32, window.step_count());
  write_dataset_csv(out_dir / "tail.csv",
                    window.slice_steps(window.step_count() - tail_len, tail_len));

  RunManifest manifest;
  manifest.command = "update";
  manifest.config = cfg;
  manifest.seed = cfg.seed;
  manifest.inputs = {(fitted_dir / "fitted.json").string(), new_data_path.string()};
  manifest.outputs = {(out_dir / "summary_mu.csv").string(),
                      (out_dir / "summary_sigma.csv").string(),
                      (out_dir / "fitted.json").string()};
  write_manifest(out_dir / "manifest.json", manifest);
  return 0;
}

int cmd_predict(const fs::path& fitted_dir, Index horizon, Index warm_k, Index n_iter,
                Index burn_in, std::int64_t seed_override,
                const std::string& realized_path, const fs::path& out_dir) {
  auto [fixed, cfg] = read_fitted_state(fitted_dir / "fitted.json");
  cfg.n_iter = n_iter;
  cfg.burn_in = burn_in;
  if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);

  Dataset tail = read_tail(fitted_dir);
  if (warm_k > tail.step_count())
    throw DataError("warm-start k exceeds the stored tail");
  tail = tail.slice_steps(tail.step_count() - warm_k, warm_k);

  RngStream rng(cfg.seed);
  ensure_dir(out_dir);
  RunManifest manifest;
  manifest.command = "predict";
  manifest.config = cfg;
  manifest.seed = cfg.seed;
  manifest.inputs = {(fitted_dir / "fitted.json").string()};

  const PredictResult pred = predict(fixed, tail, horizon, cfg, rng);
  const ChainSummary full = summarize_chain(pred.online.chain);
  const Index first = pred.online.chain.grid.size() - horizon;
  const ChainSummary fresh = slice_summary(full, first);
  write_mu_summary_csv(out_dir / "pred_mu.csv", pred.horizon_times, fresh);
  write_sigma_summary_csv(out_dir / "pred_sigma.csv", pred.horizon_times, fresh);

  // Predictive observation intervals from the sampled y draws.
  {
    std::ofstream out(out_dir / "pred_y.csv");
    out << "t,j,mean,q025,q975\n";
    const Index p = fixed.p();
    for (Index h = 0; h < horizon; ++h)
      for (Index j = 0; j < p; ++j) {
        Vector draws(static_cast<Index>(pred.y_draws.size()));
        for (std::size_t d = 0; d < pred.y_draws.size(); ++d)
          draws[static_cast<Index>(d)] = pred.y_draws[d](j, h);
        out << fmt(pred.horizon_times[h]) << "," << (j + 1) << ","
            << fmt(draws.mean()) << "," << fmt(quantile(draws, 0.025)) << ","
            << fmt(quantile(draws, 0.975)) << "\n";
      }
  }
  manifest.outputs = {(out_dir / "pred_mu.csv").string(),
                      (out_dir / "pred_sigma.csv").string(),
                      (out_dir / "pred_y.csv").string()};

  if (!realized_path.empty()) {
    const Dataset realized = ingest_csv(realized_path);
    manifest.inputs.push_back(realized_path);
    RngStream err_rng(cfg.seed + 1);
    const OneStepErrors errs =
        one_step_prediction_errors(fixed, tail, realized, warm_k, cfg, err_rng);
    std::ofstream out(out_dir / "prediction_errors.csv");
    out << "t,j,err_zero,err_marginal,err_conditional\n";
    for (Index s = 0; s < realized.step_count(); ++s)
      for (Index j = 0; j < realized.series_count(); ++j) {
        if (!realized.mask(j, s)) continue;
        out << fmt(realized.times[s]) << "," << (j + 1) << "," << fmt(errs.err_a(j, s))
            << "," << fmt(errs.err_b(j, s)) << "," << fmt(errs.err_c(j, s)) << "\n";
      }
    manifest.outputs.push_back((out_dir / "prediction_errors.csv").string());
  }
  write_manifest(out_dir / "manifest.json", manifest);
  return 0;
}

int cmd_diagnose(const fs::path& fitted_dir, Index segments, const fs::path& out_dir) {
  ensure_dir(out_dir);
  std::ofstream out(out_dir / "psrf.csv");
  out << "quantity,chain,psrf\n";

  std::vector<double> all_psrf;
  for (Index c = 0;; ++c) {
    const fs::path chain_path = fitted_dir / ("chain_" + std::to_string(c) + ".bin");
    if (!fs::exists(chain_path)) {
      if (c == 0) throw DataError("no chain files found in '" + fitted_dir.string() + "'");
      break;
    }
    const ChainTrace trace = read_chain_trace(chain_path);
    const Index p = trace.p;
    const Index T = static_cast<Index>(trace.times.size());
    std::cerr << "chain " << c << ": " << trace.mu_draws.rows() << " retained draws ("
              << trace.n_iter << " iterations, burn-in " << trace.burn_in << ", thin "
              << trace.thin << ", seed " << trace.seed << ")\n";
    for (Index col = 0; col < trace.mu_draws.cols(); ++col) {
      const double r = psrf_split(trace.mu_draws.col(col), segments);
      all_psrf.push_back(r);
      const Index j = col % p, i = col / p;
      out << "mu[" << (j + 1) << "," << (i + 1) << "]," << c << "," << fmt(r) << "\n";
    }
    Index col = 0;
    for (Index i = 0; i < T; ++i)
      for (Index cc = 0; cc < p; ++cc)
        for (Index r = cc; r < p; ++r) {
          const double rh = psrf_split(trace.sigma_draws.col(col), segments);
          all_psrf.push_back(rh);
          out << "sigma[" << (r + 1) << "," << (cc + 1) << "," << (i + 1) << "]," << c
              << "," << fmt(rh) << "\n";
          ++col;
        }
  }
  Vector v = Eigen::Map<Vector>(all_psrf.data(), static_cast<Index>(all_psrf.size()));
  std::cerr << "psrf over " << v.size() << " quantities: median " << quantile(v, 0.5)
            << ", 95th " << quantile(v, 0.95) << ", max " << v.maxCoeff() << "\n";
  return 0;
}

int cmd_baseline(const fs::path& data_path, const std::string& truth_dir, double lambda,
                 Index window, const fs::path& out_dir) {
  const Dataset data = ingest_csv(data_path);
  ensure_dir(out_dir);
  const Matrix mu = moving_average_mean(data, window);
  write_mu_csv(out_dir / "ma_mu.csv", data.times, mu);

  double lambda_used = lambda;
  RunManifest manifest;
  manifest.command = "baseline";
  manifest.inputs = {data_path.string()};

  if (!truth_dir.empty()) {
    GroundTruth truth;
    truth.gamma = truth_from_dir(truth_dir);
    std::vector<double> grid;
    for (double l = 0.50; l <= 0.995; l += 0.01) grid.push_back(l);
    const LambdaSelection sel = select_lambda(data, truth, grid, window);
    lambda_used = sel.lambda_star;
    std::ofstream out(out_dir / "lambda_selection.csv");
    out << "lambda,mse\n";
    for (const auto& [l, mse] : sel.table) out << fmt(l) << "," << fmt(mse) << "\n";
    manifest.outputs.push_back((out_dir / "lambda_selection.csv").string());

    MeanCovPath est;
    est.mu = mu;
    est.sigma = ewma_cov(data, mu, lambda_used, ewma_default_init(data));
    const ErrorSummary errs = standardized_errors(est, truth.gamma);
    write_error_summary_csv(out_dir / "error_summary.csv", errs, "ewma");
    manifest.outputs.push_back((out_dir / "error_summary.csv").string());
    std::cerr << "baseline: lambda* = " << lambda_used << ", standardized sigma error mean "
              << errs.sigma.mean << "\n";
  }

  const std::vector<Matrix> sigma =
      ewma_cov(data, mu, lambda_used, ewma_default_init(data));
  write_sigma_csv(out_dir / "ewma_sigma.csv", data.times, sigma);
  manifest.outputs.push_back((out_dir / "ewma_sigma.csv").string());
  manifest.outputs.push_back((out_dir / "ma_mu.csv").string());
  write_manifest(out_dir / "manifest.json", manifest);
  return 0;
}

}  // namespace

std::vector<Chain> run_chains(const FitConfig& cfg, const Dataset& data, Index n_chains,
                              const GibbsOptions& options) {
  if (n_chains < 1) throw ConfigError("chain count must be >= 1");
  std::vector<Chain> chains(n_chains);
  std::vector<std::string> errors(n_chains);
  std::atomic<Index> next{0};
  const Index workers = std::min<Index>(n_chains, env_thread_cap());

  auto work = [&]() {
    for (;;) {
      const Index i = next.fetch_add(1);
      if (i >= n_chains) return;
      try {
        FitConfig chain_cfg = cfg;
        chain_cfg.seed = cfg.seed + static_cast<std::uint64_t>(i);
        chains[i] = run_gibbs(chain_cfg, data, options);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (Index w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (const std::string& e : errors)
    if (!e.empty()) throw NumericalError(e);
  return chains;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Time-varying mean/covariance inference for multivariate series "
               "via a nested-GP factor model"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset with truth");
  std::string sim_scenario = "A";
  std::uint64_t sim_seed = 1;
  Index sim_T = 100;
  std::string sim_out;
  sim->add_option("--scenario", sim_scenario, "A or B")
      ->check(CLI::IsMember({"A", "B"}));
  sim->add_option("--seed", sim_seed, "RNG seed");
  sim->add_option("--T", sim_T, "number of observations");
  sim->add_option("--out", sim_out, "output directory")->required();

  // fit
  auto* fit = app.add_subcommand("fit", "Run the Gibbs sampler on a dataset");
  std::string fit_data, fit_config, fit_truth, fit_out;
  Index fit_chains = 1;
  std::int64_t fit_seed = -1;
  bool fit_quiet = false;
  fit->add_option("--data", fit_data, "input CSV")->required();
  fit->add_option("--config", fit_config, "key=value config file");
  fit->add_option("--chains", fit_chains, "number of chains");
  fit->add_option("--seed", fit_seed, "seed override");
  fit->add_option("--truth", fit_truth, "directory with truth_mu.csv/truth_sigma.csv");
  fit->add_option("--out", fit_out, "output directory")->required();
  fit->add_flag("--quiet", fit_quiet, "suppress progress output");

  // update
  auto* upd = app.add_subcommand("update", "Online update with new observations");
  std::string upd_fitted, upd_data, upd_out;
  Index upd_k = 3, upd_iter = 5000, upd_burn = 500;
  std::int64_t upd_seed = -1;
  upd->add_option("--fitted", upd_fitted, "directory written by fit")->required();
  upd->add_option("--new-data", upd_data, "CSV with the new observations")->required();
  upd->add_option("--warmstart", upd_k, "warm-start tail length k");
  upd->add_option("--iters", upd_iter, "online iterations");
  upd->add_option("--burn", upd_burn, "online burn-in");
  upd->add_option("--seed", upd_seed, "seed override");
  upd->add_option("--out", upd_out, "output directory")->required();

  // predict
  auto* prd = app.add_subcommand("predict", "h-step-ahead prediction");
  std::string prd_fitted, prd_realized, prd_out;
  Index prd_h = 1, prd_k = 3, prd_iter = 5000, prd_burn = 500;
  std::int64_t prd_seed = -1;
  prd->add_option("--fitted", prd_fitted, "directory written by fit")->required();
  prd->add_option("--horizon", prd_h, "steps ahead");
  prd->add_option("--warmstart", prd_k, "warm-start tail length k");
  prd->add_option("--iters", prd_iter, "online iterations");
  prd->add_option("--burn", prd_burn, "online burn-in");
  prd->add_option("--seed", prd_seed, "seed override");
  prd->add_option("--realized", prd_realized,
                  "CSV of realized future observations for the error tables");
  prd->add_option("--out", prd_out, "output directory")->required();

  // diagnose
  auto* dia = app.add_subcommand("diagnose", "Chain convergence diagnostics");
  std::string dia_fitted, dia_out;
  Index dia_segments = 6;
  dia->add_option("--fitted", dia_fitted, "directory written by fit")->required();
  dia->add_option("--segments", dia_segments, "segments per chain");
  dia->add_option("--out", dia_out, "output directory (default: the fitted directory)");

  // baseline
  auto* bas = app.add_subcommand("baseline", "Moving-average mean and EWMA covariance");
  std::string bas_data, bas_truth, bas_out;
  double bas_lambda = 0.94;
  Index bas_window = 12;
  bas->add_option("--data", bas_data, "input CSV")->required();
  bas->add_option("--truth", bas_truth, "directory with truth tables (enables lambda search)");
  bas->add_option("--lambda", bas_lambda, "EWMA smoothing parameter (without truth)");
  bas->add_option("--window", bas_window, "moving-average window");
  bas->add_option("--out", bas_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_scenario, sim_seed, sim_T, sim_out);
    if (fit->parsed())
      return cmd_fit(fit_data, fit_config, fit_chains, fit_seed, fit_out, fit_truth,
                     fit_quiet);
    if (upd->parsed())
      return cmd_update(upd_fitted, upd_data, upd_k, upd_iter, upd_burn, upd_seed,
                        upd_out);
    if (prd->parsed())
      return cmd_predict(prd_fitted, prd_h, prd_k, prd_iter, prd_burn, prd_seed,
                         prd_realized, prd_out);
    if (dia->parsed())
      return cmd_diagnose(dia_fitted, dia_segments,
                          dia_out.empty() ? dia_fitted : dia_out);
    if (bas->parsed())
      return cmd_baseline(bas_data, bas_truth, bas_lambda, bas_window, bas_out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}

}  // namespace ngpf
