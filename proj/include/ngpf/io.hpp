#pragma once

#include "ngpf/diagnostics.hpp"
#include "ngpf/online.hpp"

#include <filesystem>
#include <string>

namespace ngpf {

/// CSV ingestion: header row, first column time (reals or ISO dates mapped to
/// day offsets), remaining columns one series each; empty or NA cells are
/// missing. Throws DataError naming the offending row.
Dataset ingest_csv(const std::filesystem::path& path);

/// Writes a Dataset in the same layout ingest_csv reads (17 significant
/// digits; missing cells empty).
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);

/// Wide mean-path table: time column plus one column per series.
void write_mu_csv(const std::filesystem::path& path, const std::vector<double>& times,
                  const Matrix& mu);
Matrix read_mu_csv(const std::filesystem::path& path, std::vector<double>* times = nullptr);

/// Long covariance-path table with columns t,j,k,value (upper triangle only).
void write_sigma_csv(const std::filesystem::path& path, const std::vector<double>& times,
                     const std::vector<Matrix>& sigma);
std::vector<Matrix> read_sigma_csv(const std::filesystem::path& path,
                                   std::vector<double>* times = nullptr);

/// Posterior summaries, long form: (t, j[, k], mean, hpd_lo, hpd_hi).
void write_mu_summary_csv(const std::filesystem::path& path,
                          const std::vector<double>& times, const ChainSummary& s);
void write_sigma_summary_csv(const std::filesystem::path& path,
                             const std::vector<double>& times, const ChainSummary& s);
/// Readers for the two summary layouts; they fill only the fields the file
/// carries (means and bands).
ChainSummary read_mu_summary_csv(const std::filesystem::path& path,
                                 std::vector<double>* times = nullptr);
ChainSummary read_sigma_summary_csv(const std::filesystem::path& path,
                                    std::vector<double>* times = nullptr);

/// Flat key=value config files restricted to the FitConfig field names;
/// unknown keys are errors.
FitConfig read_config(const std::filesystem::path& path);
void write_config(const std::filesystem::path& path, const FitConfig& cfg);
FitConfig config_from_pairs(const std::vector<std::pair<std::string, std::string>>& kv);

/// Run provenance written next to every output set.
struct RunManifest {
  std::string command;
  FitConfig config;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string started_at;
  std::string finished_at;
  std::string version;
};
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

/// Fitted state needed by update/predict: fixed parameters, the time
/// rescaling, and the fit's config (JSON, lossless doubles).
void write_fitted_state(const std::filesystem::path& path, const FixedParams& fixed,
                        const FitConfig& cfg);
std::pair<FixedParams, FitConfig> read_fitted_state(const std::filesystem::path& path);

/// Per-chain draw traces of the composed process, binary layout:
/// magic, p, T, n_draws, sampler meta, times, then per draw all mu entries
/// (column-major) followed by the upper triangles of each Sigma(t).
void write_chain_trace(const std::filesystem::path& path, const Chain& chain);
struct ChainTrace {
  Index p = 0;
  Index n_iter = 0;
  Index burn_in = 0;
  Index thin = 0;
  std::uint64_t seed = 0;
  std::vector<double> times;
  Matrix mu_draws;     // n_draws x (p*T)
  Matrix sigma_draws;  // n_draws x (p*(p+1)/2 * T)
};
ChainTrace read_chain_trace(const std::filesystem::path& path);

std::string version_string();

}  // namespace ngpf
