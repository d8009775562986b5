#include "ngpf/model.hpp"

#include <cmath>

namespace ngpf {

const std::vector<std::string>& FitConfig::field_names() {
  static const std::vector<std::string> names = {
      "p",        "L_star",      "K_star",        "a_xi",         "b_xi",
      "a_A",      "b_A",         "a_psi",         "b_psi",        "a_B",
      "b_B",      "a1",          "a2",            "a_sigma",      "b_sigma",
      "sigma2_mu", "sigma2_alpha", "sigma2_mu_k", "sigma2_alpha_k", "n_iter",
      "burn_in",  "thin",        "seed"};
  return names;
}

std::vector<std::string> validate_config(const FitConfig& cfg) {
  std::vector<std::string> errors;
  auto positive = [&](double v, const char* name) {
    if (!(v > 0) || !std::isfinite(v))
      errors.push_back(std::string(name) + " must be strictly positive");
  };
  if (cfg.p < 0) errors.push_back("p must be nonnegative (0 = infer from data)");
  if (cfg.L_star < 1) errors.push_back("L_star must be >= 1");
  if (cfg.K_star < 1) errors.push_back("K_star must be >= 1");
  positive(cfg.a_xi, "a_xi");
  positive(cfg.b_xi, "b_xi");
  positive(cfg.a_A, "a_A");
  positive(cfg.b_A, "b_A");
  positive(cfg.a_psi, "a_psi");
  positive(cfg.b_psi, "b_psi");
  positive(cfg.a_B, "a_B");
  positive(cfg.b_B, "b_B");
  positive(cfg.a1, "a1");
  positive(cfg.a2, "a2");
  positive(cfg.a_sigma, "a_sigma");
  positive(cfg.b_sigma, "b_sigma");
  positive(cfg.sigma2_mu, "sigma2_mu");
  positive(cfg.sigma2_alpha, "sigma2_alpha");
  positive(cfg.sigma2_mu_k, "sigma2_mu_k");
  positive(cfg.sigma2_alpha_k, "sigma2_alpha_k");
  if (cfg.n_iter < 1) errors.push_back("n_iter must be >= 1");
  if (cfg.thin < 1) errors.push_back("thin must be >= 1");
  if (cfg.burn_in < 0) errors.push_back("burn_in must be nonnegative");
  if (cfg.burn_in >= cfg.n_iter) errors.push_back("burn_in must be < n_iter");
  return errors;
}

void throw_if_invalid(const FitConfig& cfg) {
  const auto errors = validate_config(cfg);
  if (errors.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& e : errors) msg += "\n  - " + e;
  throw ConfigError(msg);
}

void Loadings::recompute_tau() {
  tau.resize(vartheta.size());
  double prod = 1.0;
  for (Index l = 0; l < vartheta.size(); ++l) {
    prod *= vartheta[l];
    tau[l] = prod;
  }
}

MeanCovPath compose_mean_cov(const PosteriorDraw& draw, const TimeGrid& grid) {
  const Index T = grid.size();
  const Matrix& theta = draw.loadings.theta;
  const Index p = theta.rows();
  if (draw.dict.T() != T)
    throw DataError("compose_mean_cov: dictionary paths do not match grid length");
  if (draw.sigma2_idio.size() != p)
    throw DataError("compose_mean_cov: sigma2_idio length != p");

  MeanCovPath path;
  path.mu.resize(p, T);
  path.sigma.resize(T);
  for (Index i = 0; i < T; ++i) {
    const Matrix lambda = theta * draw.dict.xi_at(i);  // p x K
    path.mu.col(i) = lambda * draw.dict.psi.col(i);
    Matrix s = lambda * lambda.transpose();
    s.diagonal() += draw.sigma2_idio;
    s = ((s + s.transpose()) * 0.5).eval();
    path.sigma[i] = std::move(s);
  }
  return path;
}

}  // namespace ngpf
