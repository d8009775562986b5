#include "ngpf/io.hpp"

#include <json.hpp>

#include <cctype>
#include <charconv>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <limits>
#include <fstream>
#include <sstream>

namespace ngpf {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

bool is_missing_cell(const std::string& cell) {
  const std::string t = trim(cell);
  return t.empty() || t == "NA" || t == "na" || t == "NaN" || t == "nan";
}

double parse_number(const std::string& cell, const char* what, std::size_t row) {
  const std::string t = trim(cell);
  try {
    std::size_t pos = 0;
    const double v = std::stod(t, &pos);
    if (pos != t.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw DataError(std::string("could not parse ") + what + " '" + t + "' at row " +
                    std::to_string(row));
  }
}

// Days from civil date (proleptic Gregorian), Howard Hinnant's algorithm.
long days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

bool looks_like_iso_date(const std::string& cell) {
  const std::string t = trim(cell);
  return t.size() == 10 && t[4] == '-' && t[7] == '-';
}

double parse_time_cell(const std::string& cell, bool as_date, std::size_t row) {
  if (as_date) {
    const std::string t = trim(cell);
    int y = 0;
    unsigned m = 0, d = 0;
    if (std::sscanf(t.c_str(), "%d-%u-%u", &y, &m, &d) != 3 || m < 1 || m > 12 ||
        d < 1 || d > 31)
      throw DataError("could not parse ISO date '" + t + "' at row " +
                      std::to_string(row));
    return static_cast<double>(days_from_civil(y, m, d));
  }
  return parse_number(cell, "time", row);
}

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc;
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return in;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  const Index rows = static_cast<Index>(j.size());
  if (rows == 0) return Matrix(0, 0);
  const Index cols = static_cast<Index>(j[0].size());
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  return m;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vector vector_from_json(const json& j) {
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace

Dataset ingest_csv(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line))
    throw DataError("'" + path.string() + "' is empty (header row required)");
  const std::size_t n_cols = split_csv_line(line).size();
  if (n_cols < 2)
    throw DataError("'" + path.string() + "' needs a time column and at least one series");

  std::vector<double> times;
  std::vector<std::vector<double>> cells(n_cols - 1);
  std::vector<std::vector<bool>> seen(n_cols - 1);
  bool as_date = false;
  bool first_data_row = true;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != n_cols)
      throw DataError("row " + std::to_string(row) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(n_cols));
    if (first_data_row) {
      as_date = looks_like_iso_date(fields[0]);
      first_data_row = false;
    }
    const double t = parse_time_cell(fields[0], as_date, row);
    if (!times.empty()) {
      if (t == times.back())
        throw DataError("duplicate timestamp at row " + std::to_string(row));
      if (t < times.back())
        throw DataError("timestamps not increasing at row " + std::to_string(row));
    }
    times.push_back(t);
    for (std::size_t c = 1; c < n_cols; ++c) {
      if (is_missing_cell(fields[c])) {
        cells[c - 1].push_back(0.0);
        seen[c - 1].push_back(false);
      } else {
        cells[c - 1].push_back(parse_number(fields[c], "value", row));
        seen[c - 1].push_back(true);
      }
    }
  }
  if (times.empty()) throw DataError("'" + path.string() + "' has no data rows");

  const Index p = static_cast<Index>(n_cols - 1);
  const Index T = static_cast<Index>(times.size());
  Dataset d;
  d.times = std::move(times);
  d.values.resize(p, T);
  d.mask.resize(p, T);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < T; ++i) {
      d.values(j, i) = cells[j][i];
      d.mask(j, i) = seen[j][i];
    }
  d.validate();
  return d;
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out = open_out(path);
  out << "time";
  for (Index j = 0; j < data.series_count(); ++j) out << ",series" << (j + 1);
  out << "\n";
  for (Index i = 0; i < data.step_count(); ++i) {
    out << fmt(data.times[i]);
    for (Index j = 0; j < data.series_count(); ++j) {
      out << ",";
      if (data.mask(j, i)) out << fmt(data.values(j, i));
    }
    out << "\n";
  }
}

void write_mu_csv(const std::filesystem::path& path, const std::vector<double>& times,
                  const Matrix& mu) {
  std::ofstream out = open_out(path);
  out << "time";
  for (Index j = 0; j < mu.rows(); ++j) out << ",series" << (j + 1);
  out << "\n";
  for (Index i = 0; i < mu.cols(); ++i) {
    out << fmt(times[i]);
    for (Index j = 0; j < mu.rows(); ++j) out << "," << fmt(mu(j, i));
    out << "\n";
  }
}

Matrix read_mu_csv(const std::filesystem::path& path, std::vector<double>* times) {
  const Dataset d = ingest_csv(path);
  if (times) *times = d.times;
  return d.values;
}

void write_sigma_csv(const std::filesystem::path& path, const std::vector<double>& times,
                     const std::vector<Matrix>& sigma) {
  std::ofstream out = open_out(path);
  out << "t,j,k,value\n";
  for (std::size_t i = 0; i < sigma.size(); ++i)
    for (Index c = 0; c < sigma[i].cols(); ++c)
      for (Index r = 0; r <= c; ++r)
        out << fmt(times[i]) << "," << (r + 1) << "," << (c + 1) << ","
            << fmt(sigma[i](r, c)) << "\n";
}

std::vector<Matrix> read_sigma_csv(const std::filesystem::path& path,
                                   std::vector<double>* times_out) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("'" + path.string() + "' is empty");

  std::vector<double> times;
  std::vector<Matrix> sigma;
  Index p = 0;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4)
      throw DataError("sigma table row " + std::to_string(row) + " needs t,j,k,value");
    const double t = parse_number(f[0], "time", row);
    const Index j = static_cast<Index>(parse_number(f[1], "row index", row));
    const Index k = static_cast<Index>(parse_number(f[2], "column index", row));
    const double v = parse_number(f[3], "value", row);
    if (times.empty() || t != times.back()) {
      times.push_back(t);
      sigma.emplace_back();
    }
    p = std::max(p, std::max(j, k));
    Matrix& s = sigma.back();
    if (s.rows() < p) {
      Matrix grown = Matrix::Zero(p, p);
      grown.topLeftCorner(s.rows(), s.cols()) = s;
      s = std::move(grown);
    }
    s(j - 1, k - 1) = v;
    s(k - 1, j - 1) = v;
  }
  for (Matrix& s : sigma)
    if (s.rows() != p)
      throw DataError("sigma table '" + path.string() + "' has inconsistent dimensions");
  if (times_out) *times_out = times;
  return sigma;
}

void write_mu_summary_csv(const std::filesystem::path& path,
                          const std::vector<double>& times, const ChainSummary& s) {
  std::ofstream out = open_out(path);
  out << "t,j,mean,hpd_lo,hpd_hi\n";
  for (Index i = 0; i < s.mu_mean.cols(); ++i)
    for (Index j = 0; j < s.mu_mean.rows(); ++j)
      out << fmt(times[i]) << "," << (j + 1) << "," << fmt(s.mu_mean(j, i)) << ","
          << fmt(s.mu_lo(j, i)) << "," << fmt(s.mu_hi(j, i)) << "\n";
}

void write_sigma_summary_csv(const std::filesystem::path& path,
                             const std::vector<double>& times, const ChainSummary& s) {
  std::ofstream out = open_out(path);
  out << "t,j,k,mean,hpd_lo,hpd_hi\n";
  for (std::size_t i = 0; i < s.sigma_mean.size(); ++i)
    for (Index c = 0; c < s.sigma_mean[i].cols(); ++c)
      for (Index r = c; r < s.sigma_mean[i].rows(); ++r)
        out << fmt(times[i]) << "," << (r + 1) << "," << (c + 1) << ","
            << fmt(s.sigma_mean[i](r, c)) << "," << fmt(s.sigma_lo[i](r, c)) << ","
            << fmt(s.sigma_hi[i](r, c)) << "\n";
}

namespace {

struct LongRows {
  std::vector<double> times;            // unique, in file order
  std::vector<std::vector<double>> rows;  // parsed numeric fields per line
};

LongRows read_long_csv(const std::filesystem::path& path, std::size_t n_fields) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("'" + path.string() + "' is empty");
  LongRows out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != n_fields)
      throw DataError("'" + path.string() + "' row " + std::to_string(row) +
                      " has the wrong field count");
    std::vector<double> parsed(n_fields);
    for (std::size_t c = 0; c < n_fields; ++c)
      parsed[c] = parse_number(f[c], "field", row);
    if (out.times.empty() || parsed[0] != out.times.back())
      out.times.push_back(parsed[0]);
    out.rows.push_back(std::move(parsed));
  }
  return out;
}

}  // namespace

ChainSummary read_mu_summary_csv(const std::filesystem::path& path,
                                 std::vector<double>* times) {
  const LongRows data = read_long_csv(path, 5);
  Index p = 0;
  for (const auto& r : data.rows) p = std::max<Index>(p, static_cast<Index>(r[1]));
  const Index T = static_cast<Index>(data.times.size());
  ChainSummary s;
  s.mu_mean = Matrix::Zero(p, T);
  s.mu_lo = Matrix::Zero(p, T);
  s.mu_hi = Matrix::Zero(p, T);
  Index ti = -1;
  double last_t = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : data.rows) {
    if (r[0] != last_t) {
      ++ti;
      last_t = r[0];
    }
    const Index j = static_cast<Index>(r[1]) - 1;
    s.mu_mean(j, ti) = r[2];
    s.mu_lo(j, ti) = r[3];
    s.mu_hi(j, ti) = r[4];
  }
  if (times) *times = data.times;
  return s;
}

ChainSummary read_sigma_summary_csv(const std::filesystem::path& path,
                                    std::vector<double>* times) {
  const LongRows data = read_long_csv(path, 6);
  Index p = 0;
  for (const auto& r : data.rows)
    p = std::max<Index>(p, static_cast<Index>(std::max(r[1], r[2])));
  const Index T = static_cast<Index>(data.times.size());
  ChainSummary s;
  s.sigma_mean.assign(T, Matrix::Zero(p, p));
  s.sigma_lo.assign(T, Matrix::Zero(p, p));
  s.sigma_hi.assign(T, Matrix::Zero(p, p));
  Index ti = -1;
  double last_t = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : data.rows) {
    if (r[0] != last_t) {
      ++ti;
      last_t = r[0];
    }
    const Index a = static_cast<Index>(r[1]) - 1;
    const Index b = static_cast<Index>(r[2]) - 1;
    s.sigma_mean[ti](a, b) = s.sigma_mean[ti](b, a) = r[3];
    s.sigma_lo[ti](a, b) = s.sigma_lo[ti](b, a) = r[4];
    s.sigma_hi[ti](a, b) = s.sigma_hi[ti](b, a) = r[5];
  }
  if (times) *times = data.times;
  return s;
}

namespace {

void assign_config_field(FitConfig& cfg, const std::string& key, const std::string& value) {
  auto as_double = [&](double& slot) { slot = parse_number(value, key.c_str(), 0); };
  auto as_index = [&](Index& slot) {
    slot = static_cast<Index>(parse_number(value, key.c_str(), 0));
  };
  if (key == "p") as_index(cfg.p);
  else if (key == "L_star") as_index(cfg.L_star);
  else if (key == "K_star") as_index(cfg.K_star);
  else if (key == "a_xi") as_double(cfg.a_xi);
  else if (key == "b_xi") as_double(cfg.b_xi);
  else if (key == "a_A") as_double(cfg.a_A);
  else if (key == "b_A") as_double(cfg.b_A);
  else if (key == "a_psi") as_double(cfg.a_psi);
  else if (key == "b_psi") as_double(cfg.b_psi);
  else if (key == "a_B") as_double(cfg.a_B);
  else if (key == "b_B") as_double(cfg.b_B);
  else if (key == "a1") as_double(cfg.a1);
  else if (key == "a2") as_double(cfg.a2);
  else if (key == "a_sigma") as_double(cfg.a_sigma);
  else if (key == "b_sigma") as_double(cfg.b_sigma);
  else if (key == "sigma2_mu") as_double(cfg.sigma2_mu);
  else if (key == "sigma2_alpha") as_double(cfg.sigma2_alpha);
  else if (key == "sigma2_mu_k") as_double(cfg.sigma2_mu_k);
  else if (key == "sigma2_alpha_k") as_double(cfg.sigma2_alpha_k);
  else if (key == "n_iter") as_index(cfg.n_iter);
  else if (key == "burn_in") as_index(cfg.burn_in);
  else if (key == "thin") as_index(cfg.thin);
  else if (key == "seed") cfg.seed = std::strtoull(value.c_str(), nullptr, 10);
  else throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

FitConfig config_from_pairs(const std::vector<std::pair<std::string, std::string>>& kv) {
  FitConfig cfg;
  for (const auto& [key, value] : kv) assign_config_field(cfg, key, value);
  return cfg;
}

FitConfig read_config(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(row) + " is not key=value");
    kv.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return config_from_pairs(kv);
}

namespace {

void write_config_stream(std::ostream& out, const FitConfig& cfg) {
  out << "p=" << cfg.p << "\n";
  out << "L_star=" << cfg.L_star << "\n";
  out << "K_star=" << cfg.K_star << "\n";
  out << "a_xi=" << fmt(cfg.a_xi) << "\n";
  out << "b_xi=" << fmt(cfg.b_xi) << "\n";
  out << "a_A=" << fmt(cfg.a_A) << "\n";
  out << "b_A=" << fmt(cfg.b_A) << "\n";
  out << "a_psi=" << fmt(cfg.a_psi) << "\n";
  out << "b_psi=" << fmt(cfg.b_psi) << "\n";
  out << "a_B=" << fmt(cfg.a_B) << "\n";
  out << "b_B=" << fmt(cfg.b_B) << "\n";
  out << "a1=" << fmt(cfg.a1) << "\n";
  out << "a2=" << fmt(cfg.a2) << "\n";
  out << "a_sigma=" << fmt(cfg.a_sigma) << "\n";
  out << "b_sigma=" << fmt(cfg.b_sigma) << "\n";
  out << "sigma2_mu=" << fmt(cfg.sigma2_mu) << "\n";
  out << "sigma2_alpha=" << fmt(cfg.sigma2_alpha) << "\n";
  out << "sigma2_mu_k=" << fmt(cfg.sigma2_mu_k) << "\n";
  out << "sigma2_alpha_k=" << fmt(cfg.sigma2_alpha_k) << "\n";
  out << "n_iter=" << cfg.n_iter << "\n";
  out << "burn_in=" << cfg.burn_in << "\n";
  out << "thin=" << cfg.thin << "\n";
  out << "seed=" << cfg.seed << "\n";
}

}  // namespace

void write_config(const std::filesystem::path& path, const FitConfig& cfg) {
  std::ofstream out = open_out(path);
  write_config_stream(out, cfg);
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  json j;
  j["command"] = manifest.command;
  j["seed"] = manifest.seed;
  j["inputs"] = manifest.inputs;
  j["outputs"] = manifest.outputs;
  j["started_at"] = manifest.started_at.empty() ? now_iso8601() : manifest.started_at;
  j["finished_at"] = manifest.finished_at.empty() ? now_iso8601() : manifest.finished_at;
  j["version"] = manifest.version.empty() ? version_string() : manifest.version;
  json cfg;
  cfg["p"] = manifest.config.p;
  cfg["L_star"] = manifest.config.L_star;
  cfg["K_star"] = manifest.config.K_star;
  cfg["a_xi"] = manifest.config.a_xi;
  cfg["b_xi"] = manifest.config.b_xi;
  cfg["a_A"] = manifest.config.a_A;
  cfg["b_A"] = manifest.config.b_A;
  cfg["a_psi"] = manifest.config.a_psi;
  cfg["b_psi"] = manifest.config.b_psi;
  cfg["a_B"] = manifest.config.a_B;
  cfg["b_B"] = manifest.config.b_B;
  cfg["a1"] = manifest.config.a1;
  cfg["a2"] = manifest.config.a2;
  cfg["a_sigma"] = manifest.config.a_sigma;
  cfg["b_sigma"] = manifest.config.b_sigma;
  cfg["sigma2_mu"] = manifest.config.sigma2_mu;
  cfg["sigma2_alpha"] = manifest.config.sigma2_alpha;
  cfg["sigma2_mu_k"] = manifest.config.sigma2_mu_k;
  cfg["sigma2_alpha_k"] = manifest.config.sigma2_alpha_k;
  cfg["n_iter"] = manifest.config.n_iter;
  cfg["burn_in"] = manifest.config.burn_in;
  cfg["thin"] = manifest.config.thin;
  cfg["seed"] = manifest.config.seed;
  j["config"] = std::move(cfg);
  std::ofstream out = open_out(path);
  out << j.dump(2) << "\n";
}

void write_fitted_state(const std::filesystem::path& path, const FixedParams& fixed,
                        const FitConfig& cfg) {
  json j;
  j["format"] = "ngpf-fitted-1";
  j["theta_hat"] = matrix_to_json(fixed.theta_hat);
  j["sigma0_hat"] = vector_to_json(fixed.sigma0_hat);
  j["sigma2_xi"] = matrix_to_json(fixed.ngp_vars_hat.sigma2_xi);
  j["sigma2_A"] = matrix_to_json(fixed.ngp_vars_hat.sigma2_A);
  j["sigma2_psi"] = vector_to_json(fixed.ngp_vars_hat.sigma2_psi);
  j["sigma2_B"] = vector_to_json(fixed.ngp_vars_hat.sigma2_B);
  j["xi_state_mean"] = vector_to_json(fixed.xi_state_mean);
  j["xi_state_cov"] = matrix_to_json(fixed.xi_state_cov);
  j["psi_state_mean"] = vector_to_json(fixed.psi_state_mean);
  j["psi_state_cov"] = matrix_to_json(fixed.psi_state_cov);
  j["affine_offset"] = fixed.affine.offset;
  j["affine_scale"] = fixed.affine.scale;
  j["last_fit_time"] = fixed.last_fit_time;
  std::ostringstream cfg_text;
  write_config_stream(cfg_text, cfg);
  j["config"] = cfg_text.str();
  std::ofstream out = open_out(path);
  out << j.dump(2) << "\n";
}

std::pair<FixedParams, FitConfig> read_fitted_state(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  json j;
  in >> j;
  if (j.value("format", "") != std::string("ngpf-fitted-1"))
    throw DataError("'" + path.string() + "' is not a fitted-state file");
  FixedParams fp;
  fp.theta_hat = matrix_from_json(j["theta_hat"]);
  fp.sigma0_hat = vector_from_json(j["sigma0_hat"]);
  fp.ngp_vars_hat.sigma2_xi = matrix_from_json(j["sigma2_xi"]);
  fp.ngp_vars_hat.sigma2_A = matrix_from_json(j["sigma2_A"]);
  fp.ngp_vars_hat.sigma2_psi = vector_from_json(j["sigma2_psi"]);
  fp.ngp_vars_hat.sigma2_B = vector_from_json(j["sigma2_B"]);
  fp.xi_state_mean = vector_from_json(j["xi_state_mean"]);
  fp.xi_state_cov = matrix_from_json(j["xi_state_cov"]);
  fp.psi_state_mean = vector_from_json(j["psi_state_mean"]);
  fp.psi_state_cov = matrix_from_json(j["psi_state_cov"]);
  fp.affine.offset = j["affine_offset"].get<double>();
  fp.affine.scale = j["affine_scale"].get<double>();
  fp.last_fit_time = j["last_fit_time"].get<double>();

  FitConfig cfg;
  std::istringstream cfg_in(j["config"].get<std::string>());
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  while (std::getline(cfg_in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    kv.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  cfg = config_from_pairs(kv);
  return {std::move(fp), cfg};
}

void write_chain_trace(const std::filesystem::path& path, const Chain& chain) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  const char magic[8] = {'N', 'G', 'P', 'F', 'T', 'R', 'C', '1'};
  out.write(magic, 8);
  const bool have_composed = chain.composed.size() == chain.draws.size();
  const Index n = static_cast<Index>(chain.draws.size());
  const MeanCovPath first =
      have_composed ? chain.composed[0] : compose_mean_cov(chain.draws[0], chain.grid);
  const std::int64_t p = first.series_count();
  const std::int64_t t = first.step_count();
  const std::int64_t nd = n;
  const std::int64_t meta[4] = {chain.n_iter, chain.burn_in, chain.thin,
                                static_cast<std::int64_t>(chain.seed)};
  out.write(reinterpret_cast<const char*>(&p), 8);
  out.write(reinterpret_cast<const char*>(&t), 8);
  out.write(reinterpret_cast<const char*>(&nd), 8);
  out.write(reinterpret_cast<const char*>(meta), 32);
  out.write(reinterpret_cast<const char*>(chain.grid.raw.data()),
            static_cast<std::streamsize>(8 * chain.grid.raw.size()));
  std::vector<double> buffer;
  for (Index d = 0; d < n; ++d) {
    const MeanCovPath path_d =
        have_composed ? chain.composed[d] : compose_mean_cov(chain.draws[d], chain.grid);
    buffer.clear();
    for (Index i = 0; i < t; ++i)
      for (Index j = 0; j < p; ++j) buffer.push_back(path_d.mu(j, i));
    for (Index i = 0; i < t; ++i)
      for (Index c = 0; c < p; ++c)
        for (Index r = c; r < p; ++r) buffer.push_back(path_d.sigma[i](r, c));
    out.write(reinterpret_cast<const char*>(buffer.data()),
              static_cast<std::streamsize>(8 * buffer.size()));
  }
}

ChainTrace read_chain_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, "NGPFTRC1", 8) != 0)
    throw DataError("'" + path.string() + "' is not a chain trace file");
  std::int64_t p = 0, t = 0, nd = 0;
  std::int64_t meta[4] = {0, 0, 0, 0};
  in.read(reinterpret_cast<char*>(&p), 8);
  in.read(reinterpret_cast<char*>(&t), 8);
  in.read(reinterpret_cast<char*>(&nd), 8);
  in.read(reinterpret_cast<char*>(meta), 32);
  ChainTrace trace;
  trace.p = p;
  trace.n_iter = meta[0];
  trace.burn_in = meta[1];
  trace.thin = meta[2];
  trace.seed = static_cast<std::uint64_t>(meta[3]);
  trace.times.resize(t);
  in.read(reinterpret_cast<char*>(trace.times.data()), 8 * t);
  const Index mu_cols = p * t;
  const Index sig_cols = p * (p + 1) / 2 * t;
  trace.mu_draws.resize(nd, mu_cols);
  trace.sigma_draws.resize(nd, sig_cols);
  std::vector<double> buffer(mu_cols + sig_cols);
  for (Index d = 0; d < nd; ++d) {
    in.read(reinterpret_cast<char*>(buffer.data()),
            static_cast<std::streamsize>(8 * buffer.size()));
    if (!in) throw DataError("'" + path.string() + "' is truncated");
    for (Index c = 0; c < mu_cols; ++c) trace.mu_draws(d, c) = buffer[c];
    for (Index c = 0; c < sig_cols; ++c) trace.sigma_draws(d, c) = buffer[mu_cols + c];
  }
  return trace;
}

std::string version_string() { return "ngpf 0.1.0"; }

}  // namespace ngpf
