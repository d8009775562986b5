#include "ngpf/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace ngpf;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "ngpf_io_tests";
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("time grid rescales an integer grid onto (0,1]") {
  std::vector<double> times(100);
  for (int i = 0; i < 100; ++i) times[i] = i + 1;
  const TimeGrid g = TimeGrid::from_times(times);
  CHECK(g.rescaled[0] == doctest::Approx(0.01));
  CHECK(g.rescaled[99] == doctest::Approx(1.0));
  for (Index i = 0; i < 99; ++i) CHECK(g.deltas[i] == doctest::Approx(0.01));
}

TEST_CASE("time grid handles irregular spacing") {
  const TimeGrid g = TimeGrid::from_times({0.0, 1.0, 5.0, 6.0});
  CHECK(g.rescaled[3] == doctest::Approx(1.0));
  CHECK(g.rescaled[0] > 0.0);
  for (Index i = 0; i < 3; ++i) CHECK(g.deltas[i] > 0.0);
}

TEST_CASE("ingest parses values, missing cells and errors") {
  const fs::path dir = temp_dir();
  const fs::path f = dir / "basic.csv";
  write_text(f, "time,a,b\n1,0.5,\n2,1.5,2.5\n3,,3.5\n");
  const Dataset d = ingest_csv(f);
  CHECK(d.series_count() == 2);
  CHECK(d.step_count() == 3);
  CHECK(d.mask(1, 0) == false);
  CHECK(d.mask(0, 2) == false);
  CHECK(d.values(0, 1) == doctest::Approx(1.5));

  write_text(f, "time,a\n1,1\n1,2\n");
  CHECK_THROWS_WITH_AS(ingest_csv(f), doctest::Contains("row 3"), DataError);

  write_text(f, "time,a\n2,1\n1,2\n");
  CHECK_THROWS_AS(ingest_csv(f), DataError);

  write_text(f, "time,a\n1,1,9\n");
  CHECK_THROWS_AS(ingest_csv(f), DataError);

  write_text(f, "justtime\n1\n");
  CHECK_THROWS_AS(ingest_csv(f), DataError);
}

TEST_CASE("ISO dates map to day offsets") {
  const fs::path f = temp_dir() / "dates.csv";
  write_text(f, "time,a\n2004-07-12,1\n2004-07-19,2\n2004-07-26,3\n");
  const Dataset d = ingest_csv(f);
  CHECK(d.times[1] - d.times[0] == doctest::Approx(7.0));
  CHECK(d.times[2] - d.times[1] == doctest::Approx(7.0));
}

TEST_CASE("dataset csv round-trips losslessly") {
  const fs::path f = temp_dir() / "roundtrip.csv";
  Dataset d;
  d.times = {1.0, 2.5, 4.0};
  d.values.resize(2, 3);
  d.values << 0.1234567890123456, -1e-17, 3.0, 4.0, 5.0, 1.0 / 3.0;
  d.mask = BoolArray::Constant(2, 3, true);
  d.mask(1, 1) = false;
  write_dataset_csv(f, d);
  const Dataset back = ingest_csv(f);
  CHECK(back.step_count() == 3);
  for (Index j = 0; j < 2; ++j)
    for (Index i = 0; i < 3; ++i) {
      CHECK(back.mask(j, i) == d.mask(j, i));
      if (d.mask(j, i)) CHECK(back.values(j, i) == d.values(j, i));
    }
}

TEST_CASE("sigma csv round-trips") {
  const fs::path f = temp_dir() / "sigma.csv";
  std::vector<double> times = {1.0, 2.0};
  std::vector<Matrix> sigma(2);
  sigma[0].resize(2, 2);
  sigma[0] << 1.0, 0.25, 0.25, 2.0;
  sigma[1].resize(2, 2);
  sigma[1] << 1.5, -0.5, -0.5, 0.75;
  write_sigma_csv(f, times, sigma);
  std::vector<double> back_times;
  const std::vector<Matrix> back = read_sigma_csv(f, &back_times);
  REQUIRE(back.size() == 2);
  CHECK(back_times[1] == 2.0);
  CHECK((back[0] - sigma[0]).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back[1] - sigma[1]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("config files round-trip and reject unknown keys") {
  const fs::path f = temp_dir() / "config.txt";
  FitConfig cfg;
  cfg.p = 5;
  cfg.b_xi = 12345.678;
  cfg.n_iter = 777;
  cfg.seed = 99;
  write_config(f, cfg);
  const FitConfig back = read_config(f);
  CHECK(back.p == 5);
  CHECK(back.b_xi == cfg.b_xi);
  CHECK(back.n_iter == 777);
  CHECK(back.seed == 99);

  write_text(f, "nonsense=1\n");
  CHECK_THROWS_AS(read_config(f), ConfigError);
}

TEST_CASE("validate_config reports the offending fields") {
  FitConfig cfg;
  cfg.b_xi = 0.0;
  cfg.burn_in = 10;
  cfg.n_iter = 5;
  const auto errors = validate_config(cfg);
  bool saw_bxi = false, saw_burn = false;
  for (const auto& e : errors) {
    if (e.find("b_xi") != std::string::npos) saw_bxi = true;
    if (e.find("burn_in") != std::string::npos) saw_burn = true;
  }
  CHECK(saw_bxi);
  CHECK(saw_burn);

  // The locally-adaptive defaults themselves are valid.
  FitConfig good;
  good.p = 5;
  CHECK(validate_config(good).empty());
}
