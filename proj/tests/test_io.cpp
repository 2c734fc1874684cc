#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "wpn/experiments.hpp"
#include "wpn/io.hpp"
#include "wpn/rng.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>

using namespace wpn;

namespace {

std::string temp_dir(const std::string& leaf) {
  const auto p = std::filesystem::temp_directory_path() / ("wpn_io_test_" + leaf);
  std::filesystem::remove_all(p);
  return p.string();
}

}  // namespace

TEST_CASE("doubles print shortest and read back bit-exactly") {
  for (std::uint64_t i = 0; i < 2000; ++i) {
    const auto r = Philox4x32(1)({std::uint32_t(i), 0, 0, 0});
    std::uint64_t bits = (std::uint64_t(r[0]) << 32) | r[1];
    double v;
    std::memcpy(&v, &bits, sizeof v);
    if (!std::isfinite(v)) continue;
    const double back = parse_double(format_double(v));
    CHECK(std::memcmp(&back, &v, sizeof v) == 0);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-0.0) == "-0");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(std::isnan(parse_double(format_double(std::nan("")))));
  CHECK(parse_double("-inf") == -std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(parse_double("1.5x"), Error);
}

TEST_CASE("csv: quoting and round trip") {
  Table t({"name", "value", "comment"});
  t.add("plain", 1.5, "no quotes");
  t.add("a,b", -2, "say \"hi\"");
  t.add("multi\nline", 0.1, "");
  const std::string text = to_csv(t);
  CHECK(text.find("\"a,b\"") != std::string::npos);
  CHECK(text.find("\"say \"\"hi\"\"\"") != std::string::npos);
  CHECK(text.find('\r') == std::string::npos);
  const Table back = parse_csv(text);
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  CHECK(t.column("value") == 1);
  CHECK_THROWS_AS(t.column("missing"), Error);
  CHECK_THROWS_AS(to_csv(Table{}), Error);
  CHECK_THROWS_AS(parse_csv("a,b\n1\n"), Error);
}

TEST_CASE("config: sections, comments, round trip") {
  const std::string text =
      "# top\nexperiment = gap_decay\n\n[grid]\nn_cells = 128  \nx_min = -7\n[run]\neps_list = 0.2, 0.1\n";
  const Config c = Config::parse(text);
  CHECK(c.get("experiment") == "gap_decay");
  CHECK(c.get_int("grid.n_cells") == 128);
  CHECK(c.get_double("grid.x_min") == -7.0);
  CHECK(c.get_list("run.eps_list") == std::vector<double>{0.2, 0.1});
  CHECK(c.get_or("run.missing", "x") == "x");
  CHECK(Config::parse(c.serialize()) == c);
  CHECK_THROWS_AS(c.get("nope"), Error);
  CHECK_THROWS_AS(c.get_int("experiment"), Error);
  CHECK_THROWS_AS(Config::parse("[a.b]\nk = 1\n"), Error);
  CHECK_THROWS_AS(Config::parse("no equals sign\n"), Error);
}

TEST_CASE("experiment configs round-trip for every registered experiment") {
  REQUIRE(experiment_names().size() == 8);
  for (const auto& name : experiment_names())
    for (bool smoke : {false, true}) {
      ExperimentConfig e = default_config(name, smoke);
      e.flux_eps = 1.0 / 3.0;
      e.base_seed = 18446744073709551615ull;
      const Config c = e.to_config();
      const ExperimentConfig back = ExperimentConfig::from_config(Config::parse(c.serialize()));
      CHECK(back.to_config() == c);
      CHECK(back.flux_eps == e.flux_eps);
      CHECK(back.base_seed == e.base_seed);
      CHECK(back.eps_list == e.eps_list);
    }
  CHECK_THROWS_AS(default_config("no_such_experiment"), Error);
  Config bad = default_config("gap_decay").to_config();
  bad.set("grid.n_cells", 2);
  CHECK_THROWS_AS(ExperimentConfig::from_config(bad), Error);
}

TEST_CASE("files: missing input is an io error, artifacts land on disk") {
  try {
    read_text("/nonexistent/dir/file.txt");
    FAIL("expected io_error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::io_error);
  }
  const std::string dir = temp_dir("artifacts");
  ExperimentConfig cfg = default_config("heat_kernel_table", true);
  const ExperimentResult res = run_experiment(cfg);
  write_artifacts(cfg, res, dir);
  const Table t = parse_csv(read_text(dir + "/heat_kernel_norms.csv"));
  CHECK(t.rows.size() == res.tables.at("heat_kernel_norms").rows.size());
  const std::string summary = read_text(dir + "/summary.txt");
  CHECK(summary.find("status: PASS") != std::string::npos);
  const std::string meta = read_text(dir + "/metadata.txt");
  CHECK(meta.find("code_version") != std::string::npos);
  CHECK(meta.find("experiment = heat_kernel_table") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("type tables carry the declared columns") {
  const UniformGrid x(0, 1, 4), xi = state_grid(1.0, 0.5);
  const KineticField f = chi_field(GridFunctiond::sample(x, [](double y) { return y; }), xi);
  const Table k = kinetic_table(f);
  CHECK(k.header == std::vector<std::string>{"x", "xi", "f"});
  CHECK(k.rows.size() == std::size_t(x.n * xi.n));
  Trajectory tr;
  tr.times = {0.0, 0.5};
  tr.snapshots = {GridFunctiond(x, Eigen::VectorXd::Zero(4)), GridFunctiond(x, Eigen::VectorXd::Ones(4))};
  CHECK(trajectory_table(tr).rows.size() == 8);
  const Table one = trajectory_table(tr, {1});
  REQUIRE(one.rows.size() == 4);
  CHECK(one.rows[0] == std::vector<std::string>{"0.5", "0.125", "1"});
  DefectMeasureEstimate m;
  m.times = {0.0, 1.0};
  m.mass_at_t = {0.0, 0.25};
  CHECK(to_csv(defect_mass_table(m)) == "t,mass_at_t\n0,0\n1,0.25\n");
}
