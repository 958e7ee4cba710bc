#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mgeo/csv.hpp"
#include "mgeo/rng.hpp"
#include "mgeo/simulate.hpp"
#include "mgeo_cli/commands.hpp"
#include "mgeo_cli/manifest.hpp"

using namespace mgeo;
using namespace mgeo::cli;
namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const std::string& tag) {
  const auto dir = fs::temp_directory_path() / ("mgeo_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string write_price_panel(const std::string& dir, int n_assets, int n_days,
                              std::uint64_t seed) {
  const std::string path = dir + "/prices.csv";
  std::ofstream out(path);
  out << "date";
  for (int a = 0; a < n_assets; ++a) out << ",A" << a;
  out << "\n";
  Rng rng(seed);
  std::vector<double> prices(static_cast<std::size_t>(n_assets), 100.0);
  for (int d = 0; d < n_days; ++d) {
    char date[16];
    std::snprintf(date, sizeof(date), "%04d-%02d-%02d", 2005 + d / 336, 1 + (d % 336) / 28,
                  1 + d % 28);
    out << date;
    const double c = 0.006 * rng.normal();
    for (int a = 0; a < n_assets; ++a) {
      prices[static_cast<std::size_t>(a)] *= std::exp(c + 0.004 * rng.normal());
      out << "," << prices[static_cast<std::size_t>(a)];
    }
    out << "\n";
  }
  return path;
}

}  // namespace

TEST_CASE("simulate command: files, schema, determinism") {
  const auto dir1 = fresh_dir("sim1");
  SimulateOptions opt;
  opt.scenario = 4;
  opt.seed = 7;
  opt.total_length = 600;
  opt.block_length = 600;
  opt.out_dir = dir1;
  REQUIRE(cmd_simulate(opt) == 0);
  const csv::Table t = csv::read_file(dir1 + "/path.csv");
  CHECK(t.header == std::vector<std::string>({"index", "x", "y", "z", "label"}));
  CHECK(t.rows.size() == 600);
  CHECK(t.rows[10][4] == "Torus");
  CHECK(fs::exists(dir1 + "/manifest.json"));
  CHECK(fs::exists(dir1 + "/path.svg"));

  // Re-running with the same seed reproduces bit-identical outputs.
  const auto dir2 = fresh_dir("sim2");
  opt.out_dir = dir2;
  REQUIRE(cmd_simulate(opt) == 0);
  CHECK(slurp(dir1 + "/path.csv") == slurp(dir2 + "/path.csv"));
  CHECK(slurp(dir1 + "/manifest.json") == slurp(dir2 + "/manifest.json"));
  CHECK(slurp(dir1 + "/path.svg") == slurp(dir2 + "/path.svg"));
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("simulate command: cbm outputs both the full panel and projection") {
  const auto dir = fresh_dir("cbm");
  SimulateOptions opt;
  opt.cbm = true;
  opt.cbm_n = 6;
  opt.cbm_rho = 0.5;
  opt.cbm_T = 400;
  opt.seed = 3;
  opt.out_dir = dir;
  REQUIRE(cmd_simulate(opt) == 0);
  const csv::Table full = csv::read_file(dir + "/cbm_full.csv");
  CHECK(full.header.size() == 7);  // index + w1..w6
  CHECK(full.rows.size() == 400);
  const csv::Table proj = csv::read_file(dir + "/path.csv");
  CHECK(proj.rows.size() == 400);
  CHECK(proj.rows[5][4] == "Euclidean3");
  fs::remove_all(dir);
}

TEST_CASE("infer command: curvature csv, regime summary, flags") {
  const auto dir = fresh_dir("infer");
  // Small sphere path; topology skipped to keep the test fast.
  auto path = simulate_ambient(ManifoldSpec::sphere(1.0), Vec3(0, 0, 1), 900, 1e-3, 9);
  const std::string input = dir + "/path.csv";
  write_path_csv(input, path);

  InferOptions opt;
  opt.input = input;
  opt.skip_topology = true;
  opt.out_dir = dir;
  REQUIRE(cmd_infer(opt) == 0);
  const csv::Table t = csv::read_file(dir + "/curvature.csv");
  CHECK(t.header[0] == "index");
  CHECK(t.header[1] == "K");
  CHECK(t.rows.size() == path.size());

  const auto summary = nlohmann::json::parse(slurp(dir + "/regime_summary.json"));
  CHECK(summary["shares"]["SphereLike"].get<double>() > 0.5);
  CHECK(fs::exists(dir + "/curvature.svg"));
  CHECK(fs::exists(dir + "/topology_flags.csv"));
  fs::remove_all(dir);
}

TEST_CASE("forecast command: metrics schema and both arms") {
  const auto dir = fresh_dir("fore");
  auto path = simulate_ambient(ManifoldSpec::euclidean(), Vec3::Zero(), 260, 0.01, 11);
  const std::string input = dir + "/path.csv";
  write_path_csv(input, path);

  ForecastOptions opt;
  opt.input = input;
  opt.arm = "both";
  opt.geometry = "euclidean";
  opt.vol_window = 60;
  opt.out_dir = dir;
  REQUIRE(cmd_forecast(opt) == 0);
  CHECK(fs::exists(dir + "/forecasts_geometry.csv"));
  CHECK(fs::exists(dir + "/forecasts_native.csv"));
  const auto metrics = nlohmann::json::parse(slurp(dir + "/metrics.json"));
  for (const char* arm : {"geometry", "native"}) {
    REQUIRE(metrics.contains(arm));
    for (const char* c : {"x", "y", "z"}) {
      CHECK(metrics[arm][c].contains("mae"));
      CHECK(metrics[arm][c].contains("rmse"));
      CHECK(metrics[arm][c].contains("mape_pct"));
      CHECK(metrics[arm][c].contains("sign_rate"));
      CHECK(metrics[arm][c].contains("sharpe"));
    }
  }
  // Euclidean reduction: both CSVs carry identical predictions.
  const csv::Table g = csv::read_file(dir + "/forecasts_geometry.csv");
  const csv::Table n = csv::read_file(dir + "/forecasts_native.csv");
  REQUIRE(g.rows.size() == n.rows.size());
  for (std::size_t r = 0; r < g.rows.size(); ++r)
    for (int c = 2; c <= 4; ++c)
      CHECK(std::abs(std::stod(g.rows[r][static_cast<std::size_t>(c)]) -
                     std::stod(n.rows[r][static_cast<std::size_t>(c)])) < 1e-10);
  fs::remove_all(dir);
}

TEST_CASE("backtest command: report invariants on a toy panel") {
  const auto dir = fresh_dir("back");
  const std::string prices = write_price_panel(dir, 5, 420, 13);

  BacktestOptions opt;
  opt.prices = prices;
  opt.t0 = 60;
  opt.vol_window = 40;
  opt.bench_window = 60;
  opt.window = 20;
  opt.geometries = "euclidean,sphere";
  opt.out_dir = dir;
  REQUIRE(cmd_backtest(opt) == 0);
  const auto report = nlohmann::json::parse(slurp(dir + "/report.json"));
  CHECK(report.contains("runs"));
  CHECK(report["runs"].contains("euclidean"));
  CHECK(report["runs"].contains("sphere"));
  CHECK(report.contains("benchmarks"));
  CHECK(report["explained_share_top3"].get<double>() > 0.0);
  CHECK(fs::exists(dir + "/eigen_path.csv"));
  CHECK(fs::exists(dir + "/forecasts_sphere.csv"));

  // Perfect-foresight injection: non-negative sleeve pnl everywhere implies a
  // positive total Sharpe.
  const auto dir2 = fresh_dir("back_oracle");
  BacktestOptions oracle = opt;
  oracle.prices = prices;
  oracle.geometries = "euclidean";
  oracle.oracle_foresight = true;
  oracle.out_dir = dir2;
  REQUIRE(cmd_backtest(oracle) == 0);
  const auto rep2 = nlohmann::json::parse(slurp(dir2 + "/report.json"));
  CHECK(rep2["runs"]["euclidean"]["sharpe_total"].get<double>() > 0.0);
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("backtest on an equicorrelated panel: flat-dominated regime summary") {
  // CBM increments repackaged as prices: the report's regime shares should
  // be overwhelmingly flat and the torus share negligible.
  const auto dir = fresh_dir("back_cbm");
  CbmConfig cc;
  cc.n = 8;
  cc.rho = 0.6;
  cc.T = 900;
  cc.seed = 19;
  auto cbm = simulate_cbm(cc);
  const std::string prices = dir + "/prices.csv";
  {
    std::ofstream out(prices);
    out << "date";
    for (int a = 0; a < cc.n; ++a) out << ",A" << a;
    out << "\n";
    std::vector<double> p(static_cast<std::size_t>(cc.n), 1000.0);
    for (std::size_t t = 0; t < cc.T; ++t) {
      char date[16];
      std::snprintf(date, sizeof(date), "%04d-%02d-%02d", 2005 + static_cast<int>(t) / 336,
                    1 + (static_cast<int>(t) % 336) / 28, 1 + static_cast<int>(t) % 28);
      out << date;
      for (int a = 0; a < cc.n; ++a) {
        if (t > 0)
          p[static_cast<std::size_t>(a)] *=
              std::exp(0.01 * (cbm.full(static_cast<Eigen::Index>(t), a) -
                               cbm.full(static_cast<Eigen::Index>(t - 1), a)));
        out << "," << p[static_cast<std::size_t>(a)];
      }
      out << "\n";
    }
  }
  BacktestOptions opt;
  opt.prices = prices;
  opt.t0 = 100;
  opt.vol_window = 60;
  opt.bench_window = 60;
  opt.window = 20;
  opt.geometries = "euclidean,torus";
  opt.out_dir = dir;
  REQUIRE(cmd_backtest(opt) == 0);
  const auto report = nlohmann::json::parse(slurp(dir + "/report.json"));
  CHECK(report["regime_shares"]["Flat"].get<double>() >= 0.9);
  CHECK(report["regime_shares"]["TorusLike"].get<double>() <= 0.05);
  CHECK(report["runs"].contains("euclidean"));
  CHECK(report["runs"].contains("torus"));
  fs::remove_all(dir);
}

TEST_CASE("manifests: hashes are stable and outputs are listed") {
  const auto dir = fresh_dir("manif");
  const std::string file = dir + "/x.txt";
  std::ofstream(file) << "hello";
  const auto h1 = fnv1a_file(file);
  const auto h2 = fnv1a_file(file);
  CHECK(h1 == h2);
  std::ofstream(file) << "other";
  CHECK(fnv1a_file(file) != h1);

  RunManifest m("test", {{"k", 1}});
  m.add_input(file);
  m.add_output(dir + "/out.csv");
  m.write(dir);
  const auto j = nlohmann::json::parse(slurp(dir + "/manifest.json"));
  CHECK(j["command"] == "test");
  CHECK(j["outputs"].size() == 1);
  CHECK(j["inputs"].contains("x.txt"));
  fs::remove_all(dir);
}
