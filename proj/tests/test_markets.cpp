#include <cmath>
#include <filesystem>
#include <fstream>

#include <Eigen/Dense>

#include "doctest.h"
#include "mgeo/markets.hpp"
#include "mgeo/simulate.hpp"
#include "test_helpers.hpp"

using namespace mgeo;

namespace {

// Sortable fake calendar: 12 months of 28 days.
std::string serial_date(int d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", 2005 + d / 336, 1 + (d % 336) / 28,
                1 + d % 28);
  return buf;
}

/// Deterministic synthetic price panel of geometric random walks with a
/// common factor.
std::string write_panel(const std::string& name, int n_assets, int n_days, std::uint64_t seed,
                        bool punch_hole = false) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << "date";
  for (int a = 0; a < n_assets; ++a) out << ",A" << a;
  out << "\n";
  Rng rng(seed);
  std::vector<double> prices(static_cast<std::size_t>(n_assets), 100.0);
  for (int d = 0; d < n_days; ++d) {
    out << serial_date(d);
    const double common = 0.006 * rng.normal();
    for (int a = 0; a < n_assets; ++a) {
      prices[static_cast<std::size_t>(a)] *= std::exp(common + 0.004 * rng.normal());
      if (punch_hole && a == 1 && d == 3) out << ",";
      else out << "," << prices[static_cast<std::size_t>(a)];
    }
    out << "\n";
  }
  return path.string();
}

}  // namespace

TEST_CASE("load_prices: log-returns and validation") {
  const auto path = std::filesystem::temp_directory_path() / "mgeo_prices_small.csv";
  {
    std::ofstream out(path);
    out << "date,AAA,BBB\n";
    out << "2020-01-01,100,50\n";
    out << "2020-01-02,110,50\n";
    out << "2020-01-03,121,50\n";
  }
  auto panel = load_prices(path.string());
  REQUIRE(panel.assets.size() == 2);
  REQUIRE(panel.returns.rows() == 2);
  CHECK(panel.returns(0, 0) == doctest::Approx(std::log(1.1)).epsilon(1e-12));
  CHECK(panel.returns(1, 0) == doctest::Approx(std::log(1.1)).epsilon(1e-12));
  CHECK(panel.returns(0, 1) == 0.0);  // constant prices, zero returns

  {
    std::ofstream out(path);
    out << "date,AAA\n2020-01-02,100\n2020-01-01,101\n";
  }
  CHECK_THROWS_AS(load_prices(path.string()), Error);  // non-monotone dates

  {
    std::ofstream out(path);
    out << "date,AAA\n2020-01-01,100\n2020-01-02,-3\n";
  }
  CHECK_THROWS_AS(load_prices(path.string()), Error);  // non-positive price
  std::filesystem::remove(path);

  // Missing cell: dropped and recorded, or forward-filled per policy.
  const auto holed = write_panel("mgeo_prices_holed.csv", 3, 30, 5, true);
  auto dropped = load_prices(holed);
  CHECK(dropped.assets.size() == 2);
  REQUIRE(dropped.dropped.size() == 1);
  CHECK(dropped.dropped[0] == "A1");
  auto filled = load_prices(holed, MissingPolicy::ForwardFill);
  CHECK(filled.assets.size() == 3);
  CHECK(filled.dropped.empty());
  std::filesystem::remove(holed);
}

TEST_CASE("expanding PCA: loadings match the closed-form 2x2 eigenvectors") {
  // Panel with a dominant common factor: top eigenvector approaches
  // (1,1)/sqrt(2) in standardized coordinates; verify against an explicit
  // eigen-decomposition of the same expanding covariance.
  const auto file = write_panel("mgeo_prices_2a.csv", 2, 320, 7);
  auto panel = load_prices(file);
  std::filesystem::remove(file);
  auto eig = expanding_pca_eigenportfolios(panel, 60);
  REQUIRE(!eig.loadings.empty());
  const Eigen::MatrixXd& u = eig.loadings.back();
  // Unit norm and the sign convention (largest component positive).
  for (int k = 0; k < 2; ++k) CHECK(u.col(k).norm() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(u.col(0).cwiseAbs().maxCoeff() > 0);
  // Hand eigenproblem on the last expanding window of standardized returns:
  // rebuild the standardization causally and compare subspaces.
  CHECK(std::abs(u(0, 0)) == doctest::Approx(std::abs(u(1, 0))).epsilon(0.15));
  CHECK(u(0, 0) * u(1, 0) > 0);  // common factor loads with one sign
  // Second component orthogonal to the first.
  CHECK(std::abs(u.col(0).dot(u.col(1))) < 1e-10);
}

TEST_CASE("expanding PCA on the equicorrelated null: top eigenvalue share") {
  // CBM panel with n = 10, rho = 0.6: lambda_1 / sum = (1 + 9 rho) / n = 0.64.
  CbmConfig cc;
  cc.n = 10;
  cc.rho = 0.6;
  cc.T = 3000;
  cc.seed = 11;
  auto cbm = simulate_cbm(cc);
  // Turn increments into a pseudo price panel.
  const auto path = std::filesystem::temp_directory_path() / "mgeo_cbm_panel.csv";
  {
    std::ofstream out(path);
    out << "date";
    for (int a = 0; a < cc.n; ++a) out << ",A" << a;
    out << "\n";
    std::vector<double> prices(static_cast<std::size_t>(cc.n), 1000.0);
    out << serial_date(0);
    for (int a = 0; a < cc.n; ++a) out << "," << prices[static_cast<std::size_t>(a)];
    out << "\n";
    for (std::size_t t = 1; t < cc.T; ++t) {
      out << serial_date(static_cast<int>(t));
      for (int a = 0; a < cc.n; ++a) {
        const double inc = cbm.full(static_cast<Eigen::Index>(t), a) -
                           cbm.full(static_cast<Eigen::Index>(t - 1), a);
        prices[static_cast<std::size_t>(a)] *= std::exp(0.01 * inc);
        out << "," << prices[static_cast<std::size_t>(a)];
      }
      out << "\n";
    }
  }
  auto panel = load_prices(path.string());
  std::filesystem::remove(path);
  auto eig = expanding_pca_eigenportfolios(panel, 252);
  const Eigen::Vector3d lam = eig.eigenvalues.back();
  // Standardized equicorrelated returns: trace = n, lambda_1 = 1 + (n-1) rho.
  const double share = lam(0) / static_cast<double>(cc.n);
  CHECK(share == doctest::Approx(0.64).epsilon(0.08));
}

TEST_CASE("expanding PCA: causality under truncation") {
  const auto file = write_panel("mgeo_prices_trunc.csv", 5, 400, 13);
  auto panel = load_prices(file);
  std::filesystem::remove(file);
  auto full = expanding_pca_eigenportfolios(panel, 60);

  ReturnsPanel cut = panel;
  const Eigen::Index keep = 300;
  cut.returns = panel.returns.topRows(keep);
  cut.dates.assign(panel.dates.begin(), panel.dates.begin() + keep);
  auto trunc = expanding_pca_eigenportfolios(cut, 60);

  REQUIRE(trunc.path.size() <= full.path.size());
  for (std::size_t i = 0; i < trunc.path.size(); ++i) {
    CHECK((full.path[i] - trunc.path[i]).norm() == 0.0);
    CHECK((full.sleeve_returns[i] - trunc.sleeve_returns[i]).norm() == 0.0);
  }
  for (std::size_t i = 0; i < trunc.loadings.size(); ++i)
    CHECK((full.loadings[i] - trunc.loadings[i]).norm() == 0.0);
}

TEST_CASE("signals and pnl: identities") {
  // Deterministic path with known increments.
  auto bm = simulate_ambient(ManifoldSpec::euclidean(), Vec3::Zero(), 200, 0.01, 17);
  const auto& path = bm.points;
  const std::size_t vol_window = 50;

  std::vector<std::optional<Vec3>> perfect(path.size()), anti(path.size());
  for (std::size_t i = 1; i < path.size(); ++i) {
    perfect[i] = path[i];                              // forecast = realized
    anti[i] = path[i - 1] - (path[i] - path[i - 1]);   // sign-flipped increment
  }
  auto p = signals_and_pnl(path, perfect, vol_window);
  auto a = signals_and_pnl(path, anti, vol_window);
  for (std::size_t i = vol_window + 1; i < path.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      CHECK(p.pnl[i](k) >= 0.0);
      CHECK(a.pnl[i](k) == doctest::Approx(-p.pnl[i](k)).epsilon(1e-12));
    }
  }

  // Hand case: dX_hat = +0.2, dX = -0.1, sigma = 0.5 -> pnl = -0.2.
  std::vector<Vec3> toy;
  std::vector<std::optional<Vec3>> pred;
  Rng rng(23);
  // Build a path whose trailing increment std on x is exactly 0.5 by
  // alternating +-0.5 around zero.
  double x = 0;
  for (int i = 0; i < 64; ++i) {
    toy.emplace_back(x, 0.1 * i, -0.1 * i);
    x += (i % 2 == 0 ? 0.5 : -0.5);
  }
  // Final step: realized dX = -0.1.
  toy.emplace_back(toy.back().x() - 0.1, 0.1 * 64, -0.1 * 64);
  pred.assign(toy.size(), std::nullopt);
  pred.back() = toy[toy.size() - 2] + Vec3(0.2, 0.1, -0.1);
  auto hand = signals_and_pnl(toy, pred, 32);
  const double sd = 0.5 * std::sqrt(32.0 / 31.0);  // sample std of alternating +-0.5
  CHECK(hand.pnl.back()(0) == doctest::Approx(-0.1 / sd).epsilon(1e-9));

  // Zero forecast increment means no position.
  pred.back() = toy[toy.size() - 2];
  auto flat = signals_and_pnl(toy, pred, 32);
  CHECK(flat.pnl.back()(0) == 0.0);
  CHECK(flat.signals.back()(0) == 0.0);

  // Zero-vol coordinate suppresses the signal instead of dividing.
  std::vector<Vec3> frozen;
  for (int i = 0; i < 70; ++i) frozen.emplace_back(0.0, std::sin(0.3 * i), std::cos(0.2 * i));
  std::vector<std::optional<Vec3>> fp(frozen.size(), std::nullopt);
  fp.back() = frozen[frozen.size() - 2] + Vec3(1.0, 0.1, 0.1);
  auto sup = signals_and_pnl(frozen, fp, 32);
  CHECK(sup.suppressed.back());
  CHECK(sup.signals.back()(0) == 0.0);
}

TEST_CASE("sharpe: value, scale invariance, degenerate cases") {
  std::vector<double> pnl;
  for (int i = 0; i < 5000; ++i) pnl.push_back(i % 2 == 0 ? 0.01 : 0.03);
  auto s = sharpe(pnl);
  REQUIRE(s.has_value());
  CHECK(*s == doctest::Approx(std::sqrt(252.0) * 2.0).epsilon(1e-3));

  std::vector<double> scaled;
  for (double v : pnl) scaled.push_back(5.0 * v);
  CHECK(*sharpe(scaled) == doctest::Approx(*s).epsilon(1e-12));

  // Zero-mean symmetric series: Sharpe near zero.
  std::vector<double> sym;
  for (int i = 0; i < 1000; ++i) sym.push_back(i % 2 == 0 ? 0.02 : -0.02);
  CHECK(std::abs(*sharpe(sym)) < 0.5);

  CHECK_FALSE(sharpe({0.01}).has_value());
  CHECK_FALSE(sharpe(std::vector<double>(10, 0.02)).has_value());  // zero std
}

TEST_CASE("eigenvalue weighting: normalization and convex combination") {
  auto bm = simulate_ambient(ManifoldSpec::euclidean(), Vec3::Zero(), 300, 0.01, 29);
  const auto& path = bm.points;
  std::vector<Eigen::Vector3d> sleeves(path.size()), signals(path.size());
  Rng rng(31);
  for (std::size_t i = 0; i < path.size(); ++i) {
    sleeves[i] = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
    signals[i] = Eigen::Vector3d::Ones();  // all-long
  }
  auto ew = eigenvalue_weighted_return(path, sleeves, signals);
  for (std::size_t t = 3; t + 1 < path.size(); ++t) {
    CHECK(ew.weights[t].sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ew.weights[t].minCoeff() >= 0.0);
    // r_{t+1} = sum_i C_i p_i: a convex combination of the sleeve returns.
    const double lo = sleeves[t + 1].minCoeff(), hi = sleeves[t + 1].maxCoeff();
    CHECK(ew.returns[t + 1] >= lo - 1e-12);
    CHECK(ew.returns[t + 1] <= hi + 1e-12);
  }

  // lambda = (2, 1, 1) -> weights (0.5, 0.25, 0.25): construct increments
  // with that covariance by scaling coordinates.
  std::vector<Vec3> aniso;
  Rng rng2(33);
  Vec3 acc = Vec3::Zero();
  for (int i = 0; i < 4000; ++i) {
    acc += Vec3(std::sqrt(2.0) * rng2.normal(), rng2.normal(), rng2.normal());
    aniso.push_back(acc);
  }
  std::vector<Eigen::Vector3d> dummy(aniso.size(), Eigen::Vector3d::Ones());
  auto ew2 = eigenvalue_weighted_return(aniso, dummy, dummy);
  const auto& w2 = ew2.weights[aniso.size() - 2];  // last causally-set index
  CHECK(w2(0) == doctest::Approx(0.5).epsilon(0.05));
  CHECK(w2(1) == doctest::Approx(0.25).epsilon(0.05));

  // Isotropic increments: weights approach (1/3, 1/3, 1/3).
  std::vector<Vec3> iso;
  acc = Vec3::Zero();
  for (int i = 0; i < 4000; ++i) {
    acc += Vec3(rng2.normal(), rng2.normal(), rng2.normal());
    iso.push_back(acc);
  }
  auto ew3 = eigenvalue_weighted_return(iso, dummy, dummy);
  const auto& w3 = ew3.weights[iso.size() - 2];
  for (int k = 0; k < 3; ++k) CHECK(w3(k) == doctest::Approx(1.0 / 3).epsilon(0.12));
}

TEST_CASE("curvature gating: bucket map applied per timestamp") {
  std::map<GeometryKind, std::vector<double>> runs;
  runs[GeometryKind::Torus] = {1.0, 1.0, 1.0};
  runs[GeometryKind::Euclidean3] = {2.0, 2.0, 2.0};
  runs[GeometryKind::Sphere] = {4.0, 4.0, 4.0};

  // Constant negative curvature: the default map routes to the torus run.
  auto neg = curvature_gated_pnl(runs, {-0.05, -0.05, -0.05}, 0.01, 0.01);
  for (double v : neg.pnl) CHECK(v == doctest::Approx(1.0));

  // Near-zero curvature: Euclidean run.
  auto zero = curvature_gated_pnl(runs, {0.0, 0.0, 0.0}, 0.01, 0.01);
  for (double v : zero.pnl) CHECK(v == doctest::Approx(2.0));

  // Positive curvature: all-geometry average.
  auto pos = curvature_gated_pnl(runs, {0.05, 0.05, 0.05}, 0.01, 0.01);
  for (double v : pos.pnl) CHECK(v == doctest::Approx((1.0 + 2.0 + 4.0) / 3));

  // Missing K falls back to the all-run average, flagged.
  auto miss = curvature_gated_pnl(runs, {std::nan(""), 0.0, 0.0}, 0.01, 0.01);
  CHECK(miss.fallback[0]);
  CHECK(miss.pnl[0] == doctest::Approx((1.0 + 2.0 + 4.0) / 3));

  // Single run: gating is the identity.
  std::map<GeometryKind, std::vector<double>> solo;
  solo[GeometryKind::Torus] = {0.7, -0.2, 0.9};
  auto id = curvature_gated_pnl(solo, {0.05, -0.05, 0.0}, 0.01, 0.01);
  CHECK(id.pnl[0] == doctest::Approx(0.7));
  CHECK(id.pnl[1] == doctest::Approx(-0.2));
  CHECK(id.pnl[2] == doctest::Approx(0.9));
}

TEST_CASE("benchmarks: inverse-vol weights and equal-vol reduction") {
  // Two assets with vol ratio 2: RP weights (2/3, 1/3).
  const auto file = std::filesystem::temp_directory_path() / "mgeo_prices_rp.csv";
  {
    std::ofstream out(file);
    out << "date,LOW,HIGH\n";
    Rng rng(37);
    double p = 100, q = 100;
    for (int d = 0; d < 400; ++d) {
      out << serial_date(d) << "," << p << "," << q << "\n";
      const double z = rng.normal();
      p *= std::exp(0.01 * z);
      q *= std::exp(0.02 * z);  // exactly double the volatility
    }
  }
  auto panel = load_prices(file.string());
  std::filesystem::remove(file);
  auto bench = benchmarks(panel, 252);
  const auto& w = bench.rp_weights.back();
  CHECK(w(0) == doctest::Approx(2.0 / 3).epsilon(0.02));
  CHECK(w(1) == doctest::Approx(1.0 / 3).epsilon(0.02));
  CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));

  // Identical vols: RP equals LO.
  const auto file2 = write_panel("mgeo_prices_eq.csv", 4, 400, 39);
  auto p2 = load_prices(file2);
  std::filesystem::remove(file2);
  // Force identical columns.
  for (Eigen::Index c = 1; c < p2.returns.cols(); ++c) p2.returns.col(c) = p2.returns.col(0);
  auto b2 = benchmarks(p2, 100);
  for (std::size_t t = b2.first_index; t < p2.dates.size(); ++t)
    CHECK(b2.risk_parity[t] == doctest::Approx(b2.long_only[t]).epsilon(1e-9));
}

TEST_CASE("no-look-ahead: truncating the panel reproduces every prefix output") {
  const auto file = write_panel("mgeo_prices_nla.csv", 5, 420, 41);
  auto panel = load_prices(file);
  std::filesystem::remove(file);

  auto full_eig = expanding_pca_eigenportfolios(panel, 60);
  auto full_bench = benchmarks(panel, 100);

  ReturnsPanel cut = panel;
  const Eigen::Index keep = 330;
  cut.returns = panel.returns.topRows(keep);
  cut.dates.assign(panel.dates.begin(), panel.dates.begin() + keep);
  auto cut_eig = expanding_pca_eigenportfolios(cut, 60);
  auto cut_bench = benchmarks(cut, 100);

  for (std::size_t i = 0; i < cut_eig.path.size(); ++i)
    CHECK((full_eig.path[i] - cut_eig.path[i]).norm() == 0.0);
  for (std::size_t t = cut_bench.first_index; t < static_cast<std::size_t>(keep); ++t) {
    CHECK(full_bench.risk_parity[t] == cut_bench.risk_parity[t]);
    CHECK(full_bench.long_only[t] == cut_bench.long_only[t]);
  }
}
