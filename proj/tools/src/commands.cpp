#include "mgeo_cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "mgeo/csv.hpp"
#include "mgeo/curvature.hpp"
#include "mgeo/errors.hpp"
#include "mgeo/fitgeom.hpp"
#include "mgeo/markets.hpp"
#include "mgeo/simulate.hpp"
#include "mgeo/topology.hpp"
#include "mgeo_cli/manifest.hpp"
#include "mgeo_cli/svg_plot.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mgeo::cli {

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::IngestError:
    case ErrorCode::InvalidInput:
    case ErrorCode::MinWindow:
    case ErrorCode::OffManifold:
      return 3;
    default:
      return 4;
  }
}

namespace {

std::string join_path(const std::string& dir, const std::string& file) {
  return (fs::path(dir) / file).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IngestError, "cannot create out-dir " + dir);
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IngestError, "cannot write " + path);
  out << j.dump(2) << "\n";
}

json stats_of(const std::vector<double>& values) {
  std::vector<double> v;
  for (double x : values)
    if (std::isfinite(x)) v.push_back(x);
  json j;
  j["count"] = v.size();
  if (v.empty()) return j;
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double mean = 0;
  for (double x : v) mean += x;
  mean /= n;
  double sd = 0;
  for (double x : v) sd += (x - mean) * (x - mean);
  sd = v.size() > 1 ? std::sqrt(sd / (n - 1)) : 0.0;
  auto q = [&](double p) { return v[static_cast<std::size_t>(p * (n - 1))]; };
  j["mean"] = mean;
  j["sd"] = sd;
  j["min"] = v.front();
  j["q25"] = q(0.25);
  j["q50"] = q(0.50);
  j["q75"] = q(0.75);
  j["max"] = v.back();
  return j;
}

json metrics_to_json(const ForecastMetrics& m, const std::array<std::optional<double>, 4>& sharpes) {
  json j;
  const char* coords[] = {"x", "y", "z"};
  for (int k = 0; k < 3; ++k) {
    json c;
    c["mae"] = m.mae(k);
    c["rmse"] = m.rmse(k);
    c["mape_pct"] = m.mape_pct(k);
    c["sign_rate"] = m.sign_rate(k);
    if (sharpes[static_cast<std::size_t>(k)].has_value())
      c["sharpe"] = *sharpes[static_cast<std::size_t>(k)];
    else
      c["sharpe"] = nullptr;
    j[coords[k]] = c;
  }
  j["count"] = m.count;
  if (sharpes[3].has_value()) j["sharpe_total"] = *sharpes[3];
  else j["sharpe_total"] = nullptr;
  return j;
}

ManifoldSpec fixed_spec_for(const std::string& geometry, const std::vector<Vec3>& prefix) {
  if (geometry == "euclidean") return ManifoldSpec::euclidean();
  if (geometry == "sphere") return fit_sphere_radius(prefix).spec;
  if (geometry == "torus") return fit_torus_mom(prefix).rho_variant.spec;
  if (geometry == "hyperboloid") return fit_hyperboloid_nls(prefix).spec;
  throw Error(ErrorCode::InvalidInput, "unknown geometry '" + geometry + "'");
}

void write_forecast_csv(const std::string& path, const std::vector<ForecastRecord>& records) {
  csv::Table t;
  t.header = {"index",  "geometry", "pred_x", "pred_y", "pred_z", "real_x",
              "real_y", "real_z",   "abs_x",  "abs_y",  "abs_z",  "valid"};
  for (const auto& r : records) {
    t.rows.push_back({std::to_string(r.index), to_string(r.geometry),
                      csv::format_double(r.predicted.x()), csv::format_double(r.predicted.y()),
                      csv::format_double(r.predicted.z()), csv::format_double(r.realized.x()),
                      csv::format_double(r.realized.y()), csv::format_double(r.realized.z()),
                      csv::format_double(std::abs(r.predicted.x() - r.realized.x())),
                      csv::format_double(std::abs(r.predicted.y() - r.realized.y())),
                      csv::format_double(std::abs(r.predicted.z() - r.realized.z())),
                      r.valid ? "1" : "0"});
  }
  csv::write_file(path, t);
}

/// Signal/PnL translation of a forecast run against its path; returns the
/// per-coordinate and total Sharpe plus the pnl series used.
struct RunPnl {
  std::array<std::optional<double>, 4> sharpes;  // x, y, z, total(mean)
  PnlSeries series;
  bool computed = false;
};

RunPnl run_pnl(const std::vector<Vec3>& path, const std::vector<ForecastRecord>& records,
               std::size_t vol_window) {
  RunPnl out;
  if (path.size() < vol_window + 2) return out;  // not enough history: sharpe = null
  std::vector<std::optional<Vec3>> predicted(path.size());
  for (const auto& r : records)
    if (r.valid && r.index < path.size()) predicted[r.index] = r.predicted;
  out.series = signals_and_pnl(path, predicted, vol_window);
  std::vector<double> total;
  std::array<std::vector<double>, 3> per;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i <= out.series.first_index) continue;
    if (!predicted[i].has_value()) continue;
    for (int k = 0; k < 3; ++k) per[static_cast<std::size_t>(k)].push_back(out.series.pnl[i](k));
    total.push_back(out.series.total_mean[i]);
  }
  for (int k = 0; k < 3; ++k) out.sharpes[static_cast<std::size_t>(k)] = sharpe(per[static_cast<std::size_t>(k)]);
  out.sharpes[3] = sharpe(total);
  out.computed = !total.empty();
  return out;
}

}  // namespace

int cmd_simulate(const SimulateOptions& opt) {
  ensure_dir(opt.out_dir);
  json cfg;
  cfg["seed"] = opt.seed;
  Path3D path;
  std::string path_file;
  if (opt.cbm) {
    CbmConfig c;
    c.n = opt.cbm_n;
    c.rho = opt.cbm_rho;
    c.T = opt.cbm_T;
    c.seed = opt.seed;
    cfg["mode"] = "cbm";
    cfg["n"] = c.n;
    cfg["rho"] = c.rho;
    cfg["T"] = c.T;
    auto res = simulate_cbm(c);
    path = res.projection;
    // Full n-dimensional path.
    csv::Table full;
    full.header = {"index"};
    for (int a = 0; a < c.n; ++a) full.header.push_back("w" + std::to_string(a + 1));
    for (Eigen::Index t = 0; t < res.full.rows(); ++t) {
      std::vector<std::string> row{std::to_string(t)};
      for (int a = 0; a < c.n; ++a) row.push_back(csv::format_double(res.full(t, a)));
      full.rows.push_back(std::move(row));
    }
    const std::string full_file = join_path(opt.out_dir, "cbm_full.csv");
    csv::write_file(full_file, full);
    path_file = join_path(opt.out_dir, "path.csv");
    write_path_csv(path_file, path);
    cfg["top_eigenvalues"] = {res.top_eigenvalues(0), res.top_eigenvalues(1),
                              res.top_eigenvalues(2)};
    RunManifest manifest("simulate", cfg);
    manifest.add_output(full_file);
    manifest.add_output(path_file);
    manifest.write(opt.out_dir);
  } else {
    ScenarioConfig c;
    c.scenario_id = opt.scenario;
    c.block_length = opt.block_length;
    c.total_length = opt.total_length;
    c.h = opt.h;
    c.seed = opt.seed;
    cfg["mode"] = "scenario";
    cfg["scenario"] = c.scenario_id;
    cfg["block_length"] = c.block_length;
    cfg["total_length"] = c.total_length;
    if (opt.h) cfg["h"] = *opt.h;
    path = build_scenario(c);
    path_file = join_path(opt.out_dir, "path.csv");
    write_path_csv(path_file, path);
    RunManifest manifest("simulate", cfg);
    manifest.add_output(path_file);
    manifest.write(opt.out_dir);
  }
  plot_csv_columns(path_file, {"x", "y", "z"}, "simulated path coordinates",
                   join_path(opt.out_dir, "path.svg"));
  return 0;
}

int cmd_infer(const InferOptions& opt) {
  ensure_dir(opt.out_dir);
  Path3D path = read_path_csv(opt.input);

  CurvatureConfig cc;
  cc.window = opt.expanding ? WindowMode::Expanding : WindowMode::Rolling;
  cc.rolling_len = opt.rolling_len;
  cc.min_window = opt.min_window;
  cc.smooth_len = opt.smooth_len;
  cc.alpha = opt.alpha;
  cc.kappa_pos = opt.kappa_pos;
  cc.kappa_neg = opt.kappa_neg;
  auto K = curvature_series(path.points, cc);

  TorusFlagSeries flags;
  if (!opt.skip_topology && path.size() >= opt.topo_window) {
    TorusFlagSeriesConfig tc;
    tc.window_len = opt.topo_window;
    tc.stride = opt.topo_stride;
    flags = torus_flag_series(path.points, tc);
  } else {
    flags.flags.assign(path.size(), false);
  }

  auto regimes = classify_regimes(K.K, flags.flags, cc.kappa_pos, cc.kappa_neg);

  const std::string curv_file = join_path(opt.out_dir, "curvature.csv");
  {
    csv::Table t;
    t.header = {"index", "K", "regime", "condition", "r2", "torus_flag"};
    for (std::size_t i = 0; i < path.size(); ++i) {
      t.rows.push_back({std::to_string(i), csv::format_double(K.K[i]),
                        regimes.labels[i] ? to_string(*regimes.labels[i]) : "",
                        csv::format_double(K.condition[i]), csv::format_double(K.r2[i]),
                        flags.flags[i] ? "1" : "0"});
    }
    csv::write_file(curv_file, t);
  }

  const std::string topo_file = join_path(opt.out_dir, "topology_flags.csv");
  {
    csv::Table t;
    t.header = {"window_end", "basic_flag", "full_flag", "l1", "l2", "concentration", "epsilon"};
    for (const auto& w : flags.windows) {
      t.rows.push_back({std::to_string(w.end_index), w.result.basic_flag ? "1" : "0",
                        w.result.flag ? "1" : "0", csv::format_double(w.result.l1),
                        csv::format_double(w.result.l2), csv::format_double(w.result.concentration),
                        csv::format_double(w.result.epsilon_used)});
    }
    csv::write_file(topo_file, t);
  }

  json summary;
  summary["K"] = stats_of(K.K);
  summary["skipped_windows"] = K.skipped;
  summary["shares"] = {
      {"SphereLike", regimes.shares[static_cast<std::size_t>(RegimeLabel::SphereLike)]},
      {"HyperbolicLike", regimes.shares[static_cast<std::size_t>(RegimeLabel::HyperbolicLike)]},
      {"Flat", regimes.shares[static_cast<std::size_t>(RegimeLabel::Flat)]},
      {"TorusLike", regimes.shares[static_cast<std::size_t>(RegimeLabel::TorusLike)]}};
  summary["torus_window_share"] = flags.flagged_share;
  summary["defined_indices"] = regimes.defined;
  const std::string summary_file = join_path(opt.out_dir, "regime_summary.json");
  write_json(summary_file, summary);

  plot_csv_columns(curv_file, {"K"}, "local Gaussian curvature",
                   join_path(opt.out_dir, "curvature.svg"));

  json cfg;
  cfg["input"] = fs::path(opt.input).filename().string();
  cfg["rolling_len"] = opt.rolling_len;
  cfg["min_window"] = opt.min_window;
  cfg["smooth_len"] = opt.smooth_len;
  cfg["alpha"] = opt.alpha;
  cfg["kappa_pos"] = opt.kappa_pos;
  cfg["kappa_neg"] = opt.kappa_neg;
  cfg["expanding"] = opt.expanding;
  cfg["topo_window"] = opt.topo_window;
  cfg["topo_stride"] = opt.topo_stride;
  cfg["skip_topology"] = opt.skip_topology;
  RunManifest manifest("infer", cfg);
  manifest.add_input(opt.input);
  manifest.add_output(curv_file);
  manifest.add_output(topo_file);
  manifest.add_output(summary_file);
  manifest.add_output(join_path(opt.out_dir, "curvature.svg"));
  manifest.write(opt.out_dir);
  return 0;
}

int cmd_forecast(const ForecastOptions& opt) {
  ensure_dir(opt.out_dir);
  Path3D path = read_path_csv(opt.input);

  ForecastConfig cfg;
  cfg.predictor = predictor_from_string(opt.predictor);
  cfg.var_order = opt.var_order;
  cfg.lags = opt.lags;
  cfg.window = opt.window;
  cfg.pca_dim = opt.pca_dim;
  cfg.seed = opt.seed;

  if (opt.geometry == "inferred") {
    cfg.source = GeometrySource::InferredPerWindow;
  } else {
    cfg.source = GeometrySource::Fixed;
    const std::size_t prefix_len =
        std::min(path.size(), cfg.window + cfg.min_fit_window);
    const std::vector<Vec3> prefix(path.points.begin(),
                                   path.points.begin() + static_cast<std::ptrdiff_t>(prefix_len));
    cfg.fixed_spec = fixed_spec_for(opt.geometry, prefix);
  }

  json jcfg;
  jcfg["input"] = fs::path(opt.input).filename().string();
  jcfg["arm"] = opt.arm;
  jcfg["predictor"] = opt.predictor;
  jcfg["geometry"] = opt.geometry;
  jcfg["window"] = opt.window;
  jcfg["var_order"] = opt.var_order;
  jcfg["lags"] = opt.lags;
  jcfg["pca_dim"] = opt.pca_dim;
  jcfg["vol_window"] = opt.vol_window;
  jcfg["seed"] = opt.seed;
  RunManifest manifest("forecast", jcfg);
  manifest.add_input(opt.input);

  json metrics;
  if (opt.arm == "geometry" || opt.arm == "both") {
    auto records = pipeline_geometry_aware(path.points, cfg);
    const std::string f = join_path(opt.out_dir, "forecasts_geometry.csv");
    write_forecast_csv(f, records);
    manifest.add_output(f);
    const auto pnl = run_pnl(path.points, records, opt.vol_window);
    metrics["geometry"] = metrics_to_json(forecast_metrics(records, path.points), pnl.sharpes);
  }
  if (opt.arm == "native" || opt.arm == "both") {
    auto records = pipeline_native(path.points, cfg);
    const std::string f = join_path(opt.out_dir, "forecasts_native.csv");
    write_forecast_csv(f, records);
    manifest.add_output(f);
    const auto pnl = run_pnl(path.points, records, opt.vol_window);
    metrics["native"] = metrics_to_json(forecast_metrics(records, path.points), pnl.sharpes);
  }
  const std::string metrics_file = join_path(opt.out_dir, "metrics.json");
  write_json(metrics_file, metrics);
  manifest.add_output(metrics_file);
  manifest.write(opt.out_dir);
  return 0;
}

int cmd_backtest(const BacktestOptions& opt) {
  ensure_dir(opt.out_dir);
  ReturnsPanel panel = load_prices(opt.prices);
  EigenPath eig = expanding_pca_eigenportfolios(panel, opt.t0);
  if (eig.path.size() < 8) throw Error(ErrorCode::MinWindow, "too few out-of-sample dates");

  json jcfg;
  jcfg["prices"] = fs::path(opt.prices).filename().string();
  jcfg["t0"] = opt.t0;
  jcfg["vol_window"] = opt.vol_window;
  jcfg["bench_window"] = opt.bench_window;
  jcfg["predictor"] = opt.predictor;
  jcfg["geometries"] = opt.geometries;
  jcfg["window"] = opt.window;
  jcfg["var_order"] = opt.var_order;
  jcfg["lags"] = opt.lags;
  jcfg["oracle_foresight"] = opt.oracle_foresight;
  jcfg["kappa_pos"] = opt.kappa_pos;
  jcfg["kappa_neg"] = opt.kappa_neg;
  jcfg["seed"] = opt.seed;
  jcfg["dropped_assets"] = panel.dropped;
  RunManifest manifest("backtest", jcfg);
  manifest.add_input(opt.prices);

  // Emit the embedded path.
  const std::string path_file = join_path(opt.out_dir, "eigen_path.csv");
  {
    csv::Table t;
    t.header = {"index", "date", "x", "y", "z", "p1", "p2", "p3"};
    for (std::size_t i = 0; i < eig.path.size(); ++i) {
      t.rows.push_back({std::to_string(i), eig.dates[eig.path_dates[i]],
                        csv::format_double(eig.path[i].x()), csv::format_double(eig.path[i].y()),
                        csv::format_double(eig.path[i].z()),
                        csv::format_double(eig.sleeve_returns[i](0)),
                        csv::format_double(eig.sleeve_returns[i](1)),
                        csv::format_double(eig.sleeve_returns[i](2))});
    }
    csv::write_file(path_file, t);
  }
  manifest.add_output(path_file);

  std::vector<std::string> kinds;
  if (opt.geometries == "all") kinds = {"euclidean", "sphere", "torus", "hyperboloid"};
  else {
    std::stringstream ss(opt.geometries);
    std::string item;
    while (std::getline(ss, item, ',')) kinds.push_back(item);
  }

  // Curvature series on the embedded path (used by the gate and the regime
  // summary). Expanding windows: the classification-over-time setting.
  CurvatureConfig cc;
  cc.window = WindowMode::Expanding;
  cc.kappa_pos = opt.kappa_pos;
  cc.kappa_neg = opt.kappa_neg;
  auto K = curvature_series(eig.path, cc);
  auto regimes = classify_regimes(K.K, {}, cc.kappa_pos, cc.kappa_neg);

  json report;
  report["explained_share_top3"] = eig.explained_share_top3;
  report["n_path_points"] = eig.path.size();
  report["regime_shares"] = {
      {"SphereLike", regimes.shares[static_cast<std::size_t>(RegimeLabel::SphereLike)]},
      {"HyperbolicLike", regimes.shares[static_cast<std::size_t>(RegimeLabel::HyperbolicLike)]},
      {"Flat", regimes.shares[static_cast<std::size_t>(RegimeLabel::Flat)]},
      {"TorusLike", regimes.shares[static_cast<std::size_t>(RegimeLabel::TorusLike)]}};
  report["config"] = jcfg;

  std::map<GeometryKind, std::vector<double>> runs_total;  // aligned to path indices
  ForecastConfig fc;
  fc.predictor = predictor_from_string(opt.predictor);
  fc.var_order = opt.var_order;
  fc.lags = opt.lags;
  fc.window = opt.window;
  fc.seed = opt.seed;

  json jruns = json::object();
  for (const auto& g : kinds) {
    std::vector<ForecastRecord> records;
    if (opt.oracle_foresight) {
      // Perfect-foresight injection: predicted = realized next point.
      for (std::size_t t = fc.window + fc.min_fit_window; t + 1 < eig.path.size(); ++t) {
        ForecastRecord r;
        r.index = t + 1;
        r.predicted = eig.path[t + 1];
        r.realized = eig.path[t + 1];
        r.valid = true;
        records.push_back(r);
      }
    } else if (g == "euclidean") {
      fc.source = GeometrySource::Fixed;
      fc.fixed_spec = ManifoldSpec::euclidean();
      records = pipeline_geometry_aware(eig.path, fc);
    } else {
      fc.source = GeometrySource::Fixed;
      const std::size_t prefix_len = std::min(eig.path.size(), fc.window + fc.min_fit_window);
      const std::vector<Vec3> prefix(eig.path.begin(),
                                     eig.path.begin() + static_cast<std::ptrdiff_t>(prefix_len));
      fc.fixed_spec = fixed_spec_for(g, prefix);
      records = pipeline_geometry_aware(eig.path, fc);
    }
    const std::string run_file = join_path(opt.out_dir, "forecasts_" + g + ".csv");
    write_forecast_csv(run_file, records);
    manifest.add_output(run_file);

    const auto pnl = run_pnl(eig.path, records, opt.vol_window);
    json jr = metrics_to_json(forecast_metrics(records, eig.path), pnl.sharpes);

    // Eigenvalue-weighted sleeves for this run.
    if (pnl.computed) {
      std::vector<Eigen::Vector3d> sleeves(eig.path.size(), Eigen::Vector3d::Zero());
      for (std::size_t i = 0; i < eig.path.size(); ++i) sleeves[i] = eig.sleeve_returns[i];
      auto ew = eigenvalue_weighted_return(eig.path, sleeves, pnl.series.signals);
      std::vector<double> ew_active;
      for (std::size_t i = pnl.series.first_index + 1; i < ew.returns.size(); ++i)
        if (pnl.series.signals[i].cwiseAbs().sum() > 0) ew_active.push_back(ew.returns[i]);
      auto s = sharpe(ew_active);
      jr["eigenvalue_weighted_sharpe"] = s.has_value() ? json(*s) : json(nullptr);

      runs_total[geometry_kind_from_string(
          g == "euclidean" ? "Euclidean3"
                           : (g == "sphere" ? "Sphere" : (g == "torus" ? "Torus" : "Hyperboloid")))] =
          pnl.series.total_mean;
    }
    jruns[g] = jr;
  }
  report["runs"] = jruns;

  // Curvature-gated aggregation across the geometry runs.
  if (!runs_total.empty()) {
    auto gated = curvature_gated_pnl(runs_total, K.K, opt.kappa_neg, opt.kappa_pos);
    std::vector<double> active;
    for (std::size_t i = opt.vol_window + 1; i < gated.pnl.size(); ++i)
      active.push_back(gated.pnl[i]);
    auto s = sharpe(active);
    json jg;
    jg["sharpe"] = s.has_value() ? json(*s) : json(nullptr);
    std::array<std::size_t, 3> counts{};
    for (auto b : gated.buckets) counts[static_cast<std::size_t>(b)]++;
    jg["buckets"] = {{"negative", counts[0]}, {"near_zero", counts[1]}, {"positive", counts[2]}};
    jg["map"] = {{"negative", "torus"}, {"near_zero", "euclidean"}, {"positive", "all"}};
    report["gated"] = jg;
  }

  // Benchmarks on the asset panel.
  auto bench = benchmarks(panel, opt.bench_window);
  {
    std::vector<double> lo(bench.long_only.begin() + static_cast<std::ptrdiff_t>(bench.first_index),
                           bench.long_only.end());
    std::vector<double> rp(bench.risk_parity.begin() + static_cast<std::ptrdiff_t>(bench.first_index),
                           bench.risk_parity.end());
    auto slo = sharpe(lo), srp = sharpe(rp);
    report["benchmarks"] = {{"long_only_sharpe", slo.has_value() ? json(*slo) : json(nullptr)},
                            {"risk_parity_sharpe", srp.has_value() ? json(*srp) : json(nullptr)},
                            {"vol_window", opt.bench_window}};
  }

  const std::string report_file = join_path(opt.out_dir, "report.json");
  write_json(report_file, report);
  manifest.add_output(report_file);

  plot_csv_columns(path_file, {"x", "y", "z"}, "eigenportfolio 3D path",
                   join_path(opt.out_dir, "eigen_path.svg"));
  manifest.add_output(join_path(opt.out_dir, "eigen_path.svg"));
  manifest.write(opt.out_dir);
  return 0;
}

}  // namespace mgeo::cli
