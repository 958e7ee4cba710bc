#include "mgeo/markets.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "mgeo/csv.hpp"
#include "mgeo/errors.hpp"

namespace mgeo {

ReturnsPanel load_prices(const std::string& csv_path, MissingPolicy policy) {
  const csv::Table t = csv::read_file(csv_path);
  if (t.header.size() < 2)
    throw Error(ErrorCode::IngestError, "price csv needs a date column and at least one ticker");
  const std::size_t n_assets_raw = t.header.size() - 1;

  std::vector<std::string> dates;
  std::vector<std::vector<double>> prices(n_assets_raw);  // per asset
  std::vector<bool> has_gap(n_assets_raw, false);
  std::string prev_date;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (row.size() != t.header.size())
      throw Error(ErrorCode::IngestError,
                  "row " + std::to_string(r + 2) + ": expected " +
                      std::to_string(t.header.size()) + " cells, got " +
                      std::to_string(row.size()));
    if (!prev_date.empty() && !(prev_date < row[0]))
      throw Error(ErrorCode::IngestError, "row " + std::to_string(r + 2) +
                                              ": dates not strictly increasing at " + row[0]);
    prev_date = row[0];
    dates.push_back(row[0]);
    for (std::size_t a = 0; a < n_assets_raw; ++a) {
      const std::string& cell = row[a + 1];
      if (cell.empty()) {
        if (policy == MissingPolicy::ForwardFill && !prices[a].empty()) {
          prices[a].push_back(prices[a].back());
        } else {
          has_gap[a] = true;
          prices[a].push_back(std::numeric_limits<double>::quiet_NaN());
        }
        continue;
      }
      double v = 0;
      try {
        v = std::stod(cell);
      } catch (...) {
        throw Error(ErrorCode::IngestError,
                    "row " + std::to_string(r + 2) + ": bad price '" + cell + "'");
      }
      if (!(v > 0))
        throw Error(ErrorCode::IngestError, "row " + std::to_string(r + 2) +
                                                ": non-positive price for " + t.header[a + 1]);
      prices[a].push_back(v);
    }
  }
  if (dates.size() < 2) throw Error(ErrorCode::IngestError, "need at least two dates");

  ReturnsPanel panel;
  panel.dates.assign(dates.begin() + 1, dates.end());
  std::vector<std::size_t> kept;
  for (std::size_t a = 0; a < n_assets_raw; ++a) {
    if (has_gap[a] && policy == MissingPolicy::DropAsset) {
      panel.dropped.push_back(t.header[a + 1]);
    } else {
      kept.push_back(a);
      panel.assets.push_back(t.header[a + 1]);
    }
  }
  if (kept.empty()) throw Error(ErrorCode::IngestError, "all assets dropped by missing policy");
  panel.returns.resize(static_cast<Eigen::Index>(dates.size() - 1),
                       static_cast<Eigen::Index>(kept.size()));
  for (std::size_t j = 0; j < kept.size(); ++j)
    for (std::size_t r = 1; r < dates.size(); ++r)
      panel.returns(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(j)) =
          std::log(prices[kept[j]][r] / prices[kept[j]][r - 1]);
  return panel;
}

EigenPath expanding_pca_eigenportfolios(const ReturnsPanel& panel, std::size_t t0) {
  const Eigen::Index T = panel.returns.rows();
  const Eigen::Index N = panel.returns.cols();
  if (T < 3) throw Error(ErrorCode::InvalidInput, "panel too short");
  t0 = std::max<std::size_t>(t0, static_cast<std::size_t>(N));
  if (static_cast<Eigen::Index>(t0) + 1 >= T)
    throw Error(ErrorCode::InvalidInput, "t0 leaves no out-of-sample dates");

  EigenPath out;
  out.t0 = t0;
  out.dates = panel.dates;

  // Causally standardized returns: expanding mean/std through the previous
  // day (sigma floored; the first row standardizes to zero).
  Eigen::MatrixXd z(T, N);
  Eigen::VectorXd run_sum = Eigen::VectorXd::Zero(N), run_sq = Eigen::VectorXd::Zero(N);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index a = 0; a < N; ++a) {
      if (t < 2) {
        z(t, a) = 0.0;
      } else {
        const double n = static_cast<double>(t);
        const double mean = run_sum(a) / n;
        const double var = std::max(run_sq(a) / n - mean * mean, 0.0);
        const double sd = std::max(std::sqrt(var), 1e-8);
        z(t, a) = (panel.returns(t, a) - mean) / sd;
      }
      run_sum(a) += panel.returns(t, a);
      run_sq(a) += panel.returns(t, a) * panel.returns(t, a);
    }
  }

  // Expanding covariance of z via running moments.
  Eigen::MatrixXd S2 = Eigen::MatrixXd::Zero(N, N);
  Eigen::VectorXd S1 = Eigen::VectorXd::Zero(N);
  std::vector<Eigen::MatrixXd> loadings_by_t(static_cast<std::size_t>(T));
  double explained_acc = 0.0;
  std::size_t explained_n = 0;
  for (Eigen::Index t = 0; t < T; ++t) {
    S1 += z.row(t).transpose();
    S2 += z.row(t).transpose() * z.row(t);
    if (t + 1 < static_cast<Eigen::Index>(t0)) continue;
    const double n = static_cast<double>(t + 1);
    Eigen::MatrixXd cov = (S2 - S1 * S1.transpose() / n) / std::max(n - 1.0, 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    Eigen::MatrixXd u(N, 3);
    Eigen::Vector3d lam;
    double trace = std::max(es.eigenvalues().sum(), 1e-300);
    for (int k = 0; k < 3; ++k) {
      double v = es.eigenvalues()(N - 1 - k);
      if (v < 0) {
        v = 0;
        out.eigenvalue_floored = true;
      }
      lam(k) = v;
      Eigen::VectorXd col = es.eigenvectors().col(N - 1 - k);
      int arg = 0;
      col.cwiseAbs().maxCoeff(&arg);
      if (col(arg) < 0) col = -col;
      u.col(k) = col;
    }
    loadings_by_t[static_cast<std::size_t>(t)] = u;
    out.loadings.push_back(u);
    out.eigenvalues.push_back(lam);
    explained_acc += lam.sum() / trace;
    ++explained_n;
  }
  if (explained_n > 0) out.explained_share_top3 = explained_acc / static_cast<double>(explained_n);

  // Out-of-sample sleeve returns with lagged loadings, cumulated into the 3D
  // path.
  Vec3 cum = Vec3::Zero();
  for (Eigen::Index t = static_cast<Eigen::Index>(t0) + 1; t < T; ++t) {
    const Eigen::MatrixXd& u_prev = loadings_by_t[static_cast<std::size_t>(t - 1)];
    const Eigen::Vector3d p = u_prev.transpose() * z.row(t).transpose();
    out.sleeve_returns.push_back(p);
    cum += Vec3(p(0), p(1), p(2));
    out.path.push_back(cum);
    out.path_dates.push_back(static_cast<std::size_t>(t));
  }
  return out;
}

PnlSeries signals_and_pnl(const std::vector<Vec3>& path,
                          const std::vector<std::optional<Vec3>>& predicted,
                          std::size_t vol_window) {
  if (predicted.size() != path.size())
    throw Error(ErrorCode::InvalidInput, "predicted series misaligned with path");
  if (path.size() < vol_window + 2)
    throw Error(ErrorCode::MinWindow, "need vol_window history before the first signal");

  PnlSeries out;
  const std::size_t n = path.size();
  out.signals.assign(n, Eigen::Vector3d::Zero());
  out.pnl.assign(n, Eigen::Vector3d::Zero());
  out.total_mean.assign(n, 0.0);
  out.total_sum.assign(n, 0.0);
  out.suppressed.assign(n, false);
  out.first_index = vol_window;  // increments [k-vol_window+1 .. k] available

  for (std::size_t k = vol_window; k + 1 < n; ++k) {
    // predicted[k+1] is the forecast of path[k+1] made at k.
    if (!predicted[k + 1].has_value()) continue;
    Eigen::Vector3d sig = Eigen::Vector3d::Zero(), pnl = Eigen::Vector3d::Zero();
    for (int c = 0; c < 3; ++c) {
      // Trailing sample std of increments ending at k.
      double mean = 0;
      for (std::size_t j = 0; j < vol_window; ++j) mean += path[k - j](c) - path[k - j - 1](c);
      mean /= static_cast<double>(vol_window);
      double var = 0;
      for (std::size_t j = 0; j < vol_window; ++j) {
        const double d = (path[k - j](c) - path[k - j - 1](c)) - mean;
        var += d * d;
      }
      var /= static_cast<double>(vol_window - 1);
      const double sd = std::sqrt(var);
      const double dpred = (*predicted[k + 1])(c)-path[k](c);
      const double sgn = dpred > 0 ? 1.0 : (dpred < 0 ? -1.0 : 0.0);
      if (sd < 1e-300 || !(sd > 0)) {
        out.suppressed[k + 1] = true;
        continue;
      }
      sig(c) = sgn / sd;
      pnl(c) = sig(c) * (path[k + 1](c) - path[k](c));
    }
    out.signals[k + 1] = sig;
    out.pnl[k + 1] = pnl;
    out.total_mean[k + 1] = pnl.sum() / 3.0;
    out.total_sum[k + 1] = pnl.sum();
  }
  return out;
}

std::optional<double> sharpe(const std::vector<double>& pnl) {
  if (pnl.size() < 2) return std::nullopt;
  double mean = std::accumulate(pnl.begin(), pnl.end(), 0.0) / static_cast<double>(pnl.size());
  double var = 0;
  for (double v : pnl) var += (v - mean) * (v - mean);
  var /= static_cast<double>(pnl.size() - 1);
  // Floor against accumulation dust on constant series.
  if (!(var > 1e-24 * std::max(1.0, mean * mean))) return std::nullopt;
  return std::sqrt(252.0) * mean / std::sqrt(var);
}

EigenWeightedResult eigenvalue_weighted_return(const std::vector<Vec3>& path,
                                               const std::vector<Eigen::Vector3d>& sleeve_returns,
                                               const std::vector<Eigen::Vector3d>& signals) {
  const std::size_t n = path.size();
  if (sleeve_returns.size() != n || signals.size() != n)
    throw Error(ErrorCode::InvalidInput, "series misaligned");
  EigenWeightedResult out;
  out.weights.assign(n, Eigen::Vector3d::Constant(1.0 / 3.0));
  out.returns.assign(n, 0.0);

  Eigen::Vector3d s1 = Eigen::Vector3d::Zero();
  Eigen::Matrix3d s2 = Eigen::Matrix3d::Zero();
  std::size_t m = 0;
  for (std::size_t t = 1; t + 1 < n; ++t) {
    const Eigen::Vector3d d = path[t] - path[t - 1];
    s1 += d;
    s2 += d * d.transpose();
    ++m;
    if (m < 3) continue;
    const double mm = static_cast<double>(m);
    Eigen::Matrix3d cov = (s2 - s1 * s1.transpose() / mm) / (mm - 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    Eigen::Vector3d lam = es.eigenvalues().reverse().cwiseMax(0.0);
    Eigen::Vector3d w;
    if (lam.sum() > 0) {
      w = lam / lam.sum();
    } else {
      w = Eigen::Vector3d::Constant(1.0 / 3.0);
      out.zero_lambda_fallback = true;
    }
    out.weights[t] = w;
    // r_{t+1} = sum_i C_{i,t} s_{i,t+1} p_{i,t+1}  (signs only from signals)
    double r = 0;
    for (int i = 0; i < 3; ++i) {
      const double s = signals[t + 1](i);
      const double sgn = s > 0 ? 1.0 : (s < 0 ? -1.0 : 0.0);
      r += w(i) * sgn * sleeve_returns[t + 1](i);
    }
    out.returns[t + 1] = r;
  }
  return out;
}

GatedPnl curvature_gated_pnl(const std::map<GeometryKind, std::vector<double>>& runs,
                             const std::vector<double>& K, double kappa_neg, double kappa_pos,
                             const GateMap& map) {
  if (runs.empty()) throw Error(ErrorCode::InvalidInput, "no geometry runs");
  std::size_t n = K.size();
  for (const auto& [kind, series] : runs)
    if (series.size() != n) throw Error(ErrorCode::InvalidInput, "run misaligned with K series");

  GatedPnl out;
  out.pnl.assign(n, 0.0);
  out.buckets.assign(n, CurvatureBucket::NearZero);
  out.fallback.assign(n, false);

  auto average_of = [&](const std::vector<GeometryKind>& kinds, std::size_t t) {
    double acc = 0;
    std::size_t cnt = 0;
    if (kinds.empty()) {
      for (const auto& [kind, series] : runs) {
        acc += series[t];
        ++cnt;
      }
    } else {
      for (GeometryKind k : kinds) {
        auto it = runs.find(k);
        if (it != runs.end()) {
          acc += it->second[t];
          ++cnt;
        }
      }
      if (cnt == 0) {  // configured runs absent: all-geometry average
        for (const auto& [kind, series] : runs) {
          acc += series[t];
          ++cnt;
        }
      }
    }
    return cnt > 0 ? acc / static_cast<double>(cnt) : 0.0;
  };

  for (std::size_t t = 0; t < n; ++t) {
    if (std::isnan(K[t])) {
      out.fallback[t] = true;
      out.pnl[t] = average_of({}, t);
      continue;
    }
    if (K[t] <= -kappa_neg) {
      out.buckets[t] = CurvatureBucket::Negative;
      out.pnl[t] = average_of(map.negative, t);
    } else if (K[t] >= kappa_pos) {
      out.buckets[t] = CurvatureBucket::Positive;
      out.pnl[t] = average_of(map.positive, t);
    } else {
      out.buckets[t] = CurvatureBucket::NearZero;
      out.pnl[t] = average_of(map.near_zero, t);
    }
  }
  return out;
}

BenchmarkSeries benchmarks(const ReturnsPanel& panel, std::size_t vol_window) {
  const Eigen::Index T = panel.returns.rows();
  const Eigen::Index N = panel.returns.cols();
  if (static_cast<Eigen::Index>(vol_window) + 1 >= T)
    throw Error(ErrorCode::MinWindow, "panel shorter than the benchmark vol window");

  BenchmarkSeries out;
  out.long_only.assign(static_cast<std::size_t>(T), 0.0);
  out.risk_parity.assign(static_cast<std::size_t>(T), 0.0);
  out.rp_weights.assign(static_cast<std::size_t>(T), Eigen::VectorXd());
  out.first_index = vol_window;

  for (Eigen::Index t = 0; t < T; ++t)
    out.long_only[static_cast<std::size_t>(t)] = panel.returns.row(t).mean();

  for (Eigen::Index t = static_cast<Eigen::Index>(vol_window); t < T; ++t) {
    // Trailing vol through t-1 keeps the weights causal.
    Eigen::VectorXd w(N);
    for (Eigen::Index a = 0; a < N; ++a) {
      double mean = 0;
      for (std::size_t j = 1; j <= vol_window; ++j) mean += panel.returns(t - static_cast<Eigen::Index>(j), a);
      mean /= static_cast<double>(vol_window);
      double var = 0;
      for (std::size_t j = 1; j <= vol_window; ++j) {
        const double d = panel.returns(t - static_cast<Eigen::Index>(j), a) - mean;
        var += d * d;
      }
      var /= static_cast<double>(vol_window - 1);
      w(a) = 1.0 / std::max(std::sqrt(var), 1e-6);
    }
    w /= w.sum();
    out.rp_weights[static_cast<std::size_t>(t)] = w;
    out.risk_parity[static_cast<std::size_t>(t)] = w.dot(panel.returns.row(t).transpose());
  }
  return out;
}

}  // namespace mgeo
