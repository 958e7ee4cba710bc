#include "mgeo/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "mgeo/curvature.hpp"
#include "mgeo/errors.hpp"
#include "mgeo/fitgeom.hpp"
#include "mgeo/rng.hpp"

namespace mgeo {

std::string to_string(Predictor p) {
  switch (p) {
    case Predictor::VAR: return "var";
    case Predictor::RF: return "rf";
    case Predictor::GP: return "gp";
  }
  return "?";
}

Predictor predictor_from_string(const std::string& s) {
  if (s == "var" || s == "VAR") return Predictor::VAR;
  if (s == "rf" || s == "RF") return Predictor::RF;
  if (s == "gp" || s == "GP") return Predictor::GP;
  throw Error(ErrorCode::InvalidInput, "unknown predictor '" + s + "'");
}

std::vector<Vec3> tangent_velocities(const std::vector<Vec3>& path, const ManifoldSpec& spec) {
  std::vector<Vec3> out;
  if (path.size() < 2) return out;
  out.reserve(path.size() - 1);
  for (std::size_t t = 1; t < path.size(); ++t) {
    const Vec3 diff = path[t] - path[t - 1];
    if (spec.kind == GeometryKind::Euclidean3) {
      out.push_back(diff);
    } else {
      out.push_back(tangent_projector(spec, path[t - 1]) * diff);
    }
  }
  return out;
}

Eigen::VectorXd TangentPca::project(const Eigen::VectorXd& v) const {
  return basis.transpose() * (v - mean);
}

Eigen::VectorXd TangentPca::reconstruct(const Eigen::VectorXd& c) const {
  return mean + basis * c;
}

TangentPca tangent_pca(const std::vector<Eigen::VectorXd>& velocities, int d) {
  if (velocities.empty()) throw Error(ErrorCode::InvalidInput, "empty velocity series");
  const Eigen::Index dim = velocities.front().size();
  if (d < 1 || d > dim) throw Error(ErrorCode::InvalidInput, "pca dimension out of range");
  if (velocities.size() < static_cast<std::size_t>(d) + 1)
    throw Error(ErrorCode::MinWindow, "tangent PCA needs at least d + 1 samples");

  TangentPca out;
  out.mean = Eigen::VectorXd::Zero(dim);
  for (const auto& v : velocities) out.mean += v;
  out.mean /= static_cast<double>(velocities.size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& v : velocities) {
    const Eigen::VectorXd c = v - out.mean;
    cov += c * c.transpose();
  }
  cov /= static_cast<double>(velocities.size());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  out.eigenvalues = es.eigenvalues().reverse();
  if (out.eigenvalues(0) < 1e-24) out.degenerate = true;
  out.basis.resize(dim, d);
  for (int k = 0; k < d; ++k) {
    Eigen::VectorXd col = es.eigenvectors().col(dim - 1 - k);
    int arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < 0) col = -col;
    out.basis.col(k) = col;
  }
  return out;
}

VarFit var_forecast(const std::vector<Eigen::VectorXd>& series, int p) {
  if (series.empty()) throw Error(ErrorCode::InvalidInput, "empty series");
  const int dim = static_cast<int>(series.front().size());
  const int W = static_cast<int>(series.size());
  if (p < 0) throw Error(ErrorCode::InvalidInput, "negative VAR order");

  VarFit fit;
  // Auto-shrink: each equation estimates dim*p + 1 parameters from W - p rows.
  int order = p;
  while (order > 0 && W - order < dim * order + 2) {
    --order;
    fit.shrunk = true;
  }
  fit.order = order;

  if (order == 0) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    for (const auto& v : series) mean += v;
    mean /= static_cast<double>(W);
    fit.intercept = mean;
    fit.forecast = mean;
    return fit;
  }

  const int rows = W - order;
  const int cols = dim * order + 1;
  Eigen::MatrixXd X(rows, cols);
  Eigen::MatrixXd Y(rows, dim);
  for (int t = 0; t < rows; ++t) {
    int c = 0;
    for (int lag = 1; lag <= order; ++lag)
      for (int k = 0; k < dim; ++k) X(t, c++) = series[t + order - lag](k);
    X(t, c) = 1.0;
    Y.row(t) = series[t + order].transpose();
  }
  Eigen::MatrixXd beta;
  const Eigen::MatrixXd gram = X.transpose() * X;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
  if (lu.isInvertible()) {
    beta = X.colPivHouseholderQr().solve(Y);
  } else {
    fit.ridged = true;
    beta = (gram + 1e-6 * Eigen::MatrixXd::Identity(cols, cols)).ldlt().solve(X.transpose() * Y);
  }

  fit.coeffs.resize(order);
  for (int lag = 0; lag < order; ++lag)
    fit.coeffs[lag] = beta.middleRows(lag * dim, dim).transpose();
  fit.intercept = beta.row(cols - 1).transpose();

  Eigen::VectorXd pred = fit.intercept;
  for (int lag = 1; lag <= order; ++lag) pred += fit.coeffs[lag - 1] * series[W - lag];
  fit.forecast = pred;
  return fit;
}

// --- Random forest -----------------------------------------------------------

namespace {

struct LagData {
  std::vector<std::array<double, 32>> x;  // row-major lag features
  std::vector<double> y;
  int lags = 0;
};

LagData build_lag_data(const std::vector<double>& series, int lags) {
  if (lags < 1 || lags > 32) throw Error(ErrorCode::InvalidInput, "lags out of range");
  if (series.size() < static_cast<std::size_t>(lags) + 2)
    throw Error(ErrorCode::MinWindow, "series shorter than lags + 2");
  LagData d;
  d.lags = lags;
  for (std::size_t t = static_cast<std::size_t>(lags); t < series.size(); ++t) {
    std::array<double, 32> row{};
    for (int k = 0; k < lags; ++k) row[static_cast<std::size_t>(k)] = series[t - 1 - k];
    d.x.push_back(row);
    d.y.push_back(series[t]);
  }
  return d;
}

struct TreeNode {
  int feature = -1;  // -1: leaf
  double threshold = 0.0;
  double value = 0.0;
  int left = -1, right = -1;
};

class CartTree {
 public:
  void fit(const LagData& d, const std::vector<int>& sample, int mtry, Rng& rng) {
    nodes_.clear();
    lags_ = d.lags;
    build(d, sample, mtry, rng);
  }

  double predict(const std::array<double, 32>& x) const {
    int node = 0;
    while (nodes_[static_cast<std::size_t>(node)].feature >= 0) {
      const auto& nd = nodes_[static_cast<std::size_t>(node)];
      node = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
    }
    return nodes_[static_cast<std::size_t>(node)].value;
  }

 private:
  int build(const LagData& d, const std::vector<int>& sample, int mtry, Rng& rng) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    double mean = 0;
    for (int i : sample) mean += d.y[static_cast<std::size_t>(i)];
    mean /= static_cast<double>(sample.size());
    nodes_[static_cast<std::size_t>(id)].value = mean;
    if (sample.size() < 4) return id;  // min leaf 2 per side

    double sse = 0;
    for (int i : sample) {
      const double r = d.y[static_cast<std::size_t>(i)] - mean;
      sse += r * r;
    }
    if (sse < 1e-24) return id;

    // Feature subsample.
    std::vector<int> feats(static_cast<std::size_t>(lags_));
    std::iota(feats.begin(), feats.end(), 0);
    for (std::size_t i = feats.size(); i > 1; --i)
      std::swap(feats[i - 1], feats[rng.below(i)]);
    feats.resize(static_cast<std::size_t>(mtry));

    int best_feat = -1;
    double best_thr = 0, best_score = sse;
    std::vector<int> ordered = sample;
    for (int f : feats) {
      std::sort(ordered.begin(), ordered.end(), [&](int a, int b) {
        return d.x[static_cast<std::size_t>(a)][static_cast<std::size_t>(f)] <
               d.x[static_cast<std::size_t>(b)][static_cast<std::size_t>(f)];
      });
      double left_sum = 0, left_sq = 0;
      double total_sum = 0, total_sq = 0;
      for (int i : ordered) {
        total_sum += d.y[static_cast<std::size_t>(i)];
        total_sq += d.y[static_cast<std::size_t>(i)] * d.y[static_cast<std::size_t>(i)];
      }
      for (std::size_t k = 0; k + 1 < ordered.size(); ++k) {
        const int i = ordered[k];
        left_sum += d.y[static_cast<std::size_t>(i)];
        left_sq += d.y[static_cast<std::size_t>(i)] * d.y[static_cast<std::size_t>(i)];
        const std::size_t nl = k + 1, nr = ordered.size() - nl;
        if (nl < 2 || nr < 2) continue;  // min leaf size
        const double xa = d.x[static_cast<std::size_t>(ordered[k])][static_cast<std::size_t>(f)];
        const double xb =
            d.x[static_cast<std::size_t>(ordered[k + 1])][static_cast<std::size_t>(f)];
        if (xa == xb) continue;
        const double right_sum = total_sum - left_sum, right_sq = total_sq - left_sq;
        const double score = (left_sq - left_sum * left_sum / static_cast<double>(nl)) +
                             (right_sq - right_sum * right_sum / static_cast<double>(nr));
        if (score < best_score - 1e-15) {
          best_score = score;
          best_feat = f;
          best_thr = 0.5 * (xa + xb);
        }
      }
    }
    if (best_feat < 0) return id;

    std::vector<int> left, right;
    for (int i : sample) {
      if (d.x[static_cast<std::size_t>(i)][static_cast<std::size_t>(best_feat)] <= best_thr)
        left.push_back(i);
      else
        right.push_back(i);
    }
    if (left.size() < 2 || right.size() < 2) return id;
    nodes_[static_cast<std::size_t>(id)].feature = best_feat;
    nodes_[static_cast<std::size_t>(id)].threshold = best_thr;
    const int l = build(d, left, mtry, rng);
    nodes_[static_cast<std::size_t>(id)].left = l;
    const int r = build(d, right, mtry, rng);
    nodes_[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  std::vector<TreeNode> nodes_;
  int lags_ = 0;
};

}  // namespace

double rf_forecast(const std::vector<double>& series, int lags, int n_trees, std::uint64_t seed) {
  const LagData data = build_lag_data(series, lags);
  const int mtry = std::max(1, (lags + 2) / 3);  // ceil(L/3)
  std::array<double, 32> query{};
  for (int k = 0; k < lags; ++k)
    query[static_cast<std::size_t>(k)] = series[series.size() - 1 - static_cast<std::size_t>(k)];

  double acc = 0.0;
  CartTree tree;
  for (int b = 0; b < n_trees; ++b) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
    std::vector<int> sample(data.y.size());
    for (auto& i : sample) i = static_cast<int>(rng.below(data.y.size()));
    tree.fit(data, sample, mtry, rng);
    acc += tree.predict(query);
  }
  return acc / static_cast<double>(n_trees);
}

// --- Gaussian process ---------------------------------------------------------

namespace {

double matern32(double r, double ell) {
  const double s = std::sqrt(3.0) * r / ell;
  return (1.0 + s) * std::exp(-s);
}

struct GpProblem {
  Eigen::MatrixXd X;  // rows: lag vectors
  Eigen::VectorXd y;
  Eigen::VectorXd query;
};

GpProblem build_gp_problem(const std::vector<double>& series, int lags) {
  if (series.size() < static_cast<std::size_t>(lags) + 2)
    throw Error(ErrorCode::MinWindow, "series shorter than lags + 2");
  const std::size_t rows = series.size() - static_cast<std::size_t>(lags);
  GpProblem p;
  p.X.resize(static_cast<Eigen::Index>(rows), lags);
  p.y.resize(static_cast<Eigen::Index>(rows));
  for (std::size_t t = 0; t < rows; ++t) {
    for (int k = 0; k < lags; ++k)
      p.X(static_cast<Eigen::Index>(t), k) =
          series[t + static_cast<std::size_t>(lags) - 1 - static_cast<std::size_t>(k)];
    p.y(static_cast<Eigen::Index>(t)) = series[t + static_cast<std::size_t>(lags)];
  }
  p.query.resize(lags);
  for (int k = 0; k < lags; ++k)
    p.query(k) = series[series.size() - 1 - static_cast<std::size_t>(k)];
  return p;
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, double ell, double sf2, double c0) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) {
      const double r = (X.row(i) - X.row(j)).norm();
      K(i, j) = K(j, i) = sf2 * matern32(r, ell) + c0;
    }
  return K;
}

}  // namespace

GpForecast gp_forecast(const std::vector<double>& series, const GpConfig& cfg) {
  GpProblem p = build_gp_problem(series, cfg.lags);
  const Eigen::Index n = p.X.rows();

  // Zero-mean prior: center the targets and restore the level afterwards.
  const double mean_y = p.y.mean();
  p.y.array() -= mean_y;
  double var_y = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) var_y += p.y(i) * p.y(i);
  var_y = n > 1 ? var_y / static_cast<double>(n - 1) : 1.0;
  if (var_y < 1e-18) var_y = 1e-18;

  double median_dist = 1.0;
  {
    std::vector<double> d;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) d.push_back((p.X.row(i) - p.X.row(j)).norm());
    if (!d.empty()) {
      std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2), d.end());
      median_dist = std::max(d[d.size() / 2], 1e-9);
    }
  }

  std::vector<double> ells, sf2s, c0s;
  if (cfg.lengthscale) ells = {*cfg.lengthscale};
  else ells = {0.25 * median_dist, 0.5 * median_dist, median_dist, 2 * median_dist, 4 * median_dist};
  if (cfg.signal_var) sf2s = {*cfg.signal_var};
  else sf2s = {0.5 * var_y, var_y, 2 * var_y};
  if (cfg.constant_var) c0s = {*cfg.constant_var};
  else c0s = {0.0, 0.1 * var_y, var_y};

  GpForecast best;
  double best_lml = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (double ell : ells)
    for (double sf2 : sf2s)
      for (double c0 : c0s) {
        Eigen::MatrixXd K = kernel_matrix(p.X, ell, sf2, c0);
        double noise = cfg.noise_var;
        Eigen::LLT<Eigen::MatrixXd> llt;
        int tries = 0;
        for (;;) {
          Eigen::MatrixXd Kn = K + noise * Eigen::MatrixXd::Identity(n, n);
          llt.compute(Kn);
          if (llt.info() == Eigen::Success) break;
          if (++tries > 3)
            throw Error(ErrorCode::IllConditionedKernel, "kernel Cholesky failed after jitter");
          noise *= 10.0;
        }
        const Eigen::VectorXd alpha = llt.solve(p.y);
        double logdet = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) logdet += std::log(llt.matrixL()(i, i));
        const double lml = -0.5 * p.y.dot(alpha) - logdet -
                           0.5 * static_cast<double>(n) * std::log(2.0 * kPi);
        if (lml > best_lml) {
          best_lml = lml;
          Eigen::VectorXd ks(n);
          for (Eigen::Index i = 0; i < n; ++i)
            ks(i) = sf2 * matern32((p.X.row(i) - p.query.transpose()).norm(), ell) + c0;
          best.mean = mean_y + ks.dot(alpha);
          const Eigen::VectorXd v = llt.solve(ks);
          best.variance = std::max(0.0, sf2 + c0 + noise - ks.dot(v));
          best.lengthscale = ell;
          best.signal_var = sf2;
          best.constant_var = c0;
          found = true;
        }
      }
  if (!found) throw Error(ErrorCode::IllConditionedKernel, "no admissible GP hyperparameters");
  return best;
}

// --- Pipelines ----------------------------------------------------------------

namespace {

// Tangent coordinates of a window around its base: continuous (unwrapped)
// chart lifts for torus/hyperboloid, log map at the window Karcher mean for
// the sphere, raw coordinates for Euclidean space.
struct WindowFrame {
  ManifoldSpec spec;
  int dim = 3;
  Vec3 karcher_base = Vec3::Zero();     // sphere
  Vec2 chart_base = Vec2::Zero();       // torus / hyperboloid
  std::vector<Eigen::VectorXd> positions;

  Vec3 lift(const Eigen::VectorXd& tangent_pos) const {
    switch (spec.kind) {
      case GeometryKind::Euclidean3:
        return Vec3(tangent_pos(0), tangent_pos(1), tangent_pos(2));
      case GeometryKind::Sphere: {
        TangentVec v;
        v.kind = GeometryKind::Sphere;
        v.ambient = Vec3(tangent_pos(0), tangent_pos(1), tangent_pos(2));
        return exp_map(spec, karcher_base, v);
      }
      default: {
        const Vec2 uv = chart_exp(spec, chart_base, Vec2(tangent_pos(0), tangent_pos(1)));
        ChartPoint c;
        c.kind = spec.kind;
        c.u = uv.x();
        c.v = uv.y();
        return from_chart(spec, c);
      }
    }
  }
};

WindowFrame make_frame(const std::vector<Vec3>& window, const ManifoldSpec& spec) {
  WindowFrame frame;
  frame.spec = spec;
  switch (spec.kind) {
    case GeometryKind::Euclidean3: {
      frame.dim = 3;
      for (const auto& x : window) frame.positions.push_back(Eigen::VectorXd(x));
      break;
    }
    case GeometryKind::Sphere: {
      frame.dim = 3;
      std::vector<Vec3> on_sphere;
      on_sphere.reserve(window.size());
      for (const auto& x : window) on_sphere.push_back(reproject(spec, x));
      frame.karcher_base = karcher_mean(spec, on_sphere).mean;
      for (const auto& x : on_sphere)
        frame.positions.push_back(Eigen::VectorXd(log_map(spec, frame.karcher_base, x).ambient));
      break;
    }
    default: {
      frame.dim = 2;
      const ChartPoint c0 = to_chart(spec, reproject(spec, window.front()), -1.0);
      frame.chart_base = Vec2(c0.u, c0.v);
      Vec2 pos = Vec2::Zero();
      Vec2 prev(c0.u, c0.v);
      frame.positions.push_back(Eigen::VectorXd(pos));
      for (std::size_t i = 1; i < window.size(); ++i) {
        const ChartPoint ci = to_chart(spec, reproject(spec, window[i]), -1.0);
        const Vec2 cur(ci.u, ci.v);
        pos += chart_log(spec, prev, cur);  // shortest-arc increment, unwrapped
        prev = cur;
        frame.positions.push_back(Eigen::VectorXd(pos));
      }
      break;
    }
  }
  return frame;
}

Eigen::VectorXd predict_next(const std::vector<Eigen::VectorXd>& coeffs,
                             const ForecastConfig& cfg, std::size_t origin) {
  switch (cfg.predictor) {
    case Predictor::VAR:
      return var_forecast(coeffs, cfg.var_order).forecast;
    case Predictor::RF: {
      const int dim = static_cast<int>(coeffs.front().size());
      Eigen::VectorXd out(dim);
      for (int k = 0; k < dim; ++k) {
        std::vector<double> series;
        series.reserve(coeffs.size());
        for (const auto& c : coeffs) series.push_back(c(k));
        out(k) = rf_forecast(series, cfg.lags, cfg.rf_trees,
                             derive_seed(cfg.seed, origin * 8 + static_cast<std::size_t>(k)));
      }
      return out;
    }
    case Predictor::GP: {
      const int dim = static_cast<int>(coeffs.front().size());
      Eigen::VectorXd out(dim);
      for (int k = 0; k < dim; ++k) {
        std::vector<double> series;
        series.reserve(coeffs.size());
        for (const auto& c : coeffs) series.push_back(c(k));
        GpConfig gc;
        gc.lags = cfg.lags;
        out(k) = gp_forecast(series, gc).mean;
      }
      return out;
    }
  }
  throw Error(ErrorCode::InvalidInput, "unknown predictor");
}

// Per-index geometry assignment for the inferred mode: causal curvature
// regimes with the torus flag taking precedence.
std::vector<GeometryKind> infer_geometry_series(const std::vector<Vec3>& path,
                                                const ForecastConfig& cfg) {
  CurvatureConfig cc;
  cc.rolling_len = std::max<std::size_t>(cfg.window, cc.min_window);
  auto K = curvature_series(path, cc);
  TorusFlagSeriesConfig tc;
  tc.window_len = std::min<std::size_t>(1500, std::max<std::size_t>(600, path.size() / 3));
  auto flags = torus_flag_series(path, tc);
  auto regimes = classify_regimes(K.K, flags.flags, cc.kappa_pos, cc.kappa_neg);
  std::vector<GeometryKind> out(path.size(), GeometryKind::Euclidean3);
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (!regimes.labels[i].has_value()) continue;
    switch (*regimes.labels[i]) {
      case RegimeLabel::SphereLike: out[i] = GeometryKind::Sphere; break;
      case RegimeLabel::HyperbolicLike: out[i] = GeometryKind::Hyperboloid; break;
      case RegimeLabel::TorusLike: out[i] = GeometryKind::Torus; break;
      case RegimeLabel::Flat: out[i] = GeometryKind::Euclidean3; break;
    }
  }
  return out;
}

ManifoldSpec fit_window_spec(const std::vector<Vec3>& window, GeometryKind kind) {
  switch (kind) {
    case GeometryKind::Euclidean3:
      return ManifoldSpec::euclidean();
    case GeometryKind::Sphere:
      return fit_sphere_radius(window).spec;
    case GeometryKind::Torus:
      return fit_torus_mom(window).rho_variant.spec;
    case GeometryKind::Hyperboloid:
      return fit_hyperboloid_nls(window).spec;
  }
  return ManifoldSpec::euclidean();
}

}  // namespace

std::vector<ForecastRecord> pipeline_geometry_aware(const std::vector<Vec3>& path,
                                                    const ForecastConfig& cfg) {
  if (cfg.window < 4) throw Error(ErrorCode::InvalidInput, "window too small");
  if (path.size() <= cfg.window + cfg.min_fit_window)
    throw Error(ErrorCode::MinWindow, "path shorter than window + fit warmup");

  std::vector<GeometryKind> kinds;
  if (cfg.source == GeometrySource::InferredPerWindow) kinds = infer_geometry_series(path, cfg);

  std::vector<ForecastRecord> records;
  const std::size_t first_origin = cfg.window - 1 + cfg.min_fit_window;
  for (std::size_t t = first_origin; t + 1 < path.size(); ++t) {
    ForecastRecord rec;
    rec.index = t + 1;
    rec.realized = path[t + 1];
    try {
      const std::vector<Vec3> window(path.begin() + static_cast<std::ptrdiff_t>(t + 1 - cfg.window),
                                     path.begin() + static_cast<std::ptrdiff_t>(t + 1));
      ManifoldSpec spec = cfg.fixed_spec;
      if (cfg.source == GeometrySource::InferredPerWindow)
        spec = fit_window_spec(window, kinds[t]);
      else if (cfg.refit_params && spec.kind != GeometryKind::Euclidean3)
        spec = fit_window_spec(window, spec.kind);
      rec.geometry = spec.kind;

      const WindowFrame frame = make_frame(window, spec);
      // Velocities in the tangent frame.
      std::vector<Eigen::VectorXd> vel;
      vel.reserve(frame.positions.size() - 1);
      for (std::size_t i = 1; i < frame.positions.size(); ++i)
        vel.push_back(frame.positions[i] - frame.positions[i - 1]);

      const int d = std::min<int>(cfg.pca_dim, frame.dim);
      Eigen::VectorXd next_vel;
      if (spec.kind == GeometryKind::Euclidean3 && d == 3) {
        // Identity embedding: the flat pipeline reduces exactly to the native
        // baseline (PCA would only rotate the basis).
        next_vel = predict_next(vel, cfg, t);
      } else {
        const TangentPca pca = tangent_pca(vel, d);
        std::vector<Eigen::VectorXd> coeffs;
        coeffs.reserve(vel.size());
        for (const auto& v : vel) coeffs.push_back(pca.project(v));
        next_vel = pca.reconstruct(predict_next(coeffs, cfg, t));
      }
      const Eigen::VectorXd next_pos = frame.positions.back() + next_vel;
      rec.predicted = frame.lift(next_pos);
      rec.tangent = Vec3::Zero();
      for (int k = 0; k < frame.dim && k < 3; ++k) rec.tangent(k) = next_vel(k);
      rec.valid = true;
    } catch (const Error&) {
      rec.valid = false;  // gap
    }
    records.push_back(rec);
  }
  return records;
}

std::vector<ForecastRecord> pipeline_native(const std::vector<Vec3>& path,
                                            const ForecastConfig& cfg) {
  if (cfg.window < 4) throw Error(ErrorCode::InvalidInput, "window too small");
  if (path.size() <= cfg.window + cfg.min_fit_window)
    throw Error(ErrorCode::MinWindow, "path shorter than window + fit warmup");

  std::vector<ForecastRecord> records;
  const std::size_t first_origin = cfg.window - 1 + cfg.min_fit_window;
  for (std::size_t t = first_origin; t + 1 < path.size(); ++t) {
    ForecastRecord rec;
    rec.index = t + 1;
    rec.realized = path[t + 1];
    rec.geometry = GeometryKind::Euclidean3;
    try {
      // First differences over the window, predictor applied natively.
      std::vector<Eigen::VectorXd> diffs;
      diffs.reserve(cfg.window - 1);
      for (std::size_t i = t + 2 - cfg.window; i <= t; ++i)
        diffs.push_back(Eigen::VectorXd(path[i] - path[i - 1]));
      const Eigen::VectorXd step = predict_next(diffs, cfg, t);
      rec.predicted = path[t] + Vec3(step(0), step(1), step(2));
      rec.tangent = Vec3(step(0), step(1), step(2));
      rec.valid = true;
    } catch (const Error&) {
      rec.valid = false;
    }
    records.push_back(rec);
  }
  return records;
}

ForecastMetrics forecast_metrics(const std::vector<ForecastRecord>& records,
                                 const std::vector<Vec3>& path) {
  ForecastMetrics m;
  Eigen::Vector3d abs_acc = Eigen::Vector3d::Zero(), sq_acc = Eigen::Vector3d::Zero();
  Eigen::Vector3d mape_acc = Eigen::Vector3d::Zero(), sign_acc = Eigen::Vector3d::Zero();
  Eigen::Vector3d mape_n = Eigen::Vector3d::Zero();
  for (const auto& rec : records) {
    if (!rec.valid || rec.index >= path.size() || rec.index == 0) continue;
    const Vec3 realized = path[rec.index];
    const Vec3 prev = path[rec.index - 1];
    ++m.count;
    for (int k = 0; k < 3; ++k) {
      const double err = rec.predicted(k) - realized(k);
      abs_acc(k) += std::abs(err);
      sq_acc(k) += err * err;
      if (std::abs(realized(k)) > 1e-12) {
        mape_acc(k) += std::abs(err / realized(k));
        mape_n(k) += 1;
      }
      const double ds = realized(k) - prev(k);
      const double dp = rec.predicted(k) - prev(k);
      if (ds * dp > 0 || (ds == 0 && dp == 0)) sign_acc(k) += 1;
    }
  }
  if (m.count > 0) {
    const double n = static_cast<double>(m.count);
    m.mae = abs_acc / n;
    m.rmse = (sq_acc / n).cwiseSqrt();
    for (int k = 0; k < 3; ++k)
      m.mape_pct(k) = mape_n(k) > 0 ? 100.0 * mape_acc(k) / mape_n(k) : 0.0;
    m.sign_rate = sign_acc / n;
  }
  return m;
}

}  // namespace mgeo
