#include "mgeo/curvature.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "mgeo/errors.hpp"

namespace mgeo {

std::string to_string(RegimeLabel r) {
  switch (r) {
    case RegimeLabel::SphereLike: return "SphereLike";
    case RegimeLabel::HyperbolicLike: return "HyperbolicLike";
    case RegimeLabel::Flat: return "Flat";
    case RegimeLabel::TorusLike: return "TorusLike";
  }
  return "Unknown";
}

namespace {

struct FitDiagnostics {
  double condition = 0.0;
  double r2 = 0.0;
};

MongeCoeffs weighted_fit(const std::vector<Vec3>& window, const std::vector<double>& weights,
                         FitDiagnostics* diag) {
  const std::size_t n = window.size();
  if (n < 6) throw Error(ErrorCode::InvalidInput, "Monge fit needs >= 6 points");
  if (!weights.empty() && weights.size() != n)
    throw Error(ErrorCode::InvalidInput, "weights/window size mismatch");

  Eigen::MatrixXd A(n, 6);
  Eigen::VectorXd z(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = window[i].x(), y = window[i].y();
    A.row(i) << x * x, x * y, y * y, x, y, 1.0;
    z(i) = window[i].z();
  }
  if (!weights.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      const double w = weights[i];
      A.row(i) *= w;
      z(i) *= w;
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  const double cond = smin > 0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (!(cond < 1e12)) throw Error(ErrorCode::SingularFit, "rank-deficient Monge window");
  const Eigen::VectorXd beta = svd.solve(z);
  if (diag) {
    diag->condition = cond;
    const double ssr = (A * beta - z).squaredNorm();
    const double mean_z = z.mean();
    const double sst = (z.array() - mean_z).square().sum();
    diag->r2 = sst > 0 ? 1.0 - ssr / sst : 1.0;
  }
  return {beta(0), beta(1), beta(2), beta(3), beta(4), beta(5)};
}

}  // namespace

MongeCoeffs monge_fit(const std::vector<Vec3>& window, const std::vector<double>& weights) {
  return weighted_fit(window, weights, nullptr);
}

double curvature_at(const MongeCoeffs& m) {
  const double num = 4.0 * m.a * m.c - m.b * m.b;
  const double den = 1.0 + 4.0 * m.a * m.a + m.b * m.b + 4.0 * m.c * m.c;
  return num / (den * den);
}

double monge_gaussian_curvature(const MongeCoeffs& m) {
  const double num = 4.0 * m.a * m.c - m.b * m.b;
  const double den = 1.0 + m.d * m.d + m.e * m.e;
  return num / (den * den);
}

CurvatureSeries curvature_series(const std::vector<Vec3>& path, const CurvatureConfig& cfg) {
  if (cfg.min_window < 6)
    throw Error(ErrorCode::InvalidInput, "min_window must be >= 6 (six Monge coefficients)");
  if (!(cfg.kappa_pos > 0) || !(cfg.kappa_neg > 0))
    throw Error(ErrorCode::InvalidInput, "curvature thresholds must be positive");
  const std::size_t n = path.size();
  const std::size_t need = cfg.min_window + cfg.smooth_len;
  if (n < need)
    throw Error(ErrorCode::MinWindow,
                "path shorter than min_window + smooth_len = " + std::to_string(need));

  // Trailing moving average keeps the series causal.
  std::vector<Vec3> smooth(n);
  Vec3 acc = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    acc += path[i];
    if (i >= cfg.smooth_len) acc -= path[i - cfg.smooth_len];
    smooth[i] = acc / static_cast<double>(std::min(i + 1, cfg.smooth_len));
  }

  CurvatureSeries out;
  out.K.assign(n, std::numeric_limits<double>::quiet_NaN());
  out.condition.assign(n, std::numeric_limits<double>::quiet_NaN());
  out.r2.assign(n, std::numeric_limits<double>::quiet_NaN());
  out.first_defined = cfg.min_window - 1 + cfg.smooth_len;

  for (std::size_t t = out.first_defined; t < n; ++t) {
    const std::size_t begin =
        cfg.window == WindowMode::Rolling
            ? (t + 1 >= cfg.rolling_len ? t + 1 - cfg.rolling_len : 0)
            : cfg.smooth_len;
    const std::size_t len = t - begin + 1;
    if (len < cfg.min_window) continue;

    std::vector<double> weights;
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    double wsum = 0.0;
    if (cfg.alpha > 0) {
      weights.resize(len);
      for (std::size_t i = 0; i < len; ++i)
        weights[i] = std::exp(-cfg.alpha * static_cast<double>(t - (begin + i)));
    }
    for (std::size_t i = 0; i < len; ++i) {
      const double w = weights.empty() ? 1.0 : weights[i] * weights[i];
      mean += w * smooth[begin + i];
      wsum += w;
    }
    mean /= wsum;

    std::vector<Vec3> local(len);
    if (cfg.frame_free) {
      for (std::size_t i = 0; i < len; ++i) local[i] = smooth[begin + i] - mean;
    } else {
      // Rotate the window so the smallest principal axis of its (weighted)
      // covariance becomes the z-axis; makes the estimator rotation-invariant.
      Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
      for (std::size_t i = 0; i < len; ++i) {
        const double w = weights.empty() ? 1.0 : weights[i] * weights[i];
        const Eigen::Vector3d d = smooth[begin + i] - mean;
        cov += w * d * d.transpose();
      }
      cov /= wsum;
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
      // Columns are ascending: eigenvector 0 is the normal direction.
      Eigen::Matrix3d rot;
      rot.row(0) = es.eigenvectors().col(2).transpose();
      rot.row(1) = es.eigenvectors().col(1).transpose();
      rot.row(2) = es.eigenvectors().col(0).transpose();
      for (std::size_t i = 0; i < len; ++i) local[i] = rot * (smooth[begin + i] - mean);
    }

    try {
      FitDiagnostics diag;
      const MongeCoeffs m = weighted_fit(local, weights, &diag);
      out.K[t] = cfg.second_order_denominator ? curvature_at(m) : monge_gaussian_curvature(m);
      out.condition[t] = diag.condition;
      out.r2[t] = diag.r2;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingularFit) throw;
      ++out.skipped;  // gap stays NaN
    }
  }
  return out;
}

RegimeSummary classify_regimes(const std::vector<double>& K, const std::vector<bool>& torus_flags,
                               double kappa_pos, double kappa_neg) {
  if (!(kappa_pos > 0) || !(kappa_neg > 0))
    throw Error(ErrorCode::InvalidInput, "thresholds must be positive");
  if (!torus_flags.empty() && torus_flags.size() != K.size())
    throw Error(ErrorCode::InvalidInput, "torus flag series misaligned with K");
  RegimeSummary out;
  out.labels.resize(K.size());
  std::array<std::size_t, 4> counts{};
  for (std::size_t i = 0; i < K.size(); ++i) {
    if (std::isnan(K[i])) continue;
    RegimeLabel label;
    if (!torus_flags.empty() && torus_flags[i]) label = RegimeLabel::TorusLike;
    else if (K[i] >= kappa_pos) label = RegimeLabel::SphereLike;
    else if (K[i] <= -kappa_neg) label = RegimeLabel::HyperbolicLike;
    else label = RegimeLabel::Flat;
    out.labels[i] = label;
    counts[static_cast<std::size_t>(label)]++;
    out.defined++;
  }
  if (out.defined > 0)
    for (std::size_t k = 0; k < 4; ++k)
      out.shares[k] = static_cast<double>(counts[k]) / static_cast<double>(out.defined);
  return out;
}

}  // namespace mgeo
