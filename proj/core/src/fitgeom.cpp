#include "mgeo/fitgeom.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "mgeo/errors.hpp"

namespace mgeo {

namespace {

double rms_implicit_residual(const ManifoldSpec& spec, const std::vector<Vec3>& pts) {
  double acc = 0.0;
  for (const auto& x : pts) {
    const double f = implicit_residual(spec, x);
    acc += f * f;
  }
  return std::sqrt(acc / static_cast<double>(pts.size()));
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_var(const std::vector<double>& v, double m) {
  if (v.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return acc / static_cast<double>(v.size() - 1);
}

}  // namespace

bool FitResult::has_flag(const std::string& f) const {
  return std::find(flags.begin(), flags.end(), f) != flags.end();
}

FitResult fit_sphere_radius(const std::vector<Vec3>& points) {
  if (points.empty()) throw Error(ErrorCode::InvalidInput, "no points");
  double acc = 0.0;
  for (const auto& x : points) acc += x.norm();
  const double R = acc / static_cast<double>(points.size());
  if (!(R > 0)) throw Error(ErrorCode::DegenerateInput, "all points at the origin");
  FitResult res;
  res.spec = ManifoldSpec::sphere(R);
  res.n_used = points.size();
  res.method = "sphere-mean-norm";
  res.residual = rms_implicit_residual(res.spec, points);
  return res;
}

TorusMomFit fit_torus_mom(const std::vector<Vec3>& points) {
  if (points.size() < 2) throw Error(ErrorCode::InvalidInput, "torus fit needs >= 2 points");
  std::vector<double> rho(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    rho[i] = std::hypot(points[i].x(), points[i].y());

  TorusMomFit out;
  out.instantaneous_rho = rho.back();

  const double R_rho = mean(rho);
  const double r_rho = std::sqrt(2.0 * sample_var(rho, R_rho));

  // Minor angles against the provisional R (one bootstrap iteration: the
  // rho-based R is already consistent, so a single pass suffices).
  std::vector<double> cphi(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double phi = std::atan2(points[i].z(), rho[i] - R_rho);
    cphi[i] = std::cos(phi);
  }
  const double R_paper = mean(cphi);
  double r_paper = 0.0;
  for (double cv : cphi) r_paper += (cv - R_paper) * (cv - R_paper);
  r_paper = std::sqrt(r_paper / static_cast<double>(cphi.size()));

  const bool thin = r_rho < 1e-9 * std::max(1.0, R_rho);

  auto make = [&](double R, double r, const char* tag) {
    FitResult f;
    f.n_used = points.size();
    f.method = tag;
    if (thin) f.flags.push_back("ThinTube");
    // Degenerate or inverted moments cannot form a valid embedded torus spec;
    // keep the raw estimates in a spec only when they are admissible.
    if (R > 0 && r > 0 && R > r) {
      f.spec = ManifoldSpec::torus(R, r);
      f.residual = rms_implicit_residual(f.spec, points);
    } else {
      f.spec = ManifoldSpec::torus(std::max(R, 1e-6) + std::max(r, 1e-6), std::max(r, 1e-6) / 2);
      f.flags.push_back("InadmissibleMoments");
      f.residual = rms_implicit_residual(f.spec, points);
    }
    return f;
  };
  out.rho_variant = make(R_rho, r_rho, "torus-mom-rho");
  out.paper_variant = make(R_paper, r_paper, "torus-mom-cosphi");
  out.rho_mean = R_rho;
  out.rho_r = r_rho;
  out.cos_mean = R_paper;
  out.cos_std = r_paper;
  return out;
}

namespace {

Eigen::VectorXd hyper_residuals(const std::vector<Vec3>& pts, const Eigen::Vector3d& abc) {
  Eigen::VectorXd f(pts.size());
  const double a2 = abc(0) * abc(0), b2 = abc(1) * abc(1), c2 = abc(2) * abc(2);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    f(i) = p.x() * p.x() / a2 + p.y() * p.y() / b2 - p.z() * p.z() / c2 - 1.0;
  }
  return f;
}

}  // namespace

FitResult fit_hyperboloid_nls(const std::vector<Vec3>& points, const HyperboloidFitOptions& opts) {
  if (points.size() < 3) throw Error(ErrorCode::InvalidInput, "hyperboloid fit needs >= 3 points");
  double max_abs_z = 0.0, max_rho = 0.0;
  for (const auto& p : points) {
    max_abs_z = std::max(max_abs_z, std::abs(p.z()));
    max_rho = std::max(max_rho, std::hypot(p.x(), p.y()));
  }
  if (max_abs_z < 1e-9 * std::max(1.0, max_rho))
    throw Error(ErrorCode::IllConditioned, "no spread in z: c is unidentifiable");
  if (max_rho < 1e-9 * std::max(1.0, max_abs_z))
    throw Error(ErrorCode::IllConditioned, "no spread in the xy-plane");

  Eigen::Vector3d abc;
  if (opts.init) {
    abc = *opts.init;
  } else {
    // Data envelope: waist radius from the small-|z| points, c from max |z|.
    std::vector<double> rho_low;
    for (const auto& p : points)
      if (std::abs(p.z()) < 0.25 * max_abs_z) rho_low.push_back(std::hypot(p.x(), p.y()));
    double waist = max_rho / 2;
    if (!rho_low.empty()) {
      std::nth_element(rho_low.begin(), rho_low.begin() + rho_low.size() / 2, rho_low.end());
      waist = rho_low[rho_low.size() / 2];
    }
    abc = Eigen::Vector3d(std::max(waist, 1e-3), std::max(waist, 1e-3), std::max(max_abs_z, 1e-3));
  }

  double lambda = opts.lambda0;
  Eigen::VectorXd f = hyper_residuals(points, abc);
  double obj = f.squaredNorm();
  FitResult res;
  res.n_used = points.size();
  res.method = "hyperboloid-lm";

  for (int it = 0; it < opts.max_iter; ++it) {
    // Numeric Jacobian (forward differences on each semi-axis).
    Eigen::MatrixXd J(points.size(), 3);
    for (int k = 0; k < 3; ++k) {
      const double step = 1e-7 * std::max(1.0, std::abs(abc(k)));
      Eigen::Vector3d pert = abc;
      pert(k) += step;
      J.col(k) = (hyper_residuals(points, pert) - f) / step;
    }
    const Eigen::Vector3d grad = 2.0 * J.transpose() * f;
    if (grad.norm() < opts.grad_tol * (1.0 + obj)) {
      res.spec = ManifoldSpec::hyperboloid(std::abs(abc(0)), std::abs(abc(1)), std::abs(abc(2)));
      res.residual = std::sqrt(obj / static_cast<double>(points.size()));
      return res;
    }
    const Eigen::Matrix3d JtJ = J.transpose() * J;
    bool stepped = false;
    for (int tries = 0; tries < 25; ++tries) {
      Eigen::Matrix3d A = JtJ + lambda * Eigen::Matrix3d(JtJ.diagonal().asDiagonal());
      const Eigen::Vector3d delta = A.ldlt().solve(-(J.transpose() * f));
      Eigen::Vector3d cand = abc + delta;
      cand = cand.cwiseAbs().cwiseMax(1e-9);  // semi-axes stay positive
      const Eigen::VectorXd fc = hyper_residuals(points, cand);
      const double oc = fc.squaredNorm();
      if (oc < obj) {
        abc = cand;
        f = fc;
        obj = oc;
        lambda = std::max(lambda * 0.3, 1e-12);
        stepped = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!stepped) {
      // Damping exhausted: accept only if we are already at first-order
      // optimality, otherwise report non-convergence with the best iterate.
      if (grad.norm() < opts.grad_tol * (1.0 + obj)) break;
      throw ConvergenceError("hyperboloid LM stalled (|grad| " + std::to_string(grad.norm()) + ")",
                             Eigen::VectorXd(abc));
    }
  }
  const Eigen::Vector3d grad_final =
      2.0 * [&] {
        Eigen::MatrixXd J(points.size(), 3);
        for (int k = 0; k < 3; ++k) {
          const double step = 1e-7 * std::max(1.0, std::abs(abc(k)));
          Eigen::Vector3d pert = abc;
          pert(k) += step;
          J.col(k) = (hyper_residuals(points, pert) - f) / step;
        }
        return Eigen::Vector3d(J.transpose() * f);
      }();
  if (grad_final.norm() >= opts.grad_tol * (1.0 + obj))
    throw ConvergenceError("hyperboloid LM reached max_iter", Eigen::VectorXd(abc));
  res.spec = ManifoldSpec::hyperboloid(std::abs(abc(0)), std::abs(abc(1)), std::abs(abc(2)));
  res.residual = std::sqrt(obj / static_cast<double>(points.size()));
  return res;
}

const FitResult& StreamFitter::reestimate(const std::vector<Vec3>& path, std::size_t prefix_len,
                                          GeometryKind active) {
  if (prefix_len > path.size())
    throw Error(ErrorCode::InvalidInput, "prefix exceeds path length");
  if (prefix_len < min_window_)
    throw Error(ErrorCode::MinWindow, "prefix shorter than the minimum window (" +
                                          std::to_string(min_window_) + ")");
  const auto key = std::make_pair(static_cast<int>(active), prefix_len);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;

  std::vector<Vec3> prefix(path.begin(), path.begin() + static_cast<std::ptrdiff_t>(prefix_len));
  FitResult fit;
  switch (active) {
    case GeometryKind::Sphere:
      fit = fit_sphere_radius(prefix);
      break;
    case GeometryKind::Torus: {
      TorusMomFit mom = fit_torus_mom(prefix);
      instantaneous_rho_ = mom.instantaneous_rho;
      fit = mom.rho_variant;
      break;
    }
    case GeometryKind::Hyperboloid:
      fit = fit_hyperboloid_nls(prefix);
      break;
    case GeometryKind::Euclidean3:
      fit.spec = ManifoldSpec::euclidean();
      fit.n_used = prefix.size();
      fit.method = "euclidean-identity";
      break;
  }
  return cache_.emplace(key, std::move(fit)).first->second;
}

}  // namespace mgeo
