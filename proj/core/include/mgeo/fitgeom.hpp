#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mgeo/geometry.hpp"

namespace mgeo {

/// Outcome of a shape-parameter fit. `residual` is the root-mean-square value
/// of the surface's implicit equation over the points used.
struct FitResult {
  ManifoldSpec spec;
  double residual = 0.0;
  std::size_t n_used = 0;
  std::string method;
  std::vector<std::string> flags;  // e.g. "ThinTube", "RidgeFallback"

  bool has_flag(const std::string& f) const;
};

/// Radius estimate R = mean |x_t| (the least-squares minimizer of
/// sum (|x_t| - R)^2).
FitResult fit_sphere_radius(const std::vector<Vec3>& points);

/// Both torus method-of-moments readings. The rho-based variant
///   R = mean(rho_t),  r = sqrt(2 Var(rho_t)),  rho_t = sqrt(x^2 + y^2)
/// is dimensionally consistent and is the default; the cos(phi)-moment
/// variant (R = mean cos phi_t, r = std cos phi_t, "normalized units") is
/// kept verbatim for comparison. phi_t needs a provisional major radius, so
/// the angle extraction bootstraps with R0 = mean(rho_t) and iterates once.
struct TorusMomFit {
  FitResult rho_variant;    // default
  FitResult paper_variant;  // cos-phi moments
  double instantaneous_rho = 0.0;  // latest rho_t, tube-thickness proxy
  /// Raw moment estimates before the embedded-torus admissibility projection
  /// (the cos-phi pair is dimensionless and frequently inadmissible as radii).
  double rho_mean = 0.0, rho_r = 0.0;
  double cos_mean = 0.0, cos_std = 0.0;
};
TorusMomFit fit_torus_mom(const std::vector<Vec3>& points);

struct HyperboloidFitOptions {
  std::optional<Eigen::Vector3d> init;  // (a, b, c); data-envelope default
  double lambda0 = 1e-3;                // initial LM damping
  int max_iter = 200;
  double grad_tol = 1e-8;  // stop when |grad| < grad_tol * (1 + objective)
};

/// Nonlinear least squares for the one-sheeted hyperboloid
/// F = x^2/a^2 + y^2/b^2 - z^2/c^2 - 1, by Levenberg-Marquardt with a
/// numeric Jacobian. Throws IllConditioned when the parameters are not
/// identifiable (no spread in z or in the xy-plane) and ConvergenceError
/// (with the best iterate) when LM stalls.
FitResult fit_hyperboloid_nls(const std::vector<Vec3>& points,
                              const HyperboloidFitOptions& opts = {});

/// Streaming re-estimation with per-index caching, used by the forecasting
/// pipeline. Results for a given (geometry, prefix length) are computed once.
class StreamFitter {
 public:
  explicit StreamFitter(std::size_t min_window = 30) : min_window_(min_window) {}

  /// Fits the active geometry on path[0..prefix_len). Throws MinWindow when
  /// the prefix is shorter than the minimum window.
  const FitResult& reestimate(const std::vector<Vec3>& path, std::size_t prefix_len,
                              GeometryKind active);

  std::size_t min_window() const { return min_window_; }

  /// Latest rho_t of the most recent torus fit: the instantaneous
  /// tube-thickness proxy tracking slow deformations in non-stationary
  /// segments. Zero before any torus re-estimation.
  double instantaneous_tube_radius() const { return instantaneous_rho_; }

 private:
  std::size_t min_window_;
  double instantaneous_rho_ = 0.0;
  std::map<std::pair<int, std::size_t>, FitResult> cache_;
};

}  // namespace mgeo
