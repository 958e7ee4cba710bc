#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mgeo/geometry.hpp"

namespace mgeo {

/// Quadratic Monge-patch coefficients of z = a x^2 + b x y + c y^2 + d x + e y + f.
struct MongeCoeffs {
  double a = 0, b = 0, c = 0, d = 0, e = 0, f = 0;
};

enum class WindowMode : std::uint8_t { Expanding, Rolling };

struct CurvatureConfig {
  WindowMode window = WindowMode::Rolling;
  std::size_t rolling_len = 40;   // used when window == Rolling
  std::size_t min_window = 30;    // m0; must be >= 6 (six Monge coefficients)
  double alpha = 0.0;             // exponential recency weight, w_i ~ e^{-alpha (t - s_i)}
  std::size_t smooth_len = 5;     // trailing moving-average pre-smoothing
  double kappa_pos = 0.01;
  double kappa_neg = 0.01;
  /// When set, fits z on (x, y) in raw ambient coordinates, skipping the
  /// local-frame alignment (frame-dependent; kept for comparison only).
  bool frame_free = false;
  /// When set, K uses the second-order denominator (1 + 4a^2 + b^2 + 4c^2)^2
  /// instead of the first-order (1 + d^2 + e^2)^2; see monge_gaussian_curvature.
  bool second_order_denominator = false;
};

enum class RegimeLabel : std::uint8_t { SphereLike, HyperbolicLike, Flat, TorusLike };
std::string to_string(RegimeLabel r);

struct CurvatureSeries {
  /// K per path index; NaN before the first full window and at skipped fits.
  std::vector<double> K;
  std::vector<double> condition;  // design-matrix condition number per index
  std::vector<double> r2;         // fit R^2 per index
  std::size_t first_defined = 0;
  std::size_t skipped = 0;  // rank-deficient windows recorded as gaps

  bool defined(std::size_t i) const { return i < K.size() && !std::isnan(K[i]); }
};

/// Weighted least squares for the quadratic Monge patch. `weights` may be
/// empty (uniform). Throws SingularFit when the weighted design is
/// rank-deficient (condition number above 1e12).
MongeCoeffs monge_fit(const std::vector<Vec3>& window, const std::vector<double>& weights = {});

/// Gaussian curvature from quadratic coefficients with the second-order
/// denominator convention: K = (4ac - b^2) / (1 + 4a^2 + b^2 + 4c^2)^2.
double curvature_at(const MongeCoeffs& m);

/// Gaussian curvature of the graph z = f(x,y) at the window centre using the
/// fitted gradient: K = (4ac - b^2) / (1 + d^2 + e^2)^2. After local-frame
/// alignment d, e ~ 0 and this recovers the surface curvature scale; it is
/// what curvature_series uses by default.
double monge_gaussian_curvature(const MongeCoeffs& m);

/// Rolling/expanding curvature estimation along a path: trailing moving
/// average pre-smoothing, per-window centering + rotation of the best-fit
/// plane normal onto the z-axis, weighted Monge fit, curvature formula.
CurvatureSeries curvature_series(const std::vector<Vec3>& path, const CurvatureConfig& cfg);

struct RegimeSummary {
  std::vector<std::optional<RegimeLabel>> labels;  // nullopt where K undefined
  std::array<double, 4> shares{};  // indexed by RegimeLabel, sums to 1 over defined
  std::size_t defined = 0;
};

/// Decision rule per index: TorusLike when the topology flag is set, else
/// SphereLike if K >= kappa_pos, HyperbolicLike if K <= -kappa_neg, else Flat.
/// `torus_flags` may be empty (no topological information).
RegimeSummary classify_regimes(const std::vector<double>& K,
                               const std::vector<bool>& torus_flags, double kappa_pos,
                               double kappa_neg);

}  // namespace mgeo
