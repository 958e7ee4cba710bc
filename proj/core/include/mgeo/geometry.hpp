#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mgeo/errors.hpp"
#include "mgeo/rng.hpp"

namespace mgeo {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kPi = 3.1415926535897932384626433832795;

enum class GeometryKind : std::uint8_t { Euclidean3, Sphere, Torus, Hyperboloid };

std::string to_string(GeometryKind k);
GeometryKind geometry_kind_from_string(const std::string& s);

/// One of the four surfaces together with its shape parameters.
///   Sphere       radius R > 0
///   Torus        major radius R > minor radius r > 0 (embedded, no self-intersection)
///   Hyperboloid  one-sheeted, semi-axes a, b, c > 0 (x/a)^2 + (y/b)^2 - (z/c)^2 = 1
///   Euclidean3   no parameters
struct ManifoldSpec {
  GeometryKind kind = GeometryKind::Euclidean3;
  double R = 0.0;  // sphere or torus major radius
  double r = 0.0;  // torus minor radius
  double a = 0.0, b = 0.0, c = 0.0;  // hyperboloid semi-axes

  static ManifoldSpec euclidean();
  static ManifoldSpec sphere(double R);
  static ManifoldSpec torus(double R, double r);
  static ManifoldSpec hyperboloid(double a, double b, double c);

  /// Largest linear dimension of the surface; used to scale tolerances.
  double length_scale() const;

  bool operator==(const ManifoldSpec&) const = default;
};

/// Intrinsic coordinates. Meaning of (u, v) by geometry:
///   Sphere       u = theta in [0, 2pi), v = phi in [0, pi]
///   Torus        u = theta in [0, 2pi), v = phi in [0, 2pi)
///   Hyperboloid  u in R, v in [0, 2pi)
/// Euclidean3 has no chart; chart operations reject it.
struct ChartPoint {
  GeometryKind kind = GeometryKind::Sphere;
  double u = 0.0;
  double v = 0.0;
};

/// Tangent vector at a base point. Sphere/Euclidean tangents are ambient
/// 3-vectors (orthogonal to the normal for the sphere); torus/hyperboloid
/// tangents live in chart coordinates as 2-vectors.
struct TangentVec {
  GeometryKind kind = GeometryKind::Euclidean3;
  Vec3 base = Vec3::Zero();        // ambient base point
  Vec3 ambient = Vec3::Zero();     // used for Euclidean3 / Sphere
  Vec2 chart = Vec2::Zero();       // used for Torus / Hyperboloid
};

/// Wraps an angle difference into [-pi, pi).
double wrap_angle(double alpha);

/// Wraps an angle into the canonical storage range [0, 2pi).
double canonical_angle(double alpha);

/// Signed value of the implicit surface equation phi(x); zero on the surface.
double implicit_residual(const ManifoldSpec& spec, const Vec3& x);

/// |phi(x)| below a tolerance scaled by max(1, length_scale)^2.
bool on_manifold(const ManifoldSpec& spec, const Vec3& x, double tol = 1e-9);

/// Outward unit normal from the implicit-equation gradient.
/// Throws DegenerateNormal when the gradient vanishes.
Vec3 unit_normal(const ManifoldSpec& spec, const Vec3& x);

/// P(x) = I - n n^T. Identity for Euclidean3.
Mat3 tangent_projector(const ManifoldSpec& spec, const Vec3& x);

/// Mean curvature vector H(x) = (div n)(x) n(x); the Ito drift of surface
/// Brownian motion is -H/2. Zero for Euclidean3.
Vec3 mean_curvature_vector(const ManifoldSpec& spec, const Vec3& x);

/// Cartesian -> chart. Throws OffManifold when |phi(x)| exceeds `tol`
/// (scaled like on_manifold); pass tol <= 0 to skip the residual check and
/// extract nearest-chart coordinates from an arbitrary point.
ChartPoint to_chart(const ManifoldSpec& spec, const Vec3& x, double tol = 1e-6);

/// Chart -> Cartesian.
Vec3 from_chart(const ManifoldSpec& spec, const ChartPoint& c);

/// Riemannian log: tangent vector at `base` pointing to `point`.
/// Sphere inputs are radially normalized onto S^2(R) first; antipodal pairs
/// are rejected. Torus/hyperboloid use shortest-arc chart differencing in
/// their orthogonal coordinates - a chart-level approximation that matches
/// the exact Riemannian maps only for small moves (exact round trips with
/// exp_map either way).
TangentVec log_map(const ManifoldSpec& spec, const Vec3& base, const Vec3& point);

/// Riemannian exp: follows the tangent vector from `base` back to the surface.
Vec3 exp_map(const ManifoldSpec& spec, const Vec3& base, const TangentVec& v);

/// Convenience: log/exp in chart coordinates for Torus/Hyperboloid.
Vec2 chart_log(const ManifoldSpec& spec, const Vec2& base_uv, const Vec2& point_uv);
Vec2 chart_exp(const ManifoldSpec& spec, const Vec2& base_uv, const Vec2& delta_uv);

struct KarcherResult {
  Vec3 mean = Vec3::Zero();
  int iterations = 0;
  double grad_norm = 0.0;
};

/// Intrinsic mean by fixed-point iteration mu <- exp_mu(avg log_mu(x_i)).
/// Throws ConvergenceError (carrying the last iterate) after max_iter.
KarcherResult karcher_mean(const ManifoldSpec& spec, const std::vector<Vec3>& points,
                           int max_iter = 100, double tol = 1e-10);

/// Closed-form Gaussian curvature at a chart point (units 1/length^2).
double analytic_gaussian_curvature(const ManifoldSpec& spec, const ChartPoint& c);

struct UniformSampleConfig {
  double u_min = -2.0;  // hyperboloid patch bounds
  double u_max = 2.0;
  int table_size = 2048;  // inverse-CDF tabulation of the u-marginal
};

/// Draws n points from the surface area measure. Sphere and torus use the
/// standard closed-form / rejection constructions; the hyperboloid tabulates
/// the u-marginal of dA on [u_min, u_max] and inverts it numerically, then
/// draws v by rejection against the conditional density (exact for a != b).
std::vector<Vec3> sample_uniform(const ManifoldSpec& spec, std::size_t n,
                                 std::uint64_t seed, const UniformSampleConfig& cfg = {});

/// Closest-point reprojection onto the surface (identity for Euclidean3).
/// Sphere/torus are closed form; the hyperboloid takes Newton steps along the
/// implicit gradient.
Vec3 reproject(const ManifoldSpec& spec, const Vec3& x);

}  // namespace mgeo
