#include "mgeo/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace mgeo {

namespace {

double sq(double x) { return x * x; }

void require_finite(const Vec3& x, const char* what) {
  if (!x.allFinite()) throw Error(ErrorCode::InvalidInput, std::string(what) + " has non-finite components");
}

}  // namespace

std::string to_string(GeometryKind k) {
  switch (k) {
    case GeometryKind::Euclidean3: return "Euclidean3";
    case GeometryKind::Sphere: return "Sphere";
    case GeometryKind::Torus: return "Torus";
    case GeometryKind::Hyperboloid: return "Hyperboloid";
  }
  return "Unknown";
}

GeometryKind geometry_kind_from_string(const std::string& s) {
  if (s == "Euclidean3") return GeometryKind::Euclidean3;
  if (s == "Sphere") return GeometryKind::Sphere;
  if (s == "Torus") return GeometryKind::Torus;
  if (s == "Hyperboloid") return GeometryKind::Hyperboloid;
  throw Error(ErrorCode::InvalidInput, "unknown geometry kind '" + s + "'");
}

ManifoldSpec ManifoldSpec::euclidean() { return {GeometryKind::Euclidean3, 0, 0, 0, 0, 0}; }

ManifoldSpec ManifoldSpec::sphere(double R) {
  if (!(R > 0)) throw Error(ErrorCode::InvalidInput, "sphere radius must be positive");
  ManifoldSpec s;
  s.kind = GeometryKind::Sphere;
  s.R = R;
  return s;
}

ManifoldSpec ManifoldSpec::torus(double R, double r) {
  if (!(R > 0) || !(r > 0)) throw Error(ErrorCode::InvalidInput, "torus radii must be positive");
  if (!(R > r)) throw Error(ErrorCode::InvalidInput, "torus requires R > r");
  ManifoldSpec s;
  s.kind = GeometryKind::Torus;
  s.R = R;
  s.r = r;
  return s;
}

ManifoldSpec ManifoldSpec::hyperboloid(double a, double b, double c) {
  if (!(a > 0) || !(b > 0) || !(c > 0))
    throw Error(ErrorCode::InvalidInput, "hyperboloid semi-axes must be positive");
  ManifoldSpec s;
  s.kind = GeometryKind::Hyperboloid;
  s.a = a;
  s.b = b;
  s.c = c;
  return s;
}

double ManifoldSpec::length_scale() const {
  switch (kind) {
    case GeometryKind::Euclidean3: return 1.0;
    case GeometryKind::Sphere: return R;
    case GeometryKind::Torus: return R + r;
    case GeometryKind::Hyperboloid: return std::max({a, b, c});
  }
  return 1.0;
}

double wrap_angle(double alpha) {
  double w = std::fmod(alpha + kPi, kTwoPi);
  if (w < 0) w += kTwoPi;
  return w - kPi;
}

double canonical_angle(double alpha) {
  double w = std::fmod(alpha, kTwoPi);
  if (w < 0) w += kTwoPi;
  return w;
}

double implicit_residual(const ManifoldSpec& spec, const Vec3& x) {
  switch (spec.kind) {
    case GeometryKind::Euclidean3:
      return 0.0;
    case GeometryKind::Sphere:
      return x.squaredNorm() - sq(spec.R);
    case GeometryKind::Torus: {
      const double rho = std::hypot(x.x(), x.y());
      return sq(spec.R - rho) + sq(x.z()) - sq(spec.r);
    }
    case GeometryKind::Hyperboloid:
      return sq(x.x() / spec.a) + sq(x.y() / spec.b) - sq(x.z() / spec.c) - 1.0;
  }
  return 0.0;
}

bool on_manifold(const ManifoldSpec& spec, const Vec3& x, double tol) {
  // The hyperboloid equation is dimensionless; sphere/torus residuals carry
  // length^2 units, so scale those by the squared size of the surface.
  double scale = 1.0;
  if (spec.kind == GeometryKind::Sphere || spec.kind == GeometryKind::Torus)
    scale = std::max(1.0, sq(spec.length_scale()));
  return std::abs(implicit_residual(spec, x)) <= tol * scale;
}

namespace {

Vec3 implicit_gradient(const ManifoldSpec& spec, const Vec3& x) {
  switch (spec.kind) {
    case GeometryKind::Euclidean3:
      return Vec3::Zero();
    case GeometryKind::Sphere:
      return 2.0 * x;
    case GeometryKind::Torus: {
      const double rho = std::hypot(x.x(), x.y());
      if (rho < 1e-300) return Vec3(0, 0, 2 * x.z());
      const double f = spec.R - rho;
      return Vec3(-2.0 * f * x.x() / rho, -2.0 * f * x.y() / rho, 2.0 * x.z());
    }
    case GeometryKind::Hyperboloid:
      return Vec3(2 * x.x() / sq(spec.a), 2 * x.y() / sq(spec.b), -2 * x.z() / sq(spec.c));
  }
  return Vec3::Zero();
}

Mat3 implicit_hessian(const ManifoldSpec& spec, const Vec3& x) {
  Mat3 h = Mat3::Zero();
  switch (spec.kind) {
    case GeometryKind::Euclidean3:
      break;
    case GeometryKind::Sphere:
      h = 2.0 * Mat3::Identity();
      break;
    case GeometryKind::Torus: {
      const double rho = std::hypot(x.x(), x.y());
      const double f = spec.R - rho;
      const double rho3 = rho * rho * rho;
      h(0, 0) = 2.0 * sq(x.x()) / sq(rho) - 2.0 * f * sq(x.y()) / rho3;
      h(1, 1) = 2.0 * sq(x.y()) / sq(rho) - 2.0 * f * sq(x.x()) / rho3;
      h(0, 1) = h(1, 0) = 2.0 * x.x() * x.y() / sq(rho) + 2.0 * f * x.x() * x.y() / rho3;
      h(2, 2) = 2.0;
      break;
    }
    case GeometryKind::Hyperboloid:
      h(0, 0) = 2.0 / sq(spec.a);
      h(1, 1) = 2.0 / sq(spec.b);
      h(2, 2) = -2.0 / sq(spec.c);
      break;
  }
  return h;
}

}  // namespace

Vec3 unit_normal(const ManifoldSpec& spec, const Vec3& x) {
  require_finite(x, "point");
  if (spec.kind == GeometryKind::Euclidean3)
    throw Error(ErrorCode::DegenerateNormal, "Euclidean3 has no surface normal");
  const Vec3 g = implicit_gradient(spec, x);
  const double n = g.norm();
  if (n < 1e-12) throw Error(ErrorCode::DegenerateNormal, "implicit gradient vanishes");
  return g / n;
}

Mat3 tangent_projector(const ManifoldSpec& spec, const Vec3& x) {
  require_finite(x, "point");
  if (spec.kind == GeometryKind::Euclidean3) return Mat3::Identity();
  const Vec3 n = unit_normal(spec, x);
  return Mat3::Identity() - n * n.transpose();
}

Vec3 mean_curvature_vector(const ManifoldSpec& spec, const Vec3& x) {
  require_finite(x, "point");
  if (spec.kind == GeometryKind::Euclidean3) return Vec3::Zero();
  const Vec3 g = implicit_gradient(spec, x);
  const double gn = g.norm();
  if (gn < 1e-12) throw Error(ErrorCode::DegenerateNormal, "implicit gradient vanishes");
  const Vec3 n = g / gn;
  const Mat3 hess = implicit_hessian(spec, x);
  // div(n) = (trace(H) - n^T H n) / |grad phi|, the sum of principal
  // curvatures with respect to the outward normal.
  const double div_n = (hess.trace() - n.dot(hess * n)) / gn;
  return div_n * n;
}

ChartPoint to_chart(const ManifoldSpec& spec, const Vec3& x, double tol) {
  require_finite(x, "point");
  if (spec.kind == GeometryKind::Euclidean3)
    throw Error(ErrorCode::InvalidInput, "Euclidean3 has no chart");
  if (tol > 0 && !on_manifold(spec, x, tol))
    throw Error(ErrorCode::OffManifold, "point is off the surface (residual " +
                                            std::to_string(implicit_residual(spec, x)) + ")");
  ChartPoint c;
  c.kind = spec.kind;
  switch (spec.kind) {
    case GeometryKind::Sphere: {
      const double n = x.norm();
      if (n < 1e-300) throw Error(ErrorCode::DegenerateNormal, "origin has no spherical chart");
      c.u = canonical_angle(std::atan2(x.y(), x.x()));
      c.v = std::acos(std::clamp(x.z() / n, -1.0, 1.0));
      break;
    }
    case GeometryKind::Torus: {
      const double rho = std::hypot(x.x(), x.y());
      c.u = canonical_angle(std::atan2(x.y(), x.x()));
      c.v = canonical_angle(std::atan2(x.z(), rho - spec.R));
      break;
    }
    case GeometryKind::Hyperboloid: {
      c.u = std::asinh(x.z() / spec.c);
      c.v = canonical_angle(std::atan2(x.y() / spec.b, x.x() / spec.a));
      break;
    }
    default:
      break;
  }
  return c;
}

Vec3 from_chart(const ManifoldSpec& spec, const ChartPoint& c) {
  if (c.kind != spec.kind) throw Error(ErrorCode::InvalidInput, "chart/spec geometry mismatch");
  switch (spec.kind) {
    case GeometryKind::Euclidean3:
      throw Error(ErrorCode::InvalidInput, "Euclidean3 has no chart");
    case GeometryKind::Sphere:
      return Vec3(spec.R * std::sin(c.v) * std::cos(c.u), spec.R * std::sin(c.v) * std::sin(c.u),
                  spec.R * std::cos(c.v));
    case GeometryKind::Torus: {
      const double w = spec.R + spec.r * std::cos(c.v);
      return Vec3(w * std::cos(c.u), w * std::sin(c.u), spec.r * std::sin(c.v));
    }
    case GeometryKind::Hyperboloid:
      return Vec3(spec.a * std::cosh(c.u) * std::cos(c.v), spec.b * std::cosh(c.u) * std::sin(c.v),
                  spec.c * std::sinh(c.u));
  }
  return Vec3::Zero();
}

Vec2 chart_log(const ManifoldSpec& spec, const Vec2& base_uv, const Vec2& point_uv) {
  switch (spec.kind) {
    case GeometryKind::Torus:
      return Vec2(wrap_angle(point_uv.x() - base_uv.x()), wrap_angle(point_uv.y() - base_uv.y()));
    case GeometryKind::Hyperboloid:
      return Vec2(point_uv.x() - base_uv.x(), wrap_angle(point_uv.y() - base_uv.y()));
    default:
      throw Error(ErrorCode::InvalidInput, "chart_log is defined for Torus/Hyperboloid only");
  }
}

Vec2 chart_exp(const ManifoldSpec& spec, const Vec2& base_uv, const Vec2& delta_uv) {
  switch (spec.kind) {
    case GeometryKind::Torus:
      return Vec2(canonical_angle(base_uv.x() + delta_uv.x()),
                  canonical_angle(base_uv.y() + delta_uv.y()));
    case GeometryKind::Hyperboloid:
      return Vec2(base_uv.x() + delta_uv.x(), canonical_angle(base_uv.y() + delta_uv.y()));
    default:
      throw Error(ErrorCode::InvalidInput, "chart_exp is defined for Torus/Hyperboloid only");
  }
}

TangentVec log_map(const ManifoldSpec& spec, const Vec3& base, const Vec3& point) {
  require_finite(base, "base");
  require_finite(point, "point");
  TangentVec out;
  out.kind = spec.kind;
  out.base = base;
  switch (spec.kind) {
    case GeometryKind::Euclidean3:
      out.ambient = point - base;
      return out;
    case GeometryKind::Sphere: {
      const double R = spec.R;
      const double bn = base.norm(), pn = point.norm();
      if (bn < 1e-300 || pn < 1e-300)
        throw Error(ErrorCode::InvalidInput, "sphere log undefined at the origin");
      const Vec3 mu = base * (R / bn);
      const Vec3 p = point * (R / pn);
      const double cosang = std::clamp(mu.dot(p) / (R * R), -1.0, 1.0);
      if (cosang <= -1.0 + 1e-9)
        throw Error(ErrorCode::AntipodalPoints, "sphere log undefined for antipodal points");
      const double theta = std::acos(cosang);
      if (theta < 1e-12) {
        out.ambient = Vec3::Zero();
        return out;
      }
      // Pi_mu p: tangent projection of p at mu; rescaled so |log| = R*theta.
      const Vec3 n = mu / R;
      const Vec3 proj = p - n.dot(p) * n;
      out.ambient = (theta / std::sin(theta)) * proj;
      return out;
    }
    case GeometryKind::Torus:
    case GeometryKind::Hyperboloid: {
      const ChartPoint cb = to_chart(spec, base, /*tol=*/-1.0);
      const ChartPoint cp = to_chart(spec, point, /*tol=*/-1.0);
      out.chart = chart_log(spec, Vec2(cb.u, cb.v), Vec2(cp.u, cp.v));
      if (!out.chart.allFinite()) throw Error(ErrorCode::InvalidInput, "non-finite chart log");
      return out;
    }
  }
  return out;
}

Vec3 exp_map(const ManifoldSpec& spec, const Vec3& base, const TangentVec& v) {
  require_finite(base, "base");
  switch (spec.kind) {
    case GeometryKind::Euclidean3:
      return base + v.ambient;
    case GeometryKind::Sphere: {
      const double R = spec.R;
      const double bn = base.norm();
      if (bn < 1e-300) throw Error(ErrorCode::InvalidInput, "sphere exp undefined at the origin");
      const Vec3 mu = base * (R / bn);
      // Keep only the tangential part; callers may pass slightly off-tangent vectors.
      const Vec3 n = mu / R;
      const Vec3 t = v.ambient - n.dot(v.ambient) * n;
      const double norm = t.norm();
      if (norm < 1e-300) return mu;
      return std::cos(norm / R) * mu + (R * std::sin(norm / R) / norm) * t;
    }
    case GeometryKind::Torus:
    case GeometryKind::Hyperboloid: {
      const ChartPoint cb = to_chart(spec, base, /*tol=*/-1.0);
      const Vec2 uv = chart_exp(spec, Vec2(cb.u, cb.v), v.chart);
      ChartPoint cp;
      cp.kind = spec.kind;
      cp.u = uv.x();
      cp.v = uv.y();
      return from_chart(spec, cp);
    }
  }
  return base;
}

KarcherResult karcher_mean(const ManifoldSpec& spec, const std::vector<Vec3>& points,
                           int max_iter, double tol) {
  if (points.empty()) throw Error(ErrorCode::InvalidInput, "karcher_mean needs at least one point");
  KarcherResult res;
  if (spec.kind == GeometryKind::Euclidean3) {
    Vec3 acc = Vec3::Zero();
    for (const auto& p : points) acc += p;
    res.mean = acc / static_cast<double>(points.size());
    res.iterations = 1;
    return res;
  }
  Vec3 mu = reproject(spec, points.front());
  for (int it = 1; it <= max_iter; ++it) {
    TangentVec step;
    step.kind = spec.kind;
    Vec3 acc3 = Vec3::Zero();
    Vec2 acc2 = Vec2::Zero();
    for (const auto& p : points) {
      const TangentVec l = log_map(spec, mu, p);
      acc3 += l.ambient;
      acc2 += l.chart;
    }
    const double n = static_cast<double>(points.size());
    step.ambient = acc3 / n;
    step.chart = acc2 / n;
    const double grad = std::max(step.ambient.norm(), step.chart.norm());
    mu = exp_map(spec, mu, step);
    res.iterations = it;
    res.grad_norm = grad;
    if (grad < tol) {
      res.mean = mu;
      return res;
    }
  }
  throw ConvergenceError("karcher_mean did not converge in " + std::to_string(max_iter) +
                             " iterations (grad " + std::to_string(res.grad_norm) + ")",
                         Eigen::VectorXd(mu));
}

double analytic_gaussian_curvature(const ManifoldSpec& spec, const ChartPoint& c) {
  switch (spec.kind) {
    case GeometryKind::Euclidean3:
      return 0.0;
    case GeometryKind::Sphere:
      return 1.0 / sq(spec.R);
    case GeometryKind::Torus:
      return std::cos(c.v) / (spec.r * (spec.R + spec.r * std::cos(c.v)));
    case GeometryKind::Hyperboloid: {
      // K = -1 / (a^2 b^2 c^2 (x^2/a^4 + y^2/b^4 + z^2/c^4)^2) on the surface.
      const Vec3 x = from_chart(spec, c);
      const double s = sq(x.x()) / sq(sq(spec.a)) + sq(x.y()) / sq(sq(spec.b)) +
                       sq(x.z()) / sq(sq(spec.c));
      return -1.0 / (sq(spec.a) * sq(spec.b) * sq(spec.c) * sq(s));
    }
  }
  return 0.0;
}

namespace {

// Area element |Phi_u x Phi_v| of the hyperboloid chart.
double hyperboloid_area_density(const ManifoldSpec& s, double u, double v) {
  const double ch = std::cosh(u), sh = std::sinh(u);
  const double t1 = sq(s.b * s.c * std::cos(v)) + sq(s.a * s.c * std::sin(v));
  return ch * std::sqrt(t1 * sq(ch) + sq(s.a * s.b * sh));
}

}  // namespace

std::vector<Vec3> sample_uniform(const ManifoldSpec& spec, std::size_t n, std::uint64_t seed,
                                 const UniformSampleConfig& cfg) {
  std::vector<Vec3> out;
  out.reserve(n);
  if (n == 0) return out;
  Rng rng(seed);
  switch (spec.kind) {
    case GeometryKind::Euclidean3:
      throw Error(ErrorCode::InvalidInput, "Euclidean3 has no area measure to sample");
    case GeometryKind::Sphere: {
      for (std::size_t i = 0; i < n; ++i) {
        const double theta = kTwoPi * rng.uniform();
        const double cosphi = 1.0 - 2.0 * rng.uniform();
        const double sinphi = std::sqrt(std::max(0.0, 1.0 - sq(cosphi)));
        out.emplace_back(spec.R * sinphi * std::cos(theta), spec.R * sinphi * std::sin(theta),
                         spec.R * cosphi);
      }
      return out;
    }
    case GeometryKind::Torus: {
      // phi by rejection against R + r cos(phi); theta uniform.
      for (std::size_t i = 0; i < n; ++i) {
        double phi;
        do {
          phi = kTwoPi * rng.uniform();
        } while (rng.uniform() * (spec.R + spec.r) > spec.R + spec.r * std::cos(phi));
        const double theta = kTwoPi * rng.uniform();
        ChartPoint c{GeometryKind::Torus, theta, phi};
        out.push_back(from_chart(spec, c));
      }
      return out;
    }
    case GeometryKind::Hyperboloid: {
      if (!(cfg.u_max > cfg.u_min))
        throw Error(ErrorCode::InvalidInput, "hyperboloid sampling needs u_min < u_max");
      const int m = std::max(cfg.table_size, 16);
      // Tabulate the u-marginal m(u) = int_0^{2pi} |Phi_u x Phi_v| dv by a
      // trapezoid rule on the inner integral, then build its inverse CDF.
      const int nv = 64;
      std::vector<double> marginal(m + 1), cdf(m + 1, 0.0), us(m + 1);
      double vmax_density = 0.0;
      for (int i = 0; i <= m; ++i) {
        const double u = cfg.u_min + (cfg.u_max - cfg.u_min) * i / m;
        us[i] = u;
        double acc = 0.0;
        for (int j = 0; j < nv; ++j) {
          const double v = kTwoPi * j / nv;
          const double d = hyperboloid_area_density(spec, u, v);
          acc += d;
          vmax_density = std::max(vmax_density, d);
        }
        marginal[i] = acc * (kTwoPi / nv);
      }
      for (int i = 1; i <= m; ++i)
        cdf[i] = cdf[i - 1] + 0.5 * (marginal[i - 1] + marginal[i]) * (us[i] - us[i - 1]);
      const double total = cdf[m];
      for (std::size_t k = 0; k < n; ++k) {
        const double target = rng.uniform() * total;
        auto it = std::lower_bound(cdf.begin(), cdf.end(), target);
        int hi = std::clamp<int>(static_cast<int>(it - cdf.begin()), 1, m);
        const double seg = cdf[hi] - cdf[hi - 1];
        const double frac = seg > 0 ? (target - cdf[hi - 1]) / seg : 0.5;
        const double u = us[hi - 1] + frac * (us[hi] - us[hi - 1]);
        // v | u by rejection against the v-profile (non-uniform when a != b).
        double v;
        do {
          v = kTwoPi * rng.uniform();
        } while (rng.uniform() * vmax_density > hyperboloid_area_density(spec, u, v));
        ChartPoint c{GeometryKind::Hyperboloid, u, v};
        out.push_back(from_chart(spec, c));
      }
      return out;
    }
  }
  return out;
}

Vec3 reproject(const ManifoldSpec& spec, const Vec3& x) {
  switch (spec.kind) {
    case GeometryKind::Euclidean3:
      return x;
    case GeometryKind::Sphere: {
      const double n = x.norm();
      if (n < 1e-300) throw Error(ErrorCode::DegenerateNormal, "cannot project origin to sphere");
      return x * (spec.R / n);
    }
    case GeometryKind::Torus: {
      const double rho = std::hypot(x.x(), x.y());
      if (rho < 1e-300)
        throw Error(ErrorCode::DegenerateNormal, "cannot project axis point to torus");
      const Vec3 ring(spec.R * x.x() / rho, spec.R * x.y() / rho, 0.0);
      Vec3 d = x - ring;
      const double dn = d.norm();
      if (dn < 1e-300) {
        // Tube-center point: any minor angle is equidistant; pick phi = 0.
        return ring * ((spec.R + spec.r) / spec.R);
      }
      return ring + d * (spec.r / dn);
    }
    case GeometryKind::Hyperboloid: {
      // Newton along the gradient direction: solve phi(x - t g) = 0 for t.
      Vec3 y = x;
      for (int it = 0; it < 8; ++it) {
        const double f = implicit_residual(spec, y);
        if (std::abs(f) < 1e-14) break;
        const Vec3 g = implicit_gradient(spec, y);
        const double g2 = g.squaredNorm();
        if (g2 < 1e-24) break;
        y -= g * (f / g2);
      }
      return y;
    }
  }
  return x;
}

}  // namespace mgeo
