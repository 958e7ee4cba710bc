#include <cmath>

#include <Eigen/Geometry>

#include "doctest.h"
#include "mgeo/geometry.hpp"
#include "test_helpers.hpp"

using namespace mgeo;

namespace {

const ManifoldSpec kSphere1 = ManifoldSpec::sphere(1.0);
const ManifoldSpec kSphere2 = ManifoldSpec::sphere(2.0);
const ManifoldSpec kTorus31 = ManifoldSpec::torus(3.0, 1.0);
const ManifoldSpec kHyper112 = ManifoldSpec::hyperboloid(1.0, 1.0, 2.0);
const ManifoldSpec kEuclid = ManifoldSpec::euclidean();

std::vector<ManifoldSpec> surface_specs() { return {kSphere1, kTorus31, kHyper112}; }

}  // namespace

TEST_CASE("spec invariants are enforced") {
  CHECK_THROWS_AS(ManifoldSpec::sphere(-1.0), Error);
  CHECK_THROWS_AS(ManifoldSpec::torus(1.0, 2.0), Error);  // needs R > r
  CHECK_THROWS_AS(ManifoldSpec::torus(1.0, 0.0), Error);
  CHECK_THROWS_AS(ManifoldSpec::hyperboloid(1.0, 0.0, 1.0), Error);
  CHECK_NOTHROW(ManifoldSpec::torus(3.0, 1.0));
}

TEST_CASE("tangent projector: pinned examples") {
  // Sphere pole: normal e_z, so P = diag(1,1,0).
  Mat3 p = tangent_projector(kSphere1, Vec3(0, 0, 1));
  Mat3 want = Vec3(1, 1, 0).asDiagonal();
  CHECK((p - want).norm() == doctest::Approx(0.0).epsilon(1e-12));

  CHECK((tangent_projector(kEuclid, Vec3(5, -2, 7)) - Mat3::Identity()).norm() == 0.0);

  // Torus outer equator: gradient points along +x.
  Mat3 pt = tangent_projector(kTorus31, Vec3(4, 0, 0));
  CHECK((pt * Vec3(1, 0, 0)).norm() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK((pt * pt - pt).norm() < 1e-10);
}

TEST_CASE("tangent projector: degenerate normal") {
  // Tube-center circle of the torus: rho = R, z = 0 makes the gradient vanish.
  CHECK_THROWS_AS(tangent_projector(kTorus31, Vec3(3, 0, 0)), Error);
}

TEST_CASE("projector idempotence and symmetry on random surface points") {
  int idx = 0;
  for (const auto& spec : surface_specs()) {
    auto pts = sample_uniform(spec, 1000, 17 + idx++);
    for (const auto& x : pts) {
      const Mat3 p = tangent_projector(spec, x);
      CHECK((p * p - p).norm() < 1e-10);
      CHECK((p - p.transpose()).norm() < 1e-12);
      CHECK((p * unit_normal(spec, x)).norm() < 1e-12);
    }
  }
}

TEST_CASE("mean curvature vector: pinned examples") {
  const Vec3 h = mean_curvature_vector(kSphere1, Vec3(0, 0, 1));
  CHECK(h.x() == doctest::Approx(0.0));
  CHECK(h.y() == doctest::Approx(0.0));
  CHECK(h.z() == doctest::Approx(2.0).epsilon(1e-12));

  CHECK(mean_curvature_vector(kEuclid, Vec3(1, 2, 3)).norm() == 0.0);

  // Torus outer equator: principal curvatures 1/r and cos(phi)/(R + r cos(phi)).
  const Vec3 ht = mean_curvature_vector(kTorus31, Vec3(4, 0, 0));
  CHECK(ht.cross(Vec3(1, 0, 0)).norm() < 1e-12);
  CHECK(ht.norm() == doctest::Approx(1.25).epsilon(1e-10));
}

TEST_CASE("mean curvature parallel to normal; magnitude matches FD divergence") {
  int idx = 0;
  for (const auto& spec : surface_specs()) {
    auto pts = sample_uniform(spec, 60, 99 + idx++);
    for (const auto& x : pts) {
      const Vec3 h = mean_curvature_vector(spec, x);
      const Vec3 n = unit_normal(spec, x);
      if (h.norm() > 1e-12) CHECK(h.cross(n).norm() < 1e-9 * h.norm());
      const double div = mgeo::testing::fd_normal_divergence(spec, x);
      CHECK(h.dot(n) == doctest::Approx(div).epsilon(1e-5));
    }
  }
}

TEST_CASE("chart conversions: pinned examples") {
  // Sphere equator.
  ChartPoint cs{GeometryKind::Sphere, 0.0, kPi / 2};
  CHECK((from_chart(kSphere2, cs) - Vec3(2, 0, 0)).norm() < 1e-12);

  // Torus outer equator.
  ChartPoint ct{GeometryKind::Torus, 0.0, 0.0};
  CHECK((from_chart(kTorus31, ct) - Vec3(4, 0, 0)).norm() < 1e-12);

  // Hyperboloid waist: cosh 0 = 1, sinh 0 = 0.
  ChartPoint ch{GeometryKind::Hyperboloid, 0.0, kPi / 2};
  CHECK((from_chart(kHyper112, ch) - Vec3(0, 1, 0)).norm() < 1e-12);
}

TEST_CASE("chart round trip on random surface points") {
  int idx = 0;
  for (const auto& spec : surface_specs()) {
    auto pts = sample_uniform(spec, 1000, 423 + idx++);
    for (const auto& x : pts) {
      const Vec3 back = from_chart(spec, to_chart(spec, x));
      CHECK((back - x).norm() < 1e-9 * std::max(1.0, spec.length_scale()));
    }
  }
}

TEST_CASE("to_chart rejects points far off the surface") {
  CHECK_THROWS_AS(to_chart(kSphere1, Vec3(2, 0, 0)), Error);
  try {
    to_chart(kTorus31, Vec3(10, 0, 0));
    FAIL("expected OffManifold");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OffManifold);
  }
}

TEST_CASE("log map: pinned examples") {
  // log at the base point itself is zero.
  const Vec3 mu(0, 0, 1);
  CHECK(log_map(kSphere1, mu, mu).ambient.norm() == 0.0);

  // Quarter great circle: |log| = pi/2, direction +x.
  const TangentVec l = log_map(kSphere1, mu, Vec3(1, 0, 0));
  CHECK(l.ambient.norm() == doctest::Approx(kPi / 2).epsilon(1e-12));
  CHECK(l.ambient.normalized().x() == doctest::Approx(1.0).epsilon(1e-12));
  const Vec3 back = exp_map(kSphere1, mu, l);
  CHECK((back - Vec3(1, 0, 0)).norm() < 1e-12);

  // Torus chart log is the wrapped coordinate difference.
  const Vec2 d = chart_log(kTorus31, Vec2(0, 0), Vec2(kPi / 4, canonical_angle(-kPi / 4)));
  CHECK(d.x() == doctest::Approx(kPi / 4));
  CHECK(d.y() == doctest::Approx(-kPi / 4));
  CHECK(wrap_angle(3 * kPi / 2) == doctest::Approx(-kPi / 2));
}

TEST_CASE("log map rejects antipodal sphere points") {
  try {
    log_map(kSphere1, Vec3(0, 0, 1), Vec3(0, 0, -1));
    FAIL("expected AntipodalPoints");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AntipodalPoints);
  }
}

TEST_CASE("log/exp round trip on random pairs") {
  int idx = 0;
  for (const auto& spec : surface_specs()) {
    auto bases = sample_uniform(spec, 1000, 7 + idx);
    auto points = sample_uniform(spec, 1000, 1007 + idx);
    ++idx;
    const double tol = 1e-9 * std::max(1.0, spec.length_scale());
    for (std::size_t i = 0; i < bases.size(); ++i) {
      if (spec.kind == GeometryKind::Sphere &&
          bases[i].dot(points[i]) / (spec.R * spec.R) < -1 + 1e-6)
        continue;  // skip near-antipodal draws
      const TangentVec v = log_map(spec, bases[i], points[i]);
      const Vec3 back = exp_map(spec, bases[i], v);
      CHECK((back - points[i]).norm() < tol);
    }
  }
}

TEST_CASE("karcher mean: pinned examples") {
  // A single point is its own mean.
  auto r1 = karcher_mean(kSphere1, {Vec3(0, 1, 0)});
  CHECK((r1.mean - Vec3(0, 1, 0)).norm() < 1e-12);

  // Symmetric pair straddling the pole.
  const double eps = 0.3;
  auto r2 = karcher_mean(
      kSphere1, {Vec3(std::sin(eps), 0, std::cos(eps)), Vec3(-std::sin(eps), 0, std::cos(eps))});
  CHECK((r2.mean - Vec3(0, 0, 1)).norm() < 1e-8);

  // Three points at 120 degrees around latitude pi/4: mean at the pole.
  std::vector<Vec3> tri;
  for (int k = 0; k < 3; ++k) {
    ChartPoint c{GeometryKind::Sphere, kTwoPi * k / 3.0, kPi / 4};
    tri.push_back(from_chart(kSphere1, c));
  }
  auto r3 = karcher_mean(kSphere1, tri);
  CHECK((r3.mean - Vec3(0, 0, 1)).norm() < 1e-8);

  // Oracle: the reported mean minimizes the sum of squared geodesic distances
  // against perturbed candidates.
  const double f0 = mgeo::testing::karcher_objective(kSphere1, r3.mean, tri);
  for (int k = 0; k < 8; ++k) {
    Rng rng(1000 + k);
    Vec3 dir(rng.normal(), rng.normal(), rng.normal());
    Vec3 cand = reproject(kSphere1, r3.mean + 0.05 * dir);
    CHECK(f0 <= mgeo::testing::karcher_objective(kSphere1, cand, tri) + 1e-9);
  }
}

TEST_CASE("karcher mean works on every geometry") {
  for (const auto& spec : surface_specs()) {
    // Cluster of nearby points: mean stays near the cluster and on the surface.
    auto base = sample_uniform(spec, 1, 55).front();
    std::vector<Vec3> pts;
    Rng rng(56);
    for (int i = 0; i < 12; ++i) {
      Vec3 jitter(rng.normal(), rng.normal(), rng.normal());
      pts.push_back(reproject(spec, base + 0.05 * spec.length_scale() * jitter));
    }
    auto res = karcher_mean(spec, pts);
    CHECK(on_manifold(spec, res.mean, 1e-7));
    CHECK(res.grad_norm < 1e-9);
  }
  auto re = karcher_mean(kEuclid, {Vec3(0, 0, 0), Vec3(2, 4, 6)});
  CHECK((re.mean - Vec3(1, 2, 3)).norm() == 0.0);
}

TEST_CASE("analytic curvature: pinned examples") {
  CHECK(analytic_gaussian_curvature(kSphere2, {GeometryKind::Sphere, 0.3, 1.1}) ==
        doctest::Approx(0.25));
  CHECK(analytic_gaussian_curvature(kTorus31, {GeometryKind::Torus, 0.0, 0.0}) ==
        doctest::Approx(0.25));
  CHECK(analytic_gaussian_curvature(kTorus31, {GeometryKind::Torus, 1.0, kPi}) ==
        doctest::Approx(-0.5));
  CHECK(analytic_gaussian_curvature(kTorus31, {GeometryKind::Torus, 0.0, kPi / 2}) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(analytic_gaussian_curvature(kEuclid, {GeometryKind::Euclidean3, 0, 0}) == 0.0);
  // Hyperboloid is negatively curved everywhere; waist value is -1/c^2 when a = b = 1... with
  // the rotational formula K(u=0) = -c^2/(c^2 cosh^2 0)^2 = -1/c^2.
  CHECK(analytic_gaussian_curvature(kHyper112, {GeometryKind::Hyperboloid, 0.0, 0.7}) ==
        doctest::Approx(-1.0 / 4.0));
}

TEST_CASE("torus curvature changes sign between outer and inner equator") {
  Rng rng(77);
  for (int i = 0; i < 50; ++i) {
    const double r = 0.1 + 2.0 * rng.uniform();
    const double R = r * (1.1 + 3.0 * rng.uniform());
    const auto spec = ManifoldSpec::torus(R, r);
    const double ko = analytic_gaussian_curvature(spec, {GeometryKind::Torus, 0, 0});
    const double ki = analytic_gaussian_curvature(spec, {GeometryKind::Torus, 0, kPi});
    CHECK(ko * ki < 0.0);
  }
}

TEST_CASE("uniform sampling: surface membership and densities") {
  // Every sample satisfies the implicit equation.
  for (const auto& spec : surface_specs()) {
    auto pts = sample_uniform(spec, 500, 5);
    for (const auto& x : pts) CHECK(on_manifold(spec, x, 1e-9));
  }

  // Sphere symmetry: mean z close to 0.
  auto sp = sample_uniform(kSphere1, 10000, 11);
  double mz = 0;
  for (const auto& x : sp) mz += x.z();
  mz /= static_cast<double>(sp.size());
  CHECK(std::abs(mz) < 3.0 / std::sqrt(10000.0));

  // Torus outer-half mass: 0.5 + r/(pi R).
  auto tp = sample_uniform(kTorus31, 10000, 12);
  int outer = 0;
  for (const auto& x : tp) {
    const double rho = std::hypot(x.x(), x.y());
    if (rho > 3.0) ++outer;
  }
  const double frac = outer / 10000.0;
  CHECK(frac == doctest::Approx(0.5 + 1.0 / (3.0 * kPi)).epsilon(0.04));

  // Empty draw.
  CHECK(sample_uniform(kHyper112, 0, 1).empty());
}

TEST_CASE("hyperboloid sampling honours the area measure (chi-square on u-bands)") {
  UniformSampleConfig cfg;
  cfg.u_min = -1.5;
  cfg.u_max = 1.5;
  const auto spec = kHyper112;
  auto pts = sample_uniform(spec, 20000, 31, cfg);
  // Expected band masses from the exact u-marginal (dense trapezoid).
  const int bands = 10;
  auto marginal = [&](double u) {
    const double ch = std::cosh(u), sh = std::sinh(u);
    // a = b = 1, c = 2: the v-profile is constant.
    return ch * std::sqrt((spec.c * spec.c) * ch * ch + sh * sh);
  };
  std::vector<double> expected(bands, 0.0);
  double total = 0.0;
  const int grid = 4000;
  for (int i = 0; i < grid; ++i) {
    const double u = cfg.u_min + (cfg.u_max - cfg.u_min) * (i + 0.5) / grid;
    const double w = marginal(u);
    expected[std::min(bands - 1, static_cast<int>(bands * (u - cfg.u_min) / (cfg.u_max - cfg.u_min)))] += w;
    total += w;
  }
  std::vector<int> observed(bands, 0);
  for (const auto& x : pts) {
    const double u = std::asinh(x.z() / spec.c);
    int b = static_cast<int>(bands * (u - cfg.u_min) / (cfg.u_max - cfg.u_min));
    observed[std::clamp(b, 0, bands - 1)]++;
  }
  double chi2 = 0.0;
  for (int b = 0; b < bands; ++b) {
    const double e = expected[b] / total * 20000.0;
    chi2 += (observed[b] - e) * (observed[b] - e) / e;
  }
  // 9 dof, 1% critical value 21.67.
  CHECK(chi2 < 21.67);
}

TEST_CASE("reproject lands on the surface") {
  Rng rng(3);
  for (const auto& spec : surface_specs()) {
    for (int i = 0; i < 200; ++i) {
      Vec3 x(4 * rng.normal(), 4 * rng.normal(), 4 * rng.normal());
      if (spec.kind == GeometryKind::Hyperboloid && x.head<2>().norm() < 0.3) continue;
      if (spec.kind != GeometryKind::Hyperboloid && x.head<2>().norm() < 1e-6) continue;
      CHECK(on_manifold(spec, reproject(spec, x), 1e-7));
    }
  }
}
