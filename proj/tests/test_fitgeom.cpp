#include <cmath>

#include <Eigen/Dense>

#include "doctest.h"
#include "mgeo/fitgeom.hpp"
#include "mgeo/simulate.hpp"
#include "test_helpers.hpp"

using namespace mgeo;

namespace {

/// Independent oracle for the hyperboloid fit: F is linear in
/// (1/a^2, 1/b^2, 1/c^2), so plain least squares solves the same problem.
Eigen::Vector3d hyperboloid_linear_oracle(const std::vector<Vec3>& pts) {
  Eigen::MatrixXd A(pts.size(), 3);
  Eigen::VectorXd y(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    A(i, 0) = pts[i].x() * pts[i].x();
    A(i, 1) = pts[i].y() * pts[i].y();
    A(i, 2) = -pts[i].z() * pts[i].z();
    y(i) = 1.0;
  }
  const Eigen::Vector3d pqs = A.colPivHouseholderQr().solve(y);
  return Eigen::Vector3d(1.0 / std::sqrt(pqs(0)), 1.0 / std::sqrt(pqs(1)),
                         1.0 / std::sqrt(pqs(2)));
}

}  // namespace

TEST_CASE("sphere radius: pinned examples") {
  auto pts = sample_uniform(ManifoldSpec::sphere(2.0), 300, 1);
  auto fit = fit_sphere_radius(pts);
  CHECK(fit.spec.R == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.residual < 1e-9);

  auto fit2 = fit_sphere_radius({Vec3(1, 0, 0), Vec3(3, 0, 0)});
  CHECK(fit2.spec.R == doctest::Approx(2.0));

  CHECK_THROWS_AS(fit_sphere_radius({Vec3(0, 0, 0), Vec3(0, 0, 0)}), Error);
}

TEST_CASE("sphere radius: CLT error on noisy norms") {
  Rng rng(2);
  std::vector<Vec3> pts;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    auto p = sample_uniform(ManifoldSpec::sphere(1.0), 1, 100 + i).front();
    pts.push_back(p * (1.0 + 0.01 * rng.normal()));
  }
  auto fit = fit_sphere_radius(pts);
  CHECK(std::abs(fit.spec.R - 1.0) < 3 * 0.01 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("torus method of moments: uniform-angle recovery (rho variant)") {
  // The moment identities E[rho] = R, Var(rho) = r^2/2 assume phi ~ Uniform;
  // draw the angles directly (area-uniform sampling would bias E[rho] by
  // r^2/(2R)).
  const auto spec = ManifoldSpec::torus(3.0, 1.0);
  Rng rng(4);
  std::vector<Vec3> pts;
  for (int i = 0; i < 10000; ++i) {
    ChartPoint c{GeometryKind::Torus, kTwoPi * rng.uniform(), kTwoPi * rng.uniform()};
    pts.push_back(from_chart(spec, c));
  }
  auto fit = fit_torus_mom(pts);
  CHECK(fit.rho_variant.spec.R == doctest::Approx(3.0).epsilon(0.01));
  CHECK(fit.rho_variant.spec.r == doctest::Approx(1.0).epsilon(0.05));
  // The cos-phi variant estimates E[cos phi] (about zero under uniform
  // angles), nowhere near the physical R; this is why rho is the default.
  CHECK(std::abs(fit.cos_mean) < 0.05);
  CHECK(fit.cos_std == doctest::Approx(std::sqrt(0.5)).epsilon(0.05));
  CHECK(fit.paper_variant.has_flag("InadmissibleMoments"));
}

TEST_CASE("torus method of moments: thin tube flag") {
  std::vector<Vec3> pts;
  for (int i = 0; i < 50; ++i) {
    const double th = kTwoPi * i / 50;
    pts.emplace_back(4 * std::cos(th), 4 * std::sin(th), 0.0);  // outer equator only
  }
  auto fit = fit_torus_mom(pts);
  CHECK(fit.rho_variant.has_flag("ThinTube"));
  CHECK(fit.instantaneous_rho == doctest::Approx(4.0));
}

TEST_CASE("hyperboloid NLS: exact recovery from data envelope init") {
  UniformSampleConfig cfg;
  cfg.u_min = -1.2;
  cfg.u_max = 1.2;
  auto pts = sample_uniform(ManifoldSpec::hyperboloid(1.0, 1.5, 2.0), 500, 5, cfg);
  auto fit = fit_hyperboloid_nls(pts);
  CHECK(fit.spec.a == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(fit.spec.b == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(fit.spec.c == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(fit.residual < 1e-10);

  // Agreement with the independent linear-least-squares oracle.
  const Eigen::Vector3d oracle = hyperboloid_linear_oracle(pts);
  CHECK(fit.spec.a == doctest::Approx(oracle(0)).epsilon(1e-6));
  CHECK(fit.spec.b == doctest::Approx(oracle(1)).epsilon(1e-6));
  CHECK(fit.spec.c == doctest::Approx(oracle(2)).epsilon(1e-6));
}

TEST_CASE("hyperboloid NLS: init at truth converges immediately") {
  UniformSampleConfig scfg;
  scfg.u_min = -1.0;
  scfg.u_max = 1.0;
  auto pts = sample_uniform(ManifoldSpec::hyperboloid(1.0, 1.0, 1.0), 200, 6, scfg);
  HyperboloidFitOptions opts;
  opts.init = Eigen::Vector3d(1.0, 1.0, 1.0);
  auto fit = fit_hyperboloid_nls(pts, opts);
  CHECK(fit.spec.a == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fit.residual < 1e-12);
}

TEST_CASE("hyperboloid NLS: z = 0 slab is ill-conditioned") {
  std::vector<Vec3> pts;
  for (int i = 0; i < 30; ++i) {
    const double th = kTwoPi * i / 30;
    pts.emplace_back(std::cos(th), std::sin(th), 0.0);
  }
  try {
    fit_hyperboloid_nls(pts);
    FAIL("expected IllConditioned");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IllConditioned);
  }
}

TEST_CASE("fitters are scale equivariant") {
  auto sp = sample_uniform(ManifoldSpec::sphere(1.0), 400, 7);
  auto tp = sample_uniform(ManifoldSpec::torus(3.0, 1.0), 400, 8);
  UniformSampleConfig hcfg;
  hcfg.u_min = -1.0;
  hcfg.u_max = 1.0;
  auto hp = sample_uniform(ManifoldSpec::hyperboloid(1.0, 1.2, 1.7), 400, 9, hcfg);
  const double s = 3.7;
  auto scale = [&](std::vector<Vec3> v) {
    for (auto& x : v) x *= s;
    return v;
  };
  CHECK(fit_sphere_radius(scale(sp)).spec.R ==
        doctest::Approx(s * fit_sphere_radius(sp).spec.R).epsilon(1e-12));
  auto t1 = fit_torus_mom(tp).rho_variant;
  auto t2 = fit_torus_mom(scale(tp)).rho_variant;
  CHECK(t2.spec.R == doctest::Approx(s * t1.spec.R).epsilon(1e-12));
  CHECK(t2.spec.r == doctest::Approx(s * t1.spec.r).epsilon(1e-12));
  auto h1 = fit_hyperboloid_nls(hp);
  auto h2 = fit_hyperboloid_nls(scale(hp));
  CHECK(h2.spec.a == doctest::Approx(s * h1.spec.a).epsilon(1e-5));
  CHECK(h2.spec.c == doctest::Approx(s * h1.spec.c).epsilon(1e-5));
}

TEST_CASE("correct model has the smallest residual (bootstrap)") {
  // Pure-geometry clouds; resample and compare rms implicit residuals of the
  // right fit against wrong-model fits.
  auto sphere_pts = sample_uniform(ManifoldSpec::sphere(1.0), 600, 10);
  auto torus_pts = sample_uniform(ManifoldSpec::torus(3.0, 1.0), 600, 11);
  Rng rng(12);
  int sphere_wins = 0, torus_wins = 0;
  const int B = 40;
  for (int b = 0; b < B; ++b) {
    auto resample = [&](const std::vector<Vec3>& src) {
      std::vector<Vec3> out(src.size());
      for (auto& x : out) x = src[rng.below(src.size())];
      return out;
    };
    auto sp = resample(sphere_pts);
    auto tp = resample(torus_pts);
    const double s_right = fit_sphere_radius(sp).residual;
    const double s_wrong = fit_torus_mom(sp).rho_variant.residual;
    if (s_right < s_wrong) ++sphere_wins;
    const double t_right = fit_torus_mom(tp).rho_variant.residual;
    const double t_wrong = fit_sphere_radius(tp).residual;
    if (t_right < t_wrong) ++torus_wins;
  }
  CHECK(sphere_wins >= static_cast<int>(0.95 * B));
  CHECK(torus_wins >= static_cast<int>(0.95 * B));
}

TEST_CASE("stream fitter: caching, min window, shrinking variance") {
  auto path = simulate_ambient(ManifoldSpec::sphere(1.5), Vec3(0, 0, 1.5), 400, 1e-3, 13);
  StreamFitter fitter(30);
  CHECK_THROWS_AS(fitter.reestimate(path.points, 10, GeometryKind::Sphere), Error);

  const FitResult& a = fitter.reestimate(path.points, 100, GeometryKind::Sphere);
  const FitResult& b = fitter.reestimate(path.points, 100, GeometryKind::Sphere);
  CHECK(&a == &b);  // cached
  CHECK(a.spec.R == doctest::Approx(1.5).epsilon(1e-3));

  // Expanding-mean estimates stabilize: later prefixes move less.
  const double r100 = fitter.reestimate(path.points, 100, GeometryKind::Sphere).spec.R;
  const double r200 = fitter.reestimate(path.points, 200, GeometryKind::Sphere).spec.R;
  const double r400 = fitter.reestimate(path.points, 400, GeometryKind::Sphere).spec.R;
  CHECK(std::abs(r400 - r200) <= std::abs(r200 - r100) + 1e-4);

  // Torus dispatch exposes the instantaneous tube proxy.
  auto tpath = simulate_torus_intrinsic(3, 1, 0, 0, 200, 1e-3, 14);
  StreamFitter tf(30);
  const FitResult& t = tf.reestimate(tpath.points, 200, GeometryKind::Torus);
  CHECK(t.method == "torus-mom-rho");
  const auto& last = tpath.points[199];  // last point of the 200-long prefix
  CHECK(tf.instantaneous_tube_radius() ==
        doctest::Approx(std::hypot(last.x(), last.y())).epsilon(1e-12));
}
