#include "mgeo/simulate.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "mgeo/csv.hpp"
#include "mgeo/errors.hpp"
#include "mgeo/rng.hpp"

namespace mgeo {

namespace {

void check_finite(const Vec3& x, std::size_t step) {
  if (!x.allFinite() || x.norm() > 1e12) throw BlowupError("path diverged", step);
}

}  // namespace

Path3D simulate_ambient(const ManifoldSpec& spec, const Vec3& x0, std::size_t steps, double h,
                        std::uint64_t seed) {
  if (!(h > 0)) throw Error(ErrorCode::InvalidInput, "step size must be positive");
  Path3D out;
  out.h = h;
  out.points.reserve(steps + 1);
  out.segment_specs.assign(steps + 1, spec);
  Vec3 x = spec.kind == GeometryKind::Euclidean3 ? x0 : reproject(spec, x0);
  out.points.push_back(x);
  Rng rng(seed);
  const double sh = std::sqrt(h);
  for (std::size_t k = 0; k < steps; ++k) {
    const Vec3 dW(sh * rng.normal(), sh * rng.normal(), sh * rng.normal());
    if (spec.kind == GeometryKind::Euclidean3) {
      x += dW;
    } else {
      const Mat3 p = tangent_projector(spec, x);
      const Vec3 drift = -0.5 * mean_curvature_vector(spec, x);
      x = reproject(spec, x + p * dW + drift * h);
    }
    check_finite(x, k + 1);
    out.points.push_back(x);
  }
  return out;
}

Path3D simulate_torus_intrinsic(double R, double r, double theta0, double phi0,
                                std::size_t steps, double h, std::uint64_t seed) {
  const auto spec = ManifoldSpec::torus(R, r);
  if (!(h > 0)) throw Error(ErrorCode::InvalidInput, "step size must be positive");
  Path3D out;
  out.h = h;
  out.points.reserve(steps + 1);
  out.segment_specs.assign(steps + 1, spec);
  double theta = canonical_angle(theta0), phi = canonical_angle(phi0);
  out.points.push_back(from_chart(spec, {GeometryKind::Torus, theta, phi}));
  Rng rng(seed);
  const double sh = std::sqrt(h);
  for (std::size_t k = 0; k < steps; ++k) {
    const double ring = R + r * std::cos(phi);
    theta = canonical_angle(theta + sh * rng.normal() / ring);
    phi = canonical_angle(phi + sh * rng.normal() / r - std::sin(phi) / (2.0 * r * ring) * h);
    const Vec3 x = from_chart(spec, {GeometryKind::Torus, theta, phi});
    check_finite(x, k + 1);
    out.points.push_back(x);
  }
  return out;
}

Path3D simulate_hyperbolic_intrinsic(double a, double c, double u0, double v0,
                                     std::size_t steps, double h, std::uint64_t seed,
                                     double u_absorb) {
  const auto spec = ManifoldSpec::hyperboloid(a, a, c);
  if (!(h > 0)) throw Error(ErrorCode::InvalidInput, "step size must be positive");
  Path3D out;
  out.h = h;
  double u = u0, v = canonical_angle(v0);
  out.points.push_back(from_chart(spec, {GeometryKind::Hyperboloid, u, v}));
  out.segment_specs.push_back(spec);
  if (std::abs(u0) >= u_absorb) {
    out.absorbed = true;
    return out;
  }
  Rng rng(seed);
  const double sh = std::sqrt(h);
  for (std::size_t k = 0; k < steps; ++k) {
    const double sinh_u = std::sinh(u), cosh_u = std::cosh(u);
    const double E = a * a * sinh_u * sinh_u + c * c * cosh_u * cosh_u;
    const double Ep = 2.0 * (a * a + c * c) * sinh_u * cosh_u;
    const double drift = 0.5 * (std::tanh(u) - Ep / (2.0 * E));
    u += sh * rng.normal() / std::sqrt(E) + drift * h;
    v = canonical_angle(v + sh * rng.normal() / (a * cosh_u));
    if (std::abs(u) >= u_absorb) {
      out.absorbed = true;
      break;
    }
    const Vec3 x = from_chart(spec, {GeometryKind::Hyperboloid, u, v});
    check_finite(x, k + 1);
    out.points.push_back(x);
    out.segment_specs.push_back(spec);
  }
  return out;
}

namespace {

// Per-scenario default step sizes. Surfaces need enough diffusion time per
// block to develop their signature: the torus must wind both cycles for the
// topological test, while curvature estimation wants locally dense sampling.
double scenario_default_h(int id) {
  switch (id) {
    case 3: return 1e-3;   // pure sphere, curvature-friendly
    case 4: return 0.5;    // pure torus, must wind both loops
    case 5: return 1.0;    // pure Euclidean: unit steps, like the CBM null
    case 6: return 1e-3;   // pure hyperbolic
    default: return 2e-3;  // mixed-block scenarios
  }
}

struct BlockStart {
  ManifoldSpec spec;
  Vec3 x0;
};

// Chart transition at a block boundary: convert the previous endpoint once
// into the next geometry's chart and start there. The sphere keeps the exact
// point (its chart conversion recovers R = |x|); torus and hyperboloid land
// on the default-parameter surface at the converted angles.
BlockStart block_start(GeometryKind kind, const Vec3& prev) {
  switch (kind) {
    case GeometryKind::Euclidean3:
      return {ManifoldSpec::euclidean(), prev};
    case GeometryKind::Sphere: {
      const double R = std::max(prev.norm(), 0.5);
      const auto spec = ManifoldSpec::sphere(R);
      return {spec, reproject(spec, prev)};
    }
    case GeometryKind::Torus: {
      const auto spec = ManifoldSpec::torus(3.0, 1.0);
      const ChartPoint c = to_chart(spec, reproject(spec, prev), -1.0);
      return {spec, from_chart(spec, c)};
    }
    case GeometryKind::Hyperboloid: {
      const auto spec = ManifoldSpec::hyperboloid(1.0, 1.0, 1.0);
      ChartPoint c{GeometryKind::Hyperboloid, std::asinh(prev.z() / spec.c),
                   canonical_angle(std::atan2(prev.y(), prev.x()))};
      return {spec, from_chart(spec, c)};
    }
  }
  return {ManifoldSpec::euclidean(), prev};
}

Path3D simulate_block(const BlockStart& bs, std::size_t steps, double h, std::uint64_t seed) {
  switch (bs.spec.kind) {
    case GeometryKind::Torus: {
      const ChartPoint c = to_chart(bs.spec, bs.x0, -1.0);
      return simulate_torus_intrinsic(bs.spec.R, bs.spec.r, c.u, c.v, steps, h, seed);
    }
    case GeometryKind::Hyperboloid: {
      const ChartPoint c = to_chart(bs.spec, bs.x0, -1.0);
      // No absorption inside scenario blocks; the mean-reverting u drift keeps
      // default-parameter paths near the waist.
      return simulate_hyperbolic_intrinsic(bs.spec.a, bs.spec.c, c.u, c.v, steps, h, seed, 50.0);
    }
    default:
      return simulate_ambient(bs.spec, bs.x0, steps, h, seed);
  }
}

}  // namespace

std::vector<GeometryKind> scenario_block_kinds(const ScenarioConfig& cfg) {
  using GK = GeometryKind;
  if (cfg.scenario_id < 1 || cfg.scenario_id > 7)
    throw Error(ErrorCode::InvalidInput, "scenario_id must be 1..7");
  if (cfg.block_length == 0 || cfg.total_length == 0)
    throw Error(ErrorCode::InvalidInput, "scenario lengths must be positive");
  const std::size_t nblocks =
      std::max<std::size_t>(1, cfg.total_length / cfg.block_length);
  switch (cfg.scenario_id) {
    case 1: {  // [S, H, E] x 3 then S
      std::vector<GK> kinds;
      for (std::size_t i = 0; i + 1 < nblocks; ++i)
        kinds.push_back(std::array<GK, 3>{GK::Sphere, GK::Hyperboloid, GK::Euclidean3}[i % 3]);
      kinds.push_back(GK::Sphere);
      return kinds;
    }
    case 2: {  // seeded shuffle of the scenario-1 multiset, still ending on S
      ScenarioConfig base = cfg;
      base.scenario_id = 1;
      auto kinds = scenario_block_kinds(base);
      kinds.pop_back();  // reserve one sphere block for the end
      Rng rng(derive_seed(cfg.seed, 0xB10C));
      for (std::size_t i = kinds.size(); i > 1; --i)
        std::swap(kinds[i - 1], kinds[rng.below(i)]);
      kinds.push_back(GK::Sphere);
      return kinds;
    }
    case 3: return {GK::Sphere};
    case 4: return {GK::Torus};
    case 5: return {GK::Euclidean3};
    case 6: return {GK::Hyperboloid};
    case 7: {  // rotating S, H, E, T blocks
      std::vector<GK> kinds;
      for (std::size_t i = 0; i < nblocks; ++i)
        kinds.push_back(
            std::array<GK, 4>{GK::Sphere, GK::Hyperboloid, GK::Euclidean3, GK::Torus}[i % 4]);
      return kinds;
    }
  }
  return {};
}

Path3D build_scenario(const ScenarioConfig& cfg) {
  const auto kinds = scenario_block_kinds(cfg);
  const double h = cfg.h.value_or(scenario_default_h(cfg.scenario_id));
  const bool single = kinds.size() == 1;

  Path3D out;
  out.h = h;
  Vec3 prev(1.0, 0.0, 0.0);  // unit-scale start; first block converts it
  std::size_t produced = 0;
  for (std::size_t b = 0; b < kinds.size(); ++b) {
    const std::size_t want =
        single ? cfg.total_length
               : std::min(cfg.block_length, cfg.total_length - produced);
    if (want == 0) break;
    const BlockStart bs = block_start(kinds[b], prev);
    // steps = want - 1 for the first block (which also contributes the start
    // point); later blocks drop their start point to avoid duplication.
    const bool first = out.points.empty();
    const std::size_t steps = first ? want - 1 : want;
    Path3D block = simulate_block(bs, steps, h, derive_seed(cfg.seed, b));
    const std::size_t skip = first ? 0 : 1;
    for (std::size_t i = skip; i < block.points.size(); ++i) {
      out.points.push_back(block.points[i]);
      out.segment_specs.push_back(block.segment_specs[i]);
    }
    produced = out.points.size();
    prev = out.points.back();
    if (produced >= cfg.total_length) break;
  }
  return out;
}

CbmResult simulate_cbm(const CbmConfig& cfg) {
  if (cfg.n < 3) throw Error(ErrorCode::InvalidInput, "CBM needs n >= 3 assets");
  if (!(cfg.rho >= 0.0 && cfg.rho < 1.0))
    throw Error(ErrorCode::InvalidInput, "CBM equicorrelation must lie in [0, 1)");
  if (cfg.T < 2) throw Error(ErrorCode::InvalidInput, "CBM needs T >= 2 steps");

  const int n = cfg.n;
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(n, n, cfg.rho);
  sigma.diagonal().setOnes();
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::NumericalBlowup, "Cholesky of the equicorrelation matrix failed");
  const Eigen::MatrixXd L = llt.matrixL();

  Rng rng(cfg.seed);
  Eigen::MatrixXd increments(cfg.T, n);
  Eigen::VectorXd z(n);
  for (std::size_t t = 0; t < cfg.T; ++t) {
    for (int i = 0; i < n; ++i) z(i) = rng.normal();
    increments.row(t) = (L * z).transpose();
  }

  CbmResult res;
  res.full.resize(cfg.T, n);
  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(n);
  for (std::size_t t = 0; t < cfg.T; ++t) {
    acc += increments.row(t);
    res.full.row(t) = acc;
  }

  // Project onto the top-3 PCs of the increment covariance (a linear map; no
  // curvature is introduced).
  const Eigen::RowVectorXd mean = increments.colwise().mean();
  const Eigen::MatrixXd centered = increments.rowwise() - mean;
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(cfg.T - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  Eigen::MatrixXd basis(n, 3);
  for (int k = 0; k < 3; ++k) {
    basis.col(k) = es.eigenvectors().col(n - 1 - k);
    res.top_eigenvalues(k) = es.eigenvalues()(n - 1 - k);
    // Sign convention: largest-magnitude component positive.
    int arg = 0;
    basis.col(k).cwiseAbs().maxCoeff(&arg);
    if (basis(arg, k) < 0) basis.col(k) = -basis.col(k);
  }

  res.projection.h = 1.0;
  res.projection.points.reserve(cfg.T);
  const auto spec = ManifoldSpec::euclidean();
  for (std::size_t t = 0; t < cfg.T; ++t) {
    Eigen::Vector3d p = basis.transpose() * res.full.row(t).transpose();
    res.projection.points.emplace_back(p(0), p(1), p(2));
    res.projection.segment_specs.push_back(spec);
  }
  return res;
}

void write_path_csv(const std::string& path, const Path3D& p) {
  csv::Table t;
  t.header = {"index", "x", "y", "z", "label"};
  t.rows.reserve(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& x = p.points[i];
    t.rows.push_back({std::to_string(i), csv::format_double(x.x()), csv::format_double(x.y()),
                      csv::format_double(x.z()),
                      p.has_labels() ? to_string(p.segment_specs[i].kind) : ""});
  }
  csv::write_file(path, t);
}

Path3D read_path_csv(const std::string& path) {
  const csv::Table t = csv::read_file(path);
  const int cx = t.column("x"), cy = t.column("y"), cz = t.column("z");
  const int cl = t.column("label");
  if (cx < 0 || cy < 0 || cz < 0)
    throw Error(ErrorCode::IngestError, "path csv needs x,y,z columns: " + path);
  Path3D p;
  p.points.reserve(t.rows.size());
  bool labelled = cl >= 0;
  for (const auto& row : t.rows) {
    p.points.emplace_back(std::stod(row[cx]), std::stod(row[cy]), std::stod(row[cz]));
    if (labelled && !row[cl].empty()) {
      ManifoldSpec s;
      s.kind = geometry_kind_from_string(row[cl]);
      p.segment_specs.push_back(s);
    } else {
      labelled = false;
    }
  }
  if (!labelled) p.segment_specs.clear();
  return p;
}

}  // namespace mgeo
