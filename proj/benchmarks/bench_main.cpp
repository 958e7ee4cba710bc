#include <benchmark/benchmark.h>

#include "mgeo/curvature.hpp"
#include "mgeo/forecast.hpp"
#include "mgeo/simulate.hpp"
#include "mgeo/topology.hpp"

using namespace mgeo;

namespace {

Cloud to_cloud(const std::vector<Vec3>& pts) {
  Cloud c;
  for (const auto& p : pts) {
    Eigen::VectorXd v(3);
    v << p.x(), p.y(), p.z();
    c.push_back(v);
  }
  return c;
}

void BM_sphere_log_exp(benchmark::State& state) {
  const auto spec = ManifoldSpec::sphere(1.0);
  auto pts = sample_uniform(spec, 1000, 1);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& a = pts[i % pts.size()];
    const auto& b = pts[(i + 1) % pts.size()];
    if (a.dot(b) > -0.999) benchmark::DoNotOptimize(exp_map(spec, a, log_map(spec, a, b)));
    ++i;
  }
}
BENCHMARK(BM_sphere_log_exp);

void BM_monge_window(benchmark::State& state) {
  auto path = simulate_ambient(ManifoldSpec::sphere(1.0), Vec3(0, 0, 1),
                               static_cast<std::size_t>(state.range(0)) + 50, 1e-3, 2);
  CurvatureConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(curvature_series(path.points, cfg));
}
BENCHMARK(BM_monge_window)->Arg(200)->Arg(1000);

void BM_rips_torus(benchmark::State& state) {
  auto cloud = to_cloud(sample_uniform(ManifoldSpec::torus(3, 1), 2000, 3));
  RipsParams rp;
  rp.max_dim = 1;
  rp.max_points = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(vietoris_rips(cloud, rp));
}
BENCHMARK(BM_rips_torus)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_gp_window(benchmark::State& state) {
  Rng rng(4);
  std::vector<double> series;
  for (int i = 0; i < 25; ++i) series.push_back(rng.normal());
  GpConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(gp_forecast(series, cfg));
}
BENCHMARK(BM_gp_window);

void BM_var_window(benchmark::State& state) {
  Rng rng(5);
  std::vector<Eigen::VectorXd> series;
  for (int i = 0; i < 25; ++i) {
    Eigen::VectorXd v(3);
    v << rng.normal(), rng.normal(), rng.normal();
    series.push_back(v);
  }
  for (auto _ : state) benchmark::DoNotOptimize(var_forecast(series, 1));
}
BENCHMARK(BM_var_window);

}  // namespace

BENCHMARK_MAIN();
