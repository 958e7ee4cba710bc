#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mgeo/geometry.hpp"
#include "mgeo/topology.hpp"

namespace mgeo {

enum class Predictor : std::uint8_t { VAR, RF, GP };
std::string to_string(Predictor p);
Predictor predictor_from_string(const std::string& s);

enum class GeometrySource : std::uint8_t { Fixed, InferredPerWindow };

struct ForecastConfig {
  Predictor predictor = Predictor::VAR;
  int var_order = 1;          // p
  int lags = 5;               // L for RF/GP
  std::size_t window = 25;    // rolling training window W
  int pca_dim = 3;            // d <= 3
  GeometrySource source = GeometrySource::Fixed;
  ManifoldSpec fixed_spec = ManifoldSpec::euclidean();
  /// Re-estimate the fixed geometry's shape parameters from each rolling
  /// window (the kind stays fixed). Keeps the arm causal without freezing
  /// possibly stale parameters.
  bool refit_params = true;
  int rf_trees = 100;
  std::uint64_t seed = 0;
  std::size_t min_fit_window = 30;  // m0 for inferred-geometry fitting
};

struct ForecastRecord {
  std::size_t index = 0;          // index of the predicted point
  GeometryKind geometry = GeometryKind::Euclidean3;
  Vec3 predicted = Vec3::Zero();
  Vec3 tangent = Vec3::Zero();    // predicted tangent step (chart dims in x,y)
  Vec3 realized = Vec3::Zero();
  bool valid = false;             // false = per-index failure recorded as a gap
};

struct ForecastMetrics {
  Eigen::Vector3d mae = Eigen::Vector3d::Zero();
  Eigen::Vector3d rmse = Eigen::Vector3d::Zero();
  Eigen::Vector3d mape_pct = Eigen::Vector3d::Zero();
  Eigen::Vector3d sign_rate = Eigen::Vector3d::Zero();
  std::size_t count = 0;
};

// --- Elementary operations --------------------------------------------------

/// v_t = P(X_{t-1}) (X_t - X_{t-1}); plain differences on Euclidean3.
std::vector<Vec3> tangent_velocities(const std::vector<Vec3>& path, const ManifoldSpec& spec);

struct TangentPca {
  Eigen::VectorXd mean;
  Eigen::MatrixXd basis;        // columns: top-d principal axes (orthonormal)
  Eigen::VectorXd eigenvalues;  // all eigenvalues, descending
  bool degenerate = false;      // zero-variance input, basis arbitrary

  Eigen::VectorXd project(const Eigen::VectorXd& v) const;
  Eigen::VectorXd reconstruct(const Eigen::VectorXd& c) const;
};

/// PCA of a vector series (1/n covariance normalization, so the mean squared
/// reconstruction error equals the sum of the discarded eigenvalues).
TangentPca tangent_pca(const std::vector<Eigen::VectorXd>& velocities, int d);

struct VarFit {
  std::vector<Eigen::MatrixXd> coeffs;  // A_1..A_p
  Eigen::VectorXd intercept;
  int order = 0;           // effective p after auto-shrink
  bool shrunk = false;     // p reduced to fit the window
  bool ridged = false;     // singular design, ridge fallback used
  Eigen::VectorXd forecast;
};

/// Least-squares VAR(p) with intercept on the given window; one-step
/// forecast. p = 0 degenerates to the window mean.
VarFit var_forecast(const std::vector<Eigen::VectorXd>& series, int p);

/// Random-forest one-step forecast of a scalar series from its L lags:
/// B CART regression trees on bootstrap resamples, ceil(L/3) features per
/// split, minimum leaf size 2. Deterministic per seed.
double rf_forecast(const std::vector<double>& series, int lags, int n_trees, std::uint64_t seed);

struct GpConfig {
  int lags = 5;
  double noise_var = 1e-4;  // sigma_n^2
  /// When set, skips the marginal-likelihood grid search.
  std::optional<double> lengthscale;
  std::optional<double> signal_var;
  std::optional<double> constant_var;
};

struct GpForecast {
  double mean = 0.0;
  double variance = 0.0;
  double lengthscale = 0.0, signal_var = 0.0, constant_var = 0.0;
};

/// Gaussian-process one-step forecast with a Matern-3/2 plus constant kernel.
/// Hyperparameters maximize the log marginal likelihood over a bounded grid
/// unless pinned in the config. Cholesky failures escalate jitter x10 up to
/// three times before throwing IllConditionedKernel.
GpForecast gp_forecast(const std::vector<double>& series, const GpConfig& cfg);

// --- Pipelines ---------------------------------------------------------------

/// Rolling-origin, strictly causal geometry-aware forecasts: window mapped to
/// tangent coordinates around a per-window base (Karcher mean on the sphere,
/// first window point for the chart geometries), velocity PCA, the configured
/// predictor, exponential-map lift back to the surface.
std::vector<ForecastRecord> pipeline_geometry_aware(const std::vector<Vec3>& path,
                                                    const ForecastConfig& cfg);

/// Matched native-space baseline: the same predictor on raw first differences
/// of the 3D path, no manifold steps. Window, lags, order and seeds are taken
/// from the same config object.
std::vector<ForecastRecord> pipeline_native(const std::vector<Vec3>& path,
                                            const ForecastConfig& cfg);

ForecastMetrics forecast_metrics(const std::vector<ForecastRecord>& records,
                                 const std::vector<Vec3>& path);

}  // namespace mgeo
