#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mgeo/geometry.hpp"

namespace mgeo {

enum class MissingPolicy : std::uint8_t { DropAsset, ForwardFill };

struct ReturnsPanel {
  std::vector<std::string> dates;   // strictly increasing, aligned to returns rows
  std::vector<std::string> assets;  // column order
  Eigen::MatrixXd returns;          // log-returns, dates x assets
  std::vector<std::string> dropped; // assets excluded by the missing-data policy
};

/// Reads an adjusted-close price panel (date column + one column per ticker)
/// and forms log-returns. Non-monotone dates and non-positive prices raise
/// IngestError with row context.
ReturnsPanel load_prices(const std::string& csv_path,
                         MissingPolicy policy = MissingPolicy::DropAsset);

struct EigenPath {
  std::size_t t0 = 0;                    // first index with loadings
  std::vector<std::string> dates;        // panel dates (full)
  std::vector<Eigen::MatrixXd> loadings; // per date >= t0: assets x 3, unit columns
  std::vector<Eigen::Vector3d> eigenvalues;
  std::vector<Eigen::Vector3d> sleeve_returns;  // p_{i,t} = u_{i,t-1}^T z_t, from t0+1
  std::vector<Vec3> path;                // cumulative sleeves, aligned from t0+1
  std::vector<std::size_t> path_dates;   // panel row index per path point
  double explained_share_top3 = 0.0;     // average share of variance, 3 PCs
  bool eigenvalue_floored = false;       // rank-deficient covariance encountered
};

/// Expanding-window PCA eigenportfolios on causally standardized returns
/// (per-asset expanding mean/std lagged one day). Loadings at t use data
/// through t only; sleeve returns apply the lagged loadings; the cumulative
/// 3D path starts at t0 + 1. Eigenvector signs fix the largest-magnitude
/// component positive.
EigenPath expanding_pca_eigenportfolios(const ReturnsPanel& panel, std::size_t t0 = 252);

struct PnlSeries {
  /// Aligned to the input path indices: entry k describes the step from
  /// path[k] to path[k+1] (signal formed at k, pnl realized at k+1).
  std::vector<Eigen::Vector3d> signals;     // sign(predicted increment) / sigma
  std::vector<Eigen::Vector3d> pnl;         // per-coordinate
  std::vector<double> total_mean;           // (1/3) sum over coordinates
  std::vector<double> total_sum;            // plain sum, also reported
  std::vector<bool> suppressed;             // zero-vol guard triggered
  std::size_t first_index = 0;              // first k with a full vol window
};

/// Directional, volatility-scaled signals and PnL:
///   pnl_{k,t+1} = sign(dX_hat_{k,t+1}) * dX_{k,t+1} / sigma_k(500-step trailing).
/// Zero predicted increment means no position; zero sigma suppresses the
/// signal (flagged) instead of dividing.
PnlSeries signals_and_pnl(const std::vector<Vec3>& path,
                          const std::vector<std::optional<Vec3>>& predicted,
                          std::size_t vol_window = 500);

/// sqrt(252) * mean / sample std; nullopt for fewer than 2 points or zero std.
std::optional<double> sharpe(const std::vector<double>& pnl);

struct EigenWeightedResult {
  std::vector<Eigen::Vector3d> weights;  // C_{i,t}, sum to 1
  std::vector<double> returns;           // r_{t+1} = sum_i C_{i,t} s_{i,t+1} p_{i,t+1}
  bool zero_lambda_fallback = false;     // equal weights used somewhere
};

/// Eigenvalue weighting from the expanding 3x3 covariance of the path
/// increments; weights at t are causal and the sleeve returns/signs are
/// applied one step ahead.
EigenWeightedResult eigenvalue_weighted_return(const std::vector<Vec3>& path,
                                               const std::vector<Eigen::Vector3d>& sleeve_returns,
                                               const std::vector<Eigen::Vector3d>& signals);

enum class CurvatureBucket : std::uint8_t { Negative, NearZero, Positive };

struct GateMap {
  /// Geometry runs averaged per bucket; empty vector = average of all runs.
  std::vector<GeometryKind> negative{GeometryKind::Torus};
  std::vector<GeometryKind> near_zero{GeometryKind::Euclidean3};
  std::vector<GeometryKind> positive{};  // all-geometry average
};

struct GatedPnl {
  std::vector<double> pnl;
  std::vector<CurvatureBucket> buckets;
  std::vector<bool> fallback;  // missing K -> all-geometry average
};

/// Buckets timestamps by the curvature sign (thresholds kappa_neg/kappa_pos)
/// and averages the PnL of the geometry runs designated for each bucket.
GatedPnl curvature_gated_pnl(const std::map<GeometryKind, std::vector<double>>& runs,
                             const std::vector<double>& K, double kappa_neg, double kappa_pos,
                             const GateMap& map = {});

struct BenchmarkSeries {
  std::vector<double> long_only;       // equal-weight
  std::vector<double> risk_parity;     // inverse trailing vol
  std::vector<Eigen::VectorXd> rp_weights;  // causal, sum to 1
  std::size_t first_index = 0;         // first row with a full vol window
};

/// Equal-weight long-only and inverse-volatility risk-parity benchmarks
/// (trailing window, vol floor 1e-6, causal weights).
BenchmarkSeries benchmarks(const ReturnsPanel& panel, std::size_t vol_window = 252);

}  // namespace mgeo
