#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mgeo/geometry.hpp"

namespace mgeo {

using Cloud = std::vector<Eigen::VectorXd>;

// ---------------------------------------------------------------------------
// Takens delay embedding

struct TakensConfig {
  int m = 2;       // embedding dimension (copies of the source vector)
  int tau = 1;     // delay in index units
  bool standardize = true;  // per-coordinate z-scoring of the cloud
};

/// Delay embedding of a scalar series: rows (x_t, x_{t-tau}, ..., x_{t-(m-1)tau}).
Cloud takens_embed(const std::vector<double>& series, const TakensConfig& cfg);

/// Stacked version for a 3D series; rows live in R^{3m}.
Cloud takens_embed(const std::vector<Vec3>& series, const TakensConfig& cfg);

struct DelayDimChoice {
  int m = 2;
  int tau = 1;
  bool degenerate = false;  // constant input; (1, 1) returned
};

/// tau from the first local minimum of the autocorrelation (zero crossing,
/// then len/10 as fallbacks); m from the false-nearest-neighbour criterion
/// (smallest m <= 6 with FNN fraction < 5%).
DelayDimChoice select_delay_dim(const std::vector<double>& series);

// ---------------------------------------------------------------------------
// Vietoris-Rips persistence

struct PersistencePair {
  double birth = 0.0;
  double death = std::numeric_limits<double>::infinity();  // inf = essential/censored

  double lifetime(double cap) const {
    return (std::isinf(death) ? cap : death) - birth;
  }
  bool finite() const { return !std::isinf(death); }
};

struct PersistenceDiagram {
  std::array<std::vector<PersistencePair>, 3> bars;  // H0, H1, H2
  std::size_t n_points = 0;
  double max_scale = 0.0;     // filtration cap for dims 0/1 (enclosing radius by default)
  double h2_scale = 0.0;      // possibly smaller cap used for the H2 level
  double auto_epsilon = 0.0;  // calibrated long-bar threshold for this cloud

  /// Finite lifetimes in a dimension, censored bars clipped at the cap.
  std::vector<double> lifetimes(int dim) const;
};

struct RipsParams {
  int max_dim = 2;         // homology computed up to this dimension
  double max_scale = 0.0;  // 0 = auto (enclosing radius; exact for H1)
  std::size_t max_points = 400;        // landmark cap (max-min selection)
  std::size_t simplex_guard = 45'000'000;  // per-dimension enumeration guard
};

/// Vietoris-Rips persistent homology of a point cloud.
///
/// Dims 0 and 1 are exact up to the enclosing radius (beyond which nothing
/// survives). The dim-2 level auto-caps its scale so the tetrahedron count
/// stays under the guard; H2 bars still alive there are reported with
/// death = inf. Clouds above `max_points` are subsampled by deterministic
/// max-min landmarking. Throws ScaleCapExceeded when an explicit max_scale
/// asks for more simplices than the guard allows.
PersistenceDiagram vietoris_rips(const Cloud& cloud, const RipsParams& params = {});

/// Deterministic max-min landmark selection (permutation invariant: the seed
/// point is the one farthest from the centroid, ties broken by coordinates).
std::vector<std::size_t> maxmin_landmarks(const Cloud& cloud, std::size_t count);

// ---------------------------------------------------------------------------
// Torus detection

struct TorusTestParams {
  double epsilon = 0.0;    // long-bar threshold; 0 = use diagram.auto_epsilon
  double rho_star = 0.5;   // concentration threshold on (l1+l2)/sum(l)
  double null_q95 = 0.0;   // 95th percentile of the null top-H1 lifetime; 0 = skip
  bool require_h2 = false; // optional extra condition: a long H2 bar (> epsilon/2)
};

struct TorusTestResult {
  bool flag = false;        // all enabled conditions hold
  bool basic_flag = false;  // #\{H1 lifetimes > eps\} >= 2 (the sliding-window detector)
  double l1 = 0.0, l2 = 0.0;
  double concentration = 0.0;
  double epsilon_used = 0.0;
  double null_q95_used = 0.0;
  int long_h1_bars = 0;
};

TorusTestResult torus_test(const PersistenceDiagram& diagram, const TorusTestParams& params = {});

// ---------------------------------------------------------------------------
// Surrogate null calibration

enum class SurrogateKind : std::uint8_t {
  EquicorrelatedBrownian,  // Gaussian random walk matching the increment covariance
  PhaseRandomized,         // Fourier-amplitude preserving (keeps periodic loops!)
};

struct SurrogateNullConfig {
  int n_surrogates = 50;
  SurrogateKind kind = SurrogateKind::EquicorrelatedBrownian;
  TakensConfig takens;  // applied to each surrogate exactly as to the data
  RipsParams rips;
};

struct SurrogateNull {
  std::vector<double> top_h1_lifetimes;  // sorted ascending
  double q95 = 0.0;
};

/// Null distribution of the top H1 lifetime under surrogates of the input
/// series. Phase randomization preserves Fourier amplitudes and therefore
/// keeps periodic loops alive; the Brownian surrogate is the default for
/// loop-bearing signals.
SurrogateNull surrogate_null(const std::vector<Vec3>& series, const SurrogateNullConfig& cfg,
                             std::uint64_t seed);
SurrogateNull surrogate_null(const std::vector<double>& series, const SurrogateNullConfig& cfg,
                             std::uint64_t seed);

// ---------------------------------------------------------------------------
// Sliding-window flag series

struct TorusFlagSeriesConfig {
  std::size_t window_len = 1500;
  std::size_t stride = 250;
  /// m = 1: the raw 3D window cloud. Standardization is off here: z-scoring
  /// an identity embedding distorts the surface geometry the loops live on
  /// (it remains the default for genuine delay embeddings of scalars).
  TakensConfig takens{1, 1, false};
  RipsParams rips{1, 0.0, 400, 45'000'000};
  TorusTestParams test;  // basic detector by default (null_q95 = 0)
};

struct WindowFlag {
  std::size_t end_index = 0;  // window covers [end_index - window_len + 1, end_index]
  TorusTestResult result;
};

struct TorusFlagSeries {
  std::vector<WindowFlag> windows;
  /// Per-index basic-detector flags, aligned with the input path: each index
  /// carries the most recent window verdict (causal carry-forward); indices
  /// before the first complete window are false.
  std::vector<bool> flags;
  double flagged_share = 0.0;  // share of windows with basic_flag set
};

TorusFlagSeries torus_flag_series(const std::vector<Vec3>& path, const TorusFlagSeriesConfig& cfg);

}  // namespace mgeo
