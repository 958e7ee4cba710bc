#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "mgeo/forecast.hpp"

namespace mgeo::cli {

struct SimulateOptions {
  int scenario = 0;             // 1..7; 0 when --cbm
  bool cbm = false;
  int cbm_n = 10;
  double cbm_rho = 0.6;
  std::size_t cbm_T = 5000;
  std::size_t block_length = 500;
  std::size_t total_length = 5000;
  std::optional<double> h;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

struct InferOptions {
  std::string input;
  std::size_t rolling_len = 40;
  std::size_t min_window = 30;
  std::size_t smooth_len = 5;
  double alpha = 0.0;
  double kappa_pos = 0.01;
  double kappa_neg = 0.01;
  bool expanding = false;
  std::size_t topo_window = 1500;
  std::size_t topo_stride = 250;
  bool skip_topology = false;
  std::string out_dir = ".";
};

struct ForecastOptions {
  std::string input;
  std::string arm = "both";        // geometry | native | both
  std::string predictor = "var";   // var | rf | gp
  std::string geometry = "euclidean";  // euclidean|sphere|torus|hyperboloid|inferred
  std::size_t window = 25;
  int var_order = 1;
  int lags = 5;
  int pca_dim = 3;
  std::size_t vol_window = 500;    // for the signal/pnl translation in metrics
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

struct BacktestOptions {
  std::string prices;
  std::size_t t0 = 252;
  std::size_t vol_window = 500;
  std::size_t bench_window = 252;
  std::string predictor = "var";
  std::string geometries = "all";  // comma list or "all" (E,S,T,H runs)
  std::size_t window = 25;
  int var_order = 1;
  int lags = 5;
  bool oracle_foresight = false;
  double kappa_pos = 0.01;
  double kappa_neg = 0.01;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

int cmd_simulate(const SimulateOptions& opt);
int cmd_infer(const InferOptions& opt);
int cmd_forecast(const ForecastOptions& opt);
int cmd_backtest(const BacktestOptions& opt);

/// Maps library error codes onto process exit codes: 3 for data problems,
/// 4 for numerical failures.
int exit_code_for(const Error& e);

}  // namespace mgeo::cli
