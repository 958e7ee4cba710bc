#include <cstdio>
#include <exception>
#include <fstream>
#include <string>

#include "CLI11.hpp"
#include "mgeo/errors.hpp"
#include "mgeo_cli/commands.hpp"

using namespace mgeo;
using namespace mgeo::cli;

namespace {

// key=value config file mirroring the subcommand's flags. Values are applied
// only to options not already given on the command line, so explicit flags
// always win.
void apply_config_file(CLI::App& sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IngestError, "cannot open config file " + path);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) continue;
    CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (opt == nullptr)
      throw Error(ErrorCode::IngestError, "config key '" + key + "' matches no flag");
    if (opt->count() > 0) continue;  // explicit flag wins
    opt->add_result(value);
    opt->run_callback();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Brownian paths on curved surfaces: simulation, geometry inference, "
               "tangent-space forecasting and an eigenportfolio backtest"};
  app.require_subcommand(1);

  SimulateOptions sim;
  ForecastOptions fore;
  InferOptions infer;
  BacktestOptions back;
  std::string config_file;

  auto* s = app.add_subcommand("simulate", "Generate scenario paths or the correlated-BM null");
  s->add_option("--scenario", sim.scenario, "Scenario id 1..7");
  s->add_flag("--cbm", sim.cbm, "Correlated Brownian null instead of a scenario");
  s->add_option("--n", sim.cbm_n, "CBM asset count");
  s->add_option("--rho", sim.cbm_rho, "CBM equicorrelation in [0,1)");
  s->add_option("--T", sim.cbm_T, "CBM steps");
  s->add_option("--block-length", sim.block_length);
  s->add_option("--total-length", sim.total_length);
  double h_value = 0.0;
  auto* hopt = s->add_option("--step", h_value, "Step size override");
  s->add_option("--seed", sim.seed);
  s->add_option("--out-dir", sim.out_dir);
  s->add_option("--config", config_file, "key=value config file (flags win)");

  auto* i = app.add_subcommand("infer", "Curvature + topology regime inference on a path CSV");
  i->add_option("--input", infer.input)->required();
  i->add_option("--rolling-len", infer.rolling_len);
  i->add_option("--min-window", infer.min_window);
  i->add_option("--smooth-len", infer.smooth_len);
  i->add_option("--alpha", infer.alpha);
  i->add_option("--kappa-pos", infer.kappa_pos);
  i->add_option("--kappa-neg", infer.kappa_neg);
  i->add_flag("--expanding", infer.expanding);
  i->add_option("--topo-window", infer.topo_window);
  i->add_option("--topo-stride", infer.topo_stride);
  i->add_flag("--skip-topology", infer.skip_topology);
  i->add_option("--out-dir", infer.out_dir);
  i->add_option("--config", config_file, "key=value config file (flags win)");

  auto* f = app.add_subcommand("forecast", "Rolling one-step forecasts, geometry vs native arm");
  f->add_option("--input", fore.input)->required();
  f->add_option("--arm", fore.arm)->check(CLI::IsMember({"geometry", "native", "both"}));
  f->add_option("--predictor", fore.predictor)->check(CLI::IsMember({"var", "rf", "gp"}));
  f->add_option("--geometry", fore.geometry)
      ->check(CLI::IsMember({"euclidean", "sphere", "torus", "hyperboloid", "inferred"}));
  f->add_option("--window", fore.window);
  f->add_option("--var-order", fore.var_order);
  f->add_option("--lags", fore.lags);
  f->add_option("--pca-dim", fore.pca_dim);
  f->add_option("--vol-window", fore.vol_window);
  f->add_option("--seed", fore.seed);
  f->add_option("--out-dir", fore.out_dir);
  f->add_option("--config", config_file, "key=value config file (flags win)");

  auto* b = app.add_subcommand("backtest", "Eigenportfolio backtest from a price panel CSV");
  b->add_option("--prices", back.prices)->required();
  b->add_option("--t0", back.t0, "Expanding-PCA warmup length");
  b->add_option("--vol-window", back.vol_window);
  b->add_option("--bench-window", back.bench_window);
  b->add_option("--predictor", back.predictor)->check(CLI::IsMember({"var", "rf", "gp"}));
  b->add_option("--geometries", back.geometries, "Comma list or 'all'");
  b->add_option("--window", back.window);
  b->add_option("--var-order", back.var_order);
  b->add_option("--lags", back.lags);
  b->add_flag("--oracle-foresight", back.oracle_foresight,
              "Inject perfect foresight (identity checks)");
  b->add_option("--kappa-pos", back.kappa_pos);
  b->add_option("--kappa-neg", back.kappa_neg);
  b->add_option("--seed", back.seed);
  b->add_option("--out-dir", back.out_dir);
  b->add_option("--config", config_file, "key=value config file (flags win)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // usage errors -> 2
  }

  try {
    for (auto* sub : {s, i, f, b})
      if (sub->parsed() && !config_file.empty()) apply_config_file(*sub, config_file);
    if (s->parsed()) {
      if (hopt->count() > 0) sim.h = h_value;
      if (!sim.cbm && (sim.scenario < 1 || sim.scenario > 7)) {
        std::fprintf(stderr, "error: --scenario must be 1..7 (or use --cbm)\n");
        return 2;
      }
      return cmd_simulate(sim);
    }
    if (i->parsed()) return cmd_infer(infer);
    if (f->parsed()) return cmd_forecast(fore);
    if (b->parsed()) return cmd_backtest(back);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
  return 2;
}
