#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qtt/solver.hpp"

namespace qtt {

// Flat driver configuration.  Every field maps 1:1 to a CLI flag and to a
// `key = value` line of a config file; the key is the long flag name.
struct RunConfig {
  std::string subcommand = "solve";

  // coefficient: constant | sine | modulated | exotic | steps | custom
  std::string coef_class = "sine";
  double offset_c = 2.0;   // C
  double freq_k = 64.0;    // K, omega = 2*pi*K
  int power_m = 3;         // exotic exponent
  std::string steps_file;    // "break value" per line; empty = built-in 4-step
  std::string samples_file;  // newline-separated midpoint samples

  // load: constant | polynomial | sine | custom
  std::string load_class = "constant";
  double load_value = 1.0;
  std::vector<double> load_coeffs{1.0};
  double load_amplitude = 1.0;
  double load_omega = 6.283185307179586;
  std::string load_samples_file;

  int level = 14;
  int level_min = 0, level_max = 0;  // ranged subcommands; 0 = use `level`
  double delta = 1e-7;
  std::string rho = "auto";          // "auto" or a positive number
  std::string method = "psd";        // psd | fixed-point
  std::string precond = "mean";      // mean | harmonic | envelope | constant
  double explicit_a0 = 1.0;
  double stop_tol = 1e-6;
  int max_iter = 60;
  int repeats = 3;                   // benchmark repetitions per level
  std::vector<double> hom_freqs{16.0, 32.0, 64.0, 128.0};  // compare-hom sweep

  std::string output;      // CSV path; empty = stdout
  std::string dump_train;  // ranks: optional binary dump of the coefficient
  bool json = false;       // solve: JSON summary instead of CSV
  std::uint64_t seed = 0;  // echoed into every artifact
  int threads = 1;         // reserved (QTT_ELLIPTIC_THREADS)
};

// applies one assignment; throws qtt::Error on unknown keys or bad values
void apply_run_key(RunConfig& cfg, const std::string& key,
                   const std::string& value);

// overlays `key = value` lines (UTF-8, '#' comments) onto cfg
void apply_config_file(RunConfig& cfg, const std::string& path);

CoefficientSpec coefficient_from(const RunConfig& cfg);
LoadSpec load_from(const RunConfig& cfg);
SolverConfig solver_config_from(const RunConfig& cfg);

// Dispatches on cfg.subcommand, writing the CSV artifact to `out`.
// Returns the process exit code: 0 success, 2 iteration cap reached.
// Configuration problems throw qtt::Error (the CLI maps them to exit 1).
int run(const RunConfig& cfg, std::ostream& out);

}  // namespace qtt
