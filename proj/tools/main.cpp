#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "qtt/run.hpp"
#include "qtt/tt.hpp"

namespace {

// Options are captured as strings in arrival order and applied after the
// config file, so explicit flags always win over file entries and defaults.
struct Overlay {
  std::vector<std::pair<std::string, std::string>> kv;

  void opt(CLI::App& cmd, const std::string& key, const std::string& help) {
    cmd.add_option_function<std::string>(
        "--" + key,
        [this, key](const std::string& v) { kv.emplace_back(key, v); }, help);
  }

  void flag(CLI::App& cmd, const std::string& key, const std::string& help) {
    cmd.add_flag_callback(
        "--" + key, [this, key] { kv.emplace_back(key, "true"); }, help);
  }
};

void register_options(CLI::App& cmd, Overlay& ov, std::string& config_path) {
  cmd.add_option("--config", config_path,
                 "flat 'key = value' file applied before flags");
  ov.opt(cmd, "coef-class",
         "coefficient class: constant|sine|modulated|exotic|steps|custom");
  ov.opt(cmd, "offset-c", "constant offset C of the coefficient");
  ov.opt(cmd, "freq-k", "oscillation frequency K (omega = 2*pi*K)");
  ov.opt(cmd, "power-m", "exponent m of the exotic class");
  ov.opt(cmd, "steps-file",
         "piecewise-constant profile, one 'break value' per line");
  ov.opt(cmd, "samples-file", "midpoint samples, one value per line");
  ov.opt(cmd, "load-class", "load class: constant|polynomial|sine|custom");
  ov.opt(cmd, "load-value", "value of the constant load");
  ov.opt(cmd, "load-coeffs", "polynomial coefficients c0,c1,...");
  ov.opt(cmd, "load-amplitude", "amplitude of the sine load");
  ov.opt(cmd, "load-omega", "angular frequency of the sine load");
  ov.opt(cmd, "load-samples-file", "nodal load samples, one value per line");
  ov.opt(cmd, "level", "quantization depth L, grid has 2^L interior nodes");
  ov.opt(cmd, "level-min", "first level of a ranged sweep");
  ov.opt(cmd, "level-max", "last level of a ranged sweep");
  ov.opt(cmd, "delta", "relative rounding tolerance");
  ov.opt(cmd, "rho", "step size: 'auto' or a positive number");
  ov.opt(cmd, "method", "iteration: psd|fixed-point");
  ov.opt(cmd, "precond", "simplified operator: mean|harmonic|envelope|constant");
  ov.opt(cmd, "explicit-a0", "coefficient of the 'constant' preconditioner");
  ov.opt(cmd, "stop-tol", "relative residual stopping tolerance");
  ov.opt(cmd, "max-iter", "iteration cap");
  ov.opt(cmd, "repeats", "benchmark repetitions per level");
  ov.opt(cmd, "hom-freqs", "frequency sweep K1,K2,... for compare-hom");
  ov.opt(cmd, "output", "write the CSV artifact here instead of stdout");
  ov.opt(cmd, "dump-train", "ranks: save the coefficient train to this file");
  ov.flag(cmd, "json", "solve: emit a JSON report instead of CSV");
  ov.opt(cmd, "seed", "opaque tag echoed into every artifact");
  ov.opt(cmd, "threads", "reserved; accepted for forward compatibility");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "solver for -(a u')' = f on (0,1) with oscillatory coefficients,\n"
      "working in the quantized tensor-train format"};
  app.require_subcommand(1);

  Overlay overlay;
  std::string config_path;
  std::string subcommand;
  const std::pair<const char*, const char*> subs[] = {
      {"solve", "run the preconditioned iteration and report its history"},
      {"benchmark", "median per-iteration wall time over a level range"},
      {"certify", "two-sided error bounds for every iterate"},
      {"contraction", "step size and contraction/conditioning estimates"},
      {"compare-hom", "compare against the homogenized limit over frequencies"},
      {"ranks", "coefficient and operator rank profiles over levels"}};
  for (const auto& [name, help] : subs) {
    CLI::App* cmd = app.add_subcommand(name, help);
    register_options(*cmd, overlay, config_path);
    cmd->callback([&subcommand, name = std::string(name)] {
      subcommand = name;
    });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    qtt::RunConfig cfg;
    cfg.subcommand = subcommand;
    if (!config_path.empty()) qtt::apply_config_file(cfg, config_path);
    for (const auto& [key, value] : overlay.kv)
      qtt::apply_run_key(cfg, key, value);

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!cfg.output.empty()) {
      file.open(cfg.output);
      if (!file) throw qtt::Error("cannot open output file: " + cfg.output);
      out = &file;
    }
    return qtt::run(cfg, *out);
  } catch (const qtt::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
