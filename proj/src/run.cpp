#include "qtt/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "qtt/contraction.hpp"
#include "qtt/error_control.hpp"
#include "qtt/fem.hpp"
#include "qtt/homogenize.hpp"
#include "qtt/io.hpp"
#include "qtt/tt.hpp"

namespace qtt {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error("option '" + key + "': expected a number, got '" + value + "'");
  }
}

int to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error("option '" + key + "': expected an integer, got '" + value +
                "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  try {
    if (!value.empty() && value[0] == '-') throw std::invalid_argument(value);
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error("option '" + key + "': expected a non-negative integer, got '" +
                value + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw Error("option '" + key + "': expected true/false, got '" + value + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(key, item));
  }
  if (out.empty())
    throw Error("option '" + key + "': expected a comma-separated list");
  return out;
}

// built-in four-plateau modulation used when no steps file is given
StepFunction default_modulator() {
  StepFunction g;
  g.breaks = {0.0, 0.25, 0.5, 0.75};
  g.values = {0.5, 1.0, 0.25, 0.75};
  g.validate();
  return g;
}

StepFunction read_steps_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open steps file: " + path);
  StepFunction s;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::istringstream row(line);
    double b = 0.0, v = 0.0;
    if (!(row >> b >> v))
      throw Error(path + ":" + std::to_string(lineno) +
                  ": expected 'break value'");
    std::string rest;
    if (row >> rest)
      throw Error(path + ":" + std::to_string(lineno) +
                  ": trailing text after 'break value'");
    s.breaks.push_back(b);
    s.values.push_back(v);
  }
  if (s.breaks.empty()) throw Error(path + ": no steps found");
  s.validate();
  return s;
}

std::vector<double> read_samples_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open samples file: " + path);
  std::vector<double> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    out.push_back(
        to_double(path + ":" + std::to_string(lineno), line));
  }
  if (out.empty()) throw Error(path + ": no samples found");
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string fmt_ms(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

void prologue(std::ostream& out, const RunConfig& cfg) {
  out << "# qtt-elliptic csv v1\n# seed = " << cfg.seed << "\n";
}

// Per-iterate error certification: eta is the simplified-energy size of one
// exact-step increment from the iterate, the majorant bounds the distance of
// that step map's output to the iterate's exact continuation, and together
// with the contraction factor they bracket the distance to the limit.
struct CertColumns {
  bool present = false;
  std::vector<double> eta, majorant, lower, upper;
};

CertColumns certify_iterates(const RunConfig& cfg, const AssembledProblem& p,
                             const CoefficientSpec& spec, const LoadSpec& f,
                             const std::vector<QttVector>& iterates) {
  CertColumns cols;
  if (p.q >= 1.0) return cols;
  try {
    Certifier cert = p.a0_is_constant
                         ? Certifier(spec, f, p.a0_value, p.grid)
                         : Certifier(spec, f, p.a0_steps, p.grid);
    for (const QttVector& v : iterates) {
      const QttVector probe = fixed_point_step(v, p.load, p.stiffness,
                                               p.precond_inv, p.rho_star,
                                               cfg.delta);
      const double eta = cert.energy_norm_a0(add(probe, scale(v, -1.0)));
      const FluxField1D y = cert.flux_reconstruct(v, p.rho_star);
      const MajorantReport m = cert.majorant_step(probe, v, y, p.rho_star);
      const TwoSidedBounds b = two_sided(eta, m.value, p.q);
      cols.eta.push_back(eta);
      cols.majorant.push_back(m.value);
      cols.lower.push_back(b.lower);
      cols.upper.push_back(b.upper);
    }
    cols.present = true;
  } catch (const Error&) {
    cols = {};  // certification unavailable; emit empty columns
  }
  return cols;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
    m = 0.5 * (m + v[mid - 1]);
  }
  return m;
}

int run_solve(const RunConfig& cfg, std::ostream& out) {
  const CoefficientSpec spec = coefficient_from(cfg);
  const LoadSpec f = load_from(cfg);
  SolverConfig scfg = solver_config_from(cfg);
  scfg.keep_iterates = true;
  const AssembledProblem p = assemble_problem(scfg, spec, f);
  const SolutionReport rep = solve(scfg, p);
  const CertColumns cert = certify_iterates(cfg, p, spec, f, rep.iterates);

  if (cfg.json) {
    nlohmann::json j;
    j["format"] = "qtt-elliptic json v1";
    j["seed"] = cfg.seed;
    j["level"] = cfg.level;
    j["delta"] = cfg.delta;
    j["converged"] = rep.converged;
    j["iterations"] = static_cast<int>(rep.history.size()) - 1;
    j["rho_used"] = rep.rho_used;
    j["q_used"] = rep.q_used;
    j["rho_warning"] = rep.rho_warning;
    j["rho_star"] = p.rho_star;
    j["q"] = p.q;
    j["a0_constant"] = p.a0_is_constant;
    if (p.a0_is_constant) j["a0"] = p.a0_value;
    j["solution_avg_rank"] = average_rank(rep.solution);
    j["solution_rank_profile"] = rep.solution.rank_profile();
    auto& hist = j["history"];
    hist = nlohmann::json::array();
    for (std::size_t i = 0; i < rep.history.size(); ++i) {
      const ConvergenceRecord& r = rep.history[i];
      nlohmann::json row{{"iter", r.k},
                         {"residual", r.residual_norm},
                         {"increment_energy", r.increment_energy},
                         {"avg_rank_u", r.avg_rank},
                         {"wall_ms", r.wall_ms}};
      if (cert.present) {
        row["majorant"] = cert.majorant[i];
        row["err_lower"] = cert.lower[i];
        row["err_upper"] = cert.upper[i];
      }
      hist.push_back(std::move(row));
    }
    out << j.dump(2) << "\n";
  } else {
    prologue(out, cfg);
    out << "iter,residual,increment_energy,avg_rank_u,majorant,err_lower,"
           "err_upper,wall_ms\n";
    for (std::size_t i = 0; i < rep.history.size(); ++i) {
      const ConvergenceRecord& r = rep.history[i];
      out << r.k << ',' << fmt(r.residual_norm) << ','
          << fmt(r.increment_energy) << ',' << fmt(r.avg_rank) << ',';
      if (cert.present)
        out << fmt(cert.majorant[i]) << ',' << fmt(cert.lower[i]) << ','
            << fmt(cert.upper[i]);
      else
        out << ",,";
      out << ',' << fmt_ms(r.wall_ms) << '\n';
    }
  }
  return rep.converged ? 0 : 2;
}

int run_certify(const RunConfig& cfg, std::ostream& out) {
  const CoefficientSpec spec = coefficient_from(cfg);
  const LoadSpec f = load_from(cfg);
  SolverConfig scfg = solver_config_from(cfg);
  scfg.keep_iterates = true;
  const AssembledProblem p = assemble_problem(scfg, spec, f);
  const SolutionReport rep = solve(scfg, p);
  const CertColumns cert = certify_iterates(cfg, p, spec, f, rep.iterates);
  if (!cert.present)
    throw Error(
        "certify: certification unavailable (contraction factor >= 1, or the "
        "coefficient/load class needs dense evaluation at this depth)");
  prologue(out, cfg);
  out << "iter,eta_norm,majorant,err_lower,err_upper,q\n";
  for (std::size_t i = 0; i < cert.eta.size(); ++i)
    out << rep.history[i].k << ',' << fmt(cert.eta[i]) << ','
        << fmt(cert.majorant[i]) << ',' << fmt(cert.lower[i]) << ','
        << fmt(cert.upper[i]) << ',' << fmt(p.q) << '\n';
  return rep.converged ? 0 : 2;
}

int run_benchmark(const RunConfig& cfg, std::ostream& out) {
  if (cfg.coef_class == "exotic" || cfg.coef_class == "custom")
    throw Error("benchmark: class '" + cfg.coef_class +
                "' needs dense sampling at setup; use solve instead");
  if (cfg.load_class == "custom")
    throw Error("benchmark: custom loads need dense sampling; use solve");
  const int lo = cfg.level_min > 0 ? cfg.level_min : 13;
  const int hi = cfg.level_max > 0 ? cfg.level_max : 17;
  if (lo < 10 || hi > 20 || lo > hi)
    throw Error("benchmark: level range must satisfy 10 <= min <= max <= 20");
  if (cfg.repeats < 1) throw Error("benchmark: repeats must be positive");
  const CoefficientSpec spec = coefficient_from(cfg);
  const LoadSpec f = load_from(cfg);

  prologue(out, cfg);
  out << "level,iterations,median_iter_ms,avg_rank_u,avg_rank_a\n";
  int code = 0;
  // proves the sweep never materializes a length-2^level array
  DenseGuard guard;
  for (int level = lo; level <= hi; ++level) {
    SolverConfig scfg = solver_config_from(cfg);
    scfg.level = level;
    scfg.record_timing = true;
    std::vector<double> walls;
    int iterations = 0;
    double rank_u = 0.0, rank_a = 0.0;
    for (int rep = 0; rep < cfg.repeats; ++rep) {
      const AssembledProblem p = assemble_problem(scfg, spec, f);
      const SolutionReport r = solve(scfg, p);
      if (!r.converged) code = 2;
      for (std::size_t k = 1; k < r.history.size(); ++k)
        walls.push_back(r.history[k].wall_ms);
      iterations = static_cast<int>(r.history.size()) - 1;
      rank_u = average_rank(r.solution);
      rank_a = average_rank(p.coeff);
    }
    out << level << ',' << iterations << ',' << fmt_ms(median(walls)) << ','
        << fmt(rank_u) << ',' << fmt(rank_a) << '\n';
  }
  return code;
}

int run_contraction(const RunConfig& cfg, std::ostream& out) {
  const CoefficientSpec spec = coefficient_from(cfg);
  const LoadSpec f = load_from(cfg);
  const SolverConfig scfg = solver_config_from(cfg);
  const AssembledProblem p = assemble_problem(scfg, spec, f);

  const auto [eps_lo, eps_hi] = coefficient_range(spec, 0.0, 1.0);
  double base_lo = p.a0_value, base_hi = p.a0_value;
  if (!p.a0_is_constant) {
    base_lo = p.a0_steps.min_value();
    base_hi = p.a0_steps.max_value();
  }
  const double q_coarse = coarse_q_bound(eps_lo, eps_hi, base_lo, base_hi);

  double cond = std::numeric_limits<double>::infinity();
  if (!p.a0_is_constant) {
    const auto env = envelope_step_functions(spec);
    cond = averaged_coefficient(env.first, env.second, spec).cond_bound;
  } else if (p.q < 1.0) {
    cond = (1.0 + p.q) / (1.0 - p.q);
  }

  prologue(out, cfg);
  out << "rho_star,q,q_coarse,cond_bound\n";
  out << fmt(p.rho_star) << ',' << fmt(p.q) << ',' << fmt(q_coarse) << ','
      << fmt(cond) << '\n';
  return 0;
}

int run_compare_hom(const RunConfig& cfg, std::ostream& out) {
  if (cfg.hom_freqs.empty())
    throw Error("compare-hom: at least one frequency is required");
  prologue(out, cfg);
  out << "freq_k,a0_hom,l2_diff,h1_diff,residual\n";
  int code = 0;
  const Grid grid = Grid::of_level(cfg.level);
  for (const double freq : cfg.hom_freqs) {
    RunConfig sweep = cfg;
    sweep.freq_k = freq;
    const CoefficientSpec spec = coefficient_from(sweep);
    const LoadSpec f = load_from(sweep);
    const SolverConfig scfg = solver_config_from(sweep);
    const SolutionReport rep = solve(scfg, spec, f);
    if (!rep.converged) code = 2;
    const HomogenizedModel hom = homogenize_reference(spec, f, grid,
                                                      rep.solution);
    out << fmt(freq) << ',' << fmt(hom.a0_hom) << ','
        << fmt(hom.comparison.l2_diff) << ',' << fmt(hom.comparison.h1_diff)
        << ',' << fmt(hom.comparison.residual) << '\n';
  }
  return code;
}

int run_ranks(const RunConfig& cfg, std::ostream& out) {
  const int lo = cfg.level_min > 0 ? cfg.level_min : cfg.level;
  const int hi = cfg.level_max > 0 ? cfg.level_max : cfg.level;
  if (lo < 1 || hi > 30 || lo > hi)
    throw Error("ranks: level range must satisfy 1 <= min <= max <= 30");
  const CoefficientSpec spec = coefficient_from(cfg);

  prologue(out, cfg);
  out << "level,avg_rank_a,max_rank_a,avg_rank_A,max_rank_A,rank_bound,"
         "within\n";
  for (int level = lo; level <= hi; ++level) {
    const Grid grid = Grid::of_level(level);
    const QttVector a = sample_coefficient(spec, grid, {cfg.delta, 0});
    const QttMatrix A = assemble_stiffness_qtt(a, grid.h, {0.0, 0});
    const std::vector<Index> ra = a.rank_profile();
    const std::vector<Index> rA = A.rank_profile();
    Index max_a = 1, max_A = 1;
    bool within = true;
    for (std::size_t k = 0; k < ra.size(); ++k) {
      max_a = std::max(max_a, ra[k]);
      max_A = std::max(max_A, rA[k]);
      if (rA[k] > 7 * ra[k]) within = false;
    }
    out << level << ',' << fmt(average_rank(a)) << ',' << max_a << ','
        << fmt(average_rank(A)) << ',' << max_A << ',' << 7 * max_a << ','
        << (within ? 1 : 0) << '\n';
    if (level == hi && !cfg.dump_train.empty()) save_file(cfg.dump_train, a);
  }
  return 0;
}

}  // namespace

void apply_run_key(RunConfig& cfg, const std::string& key,
                   const std::string& value) {
  if (key == "coef-class") cfg.coef_class = value;
  else if (key == "offset-c") cfg.offset_c = to_double(key, value);
  else if (key == "freq-k") cfg.freq_k = to_double(key, value);
  else if (key == "power-m") cfg.power_m = to_int(key, value);
  else if (key == "steps-file") cfg.steps_file = value;
  else if (key == "samples-file") cfg.samples_file = value;
  else if (key == "load-class") cfg.load_class = value;
  else if (key == "load-value") cfg.load_value = to_double(key, value);
  else if (key == "load-coeffs") cfg.load_coeffs = to_list(key, value);
  else if (key == "load-amplitude") cfg.load_amplitude = to_double(key, value);
  else if (key == "load-omega") cfg.load_omega = to_double(key, value);
  else if (key == "load-samples-file") cfg.load_samples_file = value;
  else if (key == "level") cfg.level = to_int(key, value);
  else if (key == "level-min") cfg.level_min = to_int(key, value);
  else if (key == "level-max") cfg.level_max = to_int(key, value);
  else if (key == "delta") cfg.delta = to_double(key, value);
  else if (key == "rho") cfg.rho = value;
  else if (key == "method") cfg.method = value;
  else if (key == "precond") cfg.precond = value;
  else if (key == "explicit-a0") cfg.explicit_a0 = to_double(key, value);
  else if (key == "stop-tol") cfg.stop_tol = to_double(key, value);
  else if (key == "max-iter") cfg.max_iter = to_int(key, value);
  else if (key == "repeats") cfg.repeats = to_int(key, value);
  else if (key == "hom-freqs") cfg.hom_freqs = to_list(key, value);
  else if (key == "output") cfg.output = value;
  else if (key == "dump-train") cfg.dump_train = value;
  else if (key == "json") cfg.json = to_bool(key, value);
  else if (key == "seed") cfg.seed = to_u64(key, value);
  else if (key == "threads") cfg.threads = to_int(key, value);
  else throw Error("unknown option '" + key + "'");
  if (key == "threads" && cfg.threads < 1)
    throw Error("option 'threads': must be positive");
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(path + ":" + std::to_string(lineno) +
                  ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw Error(path + ":" + std::to_string(lineno) + ": empty key");
    try {
      apply_run_key(cfg, key, value);
    } catch (const Error& e) {
      throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

CoefficientSpec coefficient_from(const RunConfig& cfg) {
  const std::string& c = cfg.coef_class;
  if (c == "constant") return CoefficientSpec::constant(cfg.offset_c);
  if (c == "sine") return CoefficientSpec::sine(cfg.offset_c, cfg.freq_k);
  if (c == "modulated") {
    StepFunction g = cfg.steps_file.empty() ? default_modulator()
                                            : read_steps_file(cfg.steps_file);
    return CoefficientSpec::modulated(cfg.offset_c, cfg.freq_k, std::move(g));
  }
  if (c == "exotic")
    return CoefficientSpec::exotic(cfg.offset_c, cfg.freq_k, cfg.power_m);
  if (c == "steps") {
    if (cfg.steps_file.empty())
      throw Error("coefficient class 'steps' needs --steps-file");
    return CoefficientSpec::steps(read_steps_file(cfg.steps_file));
  }
  if (c == "custom") {
    if (cfg.samples_file.empty())
      throw Error("coefficient class 'custom' needs --samples-file");
    return CoefficientSpec::custom(read_samples_file(cfg.samples_file));
  }
  throw Error("unknown coefficient class '" + c +
              "' (constant|sine|modulated|exotic|steps|custom)");
}

LoadSpec load_from(const RunConfig& cfg) {
  const std::string& c = cfg.load_class;
  if (c == "constant") return LoadSpec::constant(cfg.load_value);
  if (c == "polynomial") return LoadSpec::polynomial(cfg.load_coeffs);
  if (c == "sine") return LoadSpec::sine(cfg.load_amplitude, cfg.load_omega);
  if (c == "custom") {
    if (cfg.load_samples_file.empty())
      throw Error("load class 'custom' needs --load-samples-file");
    return LoadSpec::custom(read_samples_file(cfg.load_samples_file));
  }
  throw Error("unknown load class '" + c +
              "' (constant|polynomial|sine|custom)");
}

SolverConfig solver_config_from(const RunConfig& cfg) {
  SolverConfig s;
  s.level = cfg.level;
  s.delta = cfg.delta;
  if (cfg.method == "psd") s.method = Method::Psd;
  else if (cfg.method == "fixed-point") s.method = Method::FixedPoint;
  else throw Error("unknown method '" + cfg.method + "' (psd|fixed-point)");
  if (cfg.precond == "mean") s.preconditioner = Preconditioner::Mean;
  else if (cfg.precond == "harmonic")
    s.preconditioner = Preconditioner::HarmonicMean;
  else if (cfg.precond == "envelope")
    s.preconditioner = Preconditioner::EnvelopeAverage;
  else if (cfg.precond == "constant")
    s.preconditioner = Preconditioner::ExplicitConstant;
  else
    throw Error("unknown preconditioner '" + cfg.precond +
                "' (mean|harmonic|envelope|constant)");
  s.explicit_a0 = cfg.explicit_a0;
  if (cfg.rho == "auto") {
    s.rho_auto = true;
  } else {
    s.rho_auto = false;
    s.rho = to_double("rho", cfg.rho);
  }
  s.stop_tol = cfg.stop_tol;
  s.max_iter = cfg.max_iter;
  s.validate();
  return s;
}

int run(const RunConfig& cfg, std::ostream& out) {
  if (cfg.subcommand == "solve") return run_solve(cfg, out);
  if (cfg.subcommand == "benchmark") return run_benchmark(cfg, out);
  if (cfg.subcommand == "certify") return run_certify(cfg, out);
  if (cfg.subcommand == "contraction") return run_contraction(cfg, out);
  if (cfg.subcommand == "compare-hom") return run_compare_hom(cfg, out);
  if (cfg.subcommand == "ranks") return run_ranks(cfg, out);
  throw Error("unknown subcommand '" + cfg.subcommand + "'");
}

}  // namespace qtt
