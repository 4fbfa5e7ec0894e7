#include "qtt/solver.hpp"

#include <chrono>
#include <cmath>
#include <tuple>
#include <utility>

#include "qtt/error_control.hpp"

namespace qtt {

namespace {

Truncation quarter(double delta) { return {delta / 4.0, 0}; }

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  const auto dt = std::chrono::steady_clock::now() - t0;
  return std::chrono::duration<double, std::milli>(dt).count();
}

// residual r = f - A v and preconditioned direction z = A0^{-1} r
struct StepData {
  QttVector r, z;
};

StepData step_data(const QttVector& v, const QttVector& load,
                   const QttMatrix& stiffness, const QttMatrix& precond_inv,
                   double delta) {
  StepData d;
  const QttVector av = matvec(stiffness, v, quarter(delta));
  d.r = round(add(load, scale(av, -1.0)), quarter(delta));
  d.z = matvec(precond_inv, d.r, quarter(delta));
  return d;
}

}  // namespace

void SolverConfig::validate() const {
  if (level < 1 || level > 30) throw Error("SolverConfig: level out of range");
  if (!(delta >= 0.0)) throw Error("SolverConfig: delta must be >= 0");
  if (!(stop_tol > 0.0)) throw Error("SolverConfig: stop_tol must be positive");
  if (max_iter < 1) throw Error("SolverConfig: max_iter must be >= 1");
  if (!rho_auto && !(rho > 0.0)) throw Error("SolverConfig: rho must be positive");
  if (preconditioner == Preconditioner::ExplicitConstant && !(explicit_a0 > 0.0))
    throw Error("SolverConfig: explicit_a0 must be positive");
}

AssembledProblem assemble_problem(const SolverConfig& cfg,
                                  const CoefficientSpec& a_eps,
                                  const LoadSpec& f) {
  cfg.validate();
  AssembledProblem p;
  p.grid = Grid::of_level(cfg.level);
  p.coeff = sample_coefficient(a_eps, p.grid, {cfg.delta, 0});
  p.stiffness = assemble_stiffness_qtt(p.coeff, p.grid.h, {0.0, 0});

  switch (cfg.preconditioner) {
    case Preconditioner::Mean:
      p.a0_value = mean_coefficient(a_eps);
      break;
    case Preconditioner::HarmonicMean:
      p.a0_value = harmonic_mean_coefficient(a_eps);
      break;
    case Preconditioner::ExplicitConstant:
      p.a0_value = cfg.explicit_a0;
      break;
    case Preconditioner::EnvelopeAverage: {
      auto [lower, upper] = envelope_step_functions(a_eps);
      AveragedCoefficient avg = averaged_coefficient(lower, upper, a_eps);
      if (avg.a0.values.size() == 1) {
        p.a0_value = avg.a0.values.front();
      } else {
        p.a0_is_constant = false;
        p.a0_steps = std::move(avg.a0);
      }
      break;
    }
  }

  const Truncation ptol{1e-12, 0};
  if (p.a0_is_constant) {
    p.precond_inv = inverse_preconditioner_qtt(p.a0_value, p.grid, ptol);
    p.a0_mid = QttVector::constant(cfg.level, p.a0_value);
    std::tie(p.ratio_lo, p.ratio_hi) = ratio_bounds(a_eps, p.a0_value);
  } else {
    p.precond_inv = inverse_preconditioner_qtt(p.a0_steps, p.grid, ptol);
    p.a0_mid = step_midpoint_samples(p.a0_steps, p.grid, {0.0, 0});
    std::tie(p.ratio_lo, p.ratio_hi) = ratio_bounds(a_eps, p.a0_steps);
  }
  std::tie(p.rho_star, p.q) = rho_star_and_q(p.ratio_lo, p.ratio_hi);

  const Truncation ltol = f.analytic() ? Truncation{0.0, 0}
                                       : Truncation{cfg.delta, 0};
  p.load = assemble_load(f, p.grid, ltol);
  p.load_norm = norm2(p.load);
  return p;
}

QttVector initial_guess(const QttMatrix& precond_inv, const QttVector& load,
                        double delta) {
  return round(matvec(precond_inv, load, quarter(delta)), {delta, 0});
}

QttVector fixed_point_step(const QttVector& v, const QttVector& load,
                           const QttMatrix& stiffness,
                           const QttMatrix& precond_inv, double rho,
                           double delta) {
  const StepData d = step_data(v, load, stiffness, precond_inv, delta);
  return round(add(v, scale(d.z, rho)), {delta, 0});
}

QttVector psd_step(const QttVector& v, const QttVector& load,
                   const QttMatrix& stiffness, const QttMatrix& precond_inv,
                   double delta) {
  const StepData d = step_data(v, load, stiffness, precond_inv, delta);
  if (norm2(d.r) == 0.0) return v;
  const QttVector az = matvec(stiffness, d.z, quarter(delta));
  const double curvature = dot(az, d.z);
  if (!(curvature > 0.0))
    throw Error("psd_step: non-positive curvature; operator not SPD at this rank");
  const double alpha = dot(d.z, d.r) / curvature;
  return round(add(v, scale(d.z, alpha)), {delta, 0});
}

SolutionReport solve(const SolverConfig& cfg, const AssembledProblem& problem) {
  cfg.validate();
  SolutionReport rep;
  rep.rho_used = cfg.rho_auto ? problem.rho_star : cfg.rho;
  rep.q_used = cfg.rho_auto
                   ? problem.q
                   : std::max(std::abs(1.0 - rep.rho_used * problem.ratio_lo),
                              std::abs(1.0 - rep.rho_used * problem.ratio_hi));
  rep.rho_warning = rep.q_used >= 1.0;

  QttVector v = initial_guess(problem.precond_inv, problem.load, cfg.delta);
  // normalizer ||v0||_{A0} = sqrt(f^T A0^{-1} f); same energy scale as the
  // residual metric below
  const double pf_norm = std::sqrt(std::max(0.0, dot(v, problem.load)));
  const double stop = cfg.stop_tol * pf_norm;

  StepData d = step_data(v, problem.load, problem.stiffness,
                         problem.precond_inv, cfg.delta);
  // dual-norm residual ||f - A v||_{A0^{-1}} = ||z||_{A0}; unlike the
  // Euclidean norm of z it does not zig-zag under steepest descent
  auto dual_res = [](const StepData& s) {
    return std::sqrt(std::max(0.0, dot(s.z, s.r)));
  };
  auto record = [&](int k, const QttVector& u, double pres, double incr,
                    double ms) {
    ConvergenceRecord rec;
    rec.k = k;
    rec.residual_norm = pres;
    rec.increment_energy = incr;
    rec.avg_rank = average_rank(u);
    rec.wall_ms = ms;
    rep.history.push_back(rec);
  };

  double pres = dual_res(d);
  record(0, v, pres, 0.0, 0.0);
  if (cfg.keep_iterates) rep.iterates.push_back(v);
  rep.converged = pres <= stop;

  for (int k = 1; k <= cfg.max_iter && !rep.converged; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    QttVector v_next;
    if (cfg.method == Method::FixedPoint) {
      v_next = round(add(v, scale(d.z, rep.rho_used)), {cfg.delta, 0});
    } else {
      const QttVector az =
          matvec(problem.stiffness, d.z, quarter(cfg.delta));
      const double curvature = dot(az, d.z);
      if (!(curvature > 0.0))
        throw Error(
            "solve: non-positive curvature; operator not SPD at this rank");
      const double alpha = dot(d.z, d.r) / curvature;
      v_next = round(add(v, scale(d.z, alpha)), {cfg.delta, 0});
    }
    d = step_data(v_next, problem.load, problem.stiffness, problem.precond_inv,
                  cfg.delta);
    pres = dual_res(d);
    const double ms = cfg.record_timing ? elapsed_ms(t0) : 0.0;

    const QttVector diff = add(v_next, scale(v, -1.0));
    const double incr = energy_norm(diff, problem.a0_mid, problem.grid.h);
    v = std::move(v_next);
    if (cfg.keep_iterates) rep.iterates.push_back(v);
    record(k, v, pres, incr, ms);
    rep.converged = pres <= stop;
  }

  rep.solution = std::move(v);
  return rep;
}

SolutionReport solve(const SolverConfig& cfg, const CoefficientSpec& a_eps,
                     const LoadSpec& f) {
  return solve(cfg, assemble_problem(cfg, a_eps, f));
}

}  // namespace qtt
