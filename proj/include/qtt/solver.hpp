#pragma once

#include <vector>

#include "qtt/contraction.hpp"
#include "qtt/fem.hpp"
#include "qtt/tt.hpp"

namespace qtt {

enum class Method { FixedPoint, Psd };
enum class Preconditioner { Mean, HarmonicMean, EnvelopeAverage, ExplicitConstant };

struct SolverConfig {
  int level = 14;
  double delta = 1e-7;        // rank-truncation tolerance of the iteration
  Method method = Method::Psd;
  bool rho_auto = true;       // derive the step from the ratio bounds
  double rho = 1.0;           // used when rho_auto is false
  Preconditioner preconditioner = Preconditioner::Mean;
  double explicit_a0 = 1.0;   // used with Preconditioner::ExplicitConstant
  double stop_tol = 1e-6;     // relative preconditioned-residual target
  int max_iter = 60;
  bool record_timing = true;
  bool keep_iterates = false;

  void validate() const;
};

struct ConvergenceRecord {
  int k = 0;
  // dual-norm residual ||f - A v_k||_{A0^{-1}}, the quantity the
  // preconditioned contraction controls; the raw Euclidean residual has a
  // delta-rank floor far above ||f||_2 because ||A|| ~ 1/h^2
  double residual_norm = 0.0;
  double increment_energy = 0.0;   // ||v_k - v_{k-1}|| in the a0 energy norm
  double avg_rank = 1.0;
  double wall_ms = 0.0;
  // certification data, attached on demand; negative means absent
  double majorant = -1.0;
  double err_lower = -1.0;
  double err_upper = -1.0;
};

// every train an iteration needs, plus the contraction data of the pair
struct AssembledProblem {
  Grid grid{};
  QttVector coeff;        // midpoint samples of the oscillating coefficient
  QttMatrix stiffness;
  QttMatrix precond_inv;  // inverse of the simplified operator
  QttVector a0_mid;       // midpoint samples of the simplified coefficient
  QttVector load;
  bool a0_is_constant = true;
  double a0_value = 1.0;
  StepFunction a0_steps;  // set when the simplification is piecewise
  double load_norm = 0.0;
  double ratio_lo = 1.0, ratio_hi = 1.0;
  double rho_star = 1.0;
  double q = 0.0;
};

struct SolutionReport {
  QttVector solution;
  std::vector<ConvergenceRecord> history;
  std::vector<QttVector> iterates;  // filled when keep_iterates is set
  bool converged = false;
  bool rho_warning = false;  // step outside the contraction window
  double rho_used = 1.0;
  double q_used = 0.0;
};

AssembledProblem assemble_problem(const SolverConfig& cfg,
                                  const CoefficientSpec& a_eps,
                                  const LoadSpec& f);

// v0 = precond_inv * load, the simplified-problem solution
QttVector initial_guess(const QttMatrix& precond_inv, const QttVector& load,
                        double delta);

QttVector fixed_point_step(const QttVector& v, const QttVector& load,
                           const QttMatrix& stiffness,
                           const QttMatrix& precond_inv, double rho,
                           double delta);

QttVector psd_step(const QttVector& v, const QttVector& load,
                   const QttMatrix& stiffness, const QttMatrix& precond_inv,
                   double delta);

SolutionReport solve(const SolverConfig& cfg, const AssembledProblem& problem);
SolutionReport solve(const SolverConfig& cfg, const CoefficientSpec& a_eps,
                     const LoadSpec& f);

}  // namespace qtt
