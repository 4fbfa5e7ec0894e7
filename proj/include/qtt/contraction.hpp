#pragma once

#include <span>
#include <utility>
#include <vector>

#include "qtt/fem.hpp"
#include "qtt/tt.hpp"

namespace qtt {

// ellipticity data of the pair (oscillating a_eps, simplified a0)
struct SpectralBounds {
  double lambda1 = 1.0, lambda2 = 1.0;  // form equivalence: lambda1 <= h <= lambda2
  double eps_lo = 1.0, eps_hi = 1.0;    // range of a_eps
  double base_lo = 1.0, base_hi = 1.0;  // range of a0
  double c_plus = 1.0;                  // admissible-window constant, >= lambda1^2
  double h_lo = 1.0, h_hi = 1.0;        // range of the ratio a_eps/a0

  void validate() const;
};

struct ContractionReport {
  double rho_star = 1.0;    // optimal step of the simple iteration
  double q = 0.0;           // sharp contraction factor, in [0,1)
  double q_coarse = 0.0;    // coarse bound from separate envelopes
  double cond_bound = 1.0;  // (1+q)/(1-q) conditioning estimate
  double a0_star = 1.0;     // simplified coefficient the report refers to
};

// piecewise-constant average of two step envelopes with its quality numbers
struct AveragedCoefficient {
  StepFunction a0;          // (upper + lower) / 2 on merged breakpoints
  StepFunction q_profile;   // per-piece oscillation (upper-a0)/a0
  double q_max = 0.0;
  double cond_bound = 1.0;  // max over pieces of (1+q)/(1-q)
};

namespace detail {
// min/max of sin over a phase interval
std::pair<double, double> sin_range(double phi_lo, double phi_hi);
}  // namespace detail

// analytic range of a coefficient over [xl, lr); throws for sampled classes
std::pair<double, double> coefficient_range(const CoefficientSpec& a,
                                            double xl, double xr);

// range of a_eps/a0; analytic per class, sampled classes use their own samples
std::pair<double, double> ratio_bounds(const CoefficientSpec& a_eps, double a0);
std::pair<double, double> ratio_bounds(const CoefficientSpec& a_eps,
                                       const StepFunction& a0);
// dense variants, guarded to small grids
std::pair<double, double> ratio_bounds(const QttVector& a_eps, double a0);
std::pair<double, double> ratio_bounds(const QttVector& a_eps,
                                       const QttVector& a0);

// optimal step and contraction factor for a ratio confined to [h_lo, h_hi]
std::pair<double, double> rho_star_and_q(double h_lo, double h_hi);

// contraction bound using only the separate coefficient envelopes
double coarse_q_bound(double eps_lo, double eps_hi, double base_lo,
                      double base_hi);

struct ConstantA0Choice {
  double a0 = 1.0;
  double rho = 1.0;
  double q = 0.0;
};

// pick the candidate constant minimizing q; ties broken by the smaller
// relative deviation max|1 - a_eps/a0|, then by the smaller a0
ConstantA0Choice optimize_a0_constant(const CoefficientSpec& a_eps,
                                      std::span<const double> candidates);

// averaged simplified coefficient from step majorant/minorant envelopes
AveragedCoefficient averaged_coefficient(const StepFunction& lower,
                                         const StepFunction& upper,
                                         const CoefficientSpec& a_eps);

// analytic step envelopes (lower, upper) enclosing the coefficient
std::pair<StepFunction, StepFunction> envelope_step_functions(
    const CoefficientSpec& a_eps);

// integral of a_eps over [0,1]
double mean_coefficient(const CoefficientSpec& a_eps);
// reciprocal of the integral of 1/a_eps over [0,1]
double harmonic_mean_coefficient(const CoefficientSpec& a_eps);

SpectralBounds spectral_bounds(const CoefficientSpec& a_eps, double a0);
SpectralBounds spectral_bounds(const CoefficientSpec& a_eps,
                               const StepFunction& a0);

ContractionReport contraction_report(const SpectralBounds& b, double a0_star);

}  // namespace qtt
