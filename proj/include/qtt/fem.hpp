#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "qtt/tt.hpp"

// 1D FEM pieces on (0,1) with zero boundary values: uniform grid with
// N = 2^L interior nodes, h = 1/(N+1), piecewise-linear hats, coefficient
// sampled at element midpoints.  The last element reuses the N-th sample
// (a_{N+1} := a_N), which shows up as a rank-1 corner correction.

namespace qtt {

struct Grid {
  int level = 1;
  Index n = 2;       // interior nodes
  double h = 0.5;

  static Grid of_level(int level);
  double node(Index i) const { return h * double(i); }            // i = 0..n+1
  double midpoint(Index e) const { return h * (double(e) - 0.5); }  // e = 1..n+1
};

// piecewise-constant function on [0,1): values[k] on [breaks[k], breaks[k+1])
struct StepFunction {
  std::vector<double> breaks;  // ascending, breaks[0] == 0
  std::vector<double> values;

  void validate() const;
  double value_at(double x) const;
  double min_value() const;
  double max_value() const;
};

enum class CoefClass { Constant, Sine, Modulated, Exotic, Steps, Custom };

struct CoefficientSpec {
  CoefClass cls = CoefClass::Constant;
  double offset = 1.0;        // C
  double omega = 0.0;         // angular frequency
  int power = 1;              // m in sin(omega * x^m)
  StepFunction modulator;     // amplitude g (Modulated/Exotic), values (Steps)
  std::vector<double> samples;  // Custom midpoint samples

  static CoefficientSpec constant(double c);
  static CoefficientSpec sine(double c, double freq_k);  // C + sin(2 pi K x)
  static CoefficientSpec modulated(double c, double freq_k, StepFunction g);
  static CoefficientSpec exotic(double c, double freq_k, int m);
  static CoefficientSpec steps(StepFunction s);
  static CoefficientSpec custom(std::vector<double> midpoint_samples);

  bool analytic() const { return cls != CoefClass::Custom; }
  double value_at(double x) const;               // throws for Custom
  std::pair<double, double> envelope() const;    // conservative value range
};

enum class LoadClass { Constant, Polynomial, Sine, Custom };

struct LoadSpec {
  LoadClass cls = LoadClass::Constant;
  double value = 1.0;            // Constant
  std::vector<double> coeffs;    // Polynomial in x
  double amplitude = 1.0;        // Sine: amplitude * sin(omega x)
  double omega = 0.0;
  std::vector<double> samples;   // Custom nodal samples f(x_i), i = 1..n

  static LoadSpec constant(double v);
  static LoadSpec polynomial(std::vector<double> coeffs);
  static LoadSpec sine(double amplitude, double omega);
  static LoadSpec custom(std::vector<double> nodal_samples);

  bool analytic() const { return cls != LoadClass::Custom; }
  double value_at(double x) const;
  double antiderivative_at(double x) const;  // g(x) = int_0^x f
  double g_integral() const;                 // int_0^1 g
  double l2_norm() const;                    // ||f||_{L2(0,1)}
};

// midpoint samples a(x_{e-1/2}), e = 1..n, positivity-checked, rounded at tol
QttVector sample_coefficient(const CoefficientSpec& spec, const Grid& grid,
                             const Truncation& tol);

// midpoint samples of a plain step function (no positivity requirements)
QttVector step_midpoint_samples(const StepFunction& s, const Grid& grid,
                                const Truncation& tol);

struct DenseTridiag {
  std::vector<double> diag;
  std::vector<double> off;  // off[i] couples nodes i and i+1
};

// dense reference assembly; guarded at n <= 2^12
DenseTridiag assemble_stiffness_dense(std::span<const double> a, double h);
std::vector<double> tridiag_apply(const DenseTridiag& t, std::span<const double> x);
std::vector<double> thomas_solve(const DenseTridiag& t, std::vector<double> rhs);

// (1/h) * (diag(a + Sa) - S diag(a) - diag(a) S^T) + (a_N/h) e_N e_N^T
QttMatrix assemble_stiffness_qtt(const QttVector& a, double h, const Truncation& tol);

// entries (f, phi_i) with exact per-class element integration
QttVector assemble_load(const LoadSpec& f, const Grid& grid, const Truncation& tol);

// exact inverse of the constant-coefficient stiffness matrix:
// (h^2/a0) * min(i,j) * (n+1-max(i,j))
QttMatrix inverse_preconditioner_qtt(double a0, const Grid& grid,
                                     const Truncation& tol);
// piecewise-constant a0 via the discrete Green's function of a resistor chain
QttMatrix inverse_preconditioner_qtt(const StepFunction& a0, const Grid& grid,
                                     const Truncation& tol);

}  // namespace qtt
