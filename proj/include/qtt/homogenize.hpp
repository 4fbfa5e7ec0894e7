#pragma once

#include <span>
#include <vector>

#include "qtt/fem.hpp"
#include "qtt/tt.hpp"

namespace qtt {

struct HomogenizedComparison {
  double l2_diff = 0.0;   // ||u_eps - u0|| in L2, exact for piecewise-linear data
  double h1_diff = 0.0;   // sqrt(a0) * L2 norm of the slope difference
  double residual = 0.0;  // ||f - A_eps u0||_2 in the oscillating system
};

struct HomogenizedModel {
  double a0_hom = 1.0;
  std::vector<double> u0;  // nodal solution of the effective problem
  HomogenizedComparison comparison;
};

// Effective constant of the 1D cell problem: the harmonic mean of the
// coefficient over its period (sine classes), or over the unit interval for
// piecewise-constant data.  Classes without a usable period are rejected.
double effective_coefficient_1d(const CoefficientSpec& a_eps);

// Dense constant-coefficient solve on the same grid/stiffness conventions as
// the QTT path; cheap at any level the dense guard admits.
std::vector<double> homogenized_solve(double a0_hom, const LoadSpec& f,
                                      const Grid& grid);

HomogenizedComparison compare_homogenized(const QttVector& u_eps,
                                          std::span<const double> u0,
                                          double a0_hom,
                                          const CoefficientSpec& a_eps,
                                          const LoadSpec& f, const Grid& grid);

// effective coefficient + homogenized solve + comparison in one record
HomogenizedModel homogenize_reference(const CoefficientSpec& a_eps,
                                      const LoadSpec& f, const Grid& grid,
                                      const QttVector& u_eps);

}  // namespace qtt
