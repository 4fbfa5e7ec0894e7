#pragma once

#include <optional>
#include <span>
#include <vector>

#include "qtt/fem.hpp"
#include "qtt/tt.hpp"

namespace qtt {

// C = 1/(kappa*pi) with kappa^2 = sum of 1/l_s^2 over the box edge lengths
double friedrichs_constant(std::span<const double> edge_lengths);

// flux of the form y(x) = rho*(c - g(x)) with g the load antiderivative;
// its divergence is -rho*f identically
struct FluxField1D {
  double rho = 1.0;
  double c = 0.0;
  LoadSpec load = LoadSpec::constant(0.0);
};

struct MajorantReport {
  double value = 0.0;      // flux_term + weight * eq_term
  double flux_term = 0.0;  // weighted L2 misfit of the flux
  double eq_term = 0.0;    // equilibrium residual norm
  double c_omega = 0.0;    // Friedrichs constant used
  bool clamped = false;    // negative quadratic form clipped to zero
};

struct TwoSidedBounds {
  double lower = 0.0;
  double upper = 0.0;
  double q = 0.0;
  double eta_norm = 0.0;
};

TwoSidedBounds two_sided(double eta_norm, double majorant, double q);

// energy norm of a nodal FE vector with an elementwise weight; the closing
// element reuses the last interior weight sample
double energy_norm(const QttVector& v, const QttVector& weight_mid, double h);
double energy_norm(const QttVector& v, double weight, double h);

// error certification for one coefficient/load pair on a fixed grid;
// precomputes the coefficient reciprocal and the load moment trains
class Certifier {
 public:
  Certifier(const CoefficientSpec& a_eps, const LoadSpec& f, double a0,
            const Grid& grid, double tol = 1e-10);
  Certifier(const CoefficientSpec& a_eps, const LoadSpec& f,
            const StepFunction& a0, const Grid& grid, double tol = 1e-10);

  const Grid& grid() const { return grid_; }
  double load_l2() const { return f_l2_; }
  double a0_min() const { return a0_min_; }

  // optimal constant of the step flux (weight 1/a0)
  FluxField1D flux_reconstruct(const QttVector& v, double rho) const;
  // optimal constant of the exact-solution flux (weight 1/a_eps), rho = 1
  FluxField1D flux_reconstruct_global(const QttVector& v) const;

  // guaranteed bound on the energy distance to the exact solution
  MajorantReport majorant_global(const QttVector& v, const FluxField1D& y) const;
  // guaranteed bound on the a0-energy distance to an exact iteration step,
  // for the step map applied to v with step size rho
  MajorantReport majorant_step(const QttVector& u_next, const QttVector& v,
                               const FluxField1D& y, double rho) const;

  // energy misfit caused by replacing a_eps with a0
  double modeling_error_bound(const QttVector& v) const;

  double energy_norm_a0(const QttVector& v) const;
  double energy_norm_eps(const QttVector& v) const;

 private:
  void init(const CoefficientSpec& a_eps, const LoadSpec& f, double tol);
  // integrals of the flux misfit against an elementwise-constant field:
  // sum_e winv_e * [A_e^2 h - 2 A_e rho_y G1_e + rho_y^2 G2_e]
  double flux_misfit_sq(const QttVector& field, double boundary_field,
                        const QttVector& winv, double winv_boundary,
                        double rho_y) const;

  Grid grid_;
  CoefficientSpec spec_;
  LoadSpec load_;
  bool dense_mode_ = false;   // custom loads fall back to dense evaluation
  QttVector a_mid_;           // oscillating coefficient samples
  QttVector ainv_mid_;        // its pointwise reciprocal
  QttVector a0_mid_;          // simplified coefficient samples
  QttVector a0inv_mid_;
  QttVector g1_;              // per-element integral of g
  QttVector g2_;              // per-element integral of g^2
  double g1_boundary_ = 0.0;  // same data for the closing element
  double g2_boundary_ = 0.0;
  double ainv_integral_ = 0.0;   // sum of h/a_e incl. boundary
  double a0inv_integral_ = 0.0;
  double f_l2_ = 0.0;
  double a0_min_ = 1.0;
  double c_omega_ = 0.0;
  std::vector<double> g_nodes_;  // dense-mode antiderivative at nodes
};

// convenience wrappers mirroring the class methods
FluxField1D flux_reconstruct(const QttVector& v, double rho, const LoadSpec& f,
                             double a0, const CoefficientSpec& a_eps,
                             const Grid& grid);
MajorantReport majorant_global(const QttVector& v, const FluxField1D& y,
                               const CoefficientSpec& a_eps, const LoadSpec& f,
                               const Grid& grid);
double modeling_error_bound(const QttVector& v, const CoefficientSpec& a_eps,
                            double a0, const Grid& grid);

}  // namespace qtt
