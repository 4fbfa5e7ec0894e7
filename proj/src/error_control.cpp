#include "qtt/error_control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qtt/contraction.hpp"
#include "qtt/detail/poly.hpp"

namespace qtt {

namespace {

const Truncation kTight{1e-13, 0};

// backward-difference vector b_i = v_i - v_{i-1}
QttVector backward_diff(const QttVector& v) {
  const QttMatrix st = transpose(QttMatrix::shift(v.level()));
  QttVector b = add(v, scale(matvec(st, v, {0.0, 0}), -1.0));
  return round(b, kTight);
}

double sum_entries(const QttVector& v) {
  return dot(v, QttVector::constant(v.level(), 1.0));
}

// expand a polynomial-in-x antiderivative difference into an index polynomial:
// e -> P(h e) - P(h (e-1))
std::vector<double> element_difference(const detail::Poly& p, double h) {
  const detail::Poly hi = p.compose_affine(0.0, h);
  const detail::Poly lo = p.compose_affine(-h, h);
  return hi.plus(lo.scaled(-1.0)).c;
}

struct LoadMoments {
  QttVector g1, g2;          // per-element integrals of g and g^2
  double g1_b = 0.0, g2_b = 0.0;  // closing element
  double f_l2 = 0.0;
  std::vector<double> g_nodes;    // only filled for sampled loads
};

LoadMoments analytic_moments(const LoadSpec& f, const Grid& grid) {
  const int lvl = grid.level;
  const double h = grid.h;
  const double xn = grid.node(grid.n);
  LoadMoments m;
  m.f_l2 = f.l2_norm();
  switch (f.cls) {
    case LoadClass::Constant: {
      const double v = f.value;
      const detail::Poly g({0.0, v});          // g = v x
      const detail::Poly p1 = g.anti();
      const detail::Poly p2 = g.mul(g).anti();
      m.g1 = QttVector::polynomial_in_index(lvl, element_difference(p1, h));
      m.g2 = QttVector::polynomial_in_index(lvl, element_difference(p2, h));
      m.g1_b = p1.eval(1.0) - p1.eval(xn);
      m.g2_b = p2.eval(1.0) - p2.eval(xn);
      return m;
    }
    case LoadClass::Polynomial: {
      const detail::Poly g = detail::Poly(f.coeffs).anti();
      const detail::Poly p1 = g.anti();
      const detail::Poly p2 = g.mul(g).anti();
      m.g1 = QttVector::polynomial_in_index(lvl, element_difference(p1, h));
      m.g2 = QttVector::polynomial_in_index(lvl, element_difference(p2, h));
      m.g1_b = p1.eval(1.0) - p1.eval(xn);
      m.g2_b = p2.eval(1.0) - p2.eval(xn);
      return m;
    }
    case LoadClass::Sine: {
      // g = (A/w)(1 - cos(wx))
      const double w = f.omega, amp = f.amplitude;
      const double cw = amp / w;          // amplitude of g's oscillation
      const double c2 = cw * cw;
      const double th = w * h;
      // G1_e = cw*h - (cw/w) * (sin(w x_e) - sin(w x_{e-1}))
      QttVector g1 = QttVector::constant(lvl, cw * h);
      g1 = add(g1, QttVector::sinusoid(lvl, -cw / w, th, 0.0));
      g1 = add(g1, QttVector::sinusoid(lvl, cw / w, th, -th));
      m.g1 = round(g1, {0.0, 0});
      // G2_e = c2*(1.5h - (2/w) d sin(wx) + (1/(4w)) d sin(2wx))
      QttVector g2 = QttVector::constant(lvl, c2 * 1.5 * h);
      g2 = add(g2, QttVector::sinusoid(lvl, -2.0 * c2 / w, th, 0.0));
      g2 = add(g2, QttVector::sinusoid(lvl, 2.0 * c2 / w, th, -th));
      g2 = add(g2, QttVector::sinusoid(lvl, c2 / (4.0 * w), 2.0 * th, 0.0));
      g2 = add(g2, QttVector::sinusoid(lvl, -c2 / (4.0 * w), 2.0 * th, -2.0 * th));
      m.g2 = round(g2, {0.0, 0});
      auto p1 = [&](double x) { return cw * (x - std::sin(w * x) / w); };
      auto p2 = [&](double x) {
        return c2 * (1.5 * x - 2.0 * std::sin(w * x) / w +
                     std::sin(2.0 * w * x) / (4.0 * w));
      };
      m.g1_b = p1(1.0) - p1(xn);
      m.g2_b = p2(1.0) - p2(xn);
      return m;
    }
    case LoadClass::Custom:
      throw Error("analytic_moments: sampled loads use the dense path");
  }
  throw Error("analytic_moments: bad class");
}

// sampled loads: piecewise-linear interpolant through the nodal samples,
// extended by constant values to the boundary nodes
LoadMoments sampled_moments(const LoadSpec& f, const Grid& grid) {
  if (grid.level > 12)
    throw Error("Certifier: sampled loads are limited to L <= 12");
  if (static_cast<Index>(f.samples.size()) != grid.n)
    throw Error("Certifier: sampled load must have length 2^L");
  const double h = grid.h;
  const Index n = grid.n;
  LoadMoments m;
  m.g_nodes.assign(static_cast<std::size_t>(n) + 2, 0.0);
  auto fs = [&](Index i) {  // node sample with constant extension
    if (i < 1) i = 1;
    if (i > n) i = n;
    return f.samples[static_cast<std::size_t>(i - 1)];
  };
  std::vector<double> g1d(static_cast<std::size_t>(n)), g2d(g1d.size());
  double g0 = 0.0, l2 = 0.0;
  for (Index e = 1; e <= n + 1; ++e) {
    const double fl = fs(e - 1), fr = fs(e);
    const detail::Poly seg({g0, fl, (fr - fl) / (2.0 * h)});  // g on the element
    const detail::Poly fseg({fl, (fr - fl) / h});
    const double G1 = seg.anti().eval(h);
    const double G2 = seg.mul(seg).anti().eval(h);
    l2 += fseg.mul(fseg).anti().eval(h);
    if (e <= n) {
      g1d[static_cast<std::size_t>(e - 1)] = G1;
      g2d[static_cast<std::size_t>(e - 1)] = G2;
    } else {
      m.g1_b = G1;
      m.g2_b = G2;
    }
    g0 = seg.eval(h);
    m.g_nodes[static_cast<std::size_t>(e)] = g0;
  }
  m.g1 = fold(g1d, {1e-13, 0});
  m.g2 = fold(g2d, {1e-13, 0});
  m.f_l2 = std::sqrt(std::max(0.0, l2));
  return m;
}

}  // namespace

double friedrichs_constant(std::span<const double> edge_lengths) {
  if (edge_lengths.empty()) throw Error("friedrichs_constant: no edge lengths");
  double kappa_sq = 0.0;
  for (double l : edge_lengths) {
    if (!(l > 0.0)) throw Error("friedrichs_constant: lengths must be positive");
    kappa_sq += 1.0 / (l * l);
  }
  return 1.0 / (std::sqrt(kappa_sq) * std::numbers::pi);
}

TwoSidedBounds two_sided(double eta_norm, double majorant, double q) {
  if (!(q >= 0.0) || q >= 1.0) throw Error("two_sided: q must be in [0,1)");
  if (eta_norm < 0.0 || majorant < 0.0)
    throw Error("two_sided: norms must be non-negative");
  TwoSidedBounds b;
  b.q = q;
  b.eta_norm = eta_norm;
  b.upper = (eta_norm + majorant) / (1.0 - q);
  b.lower = std::max(0.0, (eta_norm - majorant) / (1.0 + q));
  return b;
}

double energy_norm(const QttVector& v, const QttVector& weight_mid, double h) {
  if (v.level() != weight_mid.level()) throw Error("energy_norm: level mismatch");
  if (!(h > 0.0)) throw Error("energy_norm: h must be positive");
  const QttVector b = backward_diff(v);
  const QttVector wb = round(hadamard(weight_mid, b), kTight);
  const double interior = dot(wb, b);
  const double vn = v.entry(v.size());
  const double corner = weight_mid.entry(v.size()) * vn * vn;
  return std::sqrt(std::max(0.0, (interior + corner) / h));
}

double energy_norm(const QttVector& v, double weight, double h) {
  if (!(h > 0.0)) throw Error("energy_norm: h must be positive");
  if (!(weight > 0.0)) throw Error("energy_norm: weight must be positive");
  const QttVector b = backward_diff(v);
  const double vn = v.entry(v.size());
  return std::sqrt(std::max(0.0, weight * (dot(b, b) + vn * vn) / h));
}

Certifier::Certifier(const CoefficientSpec& a_eps, const LoadSpec& f, double a0,
                     const Grid& grid, double tol)
    : grid_(grid), spec_(a_eps), load_(f) {
  if (!(a0 > 0.0)) throw Error("Certifier: a0 must be positive");
  a0_mid_ = QttVector::constant(grid.level, a0);
  a0inv_mid_ = QttVector::constant(grid.level, 1.0 / a0);
  a0_min_ = a0;
  init(a_eps, f, tol);
}

Certifier::Certifier(const CoefficientSpec& a_eps, const LoadSpec& f,
                     const StepFunction& a0, const Grid& grid, double tol)
    : grid_(grid), spec_(a_eps), load_(f) {
  a0.validate();
  if (!(a0.min_value() > 0.0)) throw Error("Certifier: a0 must be positive");
  a0_mid_ = step_midpoint_samples(a0, grid, {0.0, 0});
  StepFunction inv = a0;
  for (auto& v : inv.values) v = 1.0 / v;
  a0inv_mid_ = step_midpoint_samples(inv, grid, {0.0, 0});
  a0_min_ = a0.min_value();
  init(a_eps, f, tol);
}

void Certifier::init(const CoefficientSpec& a_eps, const LoadSpec& f,
                     double tol) {
  a_mid_ = sample_coefficient(a_eps, grid_, {std::min(tol, 1e-12), 0});

  // pointwise bounds for the reciprocal iteration
  double lo, hi;
  if (a_eps.cls == CoefClass::Custom) {
    std::tie(lo, hi) = a_eps.envelope();
  } else {
    std::tie(lo, hi) = coefficient_range(a_eps, 0.0, 1.0);
  }
  if (!(lo > 0.0)) throw Error("Certifier: coefficient must be positive");
  ainv_mid_ = reciprocal(a_mid_, lo, hi, {std::min(tol, 1e-11), 0});

  LoadMoments m = f.cls == LoadClass::Custom ? sampled_moments(f, grid_)
                                             : analytic_moments(f, grid_);
  g1_ = std::move(m.g1);
  g2_ = std::move(m.g2);
  g1_boundary_ = m.g1_b;
  g2_boundary_ = m.g2_b;
  f_l2_ = m.f_l2;
  g_nodes_ = std::move(m.g_nodes);
  dense_mode_ = f.cls == LoadClass::Custom;

  const double h = grid_.h;
  const Index n = grid_.n;
  ainv_integral_ = h * (sum_entries(ainv_mid_) + 1.0 / a_mid_.entry(n));
  a0inv_integral_ = h * (sum_entries(a0inv_mid_) + a0inv_mid_.entry(n));
  c_omega_ = friedrichs_constant(std::vector<double>{1.0});
}

FluxField1D Certifier::flux_reconstruct(const QttVector& v, double rho) const {
  if (v.level() != grid_.level) throw Error("flux_reconstruct: level mismatch");
  const QttVector b = backward_diff(v);
  const Index n = grid_.n;
  const double vn = v.entry(n);
  // integral of a0^{-1} g
  const double ig = dot(a0inv_mid_, g1_) + a0inv_mid_.entry(n) * g1_boundary_;
  // integral of a0^{-1} a_eps v'
  const QttVector wa = round(hadamard(a0inv_mid_, a_mid_), kTight);
  const double iv = dot(wa, b) - a0inv_mid_.entry(n) * a_mid_.entry(n) * vn;
  FluxField1D y;
  y.rho = rho;
  y.c = (ig + iv) / a0inv_integral_;
  y.load = load_;
  return y;
}

FluxField1D Certifier::flux_reconstruct_global(const QttVector& v) const {
  if (v.level() != grid_.level) throw Error("flux_reconstruct: level mismatch");
  const QttVector b = backward_diff(v);
  const Index n = grid_.n;
  const double vn = v.entry(n);
  const double ainv_b = 1.0 / a_mid_.entry(n);
  const double ig = dot(ainv_mid_, g1_) + ainv_b * g1_boundary_;
  // a^{-1} * a cancels pointwise in the interior sum
  const double iv = sum_entries(b) - vn;
  FluxField1D y;
  y.rho = 1.0;
  y.c = (ig + iv) / ainv_integral_;
  y.load = load_;
  return y;
}

double Certifier::flux_misfit_sq(const QttVector& field, double boundary_field,
                                 const QttVector& winv, double winv_boundary,
                                 double rho_y) const {
  const double h = grid_.h;
  const QttVector wf = round(hadamard(winv, field), kTight);
  double s = h * dot(wf, field);
  s -= 2.0 * rho_y * dot(wf, g1_);
  s += rho_y * rho_y * dot(winv, g2_);
  s += winv_boundary *
       (boundary_field * boundary_field * h -
        2.0 * boundary_field * rho_y * g1_boundary_ +
        rho_y * rho_y * g2_boundary_);
  return s;
}

MajorantReport Certifier::majorant_global(const QttVector& v,
                                          const FluxField1D& y) const {
  if (v.level() != grid_.level) throw Error("majorant_global: level mismatch");
  const double h = grid_.h;
  const Index n = grid_.n;
  const QttVector b = backward_diff(v);
  const double vn = v.entry(n);
  const double ab = a_mid_.entry(n);

  // field_e = rho c - a_e s_e so that the misfit is (field - rho g)^2
  QttVector w = round(hadamard(a_mid_, b), kTight);           // a_e b_e
  QttVector field = add(QttVector::constant(grid_.level, y.rho * y.c),
                        scale(w, -1.0 / h));
  field = round(field, kTight);
  const double field_b = y.rho * y.c + ab * vn / h;

  MajorantReport rep;
  rep.c_omega = c_omega_;
  double sq = flux_misfit_sq(field, field_b, ainv_mid_, 1.0 / ab, y.rho);
  if (sq < 0.0) {
    rep.clamped = true;
    sq = 0.0;
  }
  rep.flux_term = std::sqrt(sq);
  rep.eq_term = std::abs(1.0 - y.rho) * f_l2_;
  rep.value = rep.flux_term + c_omega_ * rep.eq_term;
  return rep;
}

MajorantReport Certifier::majorant_step(const QttVector& u_next,
                                        const QttVector& v,
                                        const FluxField1D& y,
                                        double rho) const {
  if (u_next.level() != grid_.level || v.level() != grid_.level)
    throw Error("majorant_step: level mismatch");
  const double h = grid_.h;
  const Index n = grid_.n;
  const int lvl = grid_.level;

  const QttVector eta = round(add(u_next, scale(v, -1.0)), kTight);
  const QttVector beta = backward_diff(eta);
  const double eta_n = eta.entry(n);
  const QttVector bv = backward_diff(v);
  const double vn = v.entry(n);
  const double ab = a_mid_.entry(n);
  const double a0b = a0_mid_.entry(n);
  const double a0invb = a0inv_mid_.entry(n);

  // eta energy: (1/h) sum a0_e beta_e^2 plus the closing element
  const QttVector wb = round(hadamard(a0_mid_, beta), kTight);
  const double t_eta = (dot(wb, beta) + a0b * eta_n * eta_n) / h;

  // elementwise-constant part of tau: A_e = rho_y c - rho a_e s_e
  QttVector w = round(hadamard(a_mid_, bv), kTight);
  QttVector field = add(QttVector::constant(lvl, y.rho * y.c),
                        scale(w, -rho / h));
  field = round(field, kTight);
  const double field_b = y.rho * y.c + rho * ab * vn / h;

  // cross term: -2 sum eta'_e int tau = -2 [dot(beta, A) - (rho_y/h) dot(beta, G1)]
  double cross = -2.0 * (dot(beta, field) - (y.rho / h) * dot(beta, g1_));
  cross += 2.0 * (eta_n / h) * (field_b * h - y.rho * g1_boundary_);

  const double tau2 = flux_misfit_sq(field, field_b, a0inv_mid_, a0invb, y.rho);

  MajorantReport rep;
  rep.c_omega = c_omega_;
  double sq = t_eta + cross + tau2;
  if (sq < 0.0) {
    rep.clamped = true;
    sq = 0.0;
  }
  rep.flux_term = std::sqrt(sq);
  rep.eq_term = std::abs(rho - y.rho) * f_l2_;
  rep.value = rep.flux_term + (c_omega_ / a0_min_) * rep.eq_term;
  return rep;
}

double Certifier::modeling_error_bound(const QttVector& v) const {
  if (v.level() != grid_.level) throw Error("modeling_error_bound: level mismatch");
  const double h = grid_.h;
  const Index n = grid_.n;
  const QttVector b = backward_diff(v);
  const QttVector d = round(add(a_mid_, scale(a0_mid_, -1.0)), kTight);
  QttVector m = round(hadamard(d, d), kTight);
  m = round(hadamard(m, ainv_mid_), kTight);
  const QttVector mb = round(hadamard(m, b), kTight);
  double s = dot(mb, b);
  const double vn = v.entry(n);
  const double db = a_mid_.entry(n) - a0_mid_.entry(n);
  s += db * db / a_mid_.entry(n) * vn * vn;
  return std::sqrt(std::max(0.0, s / h));
}

double Certifier::energy_norm_a0(const QttVector& v) const {
  return energy_norm(v, a0_mid_, grid_.h);
}

double Certifier::energy_norm_eps(const QttVector& v) const {
  return energy_norm(v, a_mid_, grid_.h);
}

FluxField1D flux_reconstruct(const QttVector& v, double rho, const LoadSpec& f,
                             double a0, const CoefficientSpec& a_eps,
                             const Grid& grid) {
  return Certifier(a_eps, f, a0, grid).flux_reconstruct(v, rho);
}

MajorantReport majorant_global(const QttVector& v, const FluxField1D& y,
                               const CoefficientSpec& a_eps, const LoadSpec& f,
                               const Grid& grid) {
  return Certifier(a_eps, f, 1.0, grid).majorant_global(v, y);
}

double modeling_error_bound(const QttVector& v, const CoefficientSpec& a_eps,
                            double a0, const Grid& grid) {
  return Certifier(a_eps, LoadSpec::constant(0.0), a0, grid)
      .modeling_error_bound(v);
}

}  // namespace qtt
