#include "qtt/homogenize.hpp"

#include <cmath>
#include <functional>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace qtt {

namespace {

double adaptive_integral(const std::function<double(double)>& f, double lo,
                         double hi) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, lo, hi, 12, 1e-13);
}

// segment lengths of a step function over [0,1]
std::vector<std::pair<double, double>> segments_of(const StepFunction& s) {
  s.validate();
  std::vector<std::pair<double, double>> out;
  for (std::size_t k = 0; k < s.breaks.size(); ++k) {
    const double lo = s.breaks[k];
    const double hi = k + 1 < s.breaks.size() ? s.breaks[k + 1] : 1.0;
    if (hi > lo) out.emplace_back(hi - lo, s.values[k]);
  }
  return out;
}

// same element convention as the QTT stiffness: closing element reuses a_n
DenseTridiag dense_operator(std::span<const double> a, double h) {
  const std::size_t n = a.size();
  DenseTridiag t;
  t.diag.resize(n);
  t.off.resize(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    t.diag[i] = (a[i] + a[i + 1]) / h;
    t.off[i] = -a[i + 1] / h;
  }
  t.diag[n - 1] = 2.0 * a[n - 1] / h;
  return t;
}

}  // namespace

double effective_coefficient_1d(const CoefficientSpec& a_eps) {
  switch (a_eps.cls) {
    case CoefClass::Constant:
      return a_eps.offset;
    case CoefClass::Sine: {
      if (!(a_eps.omega > 0.0))
        throw Error("effective_coefficient_1d: sine class needs omega > 0");
      const double period = 2.0 * std::numbers::pi / a_eps.omega;
      const double mean_inv =
          adaptive_integral(
              [&](double x) { return 1.0 / a_eps.value_at(x); }, 0.0, period) /
          period;
      return 1.0 / mean_inv;
    }
    case CoefClass::Steps: {
      // declared averaging window: the whole unit interval
      double mean_inv = 0.0;
      for (auto [len, v] : segments_of(a_eps.modulator)) {
        if (!(v > 0.0))
          throw Error("effective_coefficient_1d: coefficient must be positive");
        mean_inv += len / v;
      }
      return 1.0 / mean_inv;
    }
    case CoefClass::Modulated: {
      // locally periodic: per-plateau cell problem gives sqrt(C^2 - g^2);
      // the scalar baseline chains those local constants harmonically
      double mean_inv = 0.0;
      for (auto [len, g] : segments_of(a_eps.modulator)) {
        const double local = a_eps.offset * a_eps.offset - g * g;
        if (!(local > 0.0))
          throw Error(
              "effective_coefficient_1d: modulated class needs C > max|g| for "
              "a positive cell-problem constant");
        mean_inv += len / std::sqrt(local);
      }
      return 1.0 / mean_inv;
    }
    case CoefClass::Exotic:
      throw Error(
          "effective_coefficient_1d: the exotic class is not periodic; use a "
          "windowed average (e.g. the envelope-average preconditioner) "
          "instead");
    case CoefClass::Custom:
      throw Error(
          "effective_coefficient_1d: sampled coefficients declare no period; "
          "use a windowed average instead");
    default:
      throw Error("effective_coefficient_1d: bad class");
  }
}

std::vector<double> homogenized_solve(double a0_hom, const LoadSpec& f,
                                      const Grid& grid) {
  if (!(a0_hom > 0.0))
    throw Error("homogenized_solve: effective coefficient must be positive");
  std::vector<double> rhs = unfold(assemble_load(f, grid, {0.0, 0}));
  const std::vector<double> a(rhs.size(), a0_hom);
  return thomas_solve(dense_operator(a, grid.h), std::move(rhs));
}

HomogenizedComparison compare_homogenized(const QttVector& u_eps,
                                          std::span<const double> u0,
                                          double a0_hom,
                                          const CoefficientSpec& a_eps,
                                          const LoadSpec& f, const Grid& grid) {
  if (u_eps.level() != grid.level)
    throw Error("compare_homogenized: level mismatch");
  if (static_cast<Index>(u0.size()) != grid.n)
    throw Error("compare_homogenized: homogenized solution has wrong length");
  if (!(a0_hom > 0.0))
    throw Error("compare_homogenized: weight must be positive");

  const std::vector<double> ue = unfold(u_eps);
  const std::size_t n = ue.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = ue[i] - u0[i];

  HomogenizedComparison out;
  // exact L2 and slope-L2 of the piecewise-linear difference (zero ends)
  double l2 = 0.0, slope2 = 0.0;
  const double h = grid.h;
  double left = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double right = i < n ? d[i] : 0.0;
    l2 += (h / 3.0) * (left * left + left * right + right * right);
    const double s = (right - left) / h;
    slope2 += h * s * s;
    left = right;
  }
  out.l2_diff = std::sqrt(l2);
  out.h1_diff = std::sqrt(a0_hom * slope2);

  const std::vector<double> a_mid =
      unfold(sample_coefficient(a_eps, grid, {0.0, 0}));
  const std::vector<double> au0 =
      tridiag_apply(dense_operator(a_mid, grid.h), u0);
  const std::vector<double> rhs = unfold(assemble_load(f, grid, {0.0, 0}));
  double r2 = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    r2 += (rhs[i] - au0[i]) * (rhs[i] - au0[i]);
  out.residual = std::sqrt(r2);
  return out;
}

HomogenizedModel homogenize_reference(const CoefficientSpec& a_eps,
                                      const LoadSpec& f, const Grid& grid,
                                      const QttVector& u_eps) {
  HomogenizedModel m;
  m.a0_hom = effective_coefficient_1d(a_eps);
  m.u0 = homogenized_solve(m.a0_hom, f, grid);
  m.comparison = compare_homogenized(u_eps, m.u0, m.a0_hom, a_eps, f, grid);
  return m;
}

}  // namespace qtt
