#include "qtt/fem.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qtt/detail/poly.hpp"

namespace qtt {

namespace {

constexpr Index kDenseAssemblyGuard = Index(1) << 12;

double binom(int n, int k) {
  double r = 1.0;
  for (int t = 0; t < k; ++t) r = r * double(n - t) / double(t + 1);
  return r;
}

// first element whose midpoint lies at or beyond x
Index first_element_at(double x, const Grid& g) {
  if (x <= 0.0) return 1;
  const Index i = static_cast<Index>(std::ceil(x / g.h + 0.5 - 1e-12));
  return std::max<Index>(i, 1);
}

// indicator of i >= c on 1..2^L
QttVector indicator_geq(int level, Index c) {
  return add(QttVector::constant(level, 1.0),
             scale(QttVector::indicator_leq(level, c - 1), -1.0));
}

}  // namespace

Grid Grid::of_level(int level) {
  if (level < 1 || level > 40) throw Error("Grid: level out of range");
  Grid g;
  g.level = level;
  g.n = Index(1) << level;
  g.h = 1.0 / double(g.n + 1);
  return g;
}

void StepFunction::validate() const {
  if (breaks.empty() || breaks.size() != values.size())
    throw Error("StepFunction: need matching breakpoints and values");
  if (breaks.front() != 0.0) throw Error("StepFunction: first breakpoint must be 0");
  for (std::size_t k = 0; k < breaks.size(); ++k) {
    if (!std::isfinite(breaks[k]) || !std::isfinite(values[k]))
      throw Error("StepFunction: entries must be finite");
    if (breaks[k] < 0.0 || breaks[k] >= 1.0)
      throw Error("StepFunction: breakpoints must lie in [0,1)");
    if (k > 0 && breaks[k] <= breaks[k - 1])
      throw Error("StepFunction: breakpoints must be strictly ascending");
  }
}

double StepFunction::value_at(double x) const {
  std::size_t k = breaks.size() - 1;
  while (k > 0 && x < breaks[k]) --k;
  return values[k];
}

double StepFunction::min_value() const {
  return *std::min_element(values.begin(), values.end());
}
double StepFunction::max_value() const {
  return *std::max_element(values.begin(), values.end());
}

CoefficientSpec CoefficientSpec::constant(double c) {
  CoefficientSpec s;
  s.cls = CoefClass::Constant;
  s.offset = c;
  return s;
}
CoefficientSpec CoefficientSpec::sine(double c, double freq_k) {
  CoefficientSpec s;
  s.cls = CoefClass::Sine;
  s.offset = c;
  s.omega = 2.0 * std::numbers::pi * freq_k;
  return s;
}
CoefficientSpec CoefficientSpec::modulated(double c, double freq_k, StepFunction g) {
  g.validate();
  if (g.min_value() <= 0.0) throw Error("modulated: amplitudes must be positive");
  CoefficientSpec s;
  s.cls = CoefClass::Modulated;
  s.offset = c;
  s.omega = 2.0 * std::numbers::pi * freq_k;
  s.modulator = std::move(g);
  return s;
}
CoefficientSpec CoefficientSpec::exotic(double c, double freq_k, int m) {
  if (m < 1 || m > 8) throw Error("exotic: power must be in 1..8");
  CoefficientSpec s;
  s.cls = CoefClass::Exotic;
  s.offset = c;
  s.omega = 2.0 * std::numbers::pi * freq_k;
  s.power = m;
  return s;
}
CoefficientSpec CoefficientSpec::steps(StepFunction sf) {
  sf.validate();
  CoefficientSpec s;
  s.cls = CoefClass::Steps;
  s.modulator = std::move(sf);
  return s;
}
CoefficientSpec CoefficientSpec::custom(std::vector<double> midpoint_samples) {
  CoefficientSpec s;
  s.cls = CoefClass::Custom;
  s.samples = std::move(midpoint_samples);
  return s;
}

double CoefficientSpec::value_at(double x) const {
  switch (cls) {
    case CoefClass::Constant:
      return offset;
    case CoefClass::Sine:
      return offset + std::sin(omega * x);
    case CoefClass::Modulated:
      return offset + modulator.value_at(x) * std::sin(omega * x);
    case CoefClass::Exotic: {
      const double amp = modulator.values.empty() ? 1.0 : modulator.value_at(x);
      return offset + amp * std::sin(omega * std::pow(x, double(power)));
    }
    case CoefClass::Steps:
      return modulator.value_at(x);
    case CoefClass::Custom:
      throw Error("value_at: custom coefficients only exist as samples");
  }
  throw Error("value_at: bad class");
}

std::pair<double, double> CoefficientSpec::envelope() const {
  switch (cls) {
    case CoefClass::Constant:
      return {offset, offset};
    case CoefClass::Sine:
      return {offset - 1.0, offset + 1.0};
    case CoefClass::Modulated: {
      double m = 0.0;
      for (double v : modulator.values) m = std::max(m, std::abs(v));
      return {offset - m, offset + m};
    }
    case CoefClass::Exotic: {
      double m = 1.0;
      if (!modulator.values.empty()) {
        m = 0.0;
        for (double v : modulator.values) m = std::max(m, std::abs(v));
      }
      return {offset - m, offset + m};
    }
    case CoefClass::Steps:
      return {modulator.min_value(), modulator.max_value()};
    case CoefClass::Custom: {
      if (samples.empty()) throw Error("envelope: no custom samples");
      const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
      return {*lo, *hi};
    }
  }
  throw Error("envelope: bad class");
}

LoadSpec LoadSpec::constant(double v) {
  LoadSpec f;
  f.cls = LoadClass::Constant;
  f.value = v;
  return f;
}
LoadSpec LoadSpec::polynomial(std::vector<double> coeffs) {
  if (coeffs.empty() || coeffs.size() > 9)
    throw Error("load: polynomial degree must be 0..8");
  LoadSpec f;
  f.cls = LoadClass::Polynomial;
  f.coeffs = std::move(coeffs);
  return f;
}
LoadSpec LoadSpec::sine(double amplitude, double omega) {
  if (omega == 0.0) throw Error("load: sine frequency must be nonzero");
  LoadSpec f;
  f.cls = LoadClass::Sine;
  f.amplitude = amplitude;
  f.omega = omega;
  return f;
}
LoadSpec LoadSpec::custom(std::vector<double> nodal_samples) {
  LoadSpec f;
  f.cls = LoadClass::Custom;
  f.samples = std::move(nodal_samples);
  return f;
}

double LoadSpec::value_at(double x) const {
  switch (cls) {
    case LoadClass::Constant:
      return value;
    case LoadClass::Polynomial:
      return detail::Poly(coeffs).eval(x);
    case LoadClass::Sine:
      return amplitude * std::sin(omega * x);
    case LoadClass::Custom:
      throw Error("value_at: custom loads only exist as samples");
  }
  throw Error("value_at: bad class");
}

double LoadSpec::antiderivative_at(double x) const {
  switch (cls) {
    case LoadClass::Constant:
      return value * x;
    case LoadClass::Polynomial:
      return detail::Poly(coeffs).anti().eval(x);
    case LoadClass::Sine:
      return amplitude * (1.0 - std::cos(omega * x)) / omega;
    case LoadClass::Custom:
      throw Error("antiderivative_at: unavailable for custom loads");
  }
  throw Error("antiderivative_at: bad class");
}

double LoadSpec::g_integral() const {
  switch (cls) {
    case LoadClass::Constant:
      return value * 0.5;
    case LoadClass::Polynomial:
      return detail::Poly(coeffs).anti().anti().eval(1.0);
    case LoadClass::Sine:
      return (amplitude / omega) * (1.0 - std::sin(omega) / omega);
    case LoadClass::Custom:
      throw Error("g_integral: unavailable for custom loads");
  }
  throw Error("g_integral: bad class");
}

double LoadSpec::l2_norm() const {
  switch (cls) {
    case LoadClass::Constant:
      return std::abs(value);
    case LoadClass::Polynomial: {
      detail::Poly p(coeffs);
      return std::sqrt(std::max(0.0, p.mul(p).integral(0.0, 1.0)));
    }
    case LoadClass::Sine:
      return std::abs(amplitude) *
             std::sqrt(std::max(0.0, 0.5 - std::sin(2.0 * omega) / (4.0 * omega)));
    case LoadClass::Custom:
      throw Error("l2_norm: unavailable for custom loads");
  }
  throw Error("l2_norm: bad class");
}

QttVector step_midpoint_samples(const StepFunction& s, const Grid& grid,
                                const Truncation& tol) {
  s.validate();
  const int lvl = grid.level;
  QttVector acc = QttVector::constant(lvl, s.values.front());
  for (std::size_t k = 1; k < s.values.size(); ++k) {
    const double dv = s.values[k] - s.values[k - 1];
    if (dv == 0.0) continue;
    const Index ik = first_element_at(s.breaks[k], grid);
    if (ik > grid.n) continue;  // the jump happens inside the last element
    if (ik <= 1) {
      acc = add(acc, QttVector::constant(lvl, dv));
    } else {
      acc = add(acc, scale(indicator_geq(lvl, ik), dv));
    }
  }
  return round(acc, tol);
}

QttVector sample_coefficient(const CoefficientSpec& spec, const Grid& grid,
                             const Truncation& tol) {
  const int lvl = grid.level;

  if (spec.cls == CoefClass::Custom) {
    if (static_cast<Index>(spec.samples.size()) != grid.n)
      throw Error("sample_coefficient: custom samples must have length 2^L");
    for (double v : spec.samples)
      if (!(v > 0.0))
        throw Error("sample_coefficient: coefficient must be strictly positive");
    return round(fold(spec.samples, tol), tol);
  }

  const auto [lo, hi] = spec.envelope();
  if (!(lo > 0.0)) {
    // envelope alone cannot certify ellipticity; fall back to a dense scan
    if (lvl > 12)
      throw Error(
          "sample_coefficient: cannot certify positivity analytically and the "
          "grid is too large for a dense scan");
    detail::check_dense(grid.n, "sample_coefficient positivity scan");
    for (Index e = 1; e <= grid.n; ++e)
      if (!(spec.value_at(grid.midpoint(e)) > 0.0))
        throw Error("sample_coefficient: coefficient must be strictly positive");
  }

  switch (spec.cls) {
    case CoefClass::Constant:
      return QttVector::constant(lvl, spec.offset);
    case CoefClass::Steps:
      return step_midpoint_samples(spec.modulator, grid, tol);
    case CoefClass::Sine: {
      const double step = spec.omega * grid.h;
      QttVector s = QttVector::sinusoid(lvl, 1.0, step, -0.5 * step);
      return round(add(QttVector::constant(lvl, spec.offset), s), tol);
    }
    case CoefClass::Modulated: {
      const double step = spec.omega * grid.h;
      QttVector s = QttVector::sinusoid(lvl, 1.0, step, -0.5 * step);
      QttVector g = step_midpoint_samples(spec.modulator, grid, {0.0, 0});
      return round(add(QttVector::constant(lvl, spec.offset), hadamard(g, s)), tol);
    }
    case CoefClass::Exotic: {
      if (lvl > 24) throw Error("sample_coefficient: exotic class needs L <= 24");
      detail::check_dense(grid.n, "sample_coefficient exotic");
      std::vector<double> v(static_cast<std::size_t>(grid.n));
      for (Index e = 1; e <= grid.n; ++e)
        v[static_cast<std::size_t>(e - 1)] = spec.value_at(grid.midpoint(e));
      return fold(v, tol);
    }
    default:
      throw Error("sample_coefficient: bad class");
  }
}

DenseTridiag assemble_stiffness_dense(std::span<const double> a, double h) {
  const Index n = static_cast<Index>(a.size());
  if (n < 1) throw Error("assemble_stiffness_dense: empty coefficient");
  if (n > kDenseAssemblyGuard)
    throw Error("assemble_stiffness_dense: guarded at n <= 4096");
  if (!(h > 0.0)) throw Error("assemble_stiffness_dense: h must be positive");
  detail::check_dense(n, "assemble_stiffness_dense");
  for (double v : a)
    if (!(v > 0.0)) throw Error("assemble_stiffness_dense: coefficient must be positive");
  DenseTridiag t;
  t.diag.resize(static_cast<std::size_t>(n));
  t.off.resize(static_cast<std::size_t>(n - 1));
  for (Index i = 0; i + 1 < n; ++i) {
    t.diag[i] = (a[i] + a[i + 1]) / h;
    t.off[i] = -a[i + 1] / h;
  }
  t.diag[n - 1] = 2.0 * a[n - 1] / h;
  return t;
}

std::vector<double> tridiag_apply(const DenseTridiag& t,
                                  std::span<const double> x) {
  const std::size_t n = x.size();
  if (t.diag.size() != n) throw Error("tridiag_apply: size mismatch");
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = t.diag[i] * x[i];
    if (i > 0) y[i] += t.off[i - 1] * x[i - 1];
    if (i + 1 < n) y[i] += t.off[i] * x[i + 1];
  }
  return y;
}

std::vector<double> thomas_solve(const DenseTridiag& t, std::vector<double> rhs) {
  const std::size_t n = rhs.size();
  if (t.diag.size() != n || n == 0) throw Error("thomas_solve: size mismatch");
  detail::check_dense(static_cast<Index>(n), "thomas_solve");
  std::vector<double> c(n - 1), d(n);
  d[0] = t.diag[0];
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (d[i] == 0.0) throw Error("thomas_solve: zero pivot");
    c[i] = t.off[i] / d[i];
    d[i + 1] = t.diag[i + 1] - c[i] * t.off[i];
    rhs[i + 1] -= c[i] * rhs[i];
  }
  std::vector<double> x(n);
  x[n - 1] = rhs[n - 1] / d[n - 1];
  for (std::size_t i = n - 1; i-- > 0;)
    x[i] = (rhs[i] - t.off[i] * x[i + 1]) / d[i];
  return x;
}

QttMatrix assemble_stiffness_qtt(const QttVector& a, double h,
                                 const Truncation& tol) {
  if (a.empty()) throw Error("assemble_stiffness_qtt: empty coefficient");
  if (!(h > 0.0)) throw Error("assemble_stiffness_qtt: h must be positive");
  const int lvl = a.level();
  const QttMatrix s = QttMatrix::shift(lvl);
  const QttVector sa = matvec(s, a, {0.0, 0});
  const QttMatrix da = diag(a);
  const QttMatrix upper = matmul(s, da, {0.0, 0});  // -a_{i+1} couplings
  QttMatrix sum = add(diag(add(a, sa)),
                      add(scale(upper, -1.0), scale(transpose(upper), -1.0)));
  const double an = a.entry(a.size());
  const QttVector en = QttVector::unit(lvl, a.size());
  sum = add(sum, scale(QttMatrix::outer(en, en), an));
  return round(scale(sum, 1.0 / h), tol);
}

QttVector assemble_load(const LoadSpec& f, const Grid& grid, const Truncation& tol) {
  const int lvl = grid.level;
  const double h = grid.h;
  switch (f.cls) {
    case LoadClass::Constant:
      return QttVector::constant(lvl, h * f.value);
    case LoadClass::Polynomial: {
      // (f, phi_i) expanded monomial by monomial into a polynomial in i
      detail::Poly total({0.0});
      const detail::Poly left({-h, h});  // x_{i-1} = h(i-1)
      const detail::Poly right({0.0, h});  // x_i = h i
      for (std::size_t k = 0; k < f.coeffs.size(); ++k) {
        const double ck = f.coeffs[k];
        if (ck == 0.0) continue;
        detail::Poly lp({1.0}), rp({1.0});
        std::vector<detail::Poly> lpow{lp}, rpow{rp};
        for (std::size_t t = 0; t < k; ++t) {
          lpow.push_back(lpow.back().mul(left));
          rpow.push_back(rpow.back().mul(right));
        }
        for (std::size_t j = 0; j <= k; ++j) {
          const double b = binom(int(k), int(j));
          const double hj = std::pow(h, double(j + 1));
          total = total.plus(
              lpow[k - j].scaled(ck * b * hj / double(j + 2)));
          total = total.plus(rpow[k - j].scaled(
              ck * b * hj * (1.0 / double(j + 1) - 1.0 / double(j + 2))));
        }
      }
      return round(QttVector::polynomial_in_index(lvl, total.c), tol);
    }
    case LoadClass::Sine: {
      // int hat_i(x) sin(wx) dx = (2(1-cos wh)/(w^2 h)) sin(w x_i)
      const double w = f.omega;
      const double factor = f.amplitude * 2.0 * (1.0 - std::cos(w * h)) / (w * w * h);
      return round(QttVector::sinusoid(lvl, factor, w * h, 0.0), tol);
    }
    case LoadClass::Custom: {
      if (static_cast<Index>(f.samples.size()) != grid.n)
        throw Error("assemble_load: custom samples must have length 2^L");
      std::vector<double> v(f.samples.size());
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = h * f.samples[i];
      return fold(v, tol);
    }
  }
  throw Error("assemble_load: bad class");
}

QttMatrix inverse_preconditioner_qtt(double a0, const Grid& grid,
                                     const Truncation& tol) {
  if (!(a0 > 0.0)) throw Error("inverse_preconditioner_qtt: a0 must be positive");
  const int lvl = grid.level;
  const double n1 = double(grid.n + 1);
  const QttVector u = QttVector::affine(lvl, 0.0, 1.0);    // i
  const QttVector v = QttVector::affine(lvl, n1, -1.0);    // n+1-i
  const QttMatrix mask = QttMatrix::upper_triangular_ones(lvl, false);
  const QttMatrix p = hadamard(mask, QttMatrix::outer(u, v));
  const QttMatrix d = diag(round(hadamard(u, v), {0.0, 0}));
  QttMatrix g = add(add(p, transpose(p)), scale(d, -1.0));
  return round(scale(g, grid.h * grid.h / a0), tol);
}

QttMatrix inverse_preconditioner_qtt(const StepFunction& a0, const Grid& grid,
                                     const Truncation& tol) {
  a0.validate();
  if (a0.min_value() <= 0.0)
    throw Error("inverse_preconditioner_qtt: a0 must be positive");
  const int lvl = grid.level;
  const Index n = grid.n;

  // per-element resistances h/a0_e with the boundary convention a0_{n+1} := a0_n
  std::vector<Index> starts;   // first element of each plateau, clamped
  std::vector<double> resist;  // h / value on that plateau
  for (std::size_t k = 0; k < a0.values.size(); ++k) {
    Index ik = k == 0 ? 1 : first_element_at(a0.breaks[k], grid);
    if (ik > n) break;
    if (!starts.empty() && ik <= starts.back()) continue;
    starts.push_back(ik);
    resist.push_back(grid.h / a0.values[k]);
  }
  starts.push_back(n + 1);  // sentinel

  // prefix resistance phi_i = sum_{e<=i} h/a0_e as a piecewise-affine vector
  QttVector phi = QttVector::zeros(lvl);
  double prefix = 0.0;
  for (std::size_t k = 0; k + 1 < starts.size(); ++k) {
    const Index e0 = starts[k];
    const Index e1 = std::min<Index>(starts[k + 1] - 1, n);
    const double alpha = prefix - resist[k] * double(e0 - 1);
    QttVector piece = QttVector::affine(lvl, alpha, resist[k]);
    if (e0 > 1)
      piece = hadamard(piece, indicator_geq(lvl, e0));
    if (e1 < n)
      piece = hadamard(piece, QttVector::indicator_leq(lvl, e1));
    phi = round(add(phi, piece), {0.0, 0});
    prefix += resist[k] * double(e1 - e0 + 1);
  }
  const double total = prefix + resist.back();  // element n+1 duplicates a0_n
  const QttVector psi = add(QttVector::constant(lvl, total), scale(phi, -1.0));

  const QttMatrix mask = QttMatrix::upper_triangular_ones(lvl, false);
  const QttMatrix p = hadamard(mask, QttMatrix::outer(phi, psi));
  const QttMatrix d = diag(round(hadamard(phi, psi), {0.0, 0}));
  QttMatrix g = add(add(p, transpose(p)), scale(d, -1.0));
  return round(scale(g, 1.0 / total), tol);
}

}  // namespace qtt
