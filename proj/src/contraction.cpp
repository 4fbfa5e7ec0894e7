#include "qtt/contraction.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <set>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace qtt {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double adaptive_integral(const std::function<double(double)>& f, double lo,
                         double hi) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, lo, hi, 12, 1e-13);
}

void check_positive_range(const std::pair<double, double>& r, const char* who) {
  if (!(r.first > 0.0)) throw Error(std::string(who) + ": inputs must be positive");
}

// breakpoints of a step function clipped to [0,1), plus the right endpoint
std::vector<double> knots_of(const StepFunction& s) {
  std::vector<double> k(s.breaks.begin(), s.breaks.end());
  k.push_back(1.0);
  return k;
}

std::pair<double, double> scan_ratio(std::span<const double> a,
                                     const std::function<double(double)>& a0_at,
                                     Index n) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  const double h = 1.0 / double(n + 1);
  for (Index i = 0; i < n; ++i) {
    const double x = h * (double(i) + 0.5);
    const double b = a0_at(x);
    if (!(b > 0.0)) throw Error("ratio_bounds: a0 must be positive");
    const double v = a[static_cast<std::size_t>(i)];
    if (!(v > 0.0)) throw Error("ratio_bounds: coefficient must be positive");
    lo = std::min(lo, v / b);
    hi = std::max(hi, v / b);
  }
  return {lo, hi};
}

}  // namespace

namespace detail {

std::pair<double, double> sin_range(double phi_lo, double phi_hi) {
  if (phi_hi < phi_lo) std::swap(phi_lo, phi_hi);
  if (phi_hi - phi_lo >= kTwoPi) return {-1.0, 1.0};
  double lo = std::min(std::sin(phi_lo), std::sin(phi_hi));
  double hi = std::max(std::sin(phi_lo), std::sin(phi_hi));
  // interior critical points pi/2 + k*pi
  const double half_pi = 0.5 * std::numbers::pi;
  const double first = std::ceil((phi_lo - half_pi) / std::numbers::pi);
  for (double k = first;; k += 1.0) {
    const double crit = half_pi + k * std::numbers::pi;
    if (crit > phi_hi) break;
    if (crit >= phi_lo) {
      const double v = std::sin(crit);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  return {lo, hi};
}

}  // namespace detail

void SpectralBounds::validate() const {
  if (!(lambda1 > 0.0) || lambda2 < lambda1)
    throw Error("SpectralBounds: need 0 < lambda1 <= lambda2");
  if (!(h_lo > 0.0) || h_hi < h_lo)
    throw Error("SpectralBounds: need 0 < h_lo <= h_hi");
  if (c_plus < lambda1 * lambda1)
    throw Error("SpectralBounds: c_plus below lambda1^2");
}

std::pair<double, double> coefficient_range(const CoefficientSpec& a, double xl,
                                            double xr) {
  if (xr < xl) std::swap(xl, xr);
  switch (a.cls) {
    case CoefClass::Constant:
      return {a.offset, a.offset};
    case CoefClass::Sine: {
      const auto [slo, shi] = detail::sin_range(a.omega * xl, a.omega * xr);
      return {a.offset + slo, a.offset + shi};
    }
    case CoefClass::Exotic: {
      // the phase omega*x^m is monotone on [0,1]
      const double pl = a.omega * std::pow(xl, double(a.power));
      const double pr = a.omega * std::pow(xr, double(a.power));
      const auto [slo, shi] = detail::sin_range(pl, pr);
      return {a.offset + slo, a.offset + shi};
    }
    case CoefClass::Steps: {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      const auto& s = a.modulator;
      const auto knots = knots_of(s);
      for (std::size_t k = 0; k < s.values.size(); ++k) {
        if (knots[k + 1] <= xl || knots[k] >= xr) continue;
        lo = std::min(lo, s.values[k]);
        hi = std::max(hi, s.values[k]);
      }
      return {lo, hi};
    }
    case CoefClass::Modulated: {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      const auto& s = a.modulator;
      const auto knots = knots_of(s);
      for (std::size_t k = 0; k < s.values.size(); ++k) {
        const double pl = std::max(xl, knots[k]);
        const double pr = std::min(xr, knots[k + 1]);
        if (pr <= pl) continue;
        auto [slo, shi] = detail::sin_range(a.omega * pl, a.omega * pr);
        const double v = s.values[k];
        if (v < 0.0) std::swap(slo, shi);
        lo = std::min(lo, a.offset + v * slo);
        hi = std::max(hi, a.offset + v * shi);
      }
      return {lo, hi};
    }
    case CoefClass::Custom:
      throw Error("coefficient_range: custom class has no analytic range");
  }
  throw Error("coefficient_range: bad class");
}

std::pair<double, double> ratio_bounds(const CoefficientSpec& a_eps, double a0) {
  if (!(a0 > 0.0)) throw Error("ratio_bounds: a0 must be positive");
  std::pair<double, double> env;
  if (a_eps.cls == CoefClass::Custom) {
    env = a_eps.envelope();
  } else {
    env = coefficient_range(a_eps, 0.0, 1.0);
  }
  check_positive_range(env, "ratio_bounds");
  return {env.first / a0, env.second / a0};
}

std::pair<double, double> ratio_bounds(const CoefficientSpec& a_eps,
                                       const StepFunction& a0) {
  a0.validate();
  if (!(a0.min_value() > 0.0)) throw Error("ratio_bounds: a0 must be positive");

  if (a_eps.cls == CoefClass::Custom) {
    const Index n = static_cast<Index>(a_eps.samples.size());
    return scan_ratio(a_eps.samples, [&](double x) { return a0.value_at(x); }, n);
  }

  std::set<double> cuts(a0.breaks.begin(), a0.breaks.end());
  if (a_eps.cls == CoefClass::Modulated || a_eps.cls == CoefClass::Steps)
    cuts.insert(a_eps.modulator.breaks.begin(), a_eps.modulator.breaks.end());
  cuts.insert(0.0);
  std::vector<double> xs(cuts.begin(), cuts.end());
  xs.push_back(1.0);

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    const auto env = coefficient_range(a_eps, xs[k], xs[k + 1]);
    check_positive_range(env, "ratio_bounds");
    const double b = a0.value_at(0.5 * (xs[k] + xs[k + 1]));
    lo = std::min(lo, env.first / b);
    hi = std::max(hi, env.second / b);
  }
  return {lo, hi};
}

std::pair<double, double> ratio_bounds(const QttVector& a_eps, double a0) {
  if (!(a0 > 0.0)) throw Error("ratio_bounds: a0 must be positive");
  if (a_eps.level() > 12)
    throw Error("ratio_bounds: dense scan limited to L <= 12; use a spec");
  const std::vector<double> v = unfold(a_eps);
  return scan_ratio(v, [&](double) { return a0; }, a_eps.size());
}

std::pair<double, double> ratio_bounds(const QttVector& a_eps,
                                       const QttVector& a0) {
  if (a_eps.level() != a0.level()) throw Error("ratio_bounds: level mismatch");
  if (a_eps.level() > 12)
    throw Error("ratio_bounds: dense scan limited to L <= 12; use a spec");
  const std::vector<double> v = unfold(a_eps);
  const std::vector<double> b = unfold(a0);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(b[i] > 0.0) || !(v[i] > 0.0))
      throw Error("ratio_bounds: coefficients must be positive");
    lo = std::min(lo, v[i] / b[i]);
    hi = std::max(hi, v[i] / b[i]);
  }
  return {lo, hi};
}

std::pair<double, double> rho_star_and_q(double h_lo, double h_hi) {
  if (!(h_lo > 0.0) || h_hi < h_lo)
    throw Error("rho_star_and_q: need 0 < h_lo <= h_hi");
  const double rho = 2.0 / (h_lo + h_hi);
  const double q = (h_hi - h_lo) / (h_hi + h_lo);
  return {rho, q};
}

double coarse_q_bound(double eps_lo, double eps_hi, double base_lo,
                      double base_hi) {
  if (!(eps_lo > 0.0) || !(base_lo > 0.0) || eps_hi < eps_lo || base_hi < base_lo)
    throw Error("coarse_q_bound: need positive ordered bounds");
  const double t = (eps_lo * base_lo) / (eps_hi * base_hi);
  return std::sqrt(std::max(0.0, 1.0 - t * t));
}

ConstantA0Choice optimize_a0_constant(const CoefficientSpec& a_eps,
                                      std::span<const double> candidates) {
  if (candidates.empty()) throw Error("optimize_a0_constant: empty candidate set");
  ConstantA0Choice best;
  double best_q = std::numeric_limits<double>::infinity();
  double best_dev = std::numeric_limits<double>::infinity();
  for (double c : candidates) {
    const auto [lo, hi] = ratio_bounds(a_eps, c);
    const auto [rho, q] = rho_star_and_q(lo, hi);
    const double dev = std::max(std::abs(1.0 - lo), std::abs(hi - 1.0));
    const bool better =
        q < best_q - 1e-12 ||
        (q < best_q + 1e-12 &&
         (dev < best_dev - 1e-12 ||
          (dev < best_dev + 1e-12 && c < best.a0)));
    if (better || !std::isfinite(best_q)) {
      best = {c, rho, q};
      best_q = q;
      best_dev = dev;
    }
  }
  return best;
}

std::pair<StepFunction, StepFunction> envelope_step_functions(
    const CoefficientSpec& a_eps) {
  switch (a_eps.cls) {
    case CoefClass::Constant:
      return {StepFunction{{0.0}, {a_eps.offset}},
              StepFunction{{0.0}, {a_eps.offset}}};
    case CoefClass::Sine:
      return {StepFunction{{0.0}, {a_eps.offset - 1.0}},
              StepFunction{{0.0}, {a_eps.offset + 1.0}}};
    case CoefClass::Exotic:
      return {StepFunction{{0.0}, {a_eps.offset - 1.0}},
              StepFunction{{0.0}, {a_eps.offset + 1.0}}};
    case CoefClass::Steps:
      return {a_eps.modulator, a_eps.modulator};
    case CoefClass::Modulated: {
      StepFunction lo = a_eps.modulator, hi = a_eps.modulator;
      for (std::size_t k = 0; k < lo.values.size(); ++k) {
        const double amp = std::abs(a_eps.modulator.values[k]);
        lo.values[k] = a_eps.offset - amp;
        hi.values[k] = a_eps.offset + amp;
      }
      return {lo, hi};
    }
    case CoefClass::Custom: {
      const auto [lo, hi] = a_eps.envelope();
      return {StepFunction{{0.0}, {lo}}, StepFunction{{0.0}, {hi}}};
    }
  }
  throw Error("envelope_step_functions: bad class");
}

AveragedCoefficient averaged_coefficient(const StepFunction& lower,
                                         const StepFunction& upper,
                                         const CoefficientSpec& a_eps) {
  lower.validate();
  upper.validate();

  // envelope check by sampling the coefficient
  const int scan_points = 4096;
  for (int i = 0; i < scan_points; ++i) {
    const double x = (double(i) + 0.5) / scan_points;
    double v;
    if (a_eps.cls == CoefClass::Custom) {
      const std::size_t n = a_eps.samples.size();
      v = a_eps.samples[std::min(n - 1, std::size_t(x * double(n)))];
    } else {
      v = a_eps.value_at(x);
    }
    if (v < lower.value_at(x) - 1e-12 || v > upper.value_at(x) + 1e-12)
      throw Error("averaged_coefficient: envelopes do not enclose the coefficient");
  }

  std::set<double> cuts(lower.breaks.begin(), lower.breaks.end());
  cuts.insert(upper.breaks.begin(), upper.breaks.end());
  AveragedCoefficient out;
  for (double b : cuts) {
    const double mid = b + 1e-15;
    const double up = upper.value_at(mid), dn = lower.value_at(mid);
    if (!(dn > 0.0)) throw Error("averaged_coefficient: lower envelope must be positive");
    if (up < dn) throw Error("averaged_coefficient: upper envelope below lower");
    const double a0 = 0.5 * (up + dn);
    const double q = (up - a0) / a0;
    out.a0.breaks.push_back(b);
    out.a0.values.push_back(a0);
    out.q_profile.breaks.push_back(b);
    out.q_profile.values.push_back(q);
    out.q_max = std::max(out.q_max, q);
    if (!(q < 1.0)) throw Error("averaged_coefficient: oscillation reaches 1");
    out.cond_bound = std::max(out.cond_bound, (1.0 + q) / (1.0 - q));
  }
  return out;
}

double mean_coefficient(const CoefficientSpec& a_eps) {
  switch (a_eps.cls) {
    case CoefClass::Constant:
      return a_eps.offset;
    case CoefClass::Sine:
      return a_eps.offset + (1.0 - std::cos(a_eps.omega)) / a_eps.omega;
    case CoefClass::Steps: {
      const auto knots = knots_of(a_eps.modulator);
      double s = 0.0;
      for (std::size_t k = 0; k < a_eps.modulator.values.size(); ++k)
        s += a_eps.modulator.values[k] * (knots[k + 1] - knots[k]);
      return s;
    }
    case CoefClass::Modulated: {
      const auto knots = knots_of(a_eps.modulator);
      double s = a_eps.offset;
      for (std::size_t k = 0; k < a_eps.modulator.values.size(); ++k)
        s += a_eps.modulator.values[k] *
             (std::cos(a_eps.omega * knots[k]) - std::cos(a_eps.omega * knots[k + 1])) /
             a_eps.omega;
      return s;
    }
    case CoefClass::Exotic:
      return adaptive_integral(
          [&](double x) { return a_eps.value_at(x); }, 0.0, 1.0);
    case CoefClass::Custom: {
      if (a_eps.samples.empty()) throw Error("mean_coefficient: no samples");
      double s = 0.0;
      for (double v : a_eps.samples) s += v;
      return s / double(a_eps.samples.size());
    }
  }
  throw Error("mean_coefficient: bad class");
}

double harmonic_mean_coefficient(const CoefficientSpec& a_eps) {
  switch (a_eps.cls) {
    case CoefClass::Constant:
      return a_eps.offset;
    case CoefClass::Steps: {
      const auto knots = knots_of(a_eps.modulator);
      double s = 0.0;
      for (std::size_t k = 0; k < a_eps.modulator.values.size(); ++k) {
        if (!(a_eps.modulator.values[k] > 0.0))
          throw Error("harmonic_mean_coefficient: coefficient must be positive");
        s += (knots[k + 1] - knots[k]) / a_eps.modulator.values[k];
      }
      return 1.0 / s;
    }
    case CoefClass::Custom: {
      if (a_eps.samples.empty()) throw Error("harmonic_mean_coefficient: no samples");
      double s = 0.0;
      for (double v : a_eps.samples) {
        if (!(v > 0.0))
          throw Error("harmonic_mean_coefficient: coefficient must be positive");
        s += 1.0 / v;
      }
      return double(a_eps.samples.size()) / s;
    }
    default: {
      const auto env = coefficient_range(a_eps, 0.0, 1.0);
      if (!(env.first > 0.0))
        throw Error("harmonic_mean_coefficient: coefficient must be positive");
      const double s = adaptive_integral(
          [&](double x) { return 1.0 / a_eps.value_at(x); }, 0.0, 1.0);
      return 1.0 / s;
    }
  }
}

SpectralBounds spectral_bounds(const CoefficientSpec& a_eps, double a0) {
  if (!(a0 > 0.0)) throw Error("spectral_bounds: a0 must be positive");
  SpectralBounds b;
  const auto env = a_eps.cls == CoefClass::Custom
                       ? a_eps.envelope()
                       : coefficient_range(a_eps, 0.0, 1.0);
  check_positive_range(env, "spectral_bounds");
  b.eps_lo = env.first;
  b.eps_hi = env.second;
  b.base_lo = b.base_hi = a0;
  std::tie(b.h_lo, b.h_hi) = ratio_bounds(a_eps, a0);
  b.lambda1 = b.h_lo;
  b.lambda2 = b.h_hi;
  b.c_plus = b.h_lo * b.h_hi;
  b.validate();
  return b;
}

SpectralBounds spectral_bounds(const CoefficientSpec& a_eps,
                               const StepFunction& a0) {
  a0.validate();
  if (!(a0.min_value() > 0.0)) throw Error("spectral_bounds: a0 must be positive");
  SpectralBounds b;
  const auto env = a_eps.cls == CoefClass::Custom
                       ? a_eps.envelope()
                       : coefficient_range(a_eps, 0.0, 1.0);
  check_positive_range(env, "spectral_bounds");
  b.eps_lo = env.first;
  b.eps_hi = env.second;
  b.base_lo = a0.min_value();
  b.base_hi = a0.max_value();
  std::tie(b.h_lo, b.h_hi) = ratio_bounds(a_eps, a0);
  b.lambda1 = b.h_lo;
  b.lambda2 = b.h_hi;
  b.c_plus = b.h_lo * b.h_hi;
  b.validate();
  return b;
}

ContractionReport contraction_report(const SpectralBounds& b, double a0_star) {
  b.validate();
  ContractionReport r;
  std::tie(r.rho_star, r.q) = rho_star_and_q(b.h_lo, b.h_hi);
  r.q_coarse = coarse_q_bound(b.eps_lo, b.eps_hi, b.base_lo, b.base_hi);
  r.cond_bound = (1.0 + r.q) / (1.0 - r.q);
  r.a0_star = a0_star;
  return r;
}

}  // namespace qtt
