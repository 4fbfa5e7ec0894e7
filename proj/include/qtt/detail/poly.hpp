#pragma once

#include <cstddef>
#include <vector>

// tiny dense polynomial helper for the exact per-element quadratures

namespace qtt::detail {

struct Poly {
  std::vector<double> c;  // c[k] * t^k

  Poly() : c{0.0} {}
  explicit Poly(std::vector<double> coeffs) : c(std::move(coeffs)) {
    if (c.empty()) c.push_back(0.0);
  }

  double eval(double t) const {
    double v = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) v = v * t + c[k];
    return v;
  }

  Poly plus(const Poly& o) const {
    std::vector<double> r(std::max(c.size(), o.c.size()), 0.0);
    for (std::size_t k = 0; k < c.size(); ++k) r[k] += c[k];
    for (std::size_t k = 0; k < o.c.size(); ++k) r[k] += o.c[k];
    return Poly(std::move(r));
  }

  Poly scaled(double a) const {
    std::vector<double> r = c;
    for (double& v : r) v *= a;
    return Poly(std::move(r));
  }

  Poly mul(const Poly& o) const {
    std::vector<double> r(c.size() + o.c.size() - 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = 0; j < o.c.size(); ++j) r[i + j] += c[i] * o.c[j];
    return Poly(std::move(r));
  }

  Poly anti() const {  // antiderivative with zero constant
    std::vector<double> r(c.size() + 1, 0.0);
    for (std::size_t k = 0; k < c.size(); ++k) r[k + 1] = c[k] / double(k + 1);
    return Poly(std::move(r));
  }

  // p(a + b*s) as a polynomial in s
  Poly compose_affine(double a, double b) const {
    Poly lin({a, b});
    Poly r({c.back()});
    for (std::size_t k = c.size() - 1; k-- > 0;) {
      r = r.mul(lin);
      r.c[0] += c[k];
    }
    return r;
  }

  double integral(double lo, double hi) const {
    Poly a = anti();
    return a.eval(hi) - a.eval(lo);
  }
};

}  // namespace qtt::detail
