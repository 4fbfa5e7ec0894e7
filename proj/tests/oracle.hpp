#pragma once

// Dense reference computations used to cross-check the QTT implementation.
// Everything here works on plain std::vector<double> so the checks stay
// independent of the code under test.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

inline double norm(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// TT bond ranks of a dense length-2^L vector: rank of the unfolding with the
// first nu bits (least significant) as rows, suffix bits as columns.
inline std::vector<int> tt_ranks(const Vec& v, int level, double rel_tol) {
  std::vector<int> ranks;
  const std::int64_t n = std::int64_t(1) << level;
  for (int nu = 1; nu < level; ++nu) {
    const std::int64_t rows = std::int64_t(1) << nu;
    Eigen::Map<const Eigen::MatrixXd> m(v.data(), rows, n / rows);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& s = svd.singularValues();
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (s(i) > rel_tol * s(0)) ++r;
    ranks.push_back(std::max(r, 1));
  }
  return ranks;
}

// random vector that actually has interesting low-rank structure: a mix of
// sinusoids and a low-degree polynomial, optionally with added noise
inline Vec structured_random(int level, std::mt19937_64& rng, int n_waves = 3,
                             double noise = 0.0) {
  const std::int64_t n = std::int64_t(1) << level;
  std::uniform_real_distribution<double> amp(0.2, 2.0), freq(0.5, 80.0),
      phase(0.0, 6.28), coef(-1.0, 1.0), uni(-1.0, 1.0);
  Vec v(n, 0.0);
  for (int w = 0; w < n_waves; ++w) {
    const double a = amp(rng), f = freq(rng), p = phase(rng);
    for (std::int64_t i = 0; i < n; ++i)
      v[i] += a * std::sin(p + f * double(i + 1) / double(n));
  }
  const double c0 = coef(rng), c1 = coef(rng), c2 = coef(rng);
  for (std::int64_t i = 0; i < n; ++i) {
    const double x = double(i + 1) / double(n);
    v[i] += c0 + c1 * x + c2 * x * x;
    if (noise > 0.0) v[i] += noise * uni(rng);
  }
  return v;
}

inline Vec random_dense(std::int64_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Vec v(n);
  for (auto& x : v) x = uni(rng);
  return v;
}

// --- dense 1D FEM pieces ----------------------------------------------------

// stiffness of -(a u')' on (0,1), zero Dirichlet at 0, Neumann-free at 1 is
// not what we build; this is the two-sided Dirichlet ladder with the last
// coefficient duplicated: diag_i = a_i + a_{i+1}, a_{N+1} := a_N
struct Tridiag {
  Vec diag, off;  // off[i] couples i and i+1
};

inline Tridiag stiffness(const Vec& a, double h) {
  const std::size_t n = a.size();
  Tridiag t;
  t.diag.resize(n);
  t.off.resize(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    t.diag[i] = (a[i] + a[i + 1]) / h;
    t.off[i] = -a[i + 1] / h;
  }
  t.diag[n - 1] = 2.0 * a[n - 1] / h;
  return t;
}

inline Vec tridiag_apply(const Tridiag& t, const Vec& x) {
  const std::size_t n = x.size();
  Vec y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = t.diag[i] * x[i];
    if (i > 0) y[i] += t.off[i - 1] * x[i - 1];
    if (i + 1 < n) y[i] += t.off[i] * x[i + 1];
  }
  return y;
}

inline Vec thomas_solve(const Tridiag& t, Vec rhs) {
  const std::size_t n = rhs.size();
  Vec c(n - 1), d(n);
  d[0] = t.diag[0];
  for (std::size_t i = 0; i + 1 < n; ++i) {
    c[i] = t.off[i] / d[i];
    d[i + 1] = t.diag[i + 1] - c[i] * t.off[i];
    rhs[i + 1] -= c[i] * rhs[i];
  }
  Vec x(n);
  x[n - 1] = rhs[n - 1] / d[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = (rhs[i] - t.off[i] * x[i + 1]) / d[i];
  return x;
}

}  // namespace oracle
