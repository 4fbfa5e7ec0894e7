#include <cmath>
#include <vector>

#include "qtt/tt.hpp"

// Closed-form QTT cores for structured vectors and matrices.  All of these
// follow from running a small automaton over the binary digits of the index
// (least significant bit in the first core).

namespace qtt {

namespace {

double binom(int n, int k) {
  double r = 1.0;
  for (int t = 0; t < k; ++t) r = r * double(n - t) / double(t + 1);
  return r;
}

}  // namespace

QttVector QttVector::zeros(int level) {
  std::vector<Core> c(static_cast<std::size_t>(level), Core(1, 2, 1));
  return QttVector(std::move(c));
}

QttVector QttVector::constant(int level, double value) {
  std::vector<Core> cs;
  for (int k = 0; k < level; ++k) {
    Core c(1, 2, 1);
    c.at(0, 0, 0) = c.at(0, 1, 0) = (k == 0 ? value : 1.0);
    cs.push_back(std::move(c));
  }
  return QttVector(std::move(cs));
}

QttVector QttVector::unit(int level, Index i) {
  if (i < 1 || i > (Index(1) << level)) throw Error("unit: index out of range");
  Index bits = i - 1;
  std::vector<Core> cs;
  for (int k = 0; k < level; ++k) {
    Core c(1, 2, 1);
    c.at(0, bits & 1, 0) = 1.0;
    bits >>= 1;
    cs.push_back(std::move(c));
  }
  return QttVector(std::move(cs));
}

QttVector QttVector::affine(int level, double alpha, double beta) {
  if (level == 1) {
    Core c(1, 2, 1);
    c.at(0, 0, 0) = alpha + beta;
    c.at(0, 1, 0) = alpha + 2.0 * beta;
    return QttVector({c});
  }
  std::vector<Core> cs;
  {
    Core c(1, 2, 2);
    for (Index j = 0; j < 2; ++j) {
      c.at(0, j, 0) = 1.0;
      c.at(0, j, 1) = alpha + beta * double(1 + j);
    }
    cs.push_back(std::move(c));
  }
  for (int k = 1; k + 1 < level; ++k) {
    Core c(2, 2, 2);
    const double w = beta * double(Index(1) << k);
    for (Index j = 0; j < 2; ++j) {
      c.at(0, j, 0) = 1.0;
      c.at(0, j, 1) = w * double(j);
      c.at(1, j, 1) = 1.0;
    }
    cs.push_back(std::move(c));
  }
  {
    Core c(2, 2, 1);
    const double w = beta * double(Index(1) << (level - 1));
    for (Index j = 0; j < 2; ++j) {
      c.at(0, j, 0) = w * double(j);
      c.at(1, j, 0) = 1.0;
    }
    cs.push_back(std::move(c));
  }
  return QttVector(std::move(cs));
}

QttVector QttVector::sinusoid(int level, double amp, double step, double phase) {
  if (level == 1) {
    Core c(1, 2, 1);
    c.at(0, 0, 0) = amp * std::sin(phase + step);
    c.at(0, 1, 0) = amp * std::sin(phase + 2.0 * step);
    return QttVector({c});
  }
  std::vector<Core> cs;
  {
    Core c(1, 2, 2);
    for (Index j = 0; j < 2; ++j) {
      const double a = phase + step * double(1 + j);
      c.at(0, j, 0) = amp * std::sin(a);
      c.at(0, j, 1) = amp * std::cos(a);
    }
    cs.push_back(std::move(c));
  }
  for (int k = 1; k + 1 < level; ++k) {
    Core c(2, 2, 2);
    for (Index j = 0; j < 2; ++j) {
      const double t = step * double(j) * double(Index(1) << k);
      c.at(0, j, 0) = std::cos(t);
      c.at(0, j, 1) = -std::sin(t);
      c.at(1, j, 0) = std::sin(t);
      c.at(1, j, 1) = std::cos(t);
    }
    cs.push_back(std::move(c));
  }
  {
    Core c(2, 2, 1);
    for (Index j = 0; j < 2; ++j) {
      const double t = step * double(j) * double(Index(1) << (level - 1));
      c.at(0, j, 0) = std::cos(t);
      c.at(1, j, 0) = std::sin(t);
    }
    cs.push_back(std::move(c));
  }
  return QttVector(std::move(cs));
}

QttVector QttVector::polynomial_in_index(int level, std::span<const double> coeffs) {
  if (coeffs.empty()) throw Error("polynomial_in_index: empty coefficients");
  const int m = static_cast<int>(coeffs.size()) - 1;
  if (m == 0) return constant(level, coeffs[0]);
  auto eval = [&](double t) {
    double v = 0.0;
    for (int k = m; k >= 0; --k) v = v * t + coeffs[static_cast<std::size_t>(k)];
    return v;
  };
  if (level == 1) {
    Core c(1, 2, 1);
    c.at(0, 0, 0) = eval(1.0);
    c.at(0, 1, 0) = eval(2.0);
    return QttVector({c});
  }
  const Index r = m + 1;
  std::vector<Core> cs;
  {
    Core c(1, 2, r);
    for (Index j = 0; j < 2; ++j)
      for (Index b = 0; b < r; ++b)
        c.at(0, j, b) = std::pow(double(1 + j), double(b));
    cs.push_back(std::move(c));
  }
  for (int k = 1; k + 1 < level; ++k) {
    Core c(r, 2, r);
    for (Index j = 0; j < 2; ++j) {
      const double t = double(j) * double(Index(1) << k);
      for (Index a = 0; a < r; ++a)
        for (Index b = a; b < r; ++b)
          c.at(a, j, b) = binom(int(b), int(a)) * std::pow(t, double(b - a));
    }
    cs.push_back(std::move(c));
  }
  {
    Core c(r, 2, 1);
    for (Index j = 0; j < 2; ++j) {
      const double t = double(j) * double(Index(1) << (level - 1));
      for (Index a = 0; a < r; ++a) {
        double v = 0.0;
        for (Index b = a; b < r; ++b)
          v += binom(int(b), int(a)) * std::pow(t, double(b - a)) *
               coeffs[static_cast<std::size_t>(b)];
        c.at(a, j, 0) = v;
      }
    }
    cs.push_back(std::move(c));
  }
  return QttVector(std::move(cs));
}

QttVector QttVector::indicator_leq(int level, Index c) {
  const Index n = Index(1) << level;
  if (c <= 0) return zeros(level);
  if (c >= n) return constant(level, 1.0);
  const Index bits = c - 1;
  auto bit = [&](int nu) { return (bits >> (nu - 1)) & 1; };  // 1-based position
  if (level == 1) {
    Core co(1, 2, 1);
    for (Index j = 0; j < 2; ++j) co.at(0, j, 0) = (j <= bits) ? 1.0 : 0.0;
    return QttVector({co});
  }
  // state 0: prefix equal so far, state 1: already strictly below
  std::vector<Core> cs;
  {
    Core co(1, 2, 2);
    for (Index j = 0; j < 2; ++j) {
      co.at(0, j, 0) = (j <= bit(1)) ? 1.0 : 0.0;
      co.at(0, j, 1) = 1.0;
    }
    cs.push_back(std::move(co));
  }
  for (int k = 1; k + 1 < level; ++k) {
    const Index z = bit(k + 1);
    Core co(2, 2, 2);
    for (Index j = 0; j < 2; ++j) {
      co.at(0, j, 0) = (j == z) ? 1.0 : 0.0;
      co.at(1, j, 0) = (j == 0 && z == 1) ? 1.0 : 0.0;
      co.at(1, j, 1) = 1.0;
    }
    cs.push_back(std::move(co));
  }
  {
    const Index z = bit(level);
    Core co(2, 2, 1);
    for (Index j = 0; j < 2; ++j) {
      co.at(0, j, 0) = (j == z) ? 1.0 : 0.0;
      co.at(1, j, 0) = (j == 0 && z == 1) ? 1.0 : 0.0;
    }
    cs.push_back(std::move(co));
  }
  return QttVector(std::move(cs));
}

QttMatrix QttMatrix::identity(int level) {
  std::vector<Core> cs;
  for (int k = 0; k < level; ++k) {
    Core c(1, 4, 1);
    c.at(0, 0, 0) = c.at(0, 3, 0) = 1.0;
    cs.push_back(std::move(c));
  }
  return QttMatrix(std::move(cs));
}

QttMatrix QttMatrix::shift(int level) {
  // carry automaton for col = row + 1; state 1 = carry still propagating
  if (level == 1) {
    Core c(1, 4, 1);
    c.at(0, 2, 0) = 1.0;
    return QttMatrix({c});
  }
  std::vector<Core> cs;
  {
    Core c(1, 4, 2);
    c.at(0, 2, 0) = 1.0;  // 0 -> 1, carry resolved
    c.at(0, 1, 1) = 1.0;  // 1 -> 0, carry continues
    cs.push_back(std::move(c));
  }
  for (int k = 1; k + 1 < level; ++k) {
    Core c(2, 4, 2);
    c.at(0, 0, 0) = c.at(0, 3, 0) = 1.0;
    c.at(1, 1, 1) = 1.0;
    c.at(1, 2, 0) = 1.0;
    cs.push_back(std::move(c));
  }
  {
    Core c(2, 4, 1);
    c.at(0, 0, 0) = c.at(0, 3, 0) = 1.0;
    c.at(1, 2, 0) = 1.0;
    cs.push_back(std::move(c));
  }
  return QttMatrix(std::move(cs));
}

QttMatrix QttMatrix::upper_triangular_ones(int level, bool strict) {
  // compare row and column bits from the most significant side; reading order
  // in the train is least significant first, so the automaton starts in the
  // last core.  state 0: equal so far, state 1: row already below column.
  if (level == 1) {
    Core c(1, 4, 1);
    if (strict) {
      c.at(0, 2, 0) = 1.0;
    } else {
      c.at(0, 0, 0) = c.at(0, 2, 0) = c.at(0, 3, 0) = 1.0;
    }
    return QttMatrix({c});
  }
  std::vector<Core> cs;
  {
    Core c(1, 4, 2);
    for (Index d = 0; d < 4; ++d) {
      c.at(0, d, 0) = strict ? (d == 2 ? 1.0 : 0.0) : (d != 1 ? 1.0 : 0.0);
      c.at(0, d, 1) = 1.0;
    }
    cs.push_back(std::move(c));
  }
  for (int k = 1; k + 1 < level; ++k) {
    Core c(2, 4, 2);
    c.at(0, 0, 0) = c.at(0, 3, 0) = 1.0;
    c.at(1, 2, 0) = 1.0;
    for (Index d = 0; d < 4; ++d) c.at(1, d, 1) = 1.0;
    cs.push_back(std::move(c));
  }
  {
    Core c(2, 4, 1);
    c.at(0, 0, 0) = c.at(0, 3, 0) = 1.0;
    c.at(1, 2, 0) = 1.0;
    cs.push_back(std::move(c));
  }
  return QttMatrix(std::move(cs));
}

QttMatrix QttMatrix::outer(const QttVector& u, const QttVector& v) {
  if (u.level() != v.level()) throw Error("outer: level mismatch");
  std::vector<Core> cs;
  for (int k = 0; k < u.level(); ++k) {
    const Core& cu = u.cores()[static_cast<std::size_t>(k)];
    const Core& cv = v.cores()[static_cast<std::size_t>(k)];
    Core c(cu.r_left * cv.r_left, 4, cu.r_right * cv.r_right);
    for (Index au = 0; au < cu.r_left; ++au)
      for (Index av = 0; av < cv.r_left; ++av)
        for (Index j = 0; j < 2; ++j)
          for (Index jp = 0; jp < 2; ++jp)
            for (Index bu = 0; bu < cu.r_right; ++bu)
              for (Index bv = 0; bv < cv.r_right; ++bv)
                c.at(au * cv.r_left + av, j + 2 * jp, bu * cv.r_right + bv) =
                    cu.at(au, j, bu) * cv.at(av, jp, bv);
    cs.push_back(std::move(c));
  }
  return QttMatrix(std::move(cs));
}

}  // namespace qtt
