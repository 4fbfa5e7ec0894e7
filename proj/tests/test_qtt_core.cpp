#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "oracle.hpp"
#include "qtt/io.hpp"
#include "qtt/tt.hpp"

using namespace qtt;
using oracle::Vec;

namespace {
constexpr double kPi = std::numbers::pi;

Vec qtt_dense(const QttVector& x) { return unfold(x); }

QttVector fold_structured(int level, std::mt19937_64& rng) {
  return fold(oracle::structured_random(level, rng), {0.0, 0});
}
}  // namespace

TEST_CASE("fold rejects inputs that are not 2^L long") {
  Vec bad3(3, 1.0), bad6(6, 1.0), bad1(1, 1.0);
  CHECK_THROWS_AS(fold(bad3, {0.0, 0}), Error);
  CHECK_THROWS_AS(fold(bad6, {0.0, 0}), Error);
  CHECK_THROWS_AS(fold(bad1, {0.0, 0}), Error);
}

TEST_CASE("fold of a constant vector yields all ranks 1") {
  Vec v(1 << 10, 3.25);
  QttVector x = fold(v, {0.0, 0});
  for (Index r : x.rank_profile()) CHECK(r == 1);
  CHECK(average_rank(x) == doctest::Approx(1.0));
  CHECK(oracle::max_abs_diff(qtt_dense(x), v) < 1e-12);
}

TEST_CASE("fold round-trips exactly at delta 0") {
  std::mt19937_64 rng(12345);
  for (int level : {1, 2, 5, 10}) {
    Vec v = oracle::random_dense(std::int64_t(1) << level, rng);
    Vec back = unfold(fold(v, {0.0, 0}));
    CHECK(oracle::max_abs_diff(v, back) < 1e-12 * (1.0 + oracle::norm(v)));
  }
}

TEST_CASE("fold finds the minimal ranks of sampled sinusoids") {
  const int level = 10;
  const std::int64_t n = 1 << level;
  const double h = 1.0 / double(n + 1);
  const double omega = 2.0 * kPi * 64.0;
  Vec v(n);
  for (std::int64_t i = 0; i < n; ++i)
    v[i] = std::sin(omega * h * (double(i) + 0.5));
  QttVector x = fold(v, {1e-13, 0});
  CHECK(x.max_rank() <= 2);
  // dense SVD oracle agrees bond by bond
  auto dense_ranks = oracle::tt_ranks(v, level, 1e-11);
  auto prof = x.rank_profile();
  for (std::size_t k = 0; k < dense_ranks.size(); ++k)
    CHECK(prof[k + 1] == dense_ranks[k]);
}

TEST_CASE("fold rank of polynomial samples is degree + 1") {
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const int level = 10;
  const std::int64_t n = 1 << level;
  for (int deg : {1, 2, 3, 4}) {
    Vec coef(deg + 1);
    for (auto& c : coef) c = uni(rng);
    coef[deg] += 1.5;  // keep the leading term alive
    Vec v(n);
    for (std::int64_t i = 0; i < n; ++i) {
      const double x = double(i + 1) / double(n);
      double p = 0.0;
      for (int k = deg; k >= 0; --k) p = p * x + coef[k];
      v[i] = p;
    }
    QttVector q = fold(v, {1e-13, 0});
    CHECK(q.max_rank() <= deg + 1);
    auto dense_ranks = oracle::tt_ranks(v, level, 1e-10);
    int mid = dense_ranks[dense_ranks.size() / 2];
    CHECK(q.max_rank() >= mid);  // not wastefully small either
  }
}

TEST_CASE("complex exponential splits into two rank-2 real vectors") {
  const int level = 12;
  const std::int64_t n = 1 << level;
  const double omega = 2.0 * kPi * 64.0;
  Vec re(n), im(n);
  for (std::int64_t i = 0; i < n; ++i) {
    const double x = double(i + 1) / double(n + 1);
    re[i] = std::cos(omega * x);
    im[i] = std::sin(omega * x);
  }
  CHECK(fold(re, {1e-13, 0}).max_rank() <= 2);
  CHECK(fold(im, {1e-13, 0}).max_rank() <= 2);
}

TEST_CASE("unfold respects its guard level") {
  QttVector x = QttVector::constant(8, 1.0);
  CHECK_THROWS_AS(unfold(x, 4), Error);
  CHECK_NOTHROW(unfold(x, 8));
}

TEST_CASE("round at delta 0 preserves values and never grows ranks") {
  std::mt19937_64 rng(99);
  QttVector x = fold_structured(9, rng);
  QttVector sum = add(x, x);  // redundant rank
  QttVector r = round(sum, {0.0, 0});
  CHECK(oracle::max_abs_diff(qtt_dense(r), qtt_dense(sum)) <
        1e-12 * (1.0 + norm2(sum)));
  auto pr = r.rank_profile();
  auto ps = sum.rank_profile();
  for (std::size_t k = 0; k < pr.size(); ++k) CHECK(pr[k] <= ps[k]);
  // the duplicated content collapses back
  CHECK(r.max_rank() <= x.max_rank());
}

TEST_CASE("rounding keeps the promised relative accuracy") {
  std::mt19937_64 rng(2024);
  for (double delta : {1e-2, 1e-7, 1e-12}) {
    for (int rep = 0; rep < 5; ++rep) {
      Vec v = oracle::structured_random(10, rng, 4, 1e-4);
      QttVector x = fold(v, {0.0, 0});
      QttVector r = round(x, {delta, 0});
      const double err = oracle::max_abs_diff(qtt_dense(r), v);
      // max-norm is bounded by the 2-norm guarantee
      CHECK(oracle::norm(qtt_dense(r)) > 0.0);
      Vec rd = qtt_dense(r);
      double e2 = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i)
        e2 += (rd[i] - v[i]) * (rd[i] - v[i]);
      CHECK(std::sqrt(e2) <= delta * oracle::norm(v) * (1.0 + 1e-10) + 1e-13);
      CHECK(err <= delta * oracle::norm(v) + 1e-12);
    }
  }
}

TEST_CASE("sum of two sinusoids rounds back to rank 4") {
  const int level = 12;
  const double h = 1.0 / double((1 << level) + 1);
  QttVector s1 = QttVector::sinusoid(level, 1.0, 2.0 * kPi * 64.0 * h, 0.0);
  QttVector s2 = QttVector::sinusoid(level, 0.7, 2.0 * kPi * 17.0 * h, 0.4);
  QttVector sum = add(s1, s2);
  CHECK(sum.max_rank() == 4);
  QttVector r = round(sum, {1e-12, 0});
  CHECK(r.max_rank() <= 4);
  CHECK(oracle::max_abs_diff(qtt_dense(r), qtt_dense(sum)) < 1e-10);
}

TEST_CASE("max_rank cap is honored") {
  std::mt19937_64 rng(5150);
  QttVector x = fold(oracle::random_dense(1 << 9, rng), {0.0, 0});
  QttVector r = round(x, {0.0, 3});
  CHECK(r.max_rank() <= 3);
}

TEST_CASE("add matches the dense sum and adds rank profiles") {
  std::mt19937_64 rng(31);
  QttVector x = fold_structured(8, rng);
  QttVector y = fold_structured(8, rng);
  Vec want = qtt_dense(x);
  Vec yd = qtt_dense(y);
  for (std::size_t i = 0; i < want.size(); ++i) want[i] += yd[i];
  QttVector s = add(x, y);
  CHECK(oracle::max_abs_diff(qtt_dense(s), want) < 1e-11);
  auto px = x.rank_profile(), py = y.rank_profile(), ps = s.rank_profile();
  for (std::size_t k = 1; k + 1 < ps.size(); ++k) CHECK(ps[k] == px[k] + py[k]);
}

TEST_CASE("x plus minus x is numerically zero") {
  std::mt19937_64 rng(17);
  QttVector x = fold_structured(9, rng);
  QttVector z = add(x, scale(x, -1.0));
  CHECK(norm2(z) <= 1e-12 * norm2(x));
}

TEST_CASE("scale multiplies values and keeps the rank profile") {
  std::mt19937_64 rng(41);
  QttVector x = fold_structured(7, rng);
  QttVector y = scale(x, -2.5);
  Vec want = qtt_dense(x);
  for (double& v : want) v *= -2.5;
  CHECK(oracle::max_abs_diff(qtt_dense(y), want) < 1e-11);
  CHECK(y.rank_profile() == x.rank_profile());
}

TEST_CASE("hadamard matches dense elementwise product") {
  std::mt19937_64 rng(55);
  QttVector x = fold_structured(8, rng);
  QttVector y = fold_structured(8, rng);
  Vec want = qtt_dense(x);
  Vec yd = qtt_dense(y);
  for (std::size_t i = 0; i < want.size(); ++i) want[i] *= yd[i];
  QttVector p = hadamard(x, y);
  CHECK(oracle::max_abs_diff(qtt_dense(p), want) < 1e-10);
  auto px = x.rank_profile(), py = y.rank_profile(), pp = p.rank_profile();
  for (std::size_t k = 0; k < pp.size(); ++k) CHECK(pp[k] == px[k] * py[k]);
  CHECK(oracle::max_abs_diff(qtt_dense(hadamard(x, QttVector::constant(8, 1.0))),
                             qtt_dense(x)) < 1e-12);
}

TEST_CASE("product of sinusoids rounds to rank 4 via product-to-sum") {
  const int level = 11;
  const double h = 1.0 / double((1 << level) + 1);
  QttVector s1 = QttVector::sinusoid(level, 1.0, 2.0 * kPi * 64.0 * h, 0.3);
  QttVector s2 = QttVector::sinusoid(level, 1.0, 2.0 * kPi * 5.0 * h, 1.1);
  QttVector p = round(hadamard(s1, s2), {1e-12, 0});
  CHECK(p.max_rank() <= 4);
}

TEST_CASE("dot and norm2 match dense references") {
  std::mt19937_64 rng(3);
  QttVector x = fold_structured(9, rng);
  QttVector y = fold_structured(9, rng);
  Vec xd = qtt_dense(x), yd = qtt_dense(y);
  double want = 0.0;
  for (std::size_t i = 0; i < xd.size(); ++i) want += xd[i] * yd[i];
  CHECK(dot(x, y) == doctest::Approx(want).epsilon(1e-10));
  CHECK(norm2(x) == doctest::Approx(oracle::norm(xd)).epsilon(1e-10));
  CHECK(std::abs(dot(x, y)) <= norm2(x) * norm2(y) * (1.0 + 1e-12));
  CHECK(norm2(QttVector::zeros(9)) == 0.0);
  CHECK(norm2(QttVector::constant(8, -2.0)) == doctest::Approx(2.0 * 16.0));
}

TEST_CASE("entry agrees with unfold and rejects bad indices") {
  std::mt19937_64 rng(8);
  QttVector x = fold_structured(8, rng);
  Vec xd = qtt_dense(x);
  for (Index i : {Index(1), Index(2), Index(100), Index(256)})
    CHECK(x.entry(i) == doctest::Approx(xd[i - 1]).epsilon(1e-12));
  CHECK(dot(QttVector::unit(8, 100), x) == doctest::Approx(xd[99]).epsilon(1e-12));
  CHECK_THROWS_AS(x.entry(0), Error);
  CHECK_THROWS_AS(x.entry(257), Error);
}

TEST_CASE("affine builder samples alpha + beta * i exactly") {
  for (int level : {1, 2, 8}) {
    QttVector x = QttVector::affine(level, 0.3, -0.2);
    Vec xd = qtt_dense(x);
    for (std::size_t i = 0; i < xd.size(); ++i)
      CHECK(xd[i] == doctest::Approx(0.3 - 0.2 * double(i + 1)).epsilon(1e-13));
    CHECK(x.max_rank() <= 2);
  }
}

TEST_CASE("sinusoid builder matches pointwise sine samples") {
  for (int level : {1, 3, 9}) {
    const double amp = 1.7, step = 0.37, phase = -0.9;
    QttVector x = QttVector::sinusoid(level, amp, step, phase);
    Vec xd = qtt_dense(x);
    for (std::size_t i = 0; i < xd.size(); ++i)
      CHECK(xd[i] ==
            doctest::Approx(amp * std::sin(phase + step * double(i + 1)))
                .epsilon(1e-12));
    CHECK(x.max_rank() <= 2);
  }
}

TEST_CASE("polynomial_in_index builder is exact") {
  const double coef[] = {0.5, -1.0, 2.0, 0.25};
  for (int level : {1, 2, 9}) {
    QttVector x = QttVector::polynomial_in_index(level, coef);
    Vec xd = qtt_dense(x);
    for (std::size_t i = 0; i < xd.size(); ++i) {
      const double t = double(i + 1);
      CHECK(xd[i] ==
            doctest::Approx(0.5 - t + 2.0 * t * t + 0.25 * t * t * t)
                .epsilon(1e-12));
    }
    CHECK(x.max_rank() <= 4);
  }
}

TEST_CASE("indicator_leq builder marks the prefix") {
  for (Index c : {Index(0), Index(1), Index(37), Index(255), Index(256)}) {
    QttVector x = QttVector::indicator_leq(8, c);
    Vec xd = qtt_dense(x);
    for (std::size_t i = 0; i < xd.size(); ++i)
      CHECK(xd[i] == doctest::Approx(Index(i) + 1 <= c ? 1.0 : 0.0));
    CHECK(x.max_rank() <= 2);
  }
}

TEST_CASE("identity and shift matrices have the right entries") {
  QttMatrix id = QttMatrix::identity(3);
  QttMatrix s = QttMatrix::shift(3);
  Vec idd = unfold_matrix(id), sd = unfold_matrix(s);
  for (Index i = 0; i < 8; ++i)
    for (Index j = 0; j < 8; ++j) {
      CHECK(idd[i * 8 + j] == doctest::Approx(i == j ? 1.0 : 0.0));
      CHECK(sd[i * 8 + j] == doctest::Approx(j == i + 1 ? 1.0 : 0.0));
    }
  CHECK(QttMatrix::shift(12).max_rank() <= 2);

  // S shifts: (S v)_i = v_{i+1}
  QttVector v = QttVector::affine(6, 0.0, 1.0);  // v_i = i
  QttVector sv = matvec(QttMatrix::shift(6), v, {0.0, 0});
  CHECK(sv.entry(1) == doctest::Approx(2.0));
  CHECK(sv.entry(63) == doctest::Approx(64.0));
  CHECK(sv.entry(64) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("upper triangular masks compare indices") {
  for (bool strict : {false, true}) {
    QttMatrix m = QttMatrix::upper_triangular_ones(5, strict);
    Vec md = unfold_matrix(m);
    for (Index i = 0; i < 32; ++i)
      for (Index j = 0; j < 32; ++j) {
        const bool want = strict ? (i < j) : (i <= j);
        CHECK(md[i * 32 + j] == doctest::Approx(want ? 1.0 : 0.0));
      }
    CHECK(m.max_rank() <= 2);
  }
}

TEST_CASE("transpose, diag and outer behave like their dense versions") {
  std::mt19937_64 rng(4711);
  QttVector a = fold_structured(5, rng);
  QttVector b = fold_structured(5, rng);
  Vec ad = qtt_dense(a), bd = qtt_dense(b);
  const Index n = 32;

  QttMatrix d = diag(a);
  Vec dd = unfold_matrix(d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      CHECK(dd[i * n + j] == doctest::Approx(i == j ? ad[i] : 0.0).epsilon(1e-11));
  CHECK(d.rank_profile() == a.rank_profile());

  QttMatrix o = QttMatrix::outer(a, b);
  Vec od = unfold_matrix(o);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      CHECK(od[i * n + j] == doctest::Approx(ad[i] * bd[j]).epsilon(1e-10));

  QttMatrix ot = transpose(o);
  Vec otd = unfold_matrix(ot);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      CHECK(otd[i * n + j] == doctest::Approx(ad[j] * bd[i]).epsilon(1e-10));

  // diag(a) x == a .* x
  QttVector dx = matvec(d, b, {0.0, 0});
  QttVector hx = hadamard(a, b);
  CHECK(oracle::max_abs_diff(qtt_dense(dx), qtt_dense(hx)) < 1e-10);
}

TEST_CASE("matvec and matmul match dense references") {
  std::mt19937_64 rng(2718);
  const int level = 6;
  const Index n = 64;
  QttVector a = fold_structured(level, rng);
  QttVector x = fold_structured(level, rng);
  Vec ad = qtt_dense(a), xd = qtt_dense(x);

  QttMatrix s = QttMatrix::shift(level);
  QttVector sx = matvec(s, x, {0.0, 0});
  Vec want(n, 0.0);
  for (Index i = 0; i + 1 < n; ++i) want[i] = xd[i + 1];
  CHECK(oracle::max_abs_diff(qtt_dense(sx), want) < 1e-11);

  QttMatrix sda = matmul(s, diag(a), {0.0, 0});
  Vec sdad = unfold_matrix(sda);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      CHECK(sdad[i * n + j] ==
            doctest::Approx(j == i + 1 ? ad[j] : 0.0).epsilon(1e-10));

  QttVector ix = matvec(QttMatrix::identity(level), x, {0.0, 0});
  CHECK(oracle::max_abs_diff(qtt_dense(ix), xd) < 1e-12);
}

TEST_CASE("matvec rounding keeps the requested accuracy") {
  std::mt19937_64 rng(1234);
  const int level = 9;
  QttVector a = fold_structured(level, rng);
  QttVector x = fold_structured(level, rng);
  QttMatrix d = diag(a);
  QttVector exact = matvec(d, x, {0.0, 0});
  QttVector approx = matvec(d, x, {1e-3, 0});
  Vec ed = qtt_dense(exact), apd = qtt_dense(approx);
  double e2 = 0.0;
  for (std::size_t i = 0; i < ed.size(); ++i)
    e2 += (ed[i] - apd[i]) * (ed[i] - apd[i]);
  CHECK(std::sqrt(e2) <= 1e-3 * oracle::norm(ed) * 1.001);
}

TEST_CASE("fold_matrix round-trips and compresses the identity") {
  std::mt19937_64 rng(100);
  const Index n = 16;
  Vec a = oracle::random_dense(n * n, rng);
  QttMatrix m = fold_matrix(a, {0.0, 0});
  CHECK(oracle::max_abs_diff(unfold_matrix(m), a) < 1e-11);
  Vec eye(n * n, 0.0);
  for (Index i = 0; i < n; ++i) eye[i * n + i] = 1.0;
  CHECK(fold_matrix(eye, {1e-13, 0}).max_rank() == 1);
}

TEST_CASE("average_rank follows its definition") {
  CHECK(average_rank(QttVector::constant(1, 2.0)) == doctest::Approx(1.0));
  CHECK(average_rank(QttVector::constant(10, 2.0)) == doctest::Approx(1.0));
  QttVector s = QttVector::sinusoid(10, 1.0, 0.1, 0.0);
  auto prof = s.rank_profile();
  double sum = 0.0;
  for (std::size_t k = 1; k + 1 < prof.size(); ++k) sum += double(prof[k]);
  CHECK(average_rank(s) == doctest::Approx(sum / 9.0));
}

TEST_CASE("serialization round-trips through streams") {
  std::mt19937_64 rng(606);
  QttVector x = fold_structured(8, rng);
  std::stringstream ss;
  save(ss, x);
  CHECK(peek_mode(ss) == 2);
  QttVector y = load_vector(ss);
  CHECK(x.rank_profile() == y.rank_profile());
  CHECK(oracle::max_abs_diff(qtt_dense(x), qtt_dense(y)) == 0.0);

  QttMatrix m = QttMatrix::shift(6);
  std::stringstream sm;
  save(sm, m);
  CHECK(peek_mode(sm) == 4);
  QttMatrix m2 = load_matrix(sm);
  CHECK(oracle::max_abs_diff(unfold_matrix(m), unfold_matrix(m2)) == 0.0);

  std::stringstream bad("not a container at all");
  CHECK_THROWS_AS(load_vector(bad), Error);
  std::stringstream sv;
  save(sv, x);
  CHECK_THROWS_AS(load_matrix(sv), Error);
}

TEST_CASE("dense guard blocks dense paths but not train arithmetic") {
  std::mt19937_64 rng(11);
  Vec big = oracle::random_dense(1 << 13, rng);
  QttVector x = QttVector::sinusoid(13, 1.0, 0.001, 0.0);
  {
    DenseGuard guard;
    CHECK_THROWS_AS(fold(big, {0.0, 0}), Error);
    CHECK_THROWS_AS(unfold(x), Error);
    CHECK_NOTHROW(round(add(x, x), {1e-12, 0}));
    CHECK_NOTHROW(matvec(QttMatrix::shift(13), x, {1e-12, 0}));
    CHECK(norm2(x) > 0.0);
  }
  CHECK_NOTHROW(fold(big, {0.0, 0}));
}

TEST_CASE("reciprocal inverts positive vectors elementwise") {
  const int level = 10;
  const double h = 1.0 / double((1 << level) + 1);
  QttVector a = add(QttVector::constant(level, 2.0),
                    QttVector::sinusoid(level, 1.0, 2.0 * kPi * 64.0 * h,
                                        -kPi * 64.0 * h));
  QttVector inv = reciprocal(a, 1.0, 3.0, {1e-10, 0});
  Vec ad = qtt_dense(a), id = qtt_dense(inv);
  double worst = 0.0;
  for (std::size_t i = 0; i < ad.size(); ++i)
    worst = std::max(worst, std::abs(id[i] - 1.0 / ad[i]));
  CHECK(worst < 5e-8);
  CHECK(inv.max_rank() < 30);
  CHECK_THROWS_AS(reciprocal(a, -1.0, 3.0, {1e-10, 0}), Error);
}

TEST_CASE("linearity of unfold over add and scale") {
  std::mt19937_64 rng(13579);
  for (int rep = 0; rep < 10; ++rep) {
    QttVector x = fold_structured(7, rng);
    QttVector y = fold_structured(7, rng);
    std::uniform_real_distribution<double> uni(-2.0, 2.0);
    const double alpha = uni(rng);
    Vec xd = qtt_dense(x), yd = qtt_dense(y);
    Vec want(xd.size());
    for (std::size_t i = 0; i < xd.size(); ++i) want[i] = alpha * xd[i] + yd[i];
    CHECK(oracle::max_abs_diff(qtt_dense(add(scale(x, alpha), y)), want) < 1e-10);
  }
}
