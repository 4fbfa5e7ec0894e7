#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "oracle.hpp"
#include "qtt/fem.hpp"
#include "qtt/tt.hpp"

using qtt::CoefficientSpec;
using qtt::Grid;
using qtt::Index;
using qtt::LoadSpec;
using qtt::QttMatrix;
using qtt::QttVector;
using qtt::StepFunction;
using qtt::Truncation;

namespace {

constexpr double kPi = std::numbers::pi;

// composite Simpson on [lo, hi]
double simpson(const std::function<double(double)>& f, double lo, double hi,
               int panels) {
  const double w = (hi - lo) / panels;
  double s = f(lo) + f(hi);
  for (int k = 1; k < panels; ++k) s += 2.0 * f(lo + k * w);
  for (int k = 0; k < panels; ++k) s += 4.0 * f(lo + (k + 0.5) * w);
  return s * w / 6.0;
}

// int f(x) hat_i(x) dx over the two elements touching node i
double hat_moment(const std::function<double(double)>& f, const Grid& g, Index i) {
  const double xi = g.node(i), h = g.h;
  auto up = [&](double x) { return f(x) * (x - (xi - h)) / h; };
  auto down = [&](double x) { return f(x) * ((xi + h) - x) / h; };
  double m = simpson(up, xi - h, xi, 64);
  if (i < g.n) m += simpson(down, xi, xi + h, 64);
  if (i == g.n) m += simpson(down, xi, xi + h, 64);  // half-hat continues to x=1
  return m;
}

Eigen::MatrixXd dense_matrix(const qtt::DenseTridiag& t) {
  const Index n = static_cast<Index>(t.diag.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    m(i, i) = t.diag[i];
    if (i + 1 < n) {
      m(i, i + 1) = t.off[i];
      m(i + 1, i) = t.off[i];
    }
  }
  return m;
}

std::vector<double> midpoint_values(const CoefficientSpec& s, const Grid& g) {
  std::vector<double> v(static_cast<std::size_t>(g.n));
  for (Index e = 1; e <= g.n; ++e)
    v[static_cast<std::size_t>(e - 1)] = s.value_at(g.midpoint(e));
  return v;
}

StepFunction four_steps() {
  return {{0.0, 0.25, 0.5, 0.75}, {1.0, 3.0, 0.5, 2.0}};
}

}  // namespace

TEST_CASE("grid geometry") {
  const Grid g = Grid::of_level(3);
  CHECK(g.n == 8);
  CHECK(g.h == doctest::Approx(1.0 / 9.0));
  CHECK(g.node(0) == 0.0);
  CHECK(g.node(g.n + 1) == doctest::Approx(1.0));
  CHECK(g.midpoint(1) == doctest::Approx(0.5 * g.h));
  CHECK(g.midpoint(g.n) == doctest::Approx(g.h * (8 - 0.5)));
  CHECK_THROWS_AS(Grid::of_level(0), qtt::Error);
  CHECK_THROWS_AS(Grid::of_level(41), qtt::Error);
}

TEST_CASE("step function validation and lookup") {
  StepFunction s = four_steps();
  CHECK_NOTHROW(s.validate());
  CHECK(s.value_at(0.0) == 1.0);
  CHECK(s.value_at(0.24) == 1.0);
  CHECK(s.value_at(0.25) == 3.0);
  CHECK(s.value_at(0.6) == 0.5);
  CHECK(s.value_at(0.99) == 2.0);
  CHECK(s.min_value() == 0.5);
  CHECK(s.max_value() == 3.0);

  StepFunction bad1{{0.1, 0.5}, {1.0, 2.0}};
  CHECK_THROWS_AS(bad1.validate(), qtt::Error);
  StepFunction bad2{{0.0, 0.5, 0.5}, {1.0, 2.0, 3.0}};
  CHECK_THROWS_AS(bad2.validate(), qtt::Error);
  StepFunction bad3{{0.0, 0.5}, {1.0}};
  CHECK_THROWS_AS(bad3.validate(), qtt::Error);
  StepFunction bad4{{0.0, 1.0}, {1.0, 2.0}};
  CHECK_THROWS_AS(bad4.validate(), qtt::Error);
}

TEST_CASE("coefficient point values and envelopes") {
  const auto sine = CoefficientSpec::sine(2.0, 4.0);
  CHECK(sine.value_at(0.25) == doctest::Approx(2.0 + std::sin(2.0 * kPi)));
  CHECK(sine.value_at(1.0 / 16.0) == doctest::Approx(2.0 + 1.0));
  auto [lo, hi] = sine.envelope();
  CHECK(lo == doctest::Approx(1.0));
  CHECK(hi == doctest::Approx(3.0));

  const auto mod = CoefficientSpec::modulated(3.0, 8.0, four_steps());
  CHECK(mod.value_at(0.6) ==
        doctest::Approx(3.0 + 0.5 * std::sin(2.0 * kPi * 8.0 * 0.6)));
  auto [mlo, mhi] = mod.envelope();
  CHECK(mlo == doctest::Approx(0.0));
  CHECK(mhi == doctest::Approx(6.0));

  const auto ex = CoefficientSpec::exotic(1.5, 2.0, 3);
  CHECK(ex.value_at(0.5) ==
        doctest::Approx(1.5 + std::sin(4.0 * kPi * 0.125)));
  CHECK(ex.envelope().first == doctest::Approx(0.5));

  const auto st = CoefficientSpec::steps(four_steps());
  CHECK(st.value_at(0.3) == 3.0);
  CHECK(st.envelope() == std::pair<double, double>{0.5, 3.0});

  const auto cu = CoefficientSpec::custom({1.0, 2.0, 0.5, 4.0});
  CHECK(cu.envelope() == std::pair<double, double>{0.5, 4.0});
  CHECK_THROWS_AS(cu.value_at(0.5), qtt::Error);
  CHECK_FALSE(cu.analytic());
  CHECK(sine.analytic());
}

TEST_CASE("coefficient sampling matches midpoint evaluation for every class") {
  const Grid g = Grid::of_level(8);
  const Truncation tight{1e-13, 0};

  std::vector<CoefficientSpec> specs;
  specs.push_back(CoefficientSpec::constant(2.5));
  specs.push_back(CoefficientSpec::sine(2.0, 4.0));
  specs.push_back(CoefficientSpec::modulated(3.0, 8.0, four_steps()));
  specs.push_back(CoefficientSpec::exotic(2.0, 2.0, 2));
  specs.push_back(CoefficientSpec::steps(four_steps()));

  for (const auto& s : specs) {
    CAPTURE(int(s.cls));
    const QttVector a = sample_coefficient(s, g, tight);
    const std::vector<double> got = unfold(a);
    const std::vector<double> want = midpoint_values(s, g);
    CHECK(oracle::max_abs_diff(got, want) < 1e-10);
  }
}

TEST_CASE("custom coefficient sampling is exact and checks its input") {
  const Grid g = Grid::of_level(5);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.5, 3.0);
  std::vector<double> v(static_cast<std::size_t>(g.n));
  for (auto& x : v) x = u(rng);

  const QttVector a = sample_coefficient(CoefficientSpec::custom(v), g, {0.0, 0});
  CHECK(oracle::max_abs_diff(unfold(a), v) < 1e-12);

  auto bad = v;
  bad[7] = -0.25;
  CHECK_THROWS_AS(
      sample_coefficient(CoefficientSpec::custom(bad), g, {0.0, 0}), qtt::Error);
  CHECK_THROWS_AS(
      sample_coefficient(CoefficientSpec::custom({1.0, 2.0}), g, {0.0, 0}),
      qtt::Error);
}

TEST_CASE("positivity certification: envelope first, dense scan fallback") {
  const Truncation t{1e-12, 0};
  // envelope certifies directly, large grids stay cheap
  CHECK_NOTHROW(sample_coefficient(CoefficientSpec::sine(1.001, 64.0),
                                   Grid::of_level(20), t));
  // envelope is inconclusive at offset 1 but a scan clears it on small grids
  CHECK_NOTHROW(
      sample_coefficient(CoefficientSpec::sine(1.0, 4.0), Grid::of_level(8), t));
  // inconclusive envelope on a large grid is rejected rather than scanned
  CHECK_THROWS_AS(
      sample_coefficient(CoefficientSpec::sine(1.0, 4.0), Grid::of_level(13), t),
      qtt::Error);
  // genuinely sign-changing coefficients are rejected
  CHECK_THROWS_AS(
      sample_coefficient(CoefficientSpec::sine(0.5, 4.0), Grid::of_level(8), t),
      qtt::Error);
  StepFunction neg{{0.0, 0.5}, {1.0, -1.0}};
  CHECK_THROWS_AS(
      sample_coefficient(CoefficientSpec::steps(neg), Grid::of_level(13), t),
      qtt::Error);
}

TEST_CASE("sampled coefficient ranks stay small for analytic classes") {
  const Grid g = Grid::of_level(14);
  const Truncation t{1e-12, 0};

  const QttVector sine = sample_coefficient(CoefficientSpec::sine(2.0, 64.0), g, t);
  CHECK(sine.max_rank() <= 3);

  const QttVector st =
      sample_coefficient(CoefficientSpec::steps(four_steps()), g, t);
  CHECK(st.max_rank() <= 5);

  const QttVector mod = sample_coefficient(
      CoefficientSpec::modulated(3.5, 64.0, four_steps()), g, t);
  CHECK(mod.max_rank() <= 11);
}

TEST_CASE("dense stiffness assembly matches the element formula") {
  const Grid g = Grid::of_level(5);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  std::vector<double> a(static_cast<std::size_t>(g.n));
  for (auto& x : a) x = u(rng);

  const qtt::DenseTridiag t = qtt::assemble_stiffness_dense(a, g.h);
  const oracle::Tridiag ref = oracle::stiffness(a, g.h);
  CHECK(oracle::max_abs_diff(t.diag, ref.diag) < 1e-12);
  CHECK(oracle::max_abs_diff(t.off, ref.off) < 1e-12);

  // symmetric positive definite
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_matrix(t));
  CHECK(es.eigenvalues().minCoeff() > 0.0);

  std::vector<double> bad = a;
  bad[3] = 0.0;
  CHECK_THROWS_AS(qtt::assemble_stiffness_dense(bad, g.h), qtt::Error);
  CHECK_THROWS_AS(qtt::assemble_stiffness_dense(a, 0.0), qtt::Error);
}

TEST_CASE("tridiagonal apply and solve are mutually consistent") {
  const Grid g = Grid::of_level(6);
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  std::vector<double> a(static_cast<std::size_t>(g.n)), rhs(a.size());
  for (auto& x : a) x = u(rng);
  for (auto& x : rhs) x = u(rng) - 1.2;

  const qtt::DenseTridiag t = qtt::assemble_stiffness_dense(a, g.h);
  const std::vector<double> x = qtt::thomas_solve(t, rhs);
  const std::vector<double> back = qtt::tridiag_apply(t, x);
  CHECK(oracle::max_abs_diff(back, rhs) < 1e-8 * oracle::norm(rhs));

  const std::vector<double> xo = oracle::thomas_solve(oracle::stiffness(a, g.h), rhs);
  CHECK(oracle::max_abs_diff(x, xo) < 1e-10 * oracle::norm(xo));
}

TEST_CASE("train stiffness matches dense assembly entrywise") {
  const Grid g = Grid::of_level(6);
  const auto spec = CoefficientSpec::sine(2.0, 3.0);
  const QttVector a = sample_coefficient(spec, g, {0.0, 0});
  const QttMatrix aq = assemble_stiffness_qtt(a, g.h, {0.0, 0});

  const std::vector<double> as = midpoint_values(spec, g);
  const qtt::DenseTridiag td = qtt::assemble_stiffness_dense(as, g.h);
  const Eigen::MatrixXd want = dense_matrix(td);

  const std::vector<double> flat = unfold_matrix(aq);
  double worst = 0.0;
  for (Index i = 0; i < g.n; ++i)
    for (Index j = 0; j < g.n; ++j)
      worst = std::max(worst,
                       std::abs(flat[static_cast<std::size_t>(i * g.n + j)] -
                                want(i, j)));
  CHECK(worst < 1e-9 * want.norm());
}

TEST_CASE("train stiffness is symmetric and acts like the dense operator") {
  const Grid g = Grid::of_level(6);
  const QttVector a =
      sample_coefficient(CoefficientSpec::modulated(3.0, 4.0, four_steps()), g,
                         {0.0, 0});
  const QttMatrix aq = assemble_stiffness_qtt(a, g.h, {1e-13, 0});

  const QttMatrix skew = add(aq, scale(transpose(aq), -1.0));
  CHECK(norm2(skew) < 1e-9 * norm2(aq));

  std::mt19937_64 rng(55);
  const std::vector<double> xs = oracle::structured_random(g.level, rng, 5);
  const QttVector x = qtt::fold(xs, {0.0, 0});
  const QttVector ax = matvec(aq, x, {0.0, 0});

  const qtt::DenseTridiag td = qtt::assemble_stiffness_dense(unfold(a), g.h);
  const std::vector<double> want = qtt::tridiag_apply(td, xs);
  CHECK(oracle::max_abs_diff(unfold(ax), want) < 1e-8 * oracle::norm(want));
}

TEST_CASE("stiffness ranks stay within seven times the coefficient ranks") {
  const Grid g = Grid::of_level(16);
  const Truncation t{1e-12, 0};

  struct Case {
    CoefficientSpec spec;
    const char* name;
  };
  std::vector<Case> cases;
  cases.push_back({CoefficientSpec::sine(2.0, 64.0), "sine"});
  cases.push_back({CoefficientSpec::steps(four_steps()), "steps"});
  cases.push_back({CoefficientSpec::modulated(3.5, 64.0, four_steps()), "mod"});

  for (const auto& c : cases) {
    CAPTURE(c.name);
    const QttVector a = sample_coefficient(c.spec, g, t);
    const QttMatrix aq = assemble_stiffness_qtt(a, g.h, t);
    CHECK(aq.max_rank() <= 7 * a.max_rank());
  }
}

TEST_CASE("load assembly: constant load fills h times the value") {
  const Grid g = Grid::of_level(7);
  const QttVector b = assemble_load(LoadSpec::constant(-2.5), g, {0.0, 0});
  const std::vector<double> got = unfold(b);
  for (double v : got) CHECK(v == doctest::Approx(-2.5 * g.h).epsilon(1e-12));
}

TEST_CASE("load assembly matches hat-function quadrature") {
  const Grid g = Grid::of_level(5);
  const Truncation t{0.0, 0};

  struct Case {
    LoadSpec spec;
    std::function<double(double)> f;
    const char* name;
  };
  std::vector<Case> cases;
  cases.push_back({LoadSpec::polynomial({1.0, -2.0, 3.0, 0.5}),
                   [](double x) { return 1.0 - 2.0 * x + 3.0 * x * x + 0.5 * x * x * x; },
                   "cubic"});
  cases.push_back({LoadSpec::sine(2.0, 6.0 * kPi),
                   [](double x) { return 2.0 * std::sin(6.0 * kPi * x); },
                   "sine"});
  cases.push_back({LoadSpec::constant(1.5), [](double) { return 1.5; }, "const"});

  for (const auto& c : cases) {
    CAPTURE(c.name);
    const QttVector b = assemble_load(c.spec, g, t);
    const std::vector<double> got = unfold(b);
    double worst = 0.0;
    for (Index i = 1; i <= g.n; ++i)
      worst = std::max(
          worst, std::abs(got[static_cast<std::size_t>(i - 1)] -
                          hat_moment(c.f, g, i)));
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("load assembly: custom samples are scaled by h") {
  const Grid g = Grid::of_level(4);
  std::vector<double> s(static_cast<std::size_t>(g.n));
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::cos(double(i));
  const QttVector b = assemble_load(LoadSpec::custom(s), g, {0.0, 0});
  const std::vector<double> got = unfold(b);
  for (std::size_t i = 0; i < s.size(); ++i)
    CHECK(got[i] == doctest::Approx(g.h * s[i]).epsilon(1e-12));
  CHECK_THROWS_AS(assemble_load(LoadSpec::custom({1.0}), g, {0.0, 0}), qtt::Error);
}

TEST_CASE("sine load keeps rank two on large grids") {
  const Grid g = Grid::of_level(14);
  const QttVector b =
      assemble_load(LoadSpec::sine(1.0, 2.0 * kPi * 64.0), g, {1e-13, 0});
  CHECK(b.max_rank() <= 2);
}

TEST_CASE("load helper functions agree with quadrature") {
  const LoadSpec p = LoadSpec::polynomial({0.5, 1.0, -4.0});
  auto pf = [&](double x) { return p.value_at(x); };
  const LoadSpec s = LoadSpec::sine(1.5, 5.0);
  auto sf = [&](double x) { return s.value_at(x); };

  CHECK(p.antiderivative_at(0.37) ==
        doctest::Approx(simpson(pf, 0.0, 0.37, 200)).epsilon(1e-10));
  CHECK(s.antiderivative_at(0.81) ==
        doctest::Approx(simpson(sf, 0.0, 0.81, 400)).epsilon(1e-10));

  auto pg = [&](double x) { return p.antiderivative_at(x); };
  auto sg = [&](double x) { return s.antiderivative_at(x); };
  CHECK(p.g_integral() == doctest::Approx(simpson(pg, 0.0, 1.0, 400)).epsilon(1e-10));
  CHECK(s.g_integral() == doctest::Approx(simpson(sg, 0.0, 1.0, 400)).epsilon(1e-10));

  auto p2 = [&](double x) { return pf(x) * pf(x); };
  auto s2 = [&](double x) { return sf(x) * sf(x); };
  CHECK(p.l2_norm() ==
        doctest::Approx(std::sqrt(simpson(p2, 0.0, 1.0, 400))).epsilon(1e-10));
  CHECK(s.l2_norm() ==
        doctest::Approx(std::sqrt(simpson(s2, 0.0, 1.0, 400))).epsilon(1e-10));
  CHECK(LoadSpec::constant(2.0).l2_norm() == doctest::Approx(2.0));
}

TEST_CASE("constant-coefficient inverse preconditioner equals the dense inverse") {
  const Grid g = Grid::of_level(6);
  const double a0 = 1.7;
  const QttMatrix ginv = qtt::inverse_preconditioner_qtt(a0, g, {0.0, 0});

  std::vector<double> as(static_cast<std::size_t>(g.n), a0);
  const Eigen::MatrixXd a = dense_matrix(qtt::assemble_stiffness_dense(as, g.h));
  const Eigen::MatrixXd want = a.inverse();

  const std::vector<double> flat = unfold_matrix(ginv);
  double worst = 0.0;
  for (Index i = 0; i < g.n; ++i)
    for (Index j = 0; j < g.n; ++j)
      worst = std::max(worst,
                       std::abs(flat[static_cast<std::size_t>(i * g.n + j)] -
                                want(i, j)));
  CHECK(worst < 1e-10 * want.norm());
  CHECK_THROWS_AS(qtt::inverse_preconditioner_qtt(0.0, g, Truncation{0.0, 0}),
                  qtt::Error);
}

TEST_CASE("inverse preconditioner ranks stay small on large grids") {
  const Grid g = Grid::of_level(12);
  const QttMatrix ginv = qtt::inverse_preconditioner_qtt(2.0, g, {1e-10, 0});
  CHECK(ginv.max_rank() <= 6);

  // spot-check symmetry entrywise; a norm of the difference train would sit
  // on the cancellation noise floor of the dot product
  std::mt19937_64 rng(91);
  std::uniform_int_distribution<Index> pick(1, g.n);
  double scale_seen = 0.0, worst = 0.0;
  for (int k = 0; k < 64; ++k) {
    const Index i = pick(rng), j = pick(rng);
    const double gij = ginv.entry(i, j), gji = ginv.entry(j, i);
    scale_seen = std::max({scale_seen, std::abs(gij), std::abs(gji)});
    worst = std::max(worst, std::abs(gij - gji));
  }
  CHECK(worst < 1e-9 * scale_seen);
}

TEST_CASE("piecewise-constant inverse preconditioner equals the dense inverse") {
  const Grid g = Grid::of_level(6);
  const StepFunction a0 = four_steps();
  const QttMatrix ginv = qtt::inverse_preconditioner_qtt(a0, g, {0.0, 0});

  const std::vector<double> as =
      unfold(sample_coefficient(CoefficientSpec::steps(a0), g, {0.0, 0}));
  const Eigen::MatrixXd a = dense_matrix(qtt::assemble_stiffness_dense(as, g.h));
  const Eigen::MatrixXd want = a.inverse();

  const std::vector<double> flat = unfold_matrix(ginv);
  double worst = 0.0;
  for (Index i = 0; i < g.n; ++i)
    for (Index j = 0; j < g.n; ++j)
      worst = std::max(worst,
                       std::abs(flat[static_cast<std::size_t>(i * g.n + j)] -
                                want(i, j)));
  CHECK(worst < 1e-9 * want.norm());
}

TEST_CASE("single-plateau step preconditioner matches the scalar one") {
  const Grid g = Grid::of_level(7);
  const StepFunction flat{{0.0}, {1.3}};
  const QttMatrix a = qtt::inverse_preconditioner_qtt(flat, g, {0.0, 0});
  const QttMatrix b = qtt::inverse_preconditioner_qtt(1.3, g, {0.0, 0});
  std::mt19937_64 rng(18);
  std::uniform_int_distribution<Index> pick(1, g.n);
  double scale_seen = 0.0, worst = 0.0;
  for (int k = 0; k < 128; ++k) {
    const Index i = pick(rng), j = pick(rng);
    scale_seen = std::max(scale_seen, std::abs(b.entry(i, j)));
    worst = std::max(worst, std::abs(a.entry(i, j) - b.entry(i, j)));
  }
  CHECK(worst < 1e-11 * scale_seen);
}

TEST_CASE("inverse preconditioner composed with its operator gives identity") {
  const Grid g = Grid::of_level(8);
  const StepFunction a0{{0.0, 0.5}, {1.0, 4.0}};
  const QttMatrix ginv = qtt::inverse_preconditioner_qtt(a0, g, {1e-13, 0});
  const QttVector a = sample_coefficient(CoefficientSpec::steps(a0), g, {0.0, 0});
  const QttMatrix aq = assemble_stiffness_qtt(a, g.h, {0.0, 0});

  const QttMatrix prod = matmul(ginv, aq, {1e-12, 0});
  const QttMatrix err = add(prod, scale(QttMatrix::identity(g.level), -1.0));
  CHECK(norm2(err) < 1e-7 * std::sqrt(double(g.n)));
}
