#include "qtt/tt.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace qtt {

namespace {

constexpr double kEpsFloor = 32.0 * std::numeric_limits<double>::epsilon();

using Mat = Eigen::MatrixXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

int g_guard_depth = 0;
Index g_guard_threshold = 0;

// r_left x (mode*r_right) view; shares the core's row-major buffer
Eigen::Map<const RowMat> right_unfold(const Core& c) {
  return {c.a.data(), c.r_left, c.mode * c.r_right};
}
// (r_left*mode) x r_right view
Eigen::Map<const RowMat> left_unfold(const Core& c) {
  return {c.a.data(), c.r_left * c.mode, c.r_right};
}

Mat slice(const Core& c, Index j) {
  Mat s(c.r_left, c.r_right);
  for (Index a = 0; a < c.r_left; ++a)
    for (Index b = 0; b < c.r_right; ++b) s(a, b) = c.at(a, j, b);
  return s;
}

void validate(const std::vector<Core>& cores, Index mode, const char* what) {
  if (cores.empty()) throw Error(std::string(what) + ": empty core list");
  Index bond = 1;
  for (const Core& c : cores) {
    if (c.mode != mode) throw Error(std::string(what) + ": wrong mode size");
    if (c.r_left != bond) throw Error(std::string(what) + ": bond mismatch");
    if (c.r_left < 1 || c.r_right < 1)
      throw Error(std::string(what) + ": nonpositive rank");
    if (c.a.size() != static_cast<std::size_t>(c.r_left * c.mode * c.r_right))
      throw Error(std::string(what) + ": core buffer size mismatch");
    bond = c.r_right;
  }
  if (bond != 1) throw Error(std::string(what) + ": last rank must be 1");
}

std::vector<Index> profile(const std::vector<Core>& cores) {
  std::vector<Index> r;
  r.push_back(1);
  for (const Core& c : cores) r.push_back(c.r_right);
  return r;
}

double avg_rank(const std::vector<Core>& cores) {
  if (cores.size() <= 1) return 1.0;
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < cores.size(); ++k) s += double(cores[k].r_right);
  return s / double(cores.size() - 1);
}

// After this sweep cores[1..] are right-orthogonal and the train value is
// unchanged; the full 2-norm equals the Frobenius norm of cores[0].
void orthogonalize_rl(std::vector<Core>& cores) {
  for (int k = static_cast<int>(cores.size()) - 1; k >= 1; --k) {
    Core& c = cores[k];
    Mat mt = right_unfold(c).transpose();  // (mode*r_right) x r_left
    Index rnew = std::min<Index>(c.r_left, c.mode * c.r_right);
    Eigen::HouseholderQR<Mat> qr(mt);
    Mat q = qr.householderQ() * Mat::Identity(mt.rows(), rnew);
    Mat rfac = qr.matrixQR().topRows(rnew).triangularView<Eigen::Upper>();
    Core nc(rnew, c.mode, c.r_right);
    for (Index s = 0; s < rnew; ++s)
      for (Index j = 0; j < c.mode; ++j)
        for (Index b = 0; b < c.r_right; ++b) nc.at(s, j, b) = q(j * c.r_right + b, s);
    Core& p = cores[k - 1];
    Core np(p.r_left, p.mode, rnew);
    Eigen::Map<RowMat>(np.a.data(), p.r_left * p.mode, rnew) =
        left_unfold(p) * rfac.transpose();
    cores[k] = std::move(nc);
    cores[k - 1] = std::move(np);
  }
}

Index pick_rank(const Eigen::VectorXd& sigma, double tau, Index max_rank) {
  const Index n = sigma.size();
  double tau_eff = tau;
  if (n > 0) tau_eff = std::max(tau_eff, kEpsFloor * sigma(0));
  const double budget = tau_eff * tau_eff;
  Index r = n;
  double tail = 0.0;
  while (r > 1) {
    const double s = sigma(r - 1);
    if (tail + s * s > budget) break;
    tail += s * s;
    --r;
  }
  if (max_rank > 0) r = std::min(r, max_rank);
  return std::max<Index>(r, 1);
}

// Left-to-right truncation sweep; expects a right-orthogonal train.
void truncate_lr(std::vector<Core>& cores, double tau, Index max_rank) {
  for (std::size_t k = 0; k + 1 < cores.size(); ++k) {
    Core& c = cores[k];
    Eigen::BDCSVD<Mat> svd(Mat(left_unfold(c)),
                           Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Index r = pick_rank(svd.singularValues(), tau, max_rank);
    Core nc(c.r_left, c.mode, r);
    Eigen::Map<RowMat>(nc.a.data(), c.r_left * c.mode, r) = svd.matrixU().leftCols(r);
    Mat carry = svd.singularValues().head(r).asDiagonal() *
                svd.matrixV().leftCols(r).transpose();  // r x r_right
    Core& nx = cores[k + 1];
    Core nn(r, nx.mode, nx.r_right);
    Eigen::Map<RowMat>(nn.a.data(), r, nx.mode * nx.r_right) =
        carry * right_unfold(nx);
    cores[k] = std::move(nc);
    cores[k + 1] = std::move(nn);
  }
}

std::vector<Core> round_cores(std::vector<Core> cores, const Truncation& tol) {
  if (cores.size() == 1) return cores;
  orthogonalize_rl(cores);
  double nrm = 0.0;
  for (double v : cores[0].a) nrm += v * v;
  nrm = std::sqrt(nrm);
  double tau = 0.0;
  if (tol.delta > 0.0)
    tau = tol.delta * nrm / double(cores.size() - 1);
  truncate_lr(cores, tau, tol.max_rank);
  return cores;
}

std::vector<Core> tt_svd(std::span<const double> data, int level, Index mode,
                         const Truncation& tol) {
  Index n = 1;
  for (int k = 0; k < level; ++k) n *= mode;
  if (static_cast<Index>(data.size()) != n)
    throw Error("fold: input length is not mode^level");
  detail::check_dense(n, "fold");

  std::vector<Core> cores;
  if (level == 1) {
    Core c(1, mode, 1);
    std::copy(data.begin(), data.end(), c.a.begin());
    cores.push_back(std::move(c));
    return cores;
  }

  double nrm = 0.0;
  for (double v : data) nrm += v * v;
  nrm = std::sqrt(nrm);
  const double tau =
      tol.delta > 0.0 ? tol.delta * nrm / double(level - 1) : 0.0;

  Mat cur = Eigen::Map<const Mat>(data.data(), mode, n / mode);
  Index r_prev = 1;
  for (int k = 1; k < level; ++k) {
    Eigen::BDCSVD<Mat> svd(cur, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Index r = pick_rank(svd.singularValues(), tau, tol.max_rank);
    Core c(r_prev, mode, r);
    const Mat& u = svd.matrixU();
    for (Index a = 0; a < r_prev; ++a)
      for (Index j = 0; j < mode; ++j)
        for (Index b = 0; b < r; ++b) c.at(a, j, b) = u(a + r_prev * j, b);
    cores.push_back(std::move(c));
    Mat carry = svd.singularValues().head(r).asDiagonal() *
                svd.matrixV().leftCols(r).transpose();  // r x cols
    if (k == level - 1) {
      Core last(r, mode, 1);
      for (Index a = 0; a < r; ++a)
        for (Index j = 0; j < mode; ++j) last.at(a, j, 0) = carry(a, j);
      cores.push_back(std::move(last));
    } else {
      cur = Eigen::Map<const Mat>(carry.data(), r * mode, carry.cols() / mode);
    }
    r_prev = r;
  }
  return cores;
}

std::vector<Core> add_cores(const std::vector<Core>& x, const std::vector<Core>& y,
                            const char* what) {
  if (x.size() != y.size()) throw Error(std::string(what) + ": level mismatch");
  const std::size_t lvl = x.size();
  std::vector<Core> z;
  if (lvl == 1) {
    Core c(1, x[0].mode, 1);
    for (std::size_t t = 0; t < c.a.size(); ++t) c.a[t] = x[0].a[t] + y[0].a[t];
    z.push_back(std::move(c));
    return z;
  }
  for (std::size_t k = 0; k < lvl; ++k) {
    const Core& a = x[k];
    const Core& b = y[k];
    const bool first = (k == 0), last = (k + 1 == lvl);
    const Index rl = first ? 1 : a.r_left + b.r_left;
    const Index rr = last ? 1 : a.r_right + b.r_right;
    Core c(rl, a.mode, rr);
    for (Index i = 0; i < a.r_left; ++i)
      for (Index j = 0; j < a.mode; ++j)
        for (Index t = 0; t < a.r_right; ++t) c.at(i, j, t) += a.at(i, j, t);
    const Index oi = first ? 0 : a.r_left;
    const Index ot = last ? 0 : a.r_right;
    for (Index i = 0; i < b.r_left; ++i)
      for (Index j = 0; j < b.mode; ++j)
        for (Index t = 0; t < b.r_right; ++t) c.at(oi + i, j, ot + t) += b.at(i, j, t);
    z.push_back(std::move(c));
  }
  return z;
}

std::vector<Core> hadamard_cores(const std::vector<Core>& x,
                                 const std::vector<Core>& y, const char* what) {
  if (x.size() != y.size()) throw Error(std::string(what) + ": level mismatch");
  std::vector<Core> z;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const Core& a = x[k];
    const Core& b = y[k];
    Core c(a.r_left * b.r_left, a.mode, a.r_right * b.r_right);
    for (Index i1 = 0; i1 < a.r_left; ++i1)
      for (Index i2 = 0; i2 < b.r_left; ++i2)
        for (Index j = 0; j < a.mode; ++j)
          for (Index t1 = 0; t1 < a.r_right; ++t1)
            for (Index t2 = 0; t2 < b.r_right; ++t2)
              c.at(i1 * b.r_left + i2, j, t1 * b.r_right + t2) =
                  a.at(i1, j, t1) * b.at(i2, j, t2);
    z.push_back(std::move(c));
  }
  return z;
}

double dot_cores(const std::vector<Core>& x, const std::vector<Core>& y,
                 const char* what) {
  if (x.size() != y.size()) throw Error(std::string(what) + ": level mismatch");
  Mat c = Mat::Ones(1, 1);
  for (std::size_t k = 0; k < x.size(); ++k) {
    Mat n = Mat::Zero(x[k].r_right, y[k].r_right);
    for (Index j = 0; j < x[k].mode; ++j)
      n += slice(x[k], j).transpose() * c * slice(y[k], j);
    c = std::move(n);
  }
  return c(0, 0);
}

double scalar_entry(const std::vector<Core>& cores, Index combined) {
  Eigen::RowVectorXd v = Eigen::RowVectorXd::Ones(1);
  Index rem = combined;
  for (const Core& c : cores) {
    const Index j = rem % c.mode;
    rem /= c.mode;
    v = v * slice(c, j);
  }
  return v(0);
}

}  // namespace

namespace detail {
void check_dense(Index n, const char* what) {
  if (g_guard_depth > 0 && n > g_guard_threshold)
    throw Error(std::string(what) + ": dense buffer of length " +
                std::to_string(n) + " blocked by DenseGuard");
}
}  // namespace detail

DenseGuard::DenseGuard(Index max_len) {
  if (g_guard_depth == 0 || max_len < g_guard_threshold)
    g_guard_threshold = max_len;
  ++g_guard_depth;
}
DenseGuard::~DenseGuard() { --g_guard_depth; }
bool DenseGuard::active() { return g_guard_depth > 0; }

QttVector::QttVector(std::vector<Core> cores) : cores_(std::move(cores)) {
  validate(cores_, 2, "QttVector");
}
QttMatrix::QttMatrix(std::vector<Core> cores) : cores_(std::move(cores)) {
  validate(cores_, 4, "QttMatrix");
}

std::vector<Index> QttVector::rank_profile() const { return profile(cores_); }
std::vector<Index> QttMatrix::rank_profile() const { return profile(cores_); }

Index QttVector::max_rank() const {
  Index m = 1;
  for (const Core& c : cores_) m = std::max(m, c.r_right);
  return m;
}
Index QttMatrix::max_rank() const {
  Index m = 1;
  for (const Core& c : cores_) m = std::max(m, c.r_right);
  return m;
}

double QttVector::entry(Index i) const {
  if (i < 1 || i > size()) throw Error("entry: index out of range");
  return scalar_entry(cores_, i - 1);
}

double QttMatrix::entry(Index i, Index j) const {
  if (i < 1 || i > size() || j < 1 || j > size())
    throw Error("entry: index out of range");
  Index combined = 0, p = 1;
  Index z = i - 1, w = j - 1;
  for (int k = 0; k < level(); ++k) {
    combined += ((z & 1) + 2 * (w & 1)) * p;
    z >>= 1;
    w >>= 1;
    p *= 4;
  }
  return scalar_entry(cores_, combined);
}

QttVector fold(std::span<const double> dense, const Truncation& tol) {
  const Index n = static_cast<Index>(dense.size());
  if (n < 2 || (n & (n - 1)) != 0) throw Error("fold: length must be 2^L, L >= 1");
  int level = 0;
  for (Index m = n; m > 1; m >>= 1) ++level;
  return QttVector(tt_svd(dense, level, 2, tol));
}

QttMatrix fold_matrix(std::span<const double> dense, const Truncation& tol) {
  const Index nn = static_cast<Index>(dense.size());
  Index n = static_cast<Index>(std::llround(std::sqrt(double(nn))));
  if (n * n != nn || n < 2 || (n & (n - 1)) != 0)
    throw Error("fold_matrix: input must be a square 2^L x 2^L matrix");
  int level = 0;
  for (Index m = n; m > 1; m >>= 1) ++level;
  detail::check_dense(nn, "fold_matrix");
  // interleave row/column bits into base-4 digits
  std::vector<Index> spread(n);
  for (Index z = 0; z < n; ++z) {
    Index s = 0, p = 1;
    for (Index b = z; b != 0; b >>= 1) {
      s += (b & 1) * p;
      p *= 4;
    }
    spread[z] = s;
  }
  std::vector<double> perm(nn);
  for (Index z = 0; z < n; ++z)
    for (Index w = 0; w < n; ++w)
      perm[spread[z] + 2 * spread[w]] = dense[z * n + w];
  return QttMatrix(tt_svd(perm, level, 4, tol));
}

std::vector<double> unfold(const QttVector& x, int guard_level) {
  if (x.empty()) throw Error("unfold: empty train");
  if (x.level() > guard_level)
    throw Error("unfold: level " + std::to_string(x.level()) +
                " exceeds guard level " + std::to_string(guard_level));
  detail::check_dense(x.size(), "unfold");
  Mat acc = Mat::Ones(1, 1);
  Index len = 1;
  for (const Core& c : x.cores()) {
    Mat nxt = Mat::Zero(len * 2, c.r_right);
    for (Index j = 0; j < 2; ++j) nxt.block(j * len, 0, len, c.r_right) = acc * slice(c, j);
    acc = std::move(nxt);
    len *= 2;
  }
  return {acc.data(), acc.data() + len};
}

std::vector<double> unfold_matrix(const QttMatrix& a, int guard_level) {
  if (a.empty()) throw Error("unfold_matrix: empty train");
  if (a.level() > guard_level)
    throw Error("unfold_matrix: level " + std::to_string(a.level()) +
                " exceeds guard level " + std::to_string(guard_level));
  const Index n = a.size();
  detail::check_dense(n * n, "unfold_matrix");
  Mat acc = Mat::Ones(1, 1);
  Index len = 1;
  for (const Core& c : a.cores()) {
    Mat nxt = Mat::Zero(len * len * 4, c.r_right);
    for (Index d = 0; d < 4; ++d) {
      const Index j = d & 1, jp = d >> 1;
      const Mat sd = slice(c, d);
      for (Index zc = 0; zc < len; ++zc)
        nxt.block(j * len + 2 * len * zc + 2 * len * len * jp, 0, len, c.r_right) +=
            acc.block(len * zc, 0, len, c.r_left) * sd;
    }
    acc = std::move(nxt);
    len *= 2;
  }
  std::vector<double> out(static_cast<std::size_t>(n) * n);
  for (Index z = 0; z < n; ++z)
    for (Index w = 0; w < n; ++w) out[z * n + w] = acc(z + n * w, 0);
  return out;
}

QttVector round(const QttVector& x, const Truncation& tol) {
  if (x.empty()) throw Error("round: empty train");
  return QttVector(round_cores(x.cores(), tol));
}
QttMatrix round(const QttMatrix& a, const Truncation& tol) {
  if (a.empty()) throw Error("round: empty train");
  return QttMatrix(round_cores(a.cores(), tol));
}

QttVector add(const QttVector& x, const QttVector& y) {
  return QttVector(add_cores(x.cores(), y.cores(), "add"));
}
QttMatrix add(const QttMatrix& a, const QttMatrix& b) {
  return QttMatrix(add_cores(a.cores(), b.cores(), "add"));
}

QttVector scale(const QttVector& x, double alpha) {
  std::vector<Core> c = x.cores();
  for (double& v : c[0].a) v *= alpha;
  return QttVector(std::move(c));
}
QttMatrix scale(const QttMatrix& a, double alpha) {
  std::vector<Core> c = a.cores();
  for (double& v : c[0].a) v *= alpha;
  return QttMatrix(std::move(c));
}

QttVector hadamard(const QttVector& x, const QttVector& y) {
  return QttVector(hadamard_cores(x.cores(), y.cores(), "hadamard"));
}
QttMatrix hadamard(const QttMatrix& a, const QttMatrix& b) {
  return QttMatrix(hadamard_cores(a.cores(), b.cores(), "hadamard"));
}

double dot(const QttVector& x, const QttVector& y) {
  return dot_cores(x.cores(), y.cores(), "dot");
}

double norm2(const QttVector& x) {
  return std::sqrt(std::max(0.0, dot_cores(x.cores(), x.cores(), "norm2")));
}
double norm2(const QttMatrix& a) {
  return std::sqrt(std::max(0.0, dot_cores(a.cores(), a.cores(), "norm2")));
}

QttVector matvec(const QttMatrix& a, const QttVector& x, const Truncation& tol) {
  if (a.level() != x.level()) throw Error("matvec: level mismatch");
  std::vector<Core> z;
  for (int k = 0; k < a.level(); ++k) {
    const Core& ca = a.cores()[k];
    const Core& cx = x.cores()[k];
    Core c(ca.r_left * cx.r_left, 2, ca.r_right * cx.r_right);
    for (Index aa = 0; aa < ca.r_left; ++aa)
      for (Index i = 0; i < 2; ++i)
        for (Index ip = 0; ip < 2; ++ip)
          for (Index ba = 0; ba < ca.r_right; ++ba) {
            const double w = ca.at(aa, i + 2 * ip, ba);
            if (w == 0.0) continue;
            for (Index ax = 0; ax < cx.r_left; ++ax)
              for (Index bx = 0; bx < cx.r_right; ++bx)
                c.at(aa * cx.r_left + ax, i, ba * cx.r_right + bx) +=
                    w * cx.at(ax, ip, bx);
          }
    z.push_back(std::move(c));
  }
  return QttVector(round_cores(std::move(z), tol));
}

QttMatrix matmul(const QttMatrix& a, const QttMatrix& b, const Truncation& tol) {
  if (a.level() != b.level()) throw Error("matmul: level mismatch");
  std::vector<Core> z;
  for (int k = 0; k < a.level(); ++k) {
    const Core& ca = a.cores()[k];
    const Core& cb = b.cores()[k];
    Core c(ca.r_left * cb.r_left, 4, ca.r_right * cb.r_right);
    for (Index aa = 0; aa < ca.r_left; ++aa)
      for (Index i = 0; i < 2; ++i)
        for (Index t = 0; t < 2; ++t)
          for (Index ba = 0; ba < ca.r_right; ++ba) {
            const double w = ca.at(aa, i + 2 * t, ba);
            if (w == 0.0) continue;
            for (Index ab = 0; ab < cb.r_left; ++ab)
              for (Index j = 0; j < 2; ++j)
                for (Index bb = 0; bb < cb.r_right; ++bb)
                  c.at(aa * cb.r_left + ab, i + 2 * j, ba * cb.r_right + bb) +=
                      w * cb.at(ab, t + 2 * j, bb);
          }
    z.push_back(std::move(c));
  }
  return QttMatrix(round_cores(std::move(z), tol));
}

QttMatrix transpose(const QttMatrix& a) {
  std::vector<Core> z;
  for (const Core& c : a.cores()) {
    Core t(c.r_left, 4, c.r_right);
    for (Index i = 0; i < c.r_left; ++i)
      for (Index j = 0; j < 2; ++j)
        for (Index jp = 0; jp < 2; ++jp)
          for (Index b = 0; b < c.r_right; ++b)
            t.at(i, j + 2 * jp, b) = c.at(i, jp + 2 * j, b);
    z.push_back(std::move(t));
  }
  return QttMatrix(std::move(z));
}

QttMatrix diag(const QttVector& x) {
  std::vector<Core> z;
  for (const Core& c : x.cores()) {
    Core d(c.r_left, 4, c.r_right);
    for (Index i = 0; i < c.r_left; ++i)
      for (Index j = 0; j < 2; ++j)
        for (Index b = 0; b < c.r_right; ++b) d.at(i, j + 2 * j, b) = c.at(i, j, b);
    z.push_back(std::move(d));
  }
  return QttMatrix(std::move(z));
}

double average_rank(const QttVector& x) { return avg_rank(x.cores()); }
double average_rank(const QttMatrix& a) { return avg_rank(a.cores()); }

QttVector reciprocal(const QttVector& a, double lo, double hi,
                     const Truncation& tol, double target_residual) {
  if (!(lo > 0.0) || !(hi >= lo))
    throw Error("reciprocal: need 0 < lo <= hi entry bounds");
  const int level = a.level();
  const QttVector ones = QttVector::constant(level, 1.0);
  const double ones_norm = std::sqrt(double(a.size()));
  QttVector x = QttVector::constant(level, 2.0 / (lo + hi));
  double res = 1.0;
  for (int it = 0; it < 100; ++it) {
    QttVector ax = round(hadamard(a, x), {std::max(1e-15, res * res * 0.01), 0});
    res = norm2(add(ones, scale(ax, -1.0))) / ones_norm;
    if (res <= target_residual) break;
    const double inner = std::clamp(res * res * 0.1, 1e-15, 1e-2);
    x = round(hadamard(x, add(scale(ones, 2.0), scale(ax, -1.0))), {inner, 0});
    if (it == 99)
      throw Error("reciprocal: Newton iteration failed to reach the target");
  }
  return round(x, tol);
}

}  // namespace qtt
