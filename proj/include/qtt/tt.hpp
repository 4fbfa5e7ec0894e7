#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

// Quantized tensor-train (QTT) representation of length-2^L vectors and
// 2^L x 2^L matrices.  Grid indices are 1-based; index i maps to the bit
// string of i-1 with bit 1 the least significant (stored in the first core).
// Matrix cores carry a combined physical index d = row_bit + 2*col_bit.

namespace qtt {

using Index = std::int64_t;

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Scoped ban on dense length-2^L work (fold/unfold/dense sampling).  While a
// guard is alive, any dense buffer request above its threshold throws.
class DenseGuard {
 public:
  explicit DenseGuard(Index max_len = Index(1) << 12);
  ~DenseGuard();
  DenseGuard(const DenseGuard&) = delete;
  DenseGuard& operator=(const DenseGuard&) = delete;
  static bool active();
};

namespace detail {
void check_dense(Index n, const char* what);  // throws under an active guard
}

struct Truncation {
  double delta = 0.0;   // relative 2-norm budget; 0 keeps values to roundoff
  Index max_rank = 0;   // 0 = uncapped
};

// One TT core, r_left x mode x r_right, laid out row-major.
struct Core {
  Index r_left = 1;
  Index mode = 2;
  Index r_right = 1;
  std::vector<double> a;

  Core() = default;
  Core(Index rl, Index m, Index rr)
      : r_left(rl), mode(m), r_right(rr),
        a(static_cast<std::size_t>(rl * m * rr), 0.0) {}

  double& at(Index i, Index j, Index k) {
    return a[static_cast<std::size_t>((i * mode + j) * r_right + k)];
  }
  double at(Index i, Index j, Index k) const {
    return a[static_cast<std::size_t>((i * mode + j) * r_right + k)];
  }
};

class QttVector {
 public:
  QttVector() = default;
  explicit QttVector(std::vector<Core> cores);

  bool empty() const { return cores_.empty(); }
  int level() const { return static_cast<int>(cores_.size()); }
  Index size() const { return Index(1) << level(); }
  const std::vector<Core>& cores() const { return cores_; }
  std::vector<Core>& cores() { return cores_; }

  std::vector<Index> rank_profile() const;  // r_0..r_L
  Index max_rank() const;
  double entry(Index i) const;  // 1-based, O(L r^2)

  static QttVector zeros(int level);
  static QttVector constant(int level, double value);
  static QttVector unit(int level, Index i);  // e_i, 1-based
  // alpha + beta*i over i = 1..2^L
  static QttVector affine(int level, double alpha, double beta);
  // amp * sin(phase + step*i) over i = 1..2^L
  static QttVector sinusoid(int level, double amp, double step, double phase);
  // sum_k coeffs[k] * i^k
  static QttVector polynomial_in_index(int level, std::span<const double> coeffs);
  // 1 if i <= c else 0
  static QttVector indicator_leq(int level, Index c);

 private:
  std::vector<Core> cores_;
};

class QttMatrix {
 public:
  QttMatrix() = default;
  explicit QttMatrix(std::vector<Core> cores);

  bool empty() const { return cores_.empty(); }
  int level() const { return static_cast<int>(cores_.size()); }
  Index size() const { return Index(1) << level(); }  // rows == cols
  const std::vector<Core>& cores() const { return cores_; }
  std::vector<Core>& cores() { return cores_; }

  std::vector<Index> rank_profile() const;
  Index max_rank() const;
  double entry(Index i, Index j) const;  // 1-based

  static QttMatrix identity(int level);
  // superdiagonal ones: S[i][i+1] = 1
  static QttMatrix shift(int level);
  // mask [i <= j] (strict: [i < j])
  static QttMatrix upper_triangular_ones(int level, bool strict = false);
  static QttMatrix outer(const QttVector& u, const QttVector& v);  // u v^T

 private:
  std::vector<Core> cores_;
};

// --- dense conversion -------------------------------------------------------

QttVector fold(std::span<const double> dense, const Truncation& tol);
QttMatrix fold_matrix(std::span<const double> dense_row_major, const Truncation& tol);
// guard_level limits the dense size that may be materialized
std::vector<double> unfold(const QttVector& x, int guard_level = 24);
// row-major 2^L x 2^L; matrices get a tighter default guard
std::vector<double> unfold_matrix(const QttMatrix& a, int guard_level = 12);

// --- rounding ---------------------------------------------------------------

QttVector round(const QttVector& x, const Truncation& tol);
QttMatrix round(const QttMatrix& a, const Truncation& tol);

// --- arithmetic -------------------------------------------------------------

QttVector add(const QttVector& x, const QttVector& y);
QttVector scale(const QttVector& x, double alpha);
QttVector hadamard(const QttVector& x, const QttVector& y);
double dot(const QttVector& x, const QttVector& y);
double norm2(const QttVector& x);

QttMatrix add(const QttMatrix& a, const QttMatrix& b);
QttMatrix scale(const QttMatrix& a, double alpha);
QttMatrix hadamard(const QttMatrix& a, const QttMatrix& b);
double norm2(const QttMatrix& a);  // Frobenius

QttVector matvec(const QttMatrix& a, const QttVector& x, const Truncation& tol);
QttMatrix matmul(const QttMatrix& a, const QttMatrix& b, const Truncation& tol);
QttMatrix transpose(const QttMatrix& a);
QttMatrix diag(const QttVector& x);

double average_rank(const QttVector& x);
double average_rank(const QttMatrix& a);

// Elementwise 1/a by Newton iteration.  lo/hi must bound the entries of a
// from below/above; the result is rounded at tol.
QttVector reciprocal(const QttVector& a, double lo, double hi,
                     const Truncation& tol, double target_residual = 1e-12);

}  // namespace qtt
