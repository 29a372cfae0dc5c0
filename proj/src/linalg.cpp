#include "involute/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <utility>

#include "involute/error.hpp"

namespace involute {

namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) throw Error("matrix entries must be finite");
  }
}

void require_square(const Matrix& a, const char* what) {
  if (!a.square()) {
    throw DimensionMismatch(std::string(what) + " requires a square matrix, got " + shape(a));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  require_finite(data_);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw DimensionMismatch("matrix data length " + std::to_string(data_.size()) +
                            " does not match " + std::to_string(rows) + "x" +
                            std::to_string(cols));
  }
  require_finite(data_);
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionMismatch("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
  require_finite(data_);
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

double Matrix::trace() const {
  require_square(*this, "trace");
  double t = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) t += (*this)(i, i);
  return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionMismatch("matmul: " + shape(a) + " times " + shape(b));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  require_finite(out.data());
  return out;
}

Vector matvec(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) {
    throw DimensionMismatch("matvec: " + shape(a) + " times vector of length " +
                            std::to_string(x.size()));
  }
  Vector out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = dot(a.row(i), x);
  return out;
}

Vector matvec_transposed(const Matrix& a, std::span<const double> x) {
  if (a.rows() != x.size()) {
    throw DimensionMismatch("matvec_transposed: " + shape(a) + "ᵀ times vector of length " +
                            std::to_string(x.size()));
  }
  Vector out(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out[j] += a(i, j) * x[i];
  }
  return out;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch("add: " + shape(a) + " vs " + shape(b));
  }
  Matrix out = a;
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch("subtract: " + shape(a) + " vs " + shape(b));
  }
  Matrix out = a;
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] -= b.data()[i];
  return out;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix out = a;
  for (double& v : out.data()) v *= s;
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch("compare: " + shape(a) + " vs " + shape(b));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

Matrix lu_inverse(const Matrix& a) {
  require_square(a, "lu_inverse");
  const std::size_t n = a.rows();
  Matrix lu = a;
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot = k;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(lu(i, k)) > std::abs(lu(pivot, k))) pivot = i;
    }
    if (std::abs(lu(pivot, k)) <= kPivotTolerance) throw SingularMatrix(k);
    if (pivot != k) {
      std::swap_ranges(lu.row(k).begin(), lu.row(k).end(), lu.row(pivot).begin());
      std::swap(perm[k], perm[pivot]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = lu(i, k) / lu(k, k);
      lu(i, k) = f;
      for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
    }
  }

  // Solve L·U·x = e_perm for each column of the identity.
  Matrix inv(n, n);
  Vector col(n);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t i = 0; i < n; ++i) col[i] = perm[i] == c ? 1.0 : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < i; ++j) col[i] -= lu(i, j) * col[j];
    }
    for (std::size_t i = n; i-- > 0;) {
      for (std::size_t j = i + 1; j < n; ++j) col[i] -= lu(i, j) * col[j];
      col[i] /= lu(i, i);
    }
    for (std::size_t i = 0; i < n; ++i) inv(i, c) = col[i];
  }
  require_finite(inv.data());
  return inv;
}

bool check_involutory(const Matrix& a, double tol) {
  require_square(a, "check_involutory");
  return max_abs_diff(matmul(a, a), Matrix::identity(a.rows())) <= tol;
}

Matrix InvolutoryDiagonalization::diagonal_form() const {
  Vector d(n, 1.0);
  for (std::size_t i = n - gamma; i < n; ++i) d[i] = -1.0;
  return Matrix::diagonal(d);
}

std::vector<Vector> orthonormal_column_basis(const Matrix& m, double drop_tol) {
  std::vector<Vector> basis;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    Vector v(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) v[r] = m(r, c);
    for (const Vector& q : basis) {
      const double proj = dot(q, v);
      for (std::size_t r = 0; r < v.size(); ++r) v[r] -= proj * q[r];
    }
    const double norm = std::sqrt(dot(v, v));
    if (norm <= drop_tol) continue;
    for (double& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  return basis;
}

InvolutoryDiagonalization diagonalize_involutory(const Matrix& a) {
  require_square(a, "diagonalize_involutory");
  if (!check_involutory(a, kInvolutoryTolerance)) {
    throw NotInvolutory("matrix is not involutory: ‖A·A − I‖ exceeds tolerance");
  }
  const std::size_t n = a.rows();
  const Matrix eye = Matrix::identity(n);
  if (max_abs_diff(a, eye) <= kInvolutoryTolerance) throw IdentityExcluded();

  const auto plus = orthonormal_column_basis(0.5 * (eye + a), kRankDropTolerance);
  const auto minus = orthonormal_column_basis(0.5 * (eye - a), kRankDropTolerance);
  if (plus.size() + minus.size() != n) {
    throw NotInvolutory("eigenspace dimensions " + std::to_string(plus.size()) + " + " +
                        std::to_string(minus.size()) + " do not sum to " +
                        std::to_string(n));
  }

  InvolutoryDiagonalization d;
  d.n = n;
  d.gamma = minus.size();
  d.P = Matrix(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    const Vector& col = c < plus.size() ? plus[c] : minus[c - plus.size()];
    for (std::size_t r = 0; r < n; ++r) d.P(r, c) = col[r];
  }
  d.Pinv = lu_inverse(d.P);

  const auto expected_gamma =
      static_cast<long>(std::lround((static_cast<double>(n) - a.trace()) / 2.0));
  if (static_cast<long>(d.gamma) != expected_gamma) {
    throw NotInvolutory("eigenvalue count disagrees with trace");
  }
  return d;
}

Matrix random_involutory(std::size_t n, std::size_t gamma, std::uint64_t seed) {
  if (n == 0 || gamma < 1 || gamma > n) {
    throw Error("random_involutory: gamma must lie in [1, n], got gamma=" +
                std::to_string(gamma) + " n=" + std::to_string(n));
  }
  // The only involution with spectrum {−1} is −I.
  if (gamma == n) return -1.0 * Matrix::identity(n);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<Vector> q;
  while (q.size() < n) {
    Matrix g(n, n);
    for (double& v : g.data()) v = normal(rng);
    q = orthonormal_column_basis(g, 1e-6);
  }
  Matrix Q(n, n);
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t r = 0; r < n; ++r) Q(r, c) = q[c][r];

  Vector d(n, 1.0);
  for (std::size_t i = n - gamma; i < n; ++i) d[i] = -1.0;
  // Q is orthogonal, so Q⁻¹ = Qᵀ.
  return matmul(matmul(Q, Matrix::diagonal(d)), Q.transpose());
}

Matrix parse_matrix(std::istream& in) {
  std::size_t rows = 0;
  std::size_t cols = 0;
  if (!(in >> rows >> cols)) throw FormatError("matrix header must be \"rows cols\"");
  std::vector<double> data(rows * cols);
  for (double& v : data) {
    if (!(in >> v)) throw FormatError("matrix body has fewer than rows*cols entries");
  }
  return Matrix(rows, cols, std::move(data));
}

void write_matrix(std::ostream& out, const Matrix& m) {
  out << m.rows() << ' ' << m.cols() << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace involute
