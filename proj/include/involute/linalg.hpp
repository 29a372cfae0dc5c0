#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace involute {

using Vector = std::vector<double>;

// Dense row-major real matrix. Entries are always finite; the checked
// constructors reject NaN/Inf.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> d);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }

  Matrix transpose() const;
  double trace() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Vector matvec(const Matrix& a, std::span<const double> x);
// aᵀ·x without materializing the transpose.
Vector matvec_transposed(const Matrix& a, std::span<const double> x);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

double dot(std::span<const double> a, std::span<const double> b);
double max_abs(std::span<const double> v);
double max_abs_diff(const Matrix& a, const Matrix& b);

inline constexpr double kPivotTolerance = 1e-12;
inline constexpr double kInvolutoryTolerance = 1e-8;
inline constexpr double kRankDropTolerance = 1e-9;

// Inverse by LU factorization with partial pivoting. Throws SingularMatrix
// when a pivot magnitude falls to kPivotTolerance or below.
Matrix lu_inverse(const Matrix& a);

// True iff ‖a·a − I‖_max ≤ tol.
bool check_involutory(const Matrix& a, double tol = kInvolutoryTolerance);

// P⁻¹·A·P = diag(1,…,1,−1,…,−1) with gamma entries equal to −1.
struct InvolutoryDiagonalization {
  std::size_t n = 0;
  std::size_t gamma = 0;
  Matrix P;
  Matrix Pinv;

  Matrix diagonal_form() const;
};

// Builds the eigenbasis from the column spaces of the projectors (I+A)/2
// and (I−A)/2, each orthonormalized by modified Gram–Schmidt with rank drop
// tolerance kRankDropTolerance.
InvolutoryDiagonalization diagonalize_involutory(const Matrix& a);

// Orthonormal basis of the column space of m (modified Gram–Schmidt).
std::vector<Vector> orthonormal_column_basis(const Matrix& m, double drop_tol);

// A = Q·diag(1^{n−γ}, −1^{γ})·Q⁻¹ with Q a random orthogonal matrix.
Matrix random_involutory(std::size_t n, std::size_t gamma, std::uint64_t seed);

// Plain-text format: "rows cols" on the first line, then one row per line.
Matrix parse_matrix(std::istream& in);
void write_matrix(std::ostream& out, const Matrix& m);

// Shortest decimal that round-trips a double (17 significant digits).
std::string format_double(double v);

}  // namespace involute
