#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "rjepa/rng.hpp"

namespace rjepa {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles. All engine math is 64-bit.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, 0.0) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(int n);
  static Matrix diag(const Vec& d);
  // i.i.d. N(0, scale^2) entries
  static Matrix gaussian(int rows, int cols, double scale, Rng& rng);
  // rows (rows<=cols) or columns (cols<rows) orthonormalized by Gram-Schmidt
  static Matrix orthonormal(int rows, int cols, Rng& rng);
  static Matrix from_column(const Vec& v);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
  double* row_ptr(int i) { return data_.data() + static_cast<std::size_t>(i) * cols_; }
  const double* row_ptr(int i) const { return data_.data() + static_cast<std::size_t>(i) * cols_; }
  Vec& data() { return data_; }
  const Vec& data() const { return data_; }

  Matrix transposed() const;
  Vec column(int j) const;
  Vec row(int i) const;
  void set_column(int j, const Vec& v);

  void add_scaled(const Matrix& other, double alpha);  // this += alpha * other
  void scale(double alpha);
  void fill(double value);

  double frobenius_norm() const;
  double max_abs() const;
  double norm1() const;  // max column sum
  bool all_finite() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  Vec data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double alpha, const Matrix& a);

Vec matvec(const Matrix& m, const Vec& v);
Vec matvec_transposed(const Matrix& m, const Vec& v);  // m^T v
Matrix outer(const Vec& u, const Vec& v);
void add_outer(Matrix& m, const Vec& u, const Vec& v, double scale = 1.0);  // m += scale * u v^T

// elementwise vector helpers
Vec vec_add(const Vec& a, const Vec& b);
Vec vec_sub(const Vec& a, const Vec& b);
Vec vec_scale(const Vec& a, double alpha);
Vec vec_hadamard(const Vec& a, const Vec& b);
void vec_axpy(Vec& y, double alpha, const Vec& x);  // y += alpha * x
double dot(const Vec& a, const Vec& b);
double vec_norm(const Vec& a);
double vec_max_abs(const Vec& a);
bool vec_all_finite(const Vec& a);

// ||a - b||_F / max(||a||_F, ||b||_F, 1e-30)
double relative_error(const Matrix& a, const Matrix& b);
double relative_error(const Vec& a, const Vec& b);

}  // namespace rjepa
