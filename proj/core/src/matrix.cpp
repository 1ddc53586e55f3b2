#include "rjepa/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rjepa/errors.hpp"

namespace rjepa {

namespace {
void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}
}  // namespace

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = static_cast<int>(rows.size());
  cols_ = rows_ > 0 ? static_cast<int>(rows.begin()->size()) : 0;
  data_.reserve(static_cast<std::size_t>(rows_) * cols_);
  for (const auto& r : rows) {
    require(static_cast<int>(r.size()) == cols_, "ragged initializer for Matrix");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diag(const Vec& d) {
  Matrix m(static_cast<int>(d.size()), static_cast<int>(d.size()));
  for (int i = 0; i < m.rows(); ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::gaussian(int rows, int cols, double scale, Rng& rng) {
  Matrix m(rows, cols);
  for (auto& x : m.data()) x = scale * rng.normal();
  return m;
}

Matrix Matrix::orthonormal(int rows, int cols, Rng& rng) {
  const bool wide = rows <= cols;
  const int k = wide ? rows : cols;
  const int d = wide ? cols : rows;
  // Gram-Schmidt on k random d-vectors, twice for stability
  std::vector<Vec> basis(k, Vec(d));
  for (auto& v : basis)
    for (auto& x : v) x = rng.normal();
  for (int pass = 0; pass < 2; ++pass) {
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < i; ++j) vec_axpy(basis[i], -dot(basis[i], basis[j]), basis[j]);
      const double nrm = vec_norm(basis[i]);
      if (nrm < 1e-12) throw NumericError("degenerate draw in orthonormal basis construction");
      for (auto& x : basis[i]) x /= nrm;
    }
  }
  Matrix m(rows, cols);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < d; ++j) {
      if (wide)
        m(i, j) = basis[i][j];
      else
        m(j, i) = basis[i][j];
    }
  return m;
}

Matrix Matrix::from_column(const Vec& v) {
  Matrix m(static_cast<int>(v.size()), 1);
  m.data() = v;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Vec Matrix::column(int j) const {
  Vec v(rows_);
  for (int i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
  return v;
}

Vec Matrix::row(int i) const {
  return Vec(row_ptr(i), row_ptr(i) + cols_);
}

void Matrix::set_column(int j, const Vec& v) {
  require(static_cast<int>(v.size()) == rows_, "set_column length mismatch");
  for (int i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

void Matrix::add_scaled(const Matrix& other, double alpha) {
  require(rows_ == other.rows_ && cols_ == other.cols_, "add_scaled shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += alpha * other.data_[i];
}

void Matrix::scale(double alpha) {
  for (auto& x : data_) x *= alpha;
}

void Matrix::fill(double value) {
  std::fill(data_.begin(), data_.end(), value);
}

double Matrix::frobenius_norm() const {
  double s = 0.0;
  for (double x : data_) s += x * x;
  return std::sqrt(s);
}

double Matrix::max_abs() const {
  double s = 0.0;
  for (double x : data_) s = std::max(s, std::fabs(x));
  return s;
}

double Matrix::norm1() const {
  double best = 0.0;
  for (int j = 0; j < cols_; ++j) {
    double s = 0.0;
    for (int i = 0; i < rows_; ++i) s += std::fabs((*this)(i, j));
    best = std::max(best, s);
  }
  return best;
}

bool Matrix::all_finite() const {
  for (double x : data_)
    if (!std::isfinite(x)) return false;
  return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions disagree (" + std::to_string(a.cols()) + " vs " +
                                    std::to_string(b.rows()) + ")");
  Matrix c(a.rows(), b.cols());
  const int n = a.rows(), k = a.cols(), m = b.cols();
  for (int i = 0; i < n; ++i) {
    double* ci = c.row_ptr(i);
    for (int p = 0; p < k; ++p) {
      const double aip = a(i, p);
      if (aip == 0.0) continue;
      const double* bp = b.row_ptr(p);
      for (int j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
  }
  return c;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  Matrix c = a;
  c.add_scaled(b, 1.0);
  return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  Matrix c = a;
  c.add_scaled(b, -1.0);
  return c;
}

Matrix operator*(double alpha, const Matrix& a) {
  Matrix c = a;
  c.scale(alpha);
  return c;
}

Vec matvec(const Matrix& m, const Vec& v) {
  require(m.cols() == static_cast<int>(v.size()), "matvec length mismatch");
  Vec out(m.rows(), 0.0);
  for (int i = 0; i < m.rows(); ++i) {
    const double* ri = m.row_ptr(i);
    double s = 0.0;
    for (int j = 0; j < m.cols(); ++j) s += ri[j] * v[j];
    out[i] = s;
  }
  return out;
}

Vec matvec_transposed(const Matrix& m, const Vec& v) {
  require(m.rows() == static_cast<int>(v.size()), "matvec_transposed length mismatch");
  Vec out(m.cols(), 0.0);
  for (int i = 0; i < m.rows(); ++i) {
    const double* ri = m.row_ptr(i);
    const double vi = v[i];
    for (int j = 0; j < m.cols(); ++j) out[j] += ri[j] * vi;
  }
  return out;
}

Matrix outer(const Vec& u, const Vec& v) {
  Matrix m(static_cast<int>(u.size()), static_cast<int>(v.size()));
  for (int i = 0; i < m.rows(); ++i) {
    double* ri = m.row_ptr(i);
    for (int j = 0; j < m.cols(); ++j) ri[j] = u[i] * v[j];
  }
  return m;
}

void add_outer(Matrix& m, const Vec& u, const Vec& v, double scale) {
  if (m.rows() != static_cast<int>(u.size()) || m.cols() != static_cast<int>(v.size()))
    throw ShapeError("add_outer: shape mismatch");
  for (int i = 0; i < m.rows(); ++i) {
    const double ui = scale * u[i];
    if (ui == 0.0) continue;
    double* ri = m.row_ptr(i);
    for (int j = 0; j < m.cols(); ++j) ri[j] += ui * v[j];
  }
}

Vec vec_add(const Vec& a, const Vec& b) {
  require(a.size() == b.size(), "vec_add length mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

Vec vec_sub(const Vec& a, const Vec& b) {
  require(a.size() == b.size(), "vec_sub length mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

Vec vec_scale(const Vec& a, double alpha) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = alpha * a[i];
  return r;
}

Vec vec_hadamard(const Vec& a, const Vec& b) {
  require(a.size() == b.size(), "vec_hadamard length mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * b[i];
  return r;
}

void vec_axpy(Vec& y, double alpha, const Vec& x) {
  require(y.size() == x.size(), "vec_axpy length mismatch");
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

double dot(const Vec& a, const Vec& b) {
  require(a.size() == b.size(), "dot length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double vec_norm(const Vec& a) { return std::sqrt(dot(a, a)); }

double vec_max_abs(const Vec& a) {
  double s = 0.0;
  for (double x : a) s = std::max(s, std::fabs(x));
  return s;
}

bool vec_all_finite(const Vec& a) {
  for (double x : a)
    if (!std::isfinite(x)) return false;
  return true;
}

double relative_error(const Matrix& a, const Matrix& b) {
  Matrix d = a - b;
  return d.frobenius_norm() / std::max({a.frobenius_norm(), b.frobenius_norm(), 1e-30});
}

double relative_error(const Vec& a, const Vec& b) {
  Vec d = vec_sub(a, b);
  return vec_norm(d) / std::max({vec_norm(a), vec_norm(b), 1e-30});
}

}  // namespace rjepa
