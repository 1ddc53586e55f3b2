#include "rjepa/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rjepa/errors.hpp"

namespace rjepa {

EigResult sym_eig(const Matrix& m) {
  if (m.rows() != m.cols()) throw ValidationError("sym_eig: matrix not square");
  const int n = m.rows();
  {
    Matrix skew = m - m.transposed();
    const double denom = std::max(m.frobenius_norm(), 1e-30);
    if (skew.frobenius_norm() / denom > 1e-9)
      throw ValidationError("sym_eig: matrix not symmetric within 1e-9 relative");
  }

  Matrix a = m;
  // symmetrize exactly so rotations stay consistent
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = v;
      a(j, i) = v;
    }
  Matrix v = Matrix::identity(n);

  auto off_norm = [&]() {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
    return std::sqrt(2.0 * s);
  };

  const double tol = 1e-14 * std::max(a.frobenius_norm(), 1e-300);
  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps && off_norm() > tol; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::fabs(apq) <= 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) > a(j, j); });

  EigResult r;
  r.values.resize(n);
  r.vectors = Matrix(n, n);
  for (int j = 0; j < n; ++j) {
    r.values[j] = a(order[j], order[j]);
    for (int i = 0; i < n; ++i) r.vectors(i, j) = v(i, order[j]);
  }
  return r;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (int ia = 0; ia < a.rows(); ++ia)
    for (int ja = 0; ja < a.cols(); ++ja) {
      const double aij = a(ia, ja);
      if (aij == 0.0) continue;
      for (int ib = 0; ib < b.rows(); ++ib)
        for (int jb = 0; jb < b.cols(); ++jb)
          k(ia * b.rows() + ib, ja * b.cols() + jb) = aij * b(ib, jb);
    }
  return k;
}

namespace {

struct LuFactors {
  Matrix lu;
  std::vector<int> perm;
};

LuFactors lu_factor(const Matrix& a) {
  const int n = a.rows();
  LuFactors f{a, std::vector<int>(n)};
  std::iota(f.perm.begin(), f.perm.end(), 0);
  for (int k = 0; k < n; ++k) {
    int piv = k;
    double best = std::fabs(f.lu(k, k));
    for (int i = k + 1; i < n; ++i) {
      const double cand = std::fabs(f.lu(i, k));
      if (cand > best) {
        best = cand;
        piv = i;
      }
    }
    if (best < 1e-300) throw SingularityError("solve_linear: rank-deficient matrix (zero pivot at column " +
                                              std::to_string(k) + ")");
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(f.lu(k, j), f.lu(piv, j));
      std::swap(f.perm[k], f.perm[piv]);
    }
    const double inv = 1.0 / f.lu(k, k);
    for (int i = k + 1; i < n; ++i) {
      f.lu(i, k) *= inv;
      const double lik = f.lu(i, k);
      if (lik == 0.0) continue;
      for (int j = k + 1; j < n; ++j) f.lu(i, j) -= lik * f.lu(k, j);
    }
  }
  return f;
}

Vec lu_solve_one(const LuFactors& f, const Vec& b) {
  const int n = f.lu.rows();
  Vec x(n);
  for (int i = 0; i < n; ++i) x[i] = b[f.perm[i]];
  for (int i = 1; i < n; ++i) {
    double s = x[i];
    for (int j = 0; j < i; ++j) s -= f.lu(i, j) * x[j];
    x[i] = s;
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = x[i];
    for (int j = i + 1; j < n; ++j) s -= f.lu(i, j) * x[j];
    x[i] = s / f.lu(i, i);
  }
  return x;
}

}  // namespace

Matrix solve_linear(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols()) throw ValidationError("solve_linear: matrix not square");
  if (a.rows() != b.rows()) throw ShapeError("solve_linear: rhs rows disagree with matrix");
  const int n = a.rows();
  LuFactors f = lu_factor(a);

  // cond_1 estimate from the explicit inverse; sizes here stay small
  double inv_norm1 = 0.0;
  {
    Vec e(n, 0.0);
    for (int j = 0; j < n; ++j) {
      e[j] = 1.0;
      Vec col = lu_solve_one(f, e);
      e[j] = 0.0;
      double s = 0.0;
      for (double x : col) s += std::fabs(x);
      inv_norm1 = std::max(inv_norm1, s);
    }
  }
  const double cond = a.norm1() * inv_norm1;
  if (!(cond < 1e12))
    throw SingularityError("solve_linear: condition estimate " + std::to_string(cond) + " exceeds 1e12");

  Matrix x(n, b.cols());
  for (int j = 0; j < b.cols(); ++j) x.set_column(j, lu_solve_one(f, b.column(j)));
  return x;
}

Vec solve_linear(const Matrix& a, const Vec& b) {
  return solve_linear(a, Matrix::from_column(b)).column(0);
}

Matrix cholesky(const Matrix& a) {
  if (a.rows() != a.cols()) throw ValidationError("cholesky: matrix not square");
  const int n = a.rows();
  Matrix l(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0) throw ValidationError("cholesky: matrix not positive definite");
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return l;
}

}  // namespace rjepa
