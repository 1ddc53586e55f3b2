#pragma once

#include "rjepa/matrix.hpp"

namespace rjepa {

struct EigResult {
  Vec values;      // descending
  Matrix vectors;  // column i pairs with values[i], orthonormal
};

// Symmetric eigendecomposition by cyclic Jacobi rotations. Input must be
// square and symmetric to 1e-9 relative (Frobenius), else ValidationError.
EigResult sym_eig(const Matrix& m);

Matrix kron(const Matrix& a, const Matrix& b);

// Solves a x = b (b may have several columns) by LU with partial pivoting.
// Throws SingularityError on rank deficiency or 1-norm condition > 1e12.
Matrix solve_linear(const Matrix& a, const Matrix& b);
Vec solve_linear(const Matrix& a, const Vec& b);

// Lower-triangular L with L L^T = a; a must be symmetric positive definite.
Matrix cholesky(const Matrix& a);

}  // namespace rjepa
