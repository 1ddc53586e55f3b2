#include "rjepa/rfp.hpp"

#include <string>

#include "rjepa/errors.hpp"

namespace rjepa {

std::size_t SensitivityState::total_reals() const {
  std::size_t total = 0;
  for (const auto& branch : gamma)
    for (const auto& g : branch) total += static_cast<std::size_t>(g.size());
  return total;
}

SensitivityState rfp_init(int n) {
  if (n < 1) throw ValidationError("rfp_init: n must be >= 1");
  SensitivityState s;
  for (int nu = 0; nu < 2; ++nu)
    for (int k = 0; k < 4; ++k) s.gamma[nu][k] = Matrix(n, n);
  return s;
}

void rfp_update(SensitivityState& sens, int t, const RgcGateFactors& mu,
                const RgcSourceTerms& src) {
  if (t != sens.t + 1)
    throw SequencingError("rfp_update: factors are for t=" + std::to_string(t) +
                          " but sensitivity is at t=" + std::to_string(sens.t));
  const int n = sens.n();

  // In-place pairwise row rotation: each row p of (Gamma^{0,k}, Gamma^{1,k})
  // mixes only with itself, so one saved row suffices.
  Vec saved(n);
  for (int k = 0; k < 4; ++k) {
    Matrix& g0 = sens.gamma[0][k];
    Matrix& g1 = sens.gamma[1][k];
    for (int p = 0; p < n; ++p) {
      double* r0 = g0.row_ptr(p);
      double* r1 = g1.row_ptr(p);
      for (int q = 0; q < n; ++q) saved[q] = r0[q];
      const double m00 = mu.mu0[0][p], m01 = mu.mu1[0][p];
      const double m10 = mu.mu0[1][p], m11 = mu.mu1[1][p];
      for (int q = 0; q < n; ++q) {
        r0[q] = m00 * saved[q] + m01 * r1[q];
        r1[q] = m10 * r1[q] + m11 * saved[q];
      }
      sens.ops += 6u * static_cast<std::uint64_t>(n);  // 4 mul + 2 add per column
    }
  }

  const Matrix* sources[4] = {&src.j0[0], &src.j1[0], &src.j0[1], &src.j1[1]};
  for (int k = 0; k < 4; ++k) {
    Matrix& target = sens.gamma[k / 2][k];
    const Matrix& j = *sources[k];
    if (j.rows() != n || j.cols() != n) throw ShapeError("rfp_update: source dims mismatch");
    const double* js = j.data().data();
    double* gs = target.data().data();
    for (int e = 0; e < n * n; ++e) gs[e] += js[e];
    sens.ops += static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n);
  }

  sens.t = t;
}

std::array<Matrix, 4> assemble_gradient(const Vec& dL_ds, const SensitivityState& sens) {
  std::array<Matrix, 4> grads;
  const int n = sens.n();
  for (int k = 0; k < 4; ++k) grads[k] = Matrix(n, n);
  accumulate_gradient(grads, dL_ds, sens);
  return grads;
}

void accumulate_gradient(std::array<Matrix, 4>& acc, const Vec& dL_ds,
                         const SensitivityState& sens, double weight) {
  const int n = sens.n();
  if (static_cast<int>(dL_ds.size()) != n)
    throw ShapeError("accumulate_gradient: dL_ds length mismatch");
  for (int k = 0; k < 4; ++k) {
    if (acc[k].rows() != n || acc[k].cols() != n)
      throw ShapeError("accumulate_gradient: accumulator dims mismatch");
    const Matrix& g = sens.gamma[0][k];
    for (int p = 0; p < n; ++p) {
      const double scale = weight * dL_ds[p];
      if (scale == 0.0) continue;
      const double* src = g.row_ptr(p);
      double* dst = acc[k].row_ptr(p);
      for (int q = 0; q < n; ++q) dst[q] += scale * src[q];
    }
  }
}

GenericSensitivity generic_sensitivity_init(int rows, int cols) {
  if (rows < 1 || cols < 1) throw ValidationError("generic_sensitivity_init: bad dims");
  return {Matrix(rows, cols), 0};
}

void generic_two_point_update(GenericSensitivity& sens, const Vec& j_diag, const Matrix& r_hat) {
  Matrix& g = sens.gamma;
  if (static_cast<int>(j_diag.size()) != g.rows() || r_hat.rows() != g.rows() ||
      r_hat.cols() != g.cols())
    throw ShapeError("generic_two_point_update: dims mismatch");
  for (int i = 0; i < g.rows(); ++i) {
    const double jii = j_diag[i];
    double* row = g.row_ptr(i);
    const double* src = r_hat.row_ptr(i);
    for (int j = 0; j < g.cols(); ++j) row[j] = jii * row[j] + src[j];
  }
  ++sens.t;
}

}  // namespace rjepa
