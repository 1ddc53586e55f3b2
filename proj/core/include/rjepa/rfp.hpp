#pragma once

#include <array>
#include <cstdint>

#include "rjepa/rgc.hpp"

namespace rjepa {

// Forward sensitivities Gamma^{nu,k}_{pq}(t) = d c^{nu}_p(t) / d W^{k}_{pq},
// the collapsed (i = p) remnant of the full third-order tensor. Exactly eight
// n x n matrices — that is the entire O(n^2) memory claim, so total_reals()
// is asserted in tests.
struct SensitivityState {
  std::array<std::array<Matrix, 4>, 2> gamma;  // gamma[nu][k]
  int t = 0;
  std::uint64_t ops = 0;  // arithmetic ops accumulated by rfp_update

  int n() const { return gamma[0][0].rows(); }
  std::size_t total_reals() const;
};

SensitivityState rfp_init(int n);

// One forward step:
//   Gamma^{nu,k}(t) = mu^{nu,0}(t) . Gamma^{nu,k}(t-1)
//                   + mu^{nu,1}(t) . Gamma^{1-nu,k}(t-1)
//                   + delta_{k/2,nu} J^{nu,k%2}(t)
// where the mu vectors scale rows (entry p multiplies row p). t must be
// sens.t + 1 (the factors belong to the step being applied).
void rfp_update(SensitivityState& sens, int t, const RgcGateFactors& mu,
                const RgcSourceTerms& src);

// grad[k]_pq = dL_ds[p] * Gamma^{0,k}_pq — only the s-branch reaches the loss.
std::array<Matrix, 4> assemble_gradient(const Vec& dL_ds, const SensitivityState& sens);
void accumulate_gradient(std::array<Matrix, 4>& acc, const Vec& dL_ds,
                         const SensitivityState& sens, double weight = 1.0);

// Collapsed recursion for any cell with the two-point property:
// Gamma_ij(t) = J_ii(t) Gamma_ij(t-1) + Rhat_ij(t).
struct GenericSensitivity {
  Matrix gamma;
  int t = 0;
};

GenericSensitivity generic_sensitivity_init(int rows, int cols);
void generic_two_point_update(GenericSensitivity& sens, const Vec& j_diag, const Matrix& r_hat);

}  // namespace rjepa
