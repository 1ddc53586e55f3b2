#pragma once

#include <array>

#include "rjepa/matrix.hpp"
#include "rjepa/rng.hpp"

namespace rjepa {

// Gate nonlinearity. tanh is the default and the tested path; logistic is an
// experimental knob (derivatives below adapt via deriv_from_value).
enum class GateActivation { Tanh, Logistic };

double gate_eval(GateActivation act, double z);
// f'(z) expressed through the gate value f(z): tanh -> 1-v^2, logistic -> v(1-v)
double gate_deriv_from_value(GateActivation act, double v);

// Weight blocks for the two-state reciprocal cell.
// w[0]=W_ss, w[1]=W_ms, w[2]=W_mm, w[3]=W_sm: block 2*nu gates persistence of
// branch nu, block 2*nu+1 gates its input (driven by the opposite branch).
struct RgcWeights {
  std::array<Matrix, 4> w;
  bool diagonal_gates = false;
  GateActivation activation = GateActivation::Tanh;

  int n() const { return w[0].rows(); }
  // throws ShapeError / ValidationError; diagonal_gates rejects (not zeroes)
  // off-diagonal entries
  void validate() const;

  static RgcWeights random(int n, double scale, bool diagonal, Rng& rng,
                           GateActivation act = GateActivation::Tanh);
  static RgcWeights zeros(int n, bool diagonal = false);
};

// c^(0) = s, c^(1) = m
struct RgcState {
  Vec s, m;

  static RgcState zero(int n) { return {Vec(n, 0.0), Vec(n, 0.0)}; }
  const Vec& c(int nu) const { return nu == 0 ? s : m; }
  Vec& c(int nu) { return nu == 0 ? s : m; }
  int n() const { return static_cast<int>(s.size()); }
};

// Gate values for one step: a[nu], b[nu] are functions of state(t-1).
struct RgcGates {
  std::array<Vec, 2> a, b;
};

// c^(nu)(t) = (1 - a^(nu)) * x(t) + b^(nu) * c^(nu)(t-1),
// a^(nu) = f(W^(2nu+1) c^(1-nu)(t-1)), b^(nu) = f(W^(2nu) c^(nu)(t-1)).
// Fills *gates when given so sensitivity factors can reuse them.
RgcState rgc_step(const RgcState& state, const Vec& x, const RgcWeights& w,
                  RgcGates* gates = nullptr);

RgcGates rgc_gates(const RgcState& state_prev, const RgcWeights& w);

// Diagonal temporal factors:
//   mu0[nu] = f'(b) * c^(nu)(t-1) * diag(W^(2nu)) + b^(nu)
//   mu1[nu] = -f'(a) * x(t) * diag(W^(2nu+1))
struct RgcGateFactors {
  std::array<Vec, 2> mu0, mu1;
};
RgcGateFactors rgc_gate_factors(const RgcState& state_prev, const Vec& x,
                                const RgcWeights& w, const RgcGates& gates);
RgcGateFactors rgc_gate_factors(const RgcState& state_prev, const Vec& x,
                                const RgcWeights& w);

// Direct parameter sources:
//   j0[nu]_pq = f'(b_p) * c^(nu)_p(t-1) * c^(nu)_q(t-1)
//   j1[nu]_pq = -f'(a_p) * x_p(t) * c^(1-nu)_q(t-1)
struct RgcSourceTerms {
  std::array<Matrix, 2> j0, j1;
};
RgcSourceTerms rgc_source_terms(const RgcState& state_prev, const Vec& x,
                                const RgcWeights& w, const RgcGates& gates);
RgcSourceTerms rgc_source_terms(const RgcState& state_prev, const Vec& x,
                                const RgcWeights& w);

// Dense one-step state Jacobians (all paths: direct, through a, through b):
//   A[nu]_ij = d c^(nu)_i(t) / d c^(nu)_j(t-1) = b_i delta_ij + f'(b_i) W^(2nu)_ij c^(nu)_i(t-1)
//   B[nu]_ij = d c^(nu)_i(t) / d c^(1-nu)_j(t-1) = -f'(a_i) x_i W^(2nu+1)_ij
struct RgcDenseJacobians {
  std::array<Matrix, 2> A, B;
};
RgcDenseJacobians rgc_dense_jacobians(const RgcState& state_prev, const Vec& x,
                                      const RgcWeights& w);

}  // namespace rjepa
