#include "rjepa/rgc.hpp"

#include <cmath>
#include <string>

#include "rjepa/errors.hpp"

namespace rjepa {

double gate_eval(GateActivation act, double z) {
  return act == GateActivation::Tanh ? std::tanh(z) : 1.0 / (1.0 + std::exp(-z));
}

double gate_deriv_from_value(GateActivation act, double v) {
  return act == GateActivation::Tanh ? 1.0 - v * v : v * (1.0 - v);
}

void RgcWeights::validate() const {
  const int dim = w[0].rows();
  if (dim < 1) throw ValidationError("RgcWeights: empty weight block");
  for (int k = 0; k < 4; ++k) {
    if (w[k].rows() != dim || w[k].cols() != dim)
      throw ShapeError("RgcWeights: block " + std::to_string(k) + " is " +
                       std::to_string(w[k].rows()) + "x" + std::to_string(w[k].cols()) +
                       ", expected " + std::to_string(dim) + "x" + std::to_string(dim));
    if (!w[k].all_finite())
      throw NumericError("RgcWeights: non-finite entry in block " + std::to_string(k));
    if (diagonal_gates) {
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
          if (i != j && w[k](i, j) != 0.0)
            throw ValidationError("RgcWeights: diagonal_gates set but block " +
                                  std::to_string(k) + " has nonzero (" + std::to_string(i) +
                                  "," + std::to_string(j) + ")");
    }
  }
}

RgcWeights RgcWeights::random(int n, double scale, bool diagonal, Rng& rng, GateActivation act) {
  RgcWeights ws;
  ws.diagonal_gates = diagonal;
  ws.activation = act;
  for (int k = 0; k < 4; ++k) {
    if (diagonal) {
      Matrix d(n, n);
      for (int i = 0; i < n; ++i) d(i, i) = scale * rng.normal();
      ws.w[k] = d;
    } else {
      ws.w[k] = Matrix::gaussian(n, n, scale, rng);
    }
  }
  ws.validate();
  return ws;
}

RgcWeights RgcWeights::zeros(int n, bool diagonal) {
  RgcWeights ws;
  ws.diagonal_gates = diagonal;
  for (int k = 0; k < 4; ++k) ws.w[k] = Matrix(n, n);
  return ws;
}

RgcGates rgc_gates(const RgcState& state_prev, const RgcWeights& w) {
  const int n = w.n();
  if (state_prev.n() != n) throw ShapeError("rgc_gates: state dimension mismatch");
  RgcGates g;
  for (int nu = 0; nu < 2; ++nu) {
    Vec za = matvec(w.w[2 * nu + 1], state_prev.c(1 - nu));
    Vec zb = matvec(w.w[2 * nu], state_prev.c(nu));
    g.a[nu].resize(n);
    g.b[nu].resize(n);
    for (int i = 0; i < n; ++i) {
      g.a[nu][i] = gate_eval(w.activation, za[i]);
      g.b[nu][i] = gate_eval(w.activation, zb[i]);
    }
  }
  return g;
}

RgcState rgc_step(const RgcState& state, const Vec& x, const RgcWeights& w, RgcGates* gates) {
  const int n = w.n();
  if (state.n() != n || static_cast<int>(x.size()) != n)
    throw ShapeError("rgc_step: dimension mismatch");
  RgcGates g = rgc_gates(state, w);
  RgcState next = RgcState::zero(n);
  for (int nu = 0; nu < 2; ++nu) {
    const Vec& prev = state.c(nu);
    Vec& out = next.c(nu);
    for (int i = 0; i < n; ++i)
      out[i] = (1.0 - g.a[nu][i]) * x[i] + g.b[nu][i] * prev[i];
  }
  if (!vec_all_finite(next.s) || !vec_all_finite(next.m))
    throw NumericError("rgc_step: non-finite state");
  if (gates) *gates = std::move(g);
  return next;
}

RgcGateFactors rgc_gate_factors(const RgcState& state_prev, const Vec& x, const RgcWeights& w,
                                const RgcGates& gates) {
  const int n = w.n();
  if (static_cast<int>(x.size()) != n) throw ShapeError("rgc_gate_factors: input mismatch");
  RgcGateFactors f;
  for (int nu = 0; nu < 2; ++nu) {
    f.mu0[nu].resize(n);
    f.mu1[nu].resize(n);
    const Vec& prev = state_prev.c(nu);
    for (int i = 0; i < n; ++i) {
      const double db = gate_deriv_from_value(w.activation, gates.b[nu][i]);
      const double da = gate_deriv_from_value(w.activation, gates.a[nu][i]);
      f.mu0[nu][i] = db * prev[i] * w.w[2 * nu](i, i) + gates.b[nu][i];
      f.mu1[nu][i] = -da * x[i] * w.w[2 * nu + 1](i, i);
    }
  }
  return f;
}

RgcGateFactors rgc_gate_factors(const RgcState& state_prev, const Vec& x, const RgcWeights& w) {
  return rgc_gate_factors(state_prev, x, w, rgc_gates(state_prev, w));
}

RgcSourceTerms rgc_source_terms(const RgcState& state_prev, const Vec& x, const RgcWeights& w,
                                const RgcGates& gates) {
  const int n = w.n();
  if (static_cast<int>(x.size()) != n) throw ShapeError("rgc_source_terms: input mismatch");
  RgcSourceTerms s;
  for (int nu = 0; nu < 2; ++nu) {
    s.j0[nu] = Matrix(n, n);
    s.j1[nu] = Matrix(n, n);
    const Vec& own = state_prev.c(nu);
    const Vec& other = state_prev.c(1 - nu);
    for (int p = 0; p < n; ++p) {
      const double rb = gate_deriv_from_value(w.activation, gates.b[nu][p]) * own[p];
      const double ra = -gate_deriv_from_value(w.activation, gates.a[nu][p]) * x[p];
      for (int q = 0; q < n; ++q) {
        s.j0[nu](p, q) = rb * own[q];
        s.j1[nu](p, q) = ra * other[q];
      }
    }
  }
  return s;
}

RgcSourceTerms rgc_source_terms(const RgcState& state_prev, const Vec& x, const RgcWeights& w) {
  return rgc_source_terms(state_prev, x, w, rgc_gates(state_prev, w));
}

RgcDenseJacobians rgc_dense_jacobians(const RgcState& state_prev, const Vec& x,
                                      const RgcWeights& w) {
  const int n = w.n();
  if (state_prev.n() != n || static_cast<int>(x.size()) != n)
    throw ShapeError("rgc_dense_jacobians: dimension mismatch");
  RgcGates g = rgc_gates(state_prev, w);
  RgcDenseJacobians j;
  for (int nu = 0; nu < 2; ++nu) {
    j.A[nu] = Matrix(n, n);
    j.B[nu] = Matrix(n, n);
    const Vec& prev = state_prev.c(nu);
    for (int i = 0; i < n; ++i) {
      const double db = gate_deriv_from_value(w.activation, g.b[nu][i]);
      const double da = gate_deriv_from_value(w.activation, g.a[nu][i]);
      for (int jj = 0; jj < n; ++jj) {
        j.A[nu](i, jj) = db * w.w[2 * nu](i, jj) * prev[i];
        j.B[nu](i, jj) = -da * x[i] * w.w[2 * nu + 1](i, jj);
      }
      j.A[nu](i, i) += g.b[nu][i];
    }
  }
  return j;
}

}  // namespace rjepa
