#pragma once

#include <cstdint>
#include <vector>

#include "rjepa/matrix.hpp"
#include "rjepa/time_decay.hpp"

namespace rjepa {

// Fully linear model used to check the predictor/encoder balance claim:
// time-decay encoder (layers 1..N are c_low, layer N+1 is h), linear
// representation predictor h_hat(t+1) = W_gh h(t) + W_ga W_a c_low(t).
// W_a is frozen; W_gh, W_ga and the top-layer input map train.
struct LinearTestbed {
  TimeDecayParams enc;  // N+1 layers; enc.p.back() is the trained top map
  Matrix w_gh;          // d_h x d_h
  Matrix w_ga;          // d_h x d_a
  Matrix w_a;           // d_a x d_clow, frozen
  double lambda1 = 1.0;
  double eta = 0.0;  // weight decay

  int d_h() const { return w_gh.rows(); }
  int d_clow() const { return w_a.cols(); }
  void validate() const;
};

LinearTestbed make_testbed(int d0, int d1, int d2, int d_h, int d_a, double tau,
                           double lambda1, std::uint64_t seed);

// Instance tuned so the balance relation holds at the training fixed point:
// top tau 0 (static response, so the stop-gradient pairing is exact),
// lambda1 = d2 (the unit-norm top input has E[c_n c_n^T] = I/d2, which makes
// W^T W = P P^T coincide with W^T W = lambda1 H H^T), aux path disabled so it
// cannot absorb predictable signal. balanced_init starts on the W^T W = P P^T
// manifold, which training without decay preserves; otherwise W and P start
// mismatched so a decay run has visible contraction work to do.
LinearTestbed make_balance_testbed(bool balanced_init, std::uint64_t seed);

// c_n is normalized to unit length before it feeds the top layer (and inside
// c_low), as the balance derivation assumes.
struct TestbedRollout {
  std::vector<Vec> c_low;  // concat(c_1 .. c_n_hat), t = 1..T
  std::vector<Vec> c_n;    // normalized top-layer input, t = 1..T
  std::vector<Vec> h;      // top layer state, t = 1..T
};

TestbedRollout testbed_rollout(const LinearTestbed& tb, const std::vector<Vec>& xs);

// Finite-sample moments with the exact lag conventions of the loss below, so
// the closed-form gradients agree with finite differences of testbed_loss.
struct TestbedMoments {
  Matrix r0;      // mean over t=2..T of h(t-1) h(t-1)^T
  Matrix r1;      // h(t) h(t-1)^T
  Matrix r_clow;  // c_low(t-1) c_low(t-1)^T
  Matrix c_ch;    // c_low(t-1) h(t-1)^T
  Matrix c_hc;    // h(t) c_low(t-1)^T
};

TestbedMoments testbed_moments(const TestbedRollout& roll);

// E = lambda1/2 * mean over t=2..T of |h(t) - W_gh h(t-1) - W_ga W_a c_low(t-1)|^2
double testbed_loss(const LinearTestbed& tb, const TestbedRollout& roll);

struct TestbedGrads {
  Matrix w_gh;
  Matrix w_ga;
};

//   dE/dW_gh = lambda1 [ -R1 + W_gh R0 + W_ga W_a C_ch ]
//   dE/dW_ga = lambda1 [ W_ga W_a R_clow W_a^T - C_hc W_a^T + W_gh C_ch^T W_a^T ]
TestbedGrads testbed_closed_form_grads(const LinearTestbed& tb, const TestbedMoments& m);

// First-order (truncated) gradient for the top-layer input map:
// sum_q dE/dh(q) c_n(q)^T with dE/dh(q) flowing only through the prediction
// branch (target stopped).
Matrix testbed_encoder_grad(const LinearTestbed& tb, const TestbedRollout& roll);

// Columns h(t)/sqrt(T)
Matrix features_matrix(const std::vector<Vec>& h);

// |W^T W - lambda1 H H^T|_F / max(|lambda1 H H^T|_F, 1e-30); 0 when both
// sides are below 1e-12 (fully decayed case)
double balance_residual(const Matrix& w_gh, const Matrix& H, double lambda1);

}  // namespace rjepa
