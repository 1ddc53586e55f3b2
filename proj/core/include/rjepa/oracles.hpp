#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rjepa/jepa.hpp"
#include "rjepa/rfp.hpp"

namespace rjepa {

// One bundle for every trainable block of a JepaModel (featurizer is frozen).
struct JepaGrads {
  std::array<Matrix, 4> rgc;
  Matrix embed;
  PredictorGrads predictor;

  static JepaGrads zeros_like(const JepaModel& m);
  void add_scaled(const JepaGrads& other, double scale);
};

// Objective over one sequence: E = sum over t=2..T of weights[t-2] * L(t),
// L(t) = d(h(t), G(h(t-1))). Empty weights mean the uniform 1/(T-1) default.
Vec default_step_weights(int T);

struct SequenceEval {
  double loss = 0.0;
  Vec per_step;  // L(t), t = 2..T
};
SequenceEval evaluate_sequence(const JepaModel& model, const std::vector<Vec>& patches,
                               const Vec& weights = {});

// Targets h(t) come from target_model, predictions from model. Differentiating
// this in model's parameters at model == target_model gives exactly the
// stop-gradient gradient; used by the finite-difference oracle.
double evaluate_frozen_targets(const JepaModel& model, const JepaModel& target_model,
                               const std::vector<Vec>& patches, const Vec& weights = {});

struct BpttResult {
  double loss = 0.0;
  JepaGrads grads;
  std::size_t trajectory_reals = 0;  // grows as Theta(T n)
};
// Reverse sweep with hand-derived adjoints; honors model.stop_gradient.
BpttResult bptt_grad(const JepaModel& model, const std::vector<Vec>& patches,
                     const Vec& weights = {});

// Central differences with per-parameter step eps*max(1,|w|). Uses the
// frozen-target objective when stop_gradient is set.
JepaGrads finite_diff_grad(const JepaModel& model, const std::vector<Vec>& patches,
                           double eps = 1e-5, const Vec& weights = {});

// plain scalar central difference, exposed for the trivial oracle checks
double fd_scalar(double (*f)(double, void*), void* ctx, double x, double eps);

struct RtrlResult {
  double loss = 0.0;
  JepaGrads grads;
  std::size_t tensor_reals = 0;           // exactly 8 n^3
  double max_off_slice = 0.0;             // max |gamma_{ipq}|, i != p, over all t
  std::array<Matrix, 8> final_slices;     // [nu*4+k](p,q) = gamma[nu][k][p][p][q] at t=T
};
// Unreduced sensitivity tensor with the dense one-step Jacobians; exact for
// any gate structure. Guarded to n <= 64.
RtrlResult full_rtrl_grad(const JepaModel& model, const std::vector<Vec>& patches,
                          const Vec& weights = {});

struct RfpResult {
  double loss = 0.0;
  JepaGrads grads;
  std::size_t sens_reals = 0;  // exactly 8 n^2
  std::uint64_t ops = 0;
  std::array<Matrix, 8> final_gammas;  // [nu*4+k] at t=T
};
// Forward-only O(n^2) pass; requires stop_gradient (the collapsed gradient
// formula reads the loss derivative against s(t-1) only).
RfpResult rfp_grad(const JepaModel& model, const std::vector<Vec>& patches,
                   const Vec& weights = {});

// ---- comparison reports ----

struct GradientComparison {
  std::string method_a, method_b, block;
  double rel_err_max = 0.0;
  double rel_err_mean = 0.0;
  int n = 0, T = 0;
  std::uint64_t seed = 0;
};
using GradientReport = std::vector<GradientComparison>;

// relative error |a-b|_F / max(|a|_F, |b|_F, 1e-30) per block
std::vector<std::pair<std::string, double>> block_errors(const JepaGrads& a, const JepaGrads& b,
                                                         const JepaModel& model);

void write_gradient_report_csv(const GradientReport& report, std::ostream& out);

}  // namespace rjepa
