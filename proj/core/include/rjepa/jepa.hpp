#pragma once

#include <cstdint>
#include <vector>

#include "rjepa/rgc.hpp"

namespace rjepa {

enum class PredictorKind { Linear, Mlp };
enum class LossKind { Squared, Cosine };

// Maps h(t) to the next-step prediction. Linear: w1 * h (no bias, so identity
// init gives h-hat(t+1) = h(t) exactly). Mlp: w2 * tanh(w1 * h + b1) + b2.
struct Predictor {
  PredictorKind kind = PredictorKind::Linear;
  Matrix w1;
  Vec b1;
  Matrix w2;
  Vec b2;

  int d_h() const { return kind == PredictorKind::Linear ? w1.rows() : w2.rows(); }
  Vec apply(const Vec& h) const;

  static Predictor identity_linear(int d_h);
  // stacked [+alpha*I; -alpha*I] into tanh, rescaled back: output = h + O(alpha^2 h^3)
  static Predictor near_identity_mlp(int d_h, int hidden, double alpha = 0.01);
};

// Desk-scale recurrent predictive model: frozen featurizer -> RGC -> linear
// embedding h(t) = embed * s(t) -> predictor. The target branch is treated as
// a constant during differentiation when stop_gradient is set.
struct JepaModel {
  Matrix featurizer;  // n x patch_dim, frozen
  RgcWeights rgc;
  Matrix embed;  // d_h x n
  Predictor predictor;
  bool stop_gradient = true;
  LossKind loss_kind = LossKind::Squared;
  double lambda1 = 1.0;

  int n() const { return rgc.n(); }
  int d_h() const { return embed.rows(); }
  int patch_dim() const { return featurizer.cols(); }
  void validate() const;
};

// featurizer/embed drawn orthonormal, RGC zero-initialized (no temporal
// dynamics until trained), predictor at identity
JepaModel make_desk_model(int patch_dim, int n, int d_h, PredictorKind kind,
                          bool diagonal_gates, std::uint64_t seed);

// Everything BPTT needs: x[t-1] = featurized input of step t, states[t] for
// t = 0..T (states[0] = zero), gates[t-1] from step t, h[t-1] = embed*s(t).
struct Trajectory {
  std::vector<Vec> x;
  std::vector<RgcState> states;
  std::vector<RgcGates> gates;
  std::vector<Vec> h;

  int T() const { return static_cast<int>(h.size()); }
  std::size_t state_reals() const;
};

Trajectory encode_sequence(const JepaModel& model, const std::vector<Vec>& patches);

Vec featurize(const JepaModel& model, const Vec& patch);

Vec predict_next(const JepaModel& model, const Vec& h_t);

// d_pred is the derivative wrt the prediction; d_target wrt the target (used
// only when stop_gradient is off). Squared: 1/2 * lambda1 * |h - hhat|^2.
// Cosine: 1 - <h,hhat>/(|h||hhat|), lambda1 unused.
struct LossEval {
  double loss = 0.0;
  Vec d_pred;
  Vec d_target;
};
LossEval jepa_loss(const Vec& h_target, const Vec& h_pred, LossKind kind, double lambda1);

// Backprop through the predictor: returns dL/dh_input given dL/dpred, and
// accumulates parameter gradients into *grad when non-null.
struct PredictorGrads {
  Matrix w1;
  Vec b1;
  Matrix w2;
  Vec b2;
  static PredictorGrads zeros_like(const Predictor& p);
  void add_scaled(const PredictorGrads& other, double scale);
};
Vec predictor_backprop(const Predictor& p, const Vec& h_in, const Vec& d_pred,
                       PredictorGrads* grad);

}  // namespace rjepa
