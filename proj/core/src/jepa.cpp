#include "rjepa/jepa.hpp"

#include <cmath>

#include "rjepa/errors.hpp"

namespace rjepa {

Vec Predictor::apply(const Vec& h) const {
  if (kind == PredictorKind::Linear) return matvec(w1, h);
  Vec z = matvec(w1, h);
  vec_axpy(z, 1.0, b1);
  for (auto& v : z) v = std::tanh(v);
  Vec out = matvec(w2, z);
  vec_axpy(out, 1.0, b2);
  return out;
}

Predictor Predictor::identity_linear(int d_h) {
  Predictor p;
  p.kind = PredictorKind::Linear;
  p.w1 = Matrix::identity(d_h);
  return p;
}

Predictor Predictor::near_identity_mlp(int d_h, int hidden, double alpha) {
  if (hidden < 2 * d_h) throw ValidationError("near_identity_mlp: hidden width must be >= 2*d_h");
  Predictor p;
  p.kind = PredictorKind::Mlp;
  p.w1 = Matrix(hidden, d_h);
  p.w2 = Matrix(d_h, hidden);
  p.b1 = Vec(hidden, 0.0);
  p.b2 = Vec(d_h, 0.0);
  // antisymmetric pair [alpha*I; -alpha*I] so tanh odd part cancels curvature:
  // w2 * tanh(w1 h) = (1/alpha) tanh(alpha h) = h + O(alpha^2)
  for (int i = 0; i < d_h; ++i) {
    p.w1(i, i) = alpha;
    p.w1(d_h + i, i) = -alpha;
    p.w2(i, i) = 0.5 / alpha;
    p.w2(i, d_h + i) = -0.5 / alpha;
  }
  return p;
}

void JepaModel::validate() const {
  rgc.validate();
  if (featurizer.rows() != rgc.n()) throw ShapeError("JepaModel: featurizer rows != rgc n");
  if (embed.cols() != rgc.n()) throw ShapeError("JepaModel: embed cols != rgc n");
  const int dh = embed.rows();
  if (predictor.kind == PredictorKind::Linear) {
    if (predictor.w1.rows() != dh || predictor.w1.cols() != dh)
      throw ShapeError("JepaModel: linear predictor must be d_h x d_h");
  } else {
    if (predictor.w1.cols() != dh || predictor.w2.rows() != dh ||
        predictor.w2.cols() != predictor.w1.rows())
      throw ShapeError("JepaModel: mlp predictor dims do not chain");
  }
  if (lambda1 <= 0.0) throw ValidationError("JepaModel: lambda1 must be positive");
}

JepaModel make_desk_model(int patch_dim, int n, int d_h, PredictorKind kind,
                          bool diagonal_gates, std::uint64_t seed) {
  if (n > patch_dim || d_h > n)
    throw ValidationError("make_desk_model: need d_h <= n <= patch_dim");
  Rng rng(seed);
  JepaModel m;
  m.featurizer = Matrix::orthonormal(n, patch_dim, rng);
  m.rgc = RgcWeights::zeros(n, diagonal_gates);
  m.embed = Matrix::orthonormal(d_h, n, rng);
  m.predictor = kind == PredictorKind::Linear ? Predictor::identity_linear(d_h)
                                              : Predictor::near_identity_mlp(d_h, 2 * d_h);
  m.validate();
  return m;
}

std::size_t Trajectory::state_reals() const {
  std::size_t total = 0;
  for (const auto& v : x) total += v.size();
  for (const auto& st : states) total += st.s.size() + st.m.size();
  for (const auto& g : gates) total += g.a[0].size() + g.a[1].size() + g.b[0].size() + g.b[1].size();
  for (const auto& v : h) total += v.size();
  return total;
}

Vec featurize(const JepaModel& model, const Vec& patch) {
  if (static_cast<int>(patch.size()) != model.patch_dim())
    throw ShapeError("featurize: patch dim mismatch");
  return matvec(model.featurizer, patch);
}

Trajectory encode_sequence(const JepaModel& model, const std::vector<Vec>& patches) {
  const int T = static_cast<int>(patches.size());
  Trajectory traj;
  traj.x.reserve(T);
  traj.states.reserve(T + 1);
  traj.gates.resize(T);
  traj.h.reserve(T);
  traj.states.push_back(RgcState::zero(model.n()));
  for (int t = 1; t <= T; ++t) {
    traj.x.push_back(featurize(model, patches[t - 1]));
    traj.states.push_back(
        rgc_step(traj.states[t - 1], traj.x[t - 1], model.rgc, &traj.gates[t - 1]));
    traj.h.push_back(matvec(model.embed, traj.states[t].s));
  }
  return traj;
}

Vec predict_next(const JepaModel& model, const Vec& h_t) { return model.predictor.apply(h_t); }

LossEval jepa_loss(const Vec& h_target, const Vec& h_pred, LossKind kind, double lambda1) {
  if (h_target.size() != h_pred.size()) throw ShapeError("jepa_loss: dimension mismatch");
  const int d = static_cast<int>(h_target.size());
  LossEval ev;
  ev.d_pred.resize(d);
  ev.d_target.resize(d);
  if (kind == LossKind::Squared) {
    double sq = 0.0;
    for (int i = 0; i < d; ++i) {
      const double diff = h_target[i] - h_pred[i];
      sq += diff * diff;
      ev.d_pred[i] = -lambda1 * diff;
      ev.d_target[i] = lambda1 * diff;
    }
    ev.loss = 0.5 * lambda1 * sq;
    return ev;
  }
  const double nt = vec_norm(h_target);
  const double np = vec_norm(h_pred);
  if (nt < 1e-300 || np < 1e-300)
    throw NumericError("jepa_loss: zero-norm vector under cosine distance");
  const double ip = dot(h_target, h_pred);
  ev.loss = 1.0 - ip / (nt * np);
  for (int i = 0; i < d; ++i) {
    ev.d_pred[i] = -(h_target[i] / (nt * np) - ip * h_pred[i] / (nt * np * np * np));
    ev.d_target[i] = -(h_pred[i] / (nt * np) - ip * h_target[i] / (nt * nt * nt * np));
  }
  return ev;
}

PredictorGrads PredictorGrads::zeros_like(const Predictor& p) {
  PredictorGrads g;
  g.w1 = Matrix(p.w1.rows(), p.w1.cols());
  if (p.kind == PredictorKind::Mlp) {
    g.b1 = Vec(p.b1.size(), 0.0);
    g.w2 = Matrix(p.w2.rows(), p.w2.cols());
    g.b2 = Vec(p.b2.size(), 0.0);
  }
  return g;
}

void PredictorGrads::add_scaled(const PredictorGrads& other, double scale) {
  w1.add_scaled(other.w1, scale);
  if (w2.rows() > 0) w2.add_scaled(other.w2, scale);
  for (size_t i = 0; i < b1.size(); ++i) b1[i] += scale * other.b1[i];
  for (size_t i = 0; i < b2.size(); ++i) b2[i] += scale * other.b2[i];
}

Vec predictor_backprop(const Predictor& p, const Vec& h_in, const Vec& d_pred,
                       PredictorGrads* grad) {
  if (p.kind == PredictorKind::Linear) {
    if (grad) {
      for (int i = 0; i < p.w1.rows(); ++i)
        for (int j = 0; j < p.w1.cols(); ++j) grad->w1(i, j) += d_pred[i] * h_in[j];
    }
    return matvec_transposed(p.w1, d_pred);
  }
  Vec z = matvec(p.w1, h_in);
  vec_axpy(z, 1.0, p.b1);
  Vec act(z.size());
  for (size_t i = 0; i < z.size(); ++i) act[i] = std::tanh(z[i]);
  // d through w2
  Vec d_act = matvec_transposed(p.w2, d_pred);
  if (grad) {
    for (int i = 0; i < p.w2.rows(); ++i)
      for (int j = 0; j < p.w2.cols(); ++j) grad->w2(i, j) += d_pred[i] * act[j];
    for (size_t i = 0; i < grad->b2.size(); ++i) grad->b2[i] += d_pred[i];
  }
  Vec d_z(z.size());
  for (size_t i = 0; i < z.size(); ++i) d_z[i] = d_act[i] * (1.0 - act[i] * act[i]);
  if (grad) {
    for (int i = 0; i < p.w1.rows(); ++i)
      for (int j = 0; j < p.w1.cols(); ++j) grad->w1(i, j) += d_z[i] * h_in[j];
    for (size_t i = 0; i < grad->b1.size(); ++i) grad->b1[i] += d_z[i];
  }
  return matvec_transposed(p.w1, d_z);
}

}  // namespace rjepa
