#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rjepa/errors.hpp"
#include "rjepa/jepa.hpp"

using namespace rjepa;

TEST_CASE("desk model construction invariants") {
  JepaModel m = make_desk_model(16, 8, 5, PredictorKind::Linear, true, 42);
  m.validate();
  CHECK(m.n() == 8);
  CHECK(m.d_h() == 5);
  CHECK(m.patch_dim() == 16);
  // featurizer rows orthonormal
  Matrix g = matmul(m.featurizer, m.featurizer.transposed());
  CHECK(relative_error(g, Matrix::identity(8)) < 1e-12);
  // cell starts with no temporal dynamics
  for (int k = 0; k < 4; ++k) CHECK(m.rgc.w[k].max_abs() == 0.0);
  CHECK(m.rgc.diagonal_gates);
  // identity predictor
  Vec h = {1.0, -2.0, 0.5, 3.0, 0.0};
  CHECK(relative_error(m.predictor.apply(h), h) == 0.0);
}

TEST_CASE("model validation catches block mismatches") {
  JepaModel m = make_desk_model(6, 4, 3, PredictorKind::Linear, false, 1);
  m.embed = Matrix(3, 5);  // wrong inner dim
  CHECK_THROWS_AS(m.validate(), ShapeError);
}

TEST_CASE("near-identity mlp predictor stays close to identity") {
  Predictor p = Predictor::near_identity_mlp(4, 16, 0.01);
  Rng rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    Vec h(4);
    for (auto& v : h) v = rng.normal();
    Vec out = p.apply(h);
    for (int i = 0; i < 4; ++i) REQUIRE(std::abs(out[i] - h[i]) < 1e-3 * std::max(1.0, std::abs(h[i]) * std::abs(h[i]) * std::abs(h[i])));
  }
}

TEST_CASE("squared loss value and derivatives") {
  Vec target = {1.0, 2.0};
  Vec pred = {0.5, 2.5};
  LossEval ev = jepa_loss(target, pred, LossKind::Squared, 2.0);
  // 1/2 * lambda1 * |h - hhat|^2 = 1/2 * 2 * (0.25 + 0.25)
  CHECK(ev.loss == doctest::Approx(0.5).epsilon(1e-15));
  for (int i = 0; i < 2; ++i) {
    CHECK(ev.d_pred[i] == doctest::Approx(2.0 * (pred[i] - target[i])).epsilon(1e-12));
    CHECK(ev.d_target[i] == doctest::Approx(2.0 * (target[i] - pred[i])).epsilon(1e-12));
  }
  // identical vectors: zero loss, zero gradients
  LossEval z = jepa_loss(target, target, LossKind::Squared, 1.0);
  CHECK(z.loss == 0.0);
  CHECK(vec_max_abs(z.d_pred) == 0.0);
}

TEST_CASE("cosine loss value and derivatives vs finite differences") {
  Vec a = {1.0, 0.0};
  Vec b = {0.0, 1.0};
  CHECK(jepa_loss(a, b, LossKind::Cosine, 1.0).loss == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(jepa_loss(a, vec_scale(a, 3.0), LossKind::Cosine, 1.0).loss ==
        doctest::Approx(0.0).epsilon(1e-12));

  Rng rng(8);
  Vec target(4), pred(4);
  for (auto& v : target) v = rng.normal();
  for (auto& v : pred) v = rng.normal();
  LossEval ev = jepa_loss(target, pred, LossKind::Cosine, 1.0);
  const double eps = 1e-6;
  for (int i = 0; i < 4; ++i) {
    Vec pp = pred, pm = pred;
    pp[i] += eps;
    pm[i] -= eps;
    const double fd = (jepa_loss(target, pp, LossKind::Cosine, 1.0).loss -
                       jepa_loss(target, pm, LossKind::Cosine, 1.0).loss) /
                      (2 * eps);
    CHECK(ev.d_pred[i] == doctest::Approx(fd).epsilon(1e-6));
    Vec tp = target, tm = target;
    tp[i] += eps;
    tm[i] -= eps;
    const double fdt = (jepa_loss(tp, pred, LossKind::Cosine, 1.0).loss -
                        jepa_loss(tm, pred, LossKind::Cosine, 1.0).loss) /
                       (2 * eps);
    CHECK(ev.d_target[i] == doctest::Approx(fdt).epsilon(1e-6));
  }
}

TEST_CASE("predictor backprop vs finite differences, both kinds") {
  Rng rng(15);
  for (PredictorKind kind : {PredictorKind::Linear, PredictorKind::Mlp}) {
    Predictor p = kind == PredictorKind::Linear ? Predictor::identity_linear(3)
                                                : Predictor::near_identity_mlp(3, 8, 0.05);
    for (auto& v : p.w1.data()) v += 0.1 * rng.normal();
    Vec h(3), d_out(3);
    for (auto& v : h) v = rng.normal();
    for (auto& v : d_out) v = rng.normal();

    PredictorGrads g = PredictorGrads::zeros_like(p);
    Vec d_in = predictor_backprop(p, h, d_out, &g);

    auto scalar = [&](const Predictor& q, const Vec& hv) { return dot(d_out, q.apply(hv)); };
    const double eps = 1e-6;
    for (int i = 0; i < 3; ++i) {
      Vec hp = h, hm = h;
      hp[i] += eps;
      hm[i] -= eps;
      const double fd = (scalar(p, hp) - scalar(p, hm)) / (2 * eps);
      REQUIRE(d_in[i] == doctest::Approx(fd).epsilon(1e-5));
    }
    for (int i = 0; i < p.w1.rows(); ++i)
      for (int j = 0; j < p.w1.cols(); ++j) {
        Predictor pp = p, pm = p;
        pp.w1(i, j) += eps;
        pm.w1(i, j) -= eps;
        const double fd = (scalar(pp, h) - scalar(pm, h)) / (2 * eps);
        REQUIRE(g.w1(i, j) == doctest::Approx(fd).epsilon(1e-5));
      }
  }
}

TEST_CASE("encode_sequence shapes and passthrough content") {
  const int n = 4, T = 6, patch = 10;
  JepaModel m = make_desk_model(patch, n, 3, PredictorKind::Linear, true, 9);
  Rng rng(2);
  std::vector<Vec> patches(T, Vec(patch));
  for (auto& p : patches)
    for (auto& v : p) v = rng.normal();
  Trajectory traj = encode_sequence(m, patches);
  CHECK(traj.T() == T);
  CHECK(static_cast<int>(traj.states.size()) == T + 1);
  CHECK(vec_max_abs(traj.states[0].s) == 0.0);
  for (int t = 1; t <= T; ++t) {
    // zero cell weights: state is the featurized patch itself
    Vec fx = featurize(m, patches[t - 1]);
    REQUIRE(relative_error(traj.states[t].s, fx) < 1e-15);
    REQUIRE(relative_error(traj.x[t - 1], fx) < 1e-15);
    REQUIRE(relative_error(traj.h[t - 1], matvec(m.embed, traj.states[t].s)) < 1e-15);
  }
  CHECK(traj.state_reals() > 0);
}

TEST_CASE("predict_next applies the predictor to the embedded state") {
  JepaModel m = make_desk_model(5, 5, 4, PredictorKind::Linear, false, 77);
  Rng rng(6);
  for (auto& v : m.predictor.w1.data()) v += 0.2 * rng.normal();
  Vec h(4);
  for (auto& v : h) v = rng.normal();
  CHECK(relative_error(predict_next(m, h), matvec(m.predictor.w1, h)) < 1e-15);
}
