#include "rjepa/testbed.hpp"

#include <cmath>

#include "rjepa/errors.hpp"
#include "rjepa/rng.hpp"

namespace rjepa {

void LinearTestbed::validate() const {
  enc.validate();
  if (enc.layers() < 2) throw ValidationError("LinearTestbed: need at least one low layer");
  int dcl = 0;
  for (int l = 0; l + 1 < enc.layers(); ++l) dcl += enc.p[l].rows();
  if (w_a.cols() != dcl) throw ShapeError("LinearTestbed: w_a cols != total low dim");
  if (w_gh.rows() != w_gh.cols() || w_gh.rows() != enc.p.back().rows())
    throw ShapeError("LinearTestbed: w_gh must be d_h x d_h");
  if (w_ga.rows() != d_h() || w_ga.cols() != w_a.rows())
    throw ShapeError("LinearTestbed: w_ga dims do not chain with w_a");
  if (lambda1 <= 0.0) throw ValidationError("LinearTestbed: lambda1 must be positive");
}

LinearTestbed make_testbed(int d0, int d1, int d2, int d_h, int d_a, double tau,
                           double lambda1, std::uint64_t seed) {
  Rng rng(seed);
  LinearTestbed tb;
  tb.enc.tau = {tau, tau, tau};
  tb.enc.p = {Matrix::orthonormal(d1, d0, rng), Matrix::orthonormal(d2, d1, rng),
              Matrix::gaussian(d_h, d2, 0.05 / std::sqrt(d2), rng)};
  tb.w_gh = Matrix::gaussian(d_h, d_h, 0.05 / std::sqrt(d_h), rng);
  tb.w_ga = Matrix(d_h, d_a);
  tb.w_a = Matrix::gaussian(d_a, d1 + d2, 1.0 / std::sqrt(d1 + d2), rng);
  tb.lambda1 = lambda1;
  tb.validate();
  return tb;
}

LinearTestbed make_balance_testbed(bool balanced_init, std::uint64_t seed) {
  const int d0 = 24, d1 = 16, d2 = 8, dh = 6, da = 4;
  LinearTestbed tb = make_testbed(d0, d1, d2, dh, da, 0.5, double(d2), seed);
  tb.enc.tau.back() = 0.0;
  for (auto& v : tb.w_a.data()) v = 0.0;

  Rng rng(Rng::substream_seed(seed, 9));
  if (balanced_init) {
    // same scale on an orthogonal W and an orthonormal-row P: W^T W = P P^T
    tb.w_gh = 0.55 * Matrix::orthonormal(dh, dh, rng);
    tb.enc.p.back() = 0.55 * Matrix::orthonormal(dh, d2, rng);
  } else {
    tb.w_gh = 0.8 * Matrix::identity(dh);
    tb.enc.p.back() = 0.4 * Matrix::orthonormal(dh, d2, rng);
  }
  return tb;
}

TestbedRollout testbed_rollout(const LinearTestbed& tb, const std::vector<Vec>& xs) {
  const int nl = tb.enc.layers();
  const int T = static_cast<int>(xs.size());
  TestbedRollout roll;
  roll.c_low.reserve(T);
  roll.c_n.reserve(T);
  roll.h.reserve(T);

  LayeredVecs c(nl);
  for (int l = 0; l < nl; ++l) c[l] = Vec(tb.enc.p[l].rows(), 0.0);

  for (int t = 0; t < T; ++t) {
    const Vec* below = &xs[t];
    for (int l = 0; l + 1 < nl; ++l) {
      Vec next = matvec(tb.enc.p[l], *below);
      vec_axpy(next, tb.enc.tau[l], c[l]);
      c[l] = std::move(next);
      below = &c[l];
    }
    // normalize the top layer's input, as the derivation assumes
    Vec cn = c[nl - 2];
    const double nrm = vec_norm(cn);
    if (nrm < 1e-300) throw NumericError("testbed_rollout: zero c_n, cannot normalize");
    for (auto& v : cn) v /= nrm;

    Vec top = matvec(tb.enc.p[nl - 1], cn);
    vec_axpy(top, tb.enc.tau[nl - 1], c[nl - 1]);
    c[nl - 1] = std::move(top);

    Vec low;
    low.reserve(tb.d_clow());
    for (int l = 0; l + 2 < nl; ++l) low.insert(low.end(), c[l].begin(), c[l].end());
    low.insert(low.end(), cn.begin(), cn.end());

    roll.c_low.push_back(std::move(low));
    roll.c_n.push_back(std::move(cn));
    roll.h.push_back(c[nl - 1]);
  }
  return roll;
}

TestbedMoments testbed_moments(const TestbedRollout& roll) {
  const int T = static_cast<int>(roll.h.size());
  if (T < 2) throw ValidationError("testbed_moments: need T >= 2");
  const int dh = static_cast<int>(roll.h[0].size());
  const int dc = static_cast<int>(roll.c_low[0].size());
  TestbedMoments m{Matrix(dh, dh), Matrix(dh, dh), Matrix(dc, dc), Matrix(dc, dh),
                   Matrix(dh, dc)};
  const double w = 1.0 / (T - 1);
  for (int t = 1; t < T; ++t) {
    const Vec& hp = roll.h[t - 1];
    const Vec& hc = roll.h[t];
    const Vec& cp = roll.c_low[t - 1];
    for (int i = 0; i < dh; ++i) {
      for (int j = 0; j < dh; ++j) {
        m.r0(i, j) += w * hp[i] * hp[j];
        m.r1(i, j) += w * hc[i] * hp[j];
      }
      for (int j = 0; j < dc; ++j) m.c_hc(i, j) += w * hc[i] * cp[j];
    }
    for (int i = 0; i < dc; ++i) {
      for (int j = 0; j < dc; ++j) m.r_clow(i, j) += w * cp[i] * cp[j];
      for (int j = 0; j < dh; ++j) m.c_ch(i, j) += w * cp[i] * hp[j];
    }
  }
  return m;
}

double testbed_loss(const LinearTestbed& tb, const TestbedRollout& roll) {
  const int T = static_cast<int>(roll.h.size());
  if (T < 2) throw ValidationError("testbed_loss: need T >= 2");
  double sum = 0.0;
  for (int t = 1; t < T; ++t) {
    Vec pred = matvec(tb.w_gh, roll.h[t - 1]);
    Vec act = matvec(tb.w_a, roll.c_low[t - 1]);
    vec_axpy(pred, 1.0, matvec(tb.w_ga, act));
    Vec diff = vec_sub(roll.h[t], pred);
    sum += dot(diff, diff);
  }
  return 0.5 * tb.lambda1 * sum / (T - 1);
}

TestbedGrads testbed_closed_form_grads(const LinearTestbed& tb, const TestbedMoments& m) {
  TestbedGrads g;
  Matrix wga_wa = matmul(tb.w_ga, tb.w_a);
  g.w_gh = tb.lambda1 * (matmul(tb.w_gh, m.r0) - m.r1 + matmul(wga_wa, m.c_ch));
  g.w_ga = tb.lambda1 *
           (matmul(matmul(wga_wa, m.r_clow), tb.w_a.transposed()) -
            matmul(m.c_hc, tb.w_a.transposed()) +
            matmul(matmul(tb.w_gh, m.c_ch.transposed()), tb.w_a.transposed()));
  return g;
}

Matrix testbed_encoder_grad(const LinearTestbed& tb, const TestbedRollout& roll) {
  const int T = static_cast<int>(roll.h.size());
  if (T < 2) throw ValidationError("testbed_encoder_grad: need T >= 2");
  const Matrix& p_top = tb.enc.p.back();
  Matrix grad(p_top.rows(), p_top.cols());
  const double w = tb.lambda1 / (T - 1);
  for (int q = 1; q < T; ++q) {
    // prediction error at t = q+1 (1-based: h index q), target stopped
    Vec err = matvec(tb.w_gh, roll.h[q - 1]);
    vec_axpy(err, 1.0, matvec(tb.w_ga, matvec(tb.w_a, roll.c_low[q - 1])));
    vec_axpy(err, -1.0, roll.h[q]);
    Vec dh = matvec_transposed(tb.w_gh, err);  // dE/dh(q) up to the w factor
    for (int i = 0; i < grad.rows(); ++i)
      for (int j = 0; j < grad.cols(); ++j) grad(i, j) += w * dh[i] * roll.c_n[q - 1][j];
  }
  return grad;
}

Matrix features_matrix(const std::vector<Vec>& h) {
  if (h.empty()) throw ValidationError("features_matrix: empty feature list");
  const int T = static_cast<int>(h.size());
  const int d = static_cast<int>(h[0].size());
  Matrix H(d, T);
  const double s = 1.0 / std::sqrt(static_cast<double>(T));
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < d; ++i) H(i, t) = s * h[t][i];
  return H;
}

double balance_residual(const Matrix& w_gh, const Matrix& H, double lambda1) {
  Matrix lhs = matmul(w_gh.transposed(), w_gh);
  Matrix rhs = lambda1 * matmul(H, H.transposed());
  const double rhs_norm = rhs.frobenius_norm();
  if (lhs.frobenius_norm() < 1e-12 && rhs_norm < 1e-12) return 0.0;
  return (lhs - rhs).frobenius_norm() / std::max(rhs_norm, 1e-30);
}

}  // namespace rjepa
