#include "rjepa/oracles.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <utility>

#include "rjepa/errors.hpp"

namespace rjepa {

namespace {

Vec resolve_weights(const Vec& weights, int T) {
  if (T < 2) throw ValidationError("need at least 2 steps to form a prediction loss");
  if (weights.empty()) return Vec(T - 1, 1.0 / (T - 1));
  if (static_cast<int>(weights.size()) != T - 1)
    throw ShapeError("step weights must have length T-1");
  return weights;
}

}  // namespace

JepaGrads JepaGrads::zeros_like(const JepaModel& m) {
  JepaGrads g;
  const int n = m.n();
  for (int k = 0; k < 4; ++k) g.rgc[k] = Matrix(n, n);
  g.embed = Matrix(m.d_h(), n);
  g.predictor = PredictorGrads::zeros_like(m.predictor);
  return g;
}

void JepaGrads::add_scaled(const JepaGrads& other, double scale) {
  for (int k = 0; k < 4; ++k) rgc[k].add_scaled(other.rgc[k], scale);
  embed.add_scaled(other.embed, scale);
  predictor.add_scaled(other.predictor, scale);
}

Vec default_step_weights(int T) { return resolve_weights({}, T); }

SequenceEval evaluate_sequence(const JepaModel& model, const std::vector<Vec>& patches,
                               const Vec& weights) {
  Trajectory traj = encode_sequence(model, patches);
  const int T = traj.T();
  const Vec w = resolve_weights(weights, T);
  SequenceEval out;
  out.per_step.reserve(T - 1);
  for (int t = 2; t <= T; ++t) {
    LossEval ev = jepa_loss(traj.h[t - 1], predict_next(model, traj.h[t - 2]), model.loss_kind,
                            model.lambda1);
    out.per_step.push_back(ev.loss);
    out.loss += w[t - 2] * ev.loss;
  }
  return out;
}

double evaluate_frozen_targets(const JepaModel& model, const JepaModel& target_model,
                               const std::vector<Vec>& patches, const Vec& weights) {
  Trajectory traj = encode_sequence(model, patches);
  Trajectory frozen = encode_sequence(target_model, patches);
  const int T = traj.T();
  const Vec w = resolve_weights(weights, T);
  double loss = 0.0;
  for (int t = 2; t <= T; ++t) {
    LossEval ev = jepa_loss(frozen.h[t - 1], predict_next(model, traj.h[t - 2]), model.loss_kind,
                            model.lambda1);
    loss += w[t - 2] * ev.loss;
  }
  return loss;
}

BpttResult bptt_grad(const JepaModel& model, const std::vector<Vec>& patches, const Vec& weights) {
  Trajectory traj = encode_sequence(model, patches);
  const int T = traj.T();
  const int n = model.n();
  const Vec w = resolve_weights(weights, T);
  const GateActivation act = model.rgc.activation;

  BpttResult res;
  res.grads = JepaGrads::zeros_like(model);
  res.trajectory_reals = traj.state_reals();

  // lam_*[t] = dE / dc^nu(t); the whole point of the reverse sweep is that
  // these are only n-vectors but require the stored trajectory.
  std::vector<Vec> lam_s(T + 1, Vec(n, 0.0));
  std::vector<Vec> lam_m(T + 1, Vec(n, 0.0));

  for (int t = T; t >= 1; --t) {
    if (t >= 2) {
      const Vec& h_prev = traj.h[t - 2];
      LossEval ev =
          jepa_loss(traj.h[t - 1], predict_next(model, h_prev), model.loss_kind, model.lambda1);
      res.loss += w[t - 2] * ev.loss;

      Vec d_pred = vec_scale(ev.d_pred, w[t - 2]);
      Vec dh_prev = predictor_backprop(model.predictor, h_prev, d_pred, &res.grads.predictor);
      add_outer(res.grads.embed, dh_prev, traj.states[t - 1].s);
      vec_axpy(lam_s[t - 1], 1.0, matvec_transposed(model.embed, dh_prev));

      if (!model.stop_gradient) {
        Vec d_target = vec_scale(ev.d_target, w[t - 2]);
        add_outer(res.grads.embed, d_target, traj.states[t].s);
        vec_axpy(lam_s[t], 1.0, matvec_transposed(model.embed, d_target));
      }
    }

    // push adjoints through step t and collect its parameter gradients
    const RgcState& prev = traj.states[t - 1];
    const Vec& x = traj.x[t - 1];
    const RgcGates& g = traj.gates[t - 1];
    for (int nu = 0; nu < 2; ++nu) {
      const Vec& lam = nu == 0 ? lam_s[t] : lam_m[t];
      Vec u(n), v(n);  // f'(b).c_prev.lam and f'(a).x.lam
      for (int i = 0; i < n; ++i) {
        u[i] = gate_deriv_from_value(act, g.b[nu][i]) * prev.c(nu)[i] * lam[i];
        v[i] = gate_deriv_from_value(act, g.a[nu][i]) * x[i] * lam[i];
      }
      add_outer(res.grads.rgc[2 * nu], u, prev.c(nu));
      add_outer(res.grads.rgc[2 * nu + 1], v, prev.c(1 - nu), -1.0);

      Vec wu = matvec_transposed(model.rgc.w[2 * nu], u);
      Vec wv = matvec_transposed(model.rgc.w[2 * nu + 1], v);
      Vec& same = nu == 0 ? lam_s[t - 1] : lam_m[t - 1];
      Vec& cross = nu == 0 ? lam_m[t - 1] : lam_s[t - 1];
      for (int j = 0; j < n; ++j) {
        same[j] += g.b[nu][j] * lam[j] + wu[j];
        cross[j] -= wv[j];
      }
    }
  }
  return res;
}

JepaGrads finite_diff_grad(const JepaModel& model, const std::vector<Vec>& patches, double eps,
                           const Vec& weights) {
  JepaModel work = model;
  const JepaModel& base = model;  // frozen-target reference
  auto eval = [&]() {
    return model.stop_gradient ? evaluate_frozen_targets(work, base, patches, weights)
                               : evaluate_sequence(work, patches, weights).loss;
  };

  JepaGrads g = JepaGrads::zeros_like(model);
  std::vector<std::pair<double*, double*>> params;
  auto push_block = [&params](Vec& w, Vec& grad) {
    for (std::size_t i = 0; i < w.size(); ++i) params.emplace_back(&w[i], &grad[i]);
  };
  for (int k = 0; k < 4; ++k) push_block(work.rgc.w[k].data(), g.rgc[k].data());
  push_block(work.embed.data(), g.embed.data());
  push_block(work.predictor.w1.data(), g.predictor.w1.data());
  push_block(work.predictor.b1, g.predictor.b1);
  push_block(work.predictor.w2.data(), g.predictor.w2.data());
  push_block(work.predictor.b2, g.predictor.b2);

  for (auto [wp, gp] : params) {
    const double orig = *wp;
    const double step = eps * std::max(1.0, std::fabs(orig));
    *wp = orig + step;
    const double fp = eval();
    *wp = orig - step;
    const double fm = eval();
    *wp = orig;
    *gp = (fp - fm) / (2.0 * step);
  }
  return g;
}

double fd_scalar(double (*f)(double, void*), void* ctx, double x, double eps) {
  const double step = eps * std::max(1.0, std::fabs(x));
  return (f(x + step, ctx) - f(x - step, ctx)) / (2.0 * step);
}

RtrlResult full_rtrl_grad(const JepaModel& model, const std::vector<Vec>& patches,
                          const Vec& weights) {
  const int n = model.n();
  if (n > 64)
    throw CapacityError("unreduced sensitivity tensor needs 8 n^3 reals; refusing n > 64");
  const int T = static_cast<int>(patches.size());
  const Vec w = resolve_weights(weights, T);

  RtrlResult res;
  res.grads = JepaGrads::zeros_like(model);

  // gamma[nu][k] holds d c^nu_i(t) / d W^k_pq as an n x n^2 matrix: row i is
  // the flattened (p,q) slice. The dense recursion is then two matmuls.
  std::array<std::array<Matrix, 4>, 2> gam;
  for (int nu = 0; nu < 2; ++nu)
    for (int k = 0; k < 4; ++k) {
      gam[nu][k] = Matrix(n, n * n);
      res.tensor_reals += gam[nu][k].size();
    }

  auto accumulate = [&](const Vec& dL_ds, const std::array<std::array<Matrix, 4>, 2>& tensor) {
    for (int k = 0; k < 4; ++k) {
      const Matrix& slab = tensor[0][k];
      Matrix& dst = res.grads.rgc[k];
      for (int i = 0; i < n; ++i) {
        const double di = dL_ds[i];
        if (di == 0.0) continue;
        const double* row = slab.row_ptr(i);
        for (int p = 0; p < n; ++p)
          for (int q = 0; q < n; ++q) dst(p, q) += di * row[p * n + q];
      }
    }
  };

  RgcState state = RgcState::zero(n);
  Vec h_prev;
  for (int t = 1; t <= T; ++t) {
    const Vec x = featurize(model, patches[t - 1]);
    RgcGates g;
    const RgcState next = rgc_step(state, x, model.rgc, &g);
    const Vec h_t = matvec(model.embed, next.s);

    LossEval ev;
    if (t >= 2) {
      ev = jepa_loss(h_t, predict_next(model, h_prev), model.loss_kind, model.lambda1);
      res.loss += w[t - 2] * ev.loss;
      Vec d_pred = vec_scale(ev.d_pred, w[t - 2]);
      Vec dh_prev = predictor_backprop(model.predictor, h_prev, d_pred, &res.grads.predictor);
      add_outer(res.grads.embed, dh_prev, state.s);
      accumulate(matvec_transposed(model.embed, dh_prev), gam);  // tensor still at t-1
    }

    const RgcDenseJacobians jac = rgc_dense_jacobians(state, x, model.rgc);
    const RgcSourceTerms src = rgc_source_terms(state, x, model.rgc, g);
    std::array<std::array<Matrix, 4>, 2> fresh;
    for (int nu = 0; nu < 2; ++nu)
      for (int k = 0; k < 4; ++k) {
        fresh[nu][k] = matmul(jac.A[nu], gam[nu][k]);
        fresh[nu][k].add_scaled(matmul(jac.B[nu], gam[1 - nu][k]), 1.0);
      }
    for (int k = 0; k < 4; ++k) {
      const int nu_k = k / 2;
      const Matrix& J = k % 2 == 0 ? src.j0[nu_k] : src.j1[nu_k];
      Matrix& m = fresh[nu_k][k];
      for (int p = 0; p < n; ++p) {
        double* row = m.row_ptr(p);
        for (int q = 0; q < n; ++q) row[p * n + q] += J(p, q);
      }
    }
    gam = std::move(fresh);

    if (!model.stop_gradient && t >= 2) {
      Vec d_target = vec_scale(ev.d_target, w[t - 2]);
      add_outer(res.grads.embed, d_target, next.s);
      accumulate(matvec_transposed(model.embed, d_target), gam);  // tensor now at t
    }

    for (int nu = 0; nu < 2; ++nu)
      for (int k = 0; k < 4; ++k)
        for (int i = 0; i < n; ++i) {
          const double* row = gam[nu][k].row_ptr(i);
          for (int p = 0; p < n; ++p) {
            if (p == i) continue;
            for (int q = 0; q < n; ++q)
              res.max_off_slice = std::max(res.max_off_slice, std::fabs(row[p * n + q]));
          }
        }

    state = next;
    h_prev = h_t;
  }

  for (int nu = 0; nu < 2; ++nu)
    for (int k = 0; k < 4; ++k) {
      Matrix slice(n, n);
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) slice(p, q) = gam[nu][k](p, p * n + q);
      res.final_slices[nu * 4 + k] = std::move(slice);
    }
  return res;
}

RfpResult rfp_grad(const JepaModel& model, const std::vector<Vec>& patches, const Vec& weights) {
  if (!model.stop_gradient)
    throw ValidationError(
        "the forward gradient reads the loss only against s(t-1); it needs stop_gradient on");
  const int n = model.n();
  const int T = static_cast<int>(patches.size());
  const Vec w = resolve_weights(weights, T);

  RfpResult res;
  res.grads = JepaGrads::zeros_like(model);
  SensitivityState sens = rfp_init(n);

  RgcState state = RgcState::zero(n);
  Vec h_prev;
  for (int t = 1; t <= T; ++t) {
    const Vec x = featurize(model, patches[t - 1]);
    RgcGates g;
    const RgcState next = rgc_step(state, x, model.rgc, &g);
    const Vec h_t = matvec(model.embed, next.s);

    if (t >= 2) {
      LossEval ev = jepa_loss(h_t, predict_next(model, h_prev), model.loss_kind, model.lambda1);
      res.loss += w[t - 2] * ev.loss;
      Vec d_pred = vec_scale(ev.d_pred, w[t - 2]);
      Vec dh_prev = predictor_backprop(model.predictor, h_prev, d_pred, &res.grads.predictor);
      add_outer(res.grads.embed, dh_prev, state.s);
      accumulate_gradient(res.grads.rgc, matvec_transposed(model.embed, dh_prev), sens);
    }

    const RgcGateFactors mu = rgc_gate_factors(state, x, model.rgc, g);
    const RgcSourceTerms src = rgc_source_terms(state, x, model.rgc, g);
    rfp_update(sens, t, mu, src);

    state = next;
    h_prev = h_t;
  }

  res.sens_reals = sens.total_reals();
  res.ops = sens.ops;
  for (int nu = 0; nu < 2; ++nu)
    for (int k = 0; k < 4; ++k) res.final_gammas[nu * 4 + k] = sens.gamma[nu][k];
  return res;
}

std::vector<std::pair<std::string, double>> block_errors(const JepaGrads& a, const JepaGrads& b,
                                                         const JepaModel& model) {
  static const char* kRgcNames[4] = {"w_ss", "w_ms", "w_mm", "w_sm"};
  std::vector<std::pair<std::string, double>> out;
  for (int k = 0; k < 4; ++k) out.emplace_back(kRgcNames[k], relative_error(a.rgc[k], b.rgc[k]));
  out.emplace_back("embed", relative_error(a.embed, b.embed));
  out.emplace_back("pred_w1", relative_error(a.predictor.w1, b.predictor.w1));
  if (model.predictor.kind == PredictorKind::Mlp) {
    out.emplace_back("pred_b1", relative_error(a.predictor.b1, b.predictor.b1));
    out.emplace_back("pred_w2", relative_error(a.predictor.w2, b.predictor.w2));
    out.emplace_back("pred_b2", relative_error(a.predictor.b2, b.predictor.b2));
  }
  return out;
}

void write_gradient_report_csv(const GradientReport& report, std::ostream& out) {
  out << "method_a,method_b,block,rel_err_max,rel_err_mean,n,T,seed\n";
  out << std::setprecision(17);
  for (const auto& row : report) {
    out << row.method_a << ',' << row.method_b << ',' << row.block << ',' << row.rel_err_max << ','
        << row.rel_err_mean << ',' << row.n << ',' << row.T << ',' << row.seed << '\n';
  }
}

}  // namespace rjepa
