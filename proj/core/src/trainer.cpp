#include "rjepa/trainer.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <ostream>
#include <string>
#include <thread>

#include "rjepa/analysis.hpp"
#include "rjepa/errors.hpp"

namespace rjepa {

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

void check_divergence(double loss, double threshold, int epoch, int seq) {
  if (std::isfinite(loss) && loss <= threshold) return;
  throw DivergenceError("loss " + std::to_string(loss) + " at epoch " + std::to_string(epoch) +
                        ", sequence " + std::to_string(seq) +
                        " breached the divergence guard (" + std::to_string(threshold) + ")");
}

void step_dense(Vec& w, const Vec& g, double lr, double shrink) {
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = (w[i] - lr * g[i]) * shrink;
}

EpochMetrics evaluate_model(const JepaModel& model, const SequenceDataset& eval, Psi psi,
                            int epoch, double wall_ms) {
  EpochMetrics em;
  em.epoch = epoch;
  em.wall_ms = wall_ms;

  const int S = eval.count();
  const Vec chain = psi_chain_weights(psi, eval.T);
  em.curve.assign(eval.T - 1, 0.0);
  for (int s = 0; s < S; ++s) {
    SequenceEval ev = evaluate_sequence(model, eval.sequences[s], chain);
    em.mean_loss += ev.loss / S;
    for (std::size_t i = 0; i < ev.per_step.size(); ++i) em.curve[i] += ev.per_step[i] / S;
  }

  const Matrix feats = jepa_features(model, eval);
  em.participation_ratio = covariance_spectrum(feats).participation_ratio;
  em.balance_residual = balance_residual(model.predictor.w1, feats, model.lambda1);
  return em;
}

void prepare(JepaModel& model, const SequenceDataset& train, const SequenceDataset& eval,
             const TrainConfig& cfg) {
  cfg.validate();
  train.validate();
  eval.validate();
  if (train.count() == 0 || eval.count() == 0)
    throw ValidationError("training and evaluation sets must be non-empty");
  model.stop_gradient = cfg.stop_gradient;
  model.loss_kind = cfg.loss_kind;
  model.validate();
}

}  // namespace

Vec psi_chain_weights(Psi psi, int T) {
  if (T < 2) throw ValidationError("psi weights need T >= 2");
  Vec w(T - 1, 0.0);
  switch (psi.kind) {
    case Psi::Kind::Mean:
      for (auto& v : w) v = 1.0 / T;
      break;
    case Psi::Kind::FinalStepOnly:
      w.back() = 1.0;
      break;
    case Psi::Kind::TScaled:
      for (int i = 0; i < T - 1; ++i) w[i] = static_cast<double>(i + 2);
      break;
  }
  return w;
}

AggregateLoss aggregate_loss(const Vec& per_step, int T, Psi psi) {
  if (static_cast<int>(per_step.size()) != T - 1)
    throw ShapeError("per-step losses must have length T-1");
  AggregateLoss out;
  out.chain = psi_chain_weights(psi, T);
  out.value = dot(out.chain, per_step);
  return out;
}

void TrainConfig::validate() const {
  if (!(lr >= 0.0)) throw ValidationError("learning rate must be >= 0");
  if (!(weight_decay >= 0.0)) throw ValidationError("weight decay must be >= 0");
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch < 1) throw ValidationError("batch size must be >= 1");
  if (threads < 1) throw ValidationError("threads must be >= 1");
  if (!(divergence_threshold > 0.0)) throw ValidationError("divergence threshold must be > 0");
}

void sgd_step(JepaModel& model, const JepaGrads& g, double lr, double eta) {
  const double shrink = 1.0 - lr * eta;
  if (model.rgc.diagonal_gates) {
    for (int k = 0; k < 4; ++k) {
      Matrix& w = model.rgc.w[k];
      for (int i = 0; i < w.rows(); ++i) w(i, i) = (w(i, i) - lr * g.rgc[k](i, i)) * shrink;
    }
  } else {
    for (int k = 0; k < 4; ++k) step_dense(model.rgc.w[k].data(), g.rgc[k].data(), lr, shrink);
  }
  step_dense(model.embed.data(), g.embed.data(), lr, shrink);
  step_dense(model.predictor.w1.data(), g.predictor.w1.data(), lr, shrink);
  step_dense(model.predictor.b1, g.predictor.b1, lr, shrink);
  step_dense(model.predictor.w2.data(), g.predictor.w2.data(), lr, shrink);
  step_dense(model.predictor.b2, g.predictor.b2, lr, shrink);
}

Matrix jepa_features(const JepaModel& model, const SequenceDataset& data) {
  const int S = data.count();
  const int T = data.T;
  Matrix feats(model.d_h(), S * T);
  const double scale = 1.0 / std::sqrt(static_cast<double>(S) * T);
  int col = 0;
  for (int s = 0; s < S; ++s) {
    Trajectory traj = encode_sequence(model, data.sequences[s]);
    for (int t = 0; t < T; ++t, ++col)
      for (int i = 0; i < feats.rows(); ++i) feats(i, col) = traj.h[t][i] * scale;
  }
  return feats;
}

TrainMetrics train_bptt(JepaModel& model, const SequenceDataset& train,
                        const SequenceDataset& eval, const TrainConfig& cfg) {
  prepare(model, train, eval, cfg);
  const auto start = std::chrono::steady_clock::now();
  const Vec chain = psi_chain_weights(cfg.psi, train.T);
  const int S = train.count();

  TrainMetrics tm;
  tm.epochs.push_back(evaluate_model(model, eval, cfg.psi, 0, elapsed_ms(start)));

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    int idx = 0;
    while (idx < S) {
      const int bsz = std::min(cfg.batch, S - idx);
      std::vector<BpttResult> results(bsz);

      const int nthreads = std::min(cfg.threads, bsz);
      if (nthreads > 1) {
        std::atomic<int> cursor{0};
        std::vector<std::exception_ptr> errors(nthreads);
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (int k = 0; k < nthreads; ++k)
          pool.emplace_back([&, k] {
            try {
              for (int j = cursor.fetch_add(1); j < bsz; j = cursor.fetch_add(1))
                results[j] = bptt_grad(model, train.sequences[idx + j], chain);
            } catch (...) {
              errors[k] = std::current_exception();
            }
          });
        for (auto& th : pool) th.join();
        for (auto& e : errors)
          if (e) std::rethrow_exception(e);
      } else {
        for (int j = 0; j < bsz; ++j)
          results[j] = bptt_grad(model, train.sequences[idx + j], chain);
      }

      // reduction in index order keeps runs bitwise reproducible
      JepaGrads acc = JepaGrads::zeros_like(model);
      double batch_loss = 0.0;
      for (int j = 0; j < bsz; ++j) {
        acc.add_scaled(results[j].grads, 1.0 / bsz);
        batch_loss += results[j].loss / bsz;
        tm.peak_state_reals = std::max(tm.peak_state_reals, results[j].trajectory_reals);
      }
      check_divergence(batch_loss, cfg.divergence_threshold, epoch, idx);
      sgd_step(model, acc, cfg.lr, cfg.weight_decay);
      idx += bsz;
    }
    tm.epochs.push_back(evaluate_model(model, eval, cfg.psi, epoch, elapsed_ms(start)));
    check_divergence(tm.epochs.back().mean_loss, cfg.divergence_threshold, epoch, -1);
  }
  return tm;
}

TrainMetrics train_rfp(JepaModel& model, const SequenceDataset& train, const SequenceDataset& eval,
                       const TrainConfig& cfg) {
  if (!cfg.stop_gradient)
    throw ValidationError("forward-mode training requires the stop-gradient target");
  prepare(model, train, eval, cfg);
  const auto start = std::chrono::steady_clock::now();
  const Vec chain = psi_chain_weights(cfg.psi, train.T);
  const int S = train.count();
  const int n = model.n();
  const std::size_t rolling_reals = 2 * static_cast<std::size_t>(n);

  TrainMetrics tm;
  tm.epochs.push_back(evaluate_model(model, eval, cfg.psi, 0, elapsed_ms(start)));

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (int s = 0; s < S; ++s) {
      const std::vector<Vec>& patches = train.sequences[s];
      if (cfg.cadence == UpdateCadence::PerSequence) {
        RfpResult r = rfp_grad(model, patches, chain);
        tm.rfp_ops += r.ops;
        tm.peak_state_reals = std::max(tm.peak_state_reals, r.sens_reals + rolling_reals);
        check_divergence(r.loss, cfg.divergence_threshold, epoch, s);
        sgd_step(model, r.grads, cfg.lr, cfg.weight_decay);
        continue;
      }

      // per-step cadence: apply each step's contribution as soon as the
      // sensitivities allow; factors are taken before the update so they
      // describe the transition actually executed
      SensitivityState sens = rfp_init(n);
      RgcState state = RgcState::zero(n);
      Vec h_prev;
      double seq_loss = 0.0;
      const int T = static_cast<int>(patches.size());
      for (int t = 1; t <= T; ++t) {
        const Vec x = featurize(model, patches[t - 1]);
        RgcGates g;
        const RgcState next = rgc_step(state, x, model.rgc, &g);
        const Vec h_t = matvec(model.embed, next.s);
        const RgcGateFactors mu = rgc_gate_factors(state, x, model.rgc, g);
        const RgcSourceTerms src = rgc_source_terms(state, x, model.rgc, g);

        if (t >= 2) {
          LossEval ev = jepa_loss(h_t, predict_next(model, h_prev), model.loss_kind,
                                  model.lambda1);
          seq_loss += chain[t - 2] * ev.loss;
          JepaGrads gs = JepaGrads::zeros_like(model);
          Vec d_pred = vec_scale(ev.d_pred, chain[t - 2]);
          Vec dh_prev = predictor_backprop(model.predictor, h_prev, d_pred, &gs.predictor);
          add_outer(gs.embed, dh_prev, state.s);
          accumulate_gradient(gs.rgc, matvec_transposed(model.embed, dh_prev), sens);
          sgd_step(model, gs, cfg.lr, cfg.weight_decay);
        }

        rfp_update(sens, t, mu, src);
        state = next;
        h_prev = h_t;
      }
      tm.rfp_ops += sens.ops;
      tm.peak_state_reals = std::max(tm.peak_state_reals, sens.total_reals() + rolling_reals);
      check_divergence(seq_loss, cfg.divergence_threshold, epoch, s);
    }
    tm.epochs.push_back(evaluate_model(model, eval, cfg.psi, epoch, elapsed_ms(start)));
    check_divergence(tm.epochs.back().mean_loss, cfg.divergence_threshold, epoch, -1);
  }
  return tm;
}

TestbedTraces train_testbed(LinearTestbed& tb, const SequenceDataset& data,
                            const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  tb.validate();
  if (data.count() == 0) throw ValidationError("testbed training set must be non-empty");
  tb.eta = cfg.weight_decay;

  const int S = data.count();
  const double shrink = 1.0 - cfg.lr * cfg.weight_decay;
  Matrix& top = tb.enc.p.back();
  TestbedTraces traces;

  // trace entry i describes the parameters after i updates; the final entry
  // needs one extra evaluation pass after the last step
  for (int it = 0; it <= cfg.epochs; ++it) {
    TestbedGrads acc{Matrix(tb.w_gh.rows(), tb.w_gh.cols()),
                     Matrix(tb.w_ga.rows(), tb.w_ga.cols())};
    Matrix enc_acc(top.rows(), top.cols());
    double loss = 0.0;
    std::vector<Vec> all_h;
    all_h.reserve(static_cast<std::size_t>(S) * data.T);

    const bool last = it == cfg.epochs;
    for (int s = 0; s < S; ++s) {
      const TestbedRollout roll = testbed_rollout(tb, data.sequences[s]);
      loss += testbed_loss(tb, roll) / S;
      for (const Vec& h : roll.h) all_h.push_back(h);
      if (last) continue;
      const TestbedGrads g = testbed_closed_form_grads(tb, testbed_moments(roll));
      acc.w_gh.add_scaled(g.w_gh, 1.0 / S);
      acc.w_ga.add_scaled(g.w_ga, 1.0 / S);
      enc_acc.add_scaled(testbed_encoder_grad(tb, roll), 1.0 / S);
    }
    check_divergence(loss, cfg.divergence_threshold, it, -1);
    traces.loss.push_back(loss);
    traces.balance.push_back(balance_residual(tb.w_gh, features_matrix(all_h), tb.lambda1));
    if (last) break;

    step_dense(tb.w_gh.data(), acc.w_gh.data(), cfg.lr, shrink);
    step_dense(tb.w_ga.data(), acc.w_ga.data(), cfg.lr, shrink);
    step_dense(top.data(), enc_acc.data(), cfg.lr, shrink);
  }
  return traces;
}

void write_metrics_csv(const TrainMetrics& m, std::ostream& out) {
  out << "epoch,t,mean_loss,balance_residual,participation_ratio,wall_ms\n";
  for (const auto& em : m.epochs)
    for (std::size_t i = 0; i < em.curve.size(); ++i)
      out << em.epoch << ',' << (i + 2) << ',' << em.curve[i] << ',' << em.balance_residual << ','
          << em.participation_ratio << ',' << em.wall_ms << '\n';
}

}  // namespace rjepa
