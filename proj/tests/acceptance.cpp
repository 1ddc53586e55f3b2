// Acceptance gate. Eight numbered checks, one pass/fail line each; --only N
// runs a single one (that is how ctest registers them individually). Exit 0
// iff every executed check passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "rjepa/analysis.hpp"
#include "rjepa/jepa.hpp"
#include "rjepa/oracles.hpp"
#include "rjepa/presets.hpp"
#include "rjepa/rng.hpp"
#include "rjepa/testbed.hpp"
#include "rjepa/trainer.hpp"

using namespace rjepa;

namespace {

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

bool report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::ostringstream line;
  line << "[" << id << "] " << name;
  while (line.tellp() < 34) line << ' ';
  line << (pass ? "PASS" : "FAIL") << "  " << detail;
  std::cout << line.str() << "\n" << std::flush;
  return pass;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

std::vector<Vec> random_patches(int dim, int T, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vec> xs(static_cast<std::size_t>(T), Vec(dim));
  for (auto& x : xs)
    for (auto& v : x) v = rng.normal();
  return xs;
}

// desk model with random diagonal-gate RGC weights and jittered embed /
// predictor, so no block has a special structure the comparisons could hide in
JepaModel random_instance(int n, int d_h, bool diagonal, PredictorKind kind, LossKind loss,
                          std::uint64_t seed) {
  JepaModel m = make_desk_model(n + 3, n, d_h, kind, diagonal, seed);
  Rng rng(Rng::substream_seed(seed, 101));
  m.rgc = RgcWeights::random(n, 0.5 / std::sqrt(static_cast<double>(n)), diagonal, rng);
  for (int i = 0; i < m.embed.rows(); ++i)
    for (int j = 0; j < m.embed.cols(); ++j) m.embed(i, j) += 0.1 * rng.normal();
  for (int i = 0; i < m.predictor.w1.rows(); ++i)
    for (int j = 0; j < m.predictor.w1.cols(); ++j) m.predictor.w1(i, j) += 0.1 * rng.normal();
  m.loss_kind = loss;
  return m;
}

double max_block_err(const JepaGrads& a, const JepaGrads& b, const JepaModel& m) {
  double worst = 0.0;
  for (const auto& [block, err] : block_errors(a, b, m)) {
    (void)block;
    worst = std::max(worst, err);
  }
  return worst;
}

double max_rgc_block_err(const JepaGrads& a, const JepaGrads& b, const JepaModel& m) {
  double worst = 0.0;
  for (const auto& [block, err] : block_errors(a, b, m))
    if (block.rfind("w_", 0) == 0) worst = std::max(worst, err);
  return worst;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) worst = std::max(worst, std::fabs(a(i, j) - b(i, j)));
  return worst;
}

// ---- 1: four-way gradient agreement on diagonal-gate instances ----

bool criterion1() {
  Stopwatch sw;
  const int instances = 50;
  double rfp_fd = 0.0, bptt_fd = 0.0, slice = 0.0;
  for (int i = 0; i < instances; ++i) {
    Rng pick(Rng::substream_seed(4100, static_cast<std::uint64_t>(i)));
    const int n = 2 + static_cast<int>(pick.uniform() * 6.999);    // 2..8
    const int d_h = 2 + static_cast<int>(pick.uniform() * (n - 1));  // 2..n
    const int T = 3 + static_cast<int>(pick.uniform() * 9.999);    // 3..12
    const LossKind loss = (i % 3 == 2) ? LossKind::Cosine : LossKind::Squared;
    const PredictorKind kind = (i % 5 == 4) ? PredictorKind::Mlp : PredictorKind::Linear;
    const JepaModel m = random_instance(n, d_h, true, kind, loss, 900 + i);
    const auto xs = random_patches(m.patch_dim(), T, 500 + i);

    const RfpResult rfp = rfp_grad(m, xs);
    const BpttResult bptt = bptt_grad(m, xs);
    const RtrlResult rtrl = full_rtrl_grad(m, xs);
    const JepaGrads fd = finite_diff_grad(m, xs);

    rfp_fd = std::max(rfp_fd, max_block_err(rfp.grads, fd, m));
    bptt_fd = std::max(bptt_fd, max_block_err(bptt.grads, fd, m));
    for (int k = 0; k < 8; ++k)
      slice = std::max(slice, max_abs_diff(rfp.final_gammas[k], rtrl.final_slices[k]));
  }
  const double secs = sw.seconds();
  const bool pass = rfp_fd < 1e-6 && slice < 1e-12 && bptt_fd < 1e-6 && secs < 60.0;
  return report(1, "gradient exactness", pass,
                "rfp_vs_fd=" + fmt(rfp_fd) + " gamma_slice=" + fmt(slice) +
                    " bptt_vs_fd=" + fmt(bptt_fd) + " (50 instances, " + fmt(secs) + "s)");
}

// ---- 2: sensitivity-tensor sparsity and the dense-gate deviation trend ----

bool criterion2() {
  double off_slice = 0.0;
  for (int i = 0; i < 10; ++i) {
    const JepaModel m = random_instance(3 + i % 5, 3, true, PredictorKind::Linear,
                                        LossKind::Squared, 2200 + i);
    const auto xs = random_patches(m.patch_dim(), 9, 2300 + i);
    off_slice = std::max(off_slice, full_rtrl_grad(m, xs).max_off_slice);
  }

  // the same diagonal base plus one frozen off-diagonal pattern at three
  // scales a factor 10 apart; the collapsed recursion's error should track
  // the scale down
  const int n = 6;
  double dev[3] = {0.0, 0.0, 0.0};
  const double scales[3] = {0.3, 0.03, 0.003};
  for (int i = 0; i < 5; ++i) {
    const JepaModel base = random_instance(n, 4, true, PredictorKind::Linear,
                                           LossKind::Squared, 2400 + i);
    const auto xs = random_patches(base.patch_dim(), 8, 2500 + i);
    Rng prng(Rng::substream_seed(2600, static_cast<std::uint64_t>(i)));
    std::array<Matrix, 4> pattern;
    for (auto& p : pattern) {
      p = Matrix(n, n);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
          if (r != c) p(r, c) = prng.normal() / std::sqrt(static_cast<double>(n));
    }
    for (int si = 0; si < 3; ++si) {
      JepaModel m = base;
      m.rgc.diagonal_gates = false;
      for (int k = 0; k < 4; ++k)
        for (int r = 0; r < n; ++r)
          for (int c = 0; c < n; ++c) m.rgc.w[k](r, c) += scales[si] * pattern[k](r, c);
      const RfpResult rfp = rfp_grad(m, xs);
      const BpttResult bptt = bptt_grad(m, xs);
      dev[si] = std::max(dev[si], max_rgc_block_err(rfp.grads, bptt.grads, m));
    }
  }

  const bool pass = off_slice < 1e-14 && dev[0] > dev[1] && dev[1] > dev[2];
  return report(2, "structural sparsity", pass,
                "off_slice=" + fmt(off_slice) + " dense_dev(0.3/0.03/0.003)=" + fmt(dev[0]) +
                    "/" + fmt(dev[1]) + "/" + fmt(dev[2]));
}

// ---- 3: counted memory and the wall-time scaling exponent ----

bool criterion3() {
  Stopwatch sw;
  const BenchReport rfp = scaling_bench({32, 64, 128, 256}, 24, BenchMode::Rfp, 777);
  const BenchReport rtrl = scaling_bench({8, 16, 32}, 6, BenchMode::FullRtrl, 778);

  bool mem_ok = true;
  for (const auto& row : rfp.rows) {
    const auto n = static_cast<std::size_t>(row.n);
    mem_ok = mem_ok && row.state_reals == 8 * n * n;
  }
  for (const auto& row : rtrl.rows) {
    const auto n = static_cast<std::size_t>(row.n);
    mem_ok = mem_ok && row.state_reals == 8 * n * n * n;
  }
  const double secs = sw.seconds();
  const bool slope_ok = rfp.time_slope >= 1.7 && rfp.time_slope <= 2.5;
  const bool pass = mem_ok && slope_ok && secs < 300.0;
  return report(3, "complexity scaling", pass,
                std::string("memory=") + (mem_ok ? "exact" : "WRONG") +
                    " time_slope=" + fmt(rfp.time_slope) + " (" + fmt(secs) + "s)");
}

// ---- 4: predictor/feature balance on the linear testbed ----

bool criterion4() {
  Stopwatch sw;
  const SequenceDataset data = preset_dataset(white_process(24), 300, 100, 41);

  // decay run starts unbalanced and must contract; no-decay run starts on the
  // balanced manifold, which training is supposed to preserve
  double resid[2] = {0.0, 0.0};
  double wmax[2] = {0.0, 0.0};
  const double etas[2] = {0.05, 0.0};
  for (int i = 0; i < 2; ++i) {
    LinearTestbed tb = make_balance_testbed(etas[i] == 0.0, 42);
    TrainConfig cfg;
    cfg.lr = 0.2;
    cfg.weight_decay = etas[i];
    cfg.epochs = 400;
    const TestbedTraces traces = train_testbed(tb, data, cfg);
    resid[i] = traces.balance.back();
    wmax[i] = tb.w_gh.max_abs();
  }
  const double secs = sw.seconds();
  const bool pass = resid[0] < 0.05 && resid[1] < 0.10 && wmax[0] > 0.1 && wmax[1] > 0.1 &&
                    secs < 120.0;
  return report(4, "balance convergence", pass,
                "residual(eta=0.05)=" + fmt(resid[0]) + " residual(eta=0)=" + fmt(resid[1]) +
                    " |W|=" + fmt(wmax[0]) + "/" + fmt(wmax[1]) + " (" + fmt(secs) + "s)");
}

// ---- 5: stop-gradient vs collapse, paired runs from one init ----

bool criterion5() {
  Stopwatch sw;
  const LatentProcessParams params = collapse_process();
  const SequenceDataset train = preset_dataset(params, 64, 40, 321, 0);
  const SequenceDataset eval = preset_dataset(params, 32, 40, 321, 64);
  const JepaModel base = make_desk_model(64, 48, 40, PredictorKind::Linear, true, 321);

  TrainConfig cfg;
  cfg.mode = TrainMode::Bptt;
  cfg.lr = 0.02;
  cfg.epochs = 60;
  cfg.batch = 4;
  cfg.seed = 321;

  double pr[2] = {0.0, 0.0};
  const bool stops[2] = {true, false};
  for (int i = 0; i < 2; ++i) {
    JepaModel m = base;
    cfg.stop_gradient = stops[i];
    const TrainMetrics metrics = train_bptt(m, train, eval, cfg);
    pr[i] = metrics.epochs.back().participation_ratio;
  }
  const double secs = sw.seconds();
  const double d_h = base.d_h();
  const bool pass = pr[0] >= 0.4 * d_h && pr[1] <= 0.1 * d_h && secs < 600.0;
  return report(5, "collapse avoidance", pass,
                "pr(stop)=" + fmt(pr[0]) + " pr(no_stop)=" + fmt(pr[1]) + " d_h=" + fmt(d_h) +
                    " (" + fmt(secs) + "s)");
}

// ---- 6: loss-vs-time shape after training, both modes ----

bool criterion6() {
  Stopwatch sw;
  const LatentProcessParams params = predictable_process();
  const int T = 100;
  const SequenceDataset train = preset_dataset(params, 512, T, 99, 0);
  const SequenceDataset eval = preset_dataset(params, 1024, T, 99, 512);
  JepaModel base = make_desk_model(32, 24, 12, PredictorKind::Linear, true, 99);
  // bounded loss keeps the high learning rate the gates need inside the
  // stable region; squared loss caps lr well below where memory can form
  base.loss_kind = LossKind::Cosine;

  // epoch-0 flatness wants the sampling noise well under the 5% band, so the
  // untrained curve is averaged over many more sequences than training uses
  Vec curve0(static_cast<std::size_t>(T - 1), 0.0);
  const int chunks = 60, per_chunk = 200;
  for (int c = 0; c < chunks; ++c) {
    const SequenceDataset big =
        preset_dataset(params, per_chunk, T, 99, 1000 + static_cast<std::uint64_t>(c) * per_chunk);
    for (const auto& seq : big.sequences) {
      const SequenceEval ev = evaluate_sequence(base, seq);
      for (std::size_t t = 0; t < curve0.size(); ++t) curve0[t] += ev.per_step[t];
    }
  }
  double lo = curve0[0], hi = curve0[0], mean0 = 0.0;
  for (double v : curve0) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    mean0 += v / static_cast<double>(curve0.size());
  }
  const double flatness = (hi - lo) / mean0;

  double drop[2] = {0.0, 0.0};
  const TrainMode modes[2] = {TrainMode::Bptt, TrainMode::Rfp};
  for (int i = 0; i < 2; ++i) {
    JepaModel m = base;
    TrainConfig cfg;
    cfg.mode = modes[i];
    cfg.lr = 0.1;
    cfg.epochs = 6;
    cfg.batch = 4;
    cfg.seed = 99;
    cfg.loss_kind = LossKind::Cosine;
    const TrainMetrics metrics = modes[i] == TrainMode::Bptt ? train_bptt(m, train, eval, cfg)
                                                             : train_rfp(m, train, eval, cfg);
    const Vec& curve = metrics.epochs.back().curve;  // L(t), t = 2..T
    double early = 0.0, late = 0.0;
    for (int t = 2; t <= 5; ++t) early += curve[t - 2] / 4.0;
    for (int t = 80; t <= 100; ++t) late += curve[t - 2] / 21.0;
    drop[i] = 1.0 - late / early;
  }
  const double secs = sw.seconds();
  const bool pass = flatness <= 0.05 && drop[0] >= 0.20 && drop[1] >= 0.20;
  return report(6, "loss-curve shape", pass,
                "epoch0_spread=" + fmt(flatness) + " drop(bptt)=" + fmt(drop[0]) +
                    " drop(rfp)=" + fmt(drop[1]) + " (" + fmt(secs) + "s)");
}

// ---- 7: moment tensors, closed form vs Monte Carlo ----

bool criterion7() {
  Matrix u1(1, 1), s1(1, 1);
  u1(0, 0) = 0.5;
  s1(0, 0) = 1.0;
  const MomentReport scalar = moment_closed_form(u1, s1);
  const bool exact = std::fabs(scalar.t000[0] - 3.2) < 1e-12 &&
                     std::fabs(scalar.t011[0] - 0.8) < 1e-12 &&
                     std::fabs(scalar.t122[0] - 0.4) < 1e-12;

  double worst_z = 0.0;
  for (int i = 0; i < 10; ++i) {
    Rng rng(Rng::substream_seed(7700, static_cast<std::uint64_t>(i)));
    const int n = 1 + i % 3;
    Matrix u(n, n), a(n, n), sigma(n, n);
    for (int d = 0; d < n; ++d) u(d, d) = rng.uniform(0.1, 0.6);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) a(r, c) = rng.normal();
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        double dot = r == c ? 0.3 : 0.0;
        for (int k = 0; k < n; ++k) dot += a(r, k) * a(c, k);
        sigma(r, c) = dot;
      }
    const MomentReport cf = moment_closed_form(u, sigma);
    const MomentReport mc =
        moment_monte_carlo(u, sigma, 30000, 64, Rng::substream_seed(7701, i));
    const Vec* cfs[3] = {&cf.t000, &cf.t011, &cf.t122};
    const Vec* mcs[3] = {&mc.mc000, &mc.mc011, &mc.mc122};
    const Vec* ses[3] = {&mc.se000, &mc.se011, &mc.se122};
    for (int k = 0; k < 3; ++k)
      for (std::size_t e = 0; e < cfs[k]->size(); ++e) {
        const double z =
            std::fabs((*cfs[k])[e] - (*mcs[k])[e]) / std::max((*ses[k])[e], 1e-12);
        worst_z = std::max(worst_z, z);
      }
  }

  Vec grid = {0.125, 0.2, 0.3, 0.4, 0.5};
  const auto [s011, s122] = tau_scaling_check(s1, grid);
  const bool slopes_ok = s011 >= 1.9 && s011 <= 2.15 && s122 >= 2.9 && s122 <= 3.15;

  const bool pass = exact && worst_z <= 3.0 && slopes_ok;
  return report(7, "moment tensors", pass,
                std::string("scalar=") + (exact ? "exact" : "WRONG") + " worst_z=" + fmt(worst_z) +
                    " slopes=" + fmt(s011) + "/" + fmt(s122));
}

// ---- 8: final-step-only aggregation, online vs reverse ----

bool criterion8() {
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    Rng pick(Rng::substream_seed(8800, static_cast<std::uint64_t>(i)));
    const int n = 2 + static_cast<int>(pick.uniform() * 6.999);
    const int T = 4 + static_cast<int>(pick.uniform() * 8.999);
    const JepaModel m = random_instance(n, 2 + i % (n - 1), true, PredictorKind::Linear,
                                        i % 2 ? LossKind::Cosine : LossKind::Squared, 8000 + i);
    const auto xs = random_patches(m.patch_dim(), T, 8100 + i);
    const Vec w = psi_chain_weights(Psi::final_step_only(), T);
    const RfpResult rfp = rfp_grad(m, xs, w);
    const BpttResult bptt = bptt_grad(m, xs, w);
    worst = std::max(worst, max_block_err(rfp.grads, bptt.grads, m));
  }
  const bool pass = worst < 1e-6;
  return report(8, "final-step aggregation", pass, "rfp_vs_bptt=" + fmt(worst) + " (10 instances)");
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::cerr << "usage: acceptance [--only N]\n";
      return 2;
    }
  }

  struct Entry {
    int id;
    bool (*fn)();
  };
  const Entry entries[] = {{1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},
                           {5, criterion5}, {6, criterion6}, {7, criterion7}, {8, criterion8}};

  bool all = true;
  bool ran = false;
  for (const auto& e : entries) {
    if (only != 0 && e.id != only) continue;
    ran = true;
    try {
      all = e.fn() && all;
    } catch (const std::exception& ex) {
      report(e.id, "criterion", false, std::string("threw: ") + ex.what());
      all = false;
    }
  }
  if (!ran) {
    std::cerr << "no such criterion: " << only << "\n";
    return 2;
  }
  return all ? 0 : 1;
}
