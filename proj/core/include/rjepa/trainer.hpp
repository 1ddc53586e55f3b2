#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "rjepa/data.hpp"
#include "rjepa/oracles.hpp"
#include "rjepa/testbed.hpp"

namespace rjepa {

enum class TrainMode { Bptt, Rfp };
enum class UpdateCadence { PerStep, PerSequence };

// psi(t, L(t)) shapes how per-step losses enter the aggregate objective; its
// chain factors dpsi/dL are the per-step weights handed to the gradient
// passes, which is what lets the forward mode apply them online.
struct Psi {
  enum class Kind { Mean, FinalStepOnly, TScaled };
  Kind kind = Kind::Mean;

  static Psi mean() { return {Kind::Mean}; }
  static Psi final_step_only() { return {Kind::FinalStepOnly}; }
  static Psi t_scaled() { return {Kind::TScaled}; }
};

struct AggregateLoss {
  double value = 0.0;
  Vec chain;  // dpsi/dL for t = 2..T
};

// per_step holds L(t) for t = 2..T of a T-frame sequence; the mean kind
// divides by T (frame count), matching the curves' normalization
AggregateLoss aggregate_loss(const Vec& per_step, int T, Psi psi);
Vec psi_chain_weights(Psi psi, int T);

struct TrainConfig {
  TrainMode mode = TrainMode::Bptt;
  double lr = 0.01;
  double weight_decay = 0.0;  // eta
  int epochs = 1;
  int batch = 1;
  UpdateCadence cadence = UpdateCadence::PerSequence;  // rfp only
  LossKind loss_kind = LossKind::Squared;
  bool stop_gradient = true;
  Psi psi;
  std::uint64_t seed = 1;
  int threads = 1;
  double divergence_threshold = 1e6;

  // lr = 0 is legal (evaluation-only run); negative anything is not
  void validate() const;
};

struct EpochMetrics {
  int epoch = 0;        // 0 = evaluated before any update
  double mean_loss = 0.0;
  Vec curve;            // eval-set mean L(t), t = 2..T
  double balance_residual = 0.0;
  double participation_ratio = 1.0;
  double wall_ms = 0.0;  // cumulative since training start
};

struct TrainMetrics {
  std::vector<EpochMetrics> epochs;
  std::size_t peak_state_reals = 0;  // bptt: stored trajectory; rfp: sensitivities + cell state
  std::uint64_t rfp_ops = 0;
};

// columns epoch,t,mean_loss,balance_residual,participation_ratio,wall_ms; one
// row per (epoch, t), epoch-level values repeated across the curve
void write_metrics_csv(const TrainMetrics& m, std::ostream& out);

// W <- (W - lr g) * (1 - lr eta): a plain step followed by the decay shrink.
// Off-diagonal gate entries stay untouched for diagonal_gates models; the
// featurizer is frozen.
void sgd_step(JepaModel& model, const JepaGrads& g, double lr, double eta);

// Offline mode: per sequence, forward pass storing the trajectory, reverse
// adjoint sweep, update every `batch` sequences (batch-mean gradient).
TrainMetrics train_bptt(JepaModel& model, const SequenceDataset& train,
                        const SequenceDataset& eval, const TrainConfig& cfg);

// Online mode: forward-only with the collapsed sensitivities, no trajectory.
// PerStep applies each step's contribution as it appears; PerSequence
// accumulates exactly the offline-equivalent gradient first.
TrainMetrics train_rfp(JepaModel& model, const SequenceDataset& train,
                       const SequenceDataset& eval, const TrainConfig& cfg);

struct TestbedTraces {
  // entry i describes the parameters after i updates (so index 0 is the
  // initial state and the last entry the trained one); lengths epochs+1
  std::vector<double> loss;
  std::vector<double> balance;
};

// Gradient descent on the linear testbed with the closed-form gate gradients
// plus the first-order top-map gradient; weight decay tb.eta applies to every
// trained block so the imbalance contracts the way the linear analysis says.
TestbedTraces train_testbed(LinearTestbed& tb, const SequenceDataset& data,
                            const TrainConfig& cfg);

// d_h x (count*T) matrix of every h(t) over the dataset, columns scaled by
// 1/sqrt(count*T); feeds the spectrum/balance diagnostics
Matrix jepa_features(const JepaModel& model, const SequenceDataset& data);

}  // namespace rjepa
