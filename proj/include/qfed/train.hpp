// Loss, parameter-shift gradients, Adam, and the per-client local training
// epoch. Gradients are exact for RY parameters: each score is trigonometric
// in every full-angle parameter a, so dE/da = [E(a+pi/2) - E(a-pi/2)] / 2.
#pragma once

#include <Eigen/Core>
#include <optional>
#include <span>
#include <vector>

#include "qfed/model.hpp"

namespace qfed::train {

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long t = 0;
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState init(Eigen::Index dim, double lr = 0.01);
};

/// One bias-corrected Adam update; increments the step counter.
void adam_step(AdamState& state, Eigen::Ref<Eigen::VectorXd> params,
               Eigen::Ref<const Eigen::VectorXd> grads);

/// A training mini-batch: inputs are unit-norm feature columns, labels are
/// class indices in {0, 1}.
struct Batch {
  Eigen::MatrixXd inputs;   // 2^n x N
  std::vector<int> labels;  // length N

  Eigen::Index size() const { return Eigen::Index(labels.size()); }
  void validate() const;
};

/// Mean softmax cross-entropy of class-score pairs (columns of `scores`).
double cross_entropy_loss(const Eigen::Matrix2Xd& scores, std::span<const int> labels);

/// Loss of `params` on a batch (forward passes only).
double batch_loss(const model::ModelParams& params, const Batch& batch);

/// Gradient of the batch loss w.r.t. every angle, base layer first then
/// personal layer, via the parameter-shift rule.
Eigen::VectorXd loss_gradient(const model::ModelParams& params, const Batch& batch);

/// Interval projection applied to the base-layer angles after each Adam
/// update in federated runs, keeping uplink payload sums inside the
/// channel's recoverable range.
struct AngleClamp {
  double lo = 0.0;
  double hi = 0.0;
};

struct LocalTrainResult {
  std::vector<double> epoch_loss;  // mean batch loss per epoch
  int clamped_params = 0;          // base angles projected by the clamp
};

/// Runs `epochs` passes over `sample_indices` (columns of `data_inputs`):
/// seeded shuffle, batches of `batch_size` (short final batch kept),
/// parameter-shift gradient, Adam update on theta_b and theta_p jointly.
LocalTrainResult local_train(const Eigen::MatrixXd& data_inputs,
                             std::span<const int> data_labels,
                             std::span<const int> sample_indices,
                             model::ModelParams& params, int epochs, int batch_size,
                             AdamState& adam, std::uint64_t shuffle_seed,
                             std::optional<AngleClamp> base_clamp = std::nullopt);

/// Gradient engine reused across samples: one forward pass records the
/// state before every gate, so each shifted evaluation only replays the
/// circuit suffix behind the shifted gate.
class GradientEngine {
 public:
  explicit GradientEngine(const model::ModelParams& params);

  /// Adds d(sample loss)/d(angles) into `grad` and returns the sample loss.
  double accumulate(Eigen::Ref<const Eigen::VectorXd> input, int label,
                    Eigen::Ref<Eigen::VectorXd> grad);

  Eigen::Vector2d scores(Eigen::Ref<const Eigen::VectorXd> input);

  void set_params(const model::ModelParams& params);
  Eigen::Index param_count() const { return Eigen::Index(ansatz_.param_gate.size()); }

 private:
  model::CompiledAnsatz ansatz_;
  Eigen::MatrixXd snapshots_;  // column g = state before gate g; last = final
  sim::RealStatevector work_;
};

}  // namespace qfed::train
