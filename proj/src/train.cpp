#include "qfed/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "qfed/rng.hpp"

namespace qfed::train {

AdamState AdamState::init(Eigen::Index dim, double lr) {
  AdamState s;
  s.m = Eigen::VectorXd::Zero(dim);
  s.v = Eigen::VectorXd::Zero(dim);
  s.lr = lr;
  return s;
}

void adam_step(AdamState& state, Eigen::Ref<Eigen::VectorXd> params,
               Eigen::Ref<const Eigen::VectorXd> grads) {
  if (params.size() != state.m.size() || grads.size() != state.m.size())
    throw std::invalid_argument("adam_step dimension mismatch");
  state.t += 1;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseProduct(grads);
  const double c1 = 1.0 - std::pow(state.beta1, double(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, double(state.t));
  params -= state.lr * ((state.m / c1).array() / ((state.v / c2).array().sqrt() + state.epsilon)).matrix();
}

void Batch::validate() const {
  if (labels.empty()) throw std::invalid_argument("empty batch");
  if (inputs.cols() != Eigen::Index(labels.size()))
    throw std::invalid_argument("batch inputs and labels must have equal length");
  for (int c : labels)
    if (c != 0 && c != 1) throw std::invalid_argument("labels must be 0 or 1");
}

namespace {

// log(exp(s[c]) / sum_j exp(s[j])) done stably.
double sample_loss(const Eigen::Vector2d& s, int label) {
  const double mx = s.maxCoeff();
  const double lse = mx + std::log(std::exp(s[0] - mx) + std::exp(s[1] - mx));
  return lse - s[label];
}

Eigen::Vector2d softmax2(const Eigen::Vector2d& s) {
  const double mx = s.maxCoeff();
  Eigen::Vector2d e = (s.array() - mx).exp();
  return e / e.sum();
}

}  // namespace

double cross_entropy_loss(const Eigen::Matrix2Xd& scores, std::span<const int> labels) {
  if (labels.empty()) throw std::invalid_argument("empty batch");
  if (scores.cols() != Eigen::Index(labels.size()))
    throw std::invalid_argument("one score pair per label required");
  double total = 0.0;
  for (Eigen::Index i = 0; i < scores.cols(); ++i) total += sample_loss(scores.col(i), labels[i]);
  return total / double(labels.size());
}

GradientEngine::GradientEngine(const model::ModelParams& params)
    : ansatz_(model::compile_ansatz(params)),
      snapshots_(Eigen::Index(1) << params.n, Eigen::Index(ansatz_.gates.size()) + 1),
      work_(params.n) {}

void GradientEngine::set_params(const model::ModelParams& params) {
  ansatz_ = model::compile_ansatz(params);
}

Eigen::Vector2d GradientEngine::scores(Eigen::Ref<const Eigen::VectorXd> input) {
  return model::eval_scores(ansatz_, input, work_);
}

double GradientEngine::accumulate(Eigen::Ref<const Eigen::VectorXd> input, int label,
                                  Eigen::Ref<Eigen::VectorXd> grad) {
  const auto& gates = ansatz_.gates;
  const Eigen::Index n_gates = Eigen::Index(gates.size());

  sim::set_amplitudes(work_, input);
  for (Eigen::Index g = 0; g < n_gates; ++g) {
    snapshots_.col(g) = work_.amplitudes();
    sim::apply_gate_in_place(work_, gates[g]);
  }
  snapshots_.col(n_gates) = work_.amplitudes();

  const Eigen::Vector2d base_scores = model::class_scores(work_);
  Eigen::Vector2d weight = softmax2(base_scores);
  weight[label] -= 1.0;  // d(sample loss)/d(scores)

  constexpr double shift = M_PI / 2.0;
  for (std::size_t p = 0; p < ansatz_.param_gate.size(); ++p) {
    const std::size_t g = ansatz_.param_gate[p];
    const sim::GateOp original = gates[g];
    Eigen::Vector2d plus, minus;
    for (int sgn : {+1, -1}) {
      work_.amplitudes() = snapshots_.col(Eigen::Index(g));
      sim::GateOp shifted = original;
      shifted.angle += sgn * shift;
      sim::apply_gate_in_place(work_, shifted);
      for (std::size_t t = g + 1; t < gates.size(); ++t)
        sim::apply_gate_in_place(work_, gates[t]);
      (sgn > 0 ? plus : minus) = model::class_scores(work_);
    }
    const Eigen::Vector2d dscores = (plus - minus) / 2.0;
    grad[Eigen::Index(p)] += weight.dot(dscores);
  }
  return sample_loss(base_scores, label);
}

double batch_loss(const model::ModelParams& params, const Batch& batch) {
  batch.validate();
  GradientEngine engine(params);
  Eigen::Matrix2Xd scores(2, batch.size());
  for (Eigen::Index i = 0; i < batch.size(); ++i) scores.col(i) = engine.scores(batch.inputs.col(i));
  return cross_entropy_loss(scores, batch.labels);
}

Eigen::VectorXd loss_gradient(const model::ModelParams& params, const Batch& batch) {
  batch.validate();
  GradientEngine engine(params);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(engine.param_count());
  for (Eigen::Index i = 0; i < batch.size(); ++i)
    engine.accumulate(batch.inputs.col(i), batch.labels[i], grad);
  return grad / double(batch.size());
}

LocalTrainResult local_train(const Eigen::MatrixXd& data_inputs,
                             std::span<const int> data_labels,
                             std::span<const int> sample_indices,
                             model::ModelParams& params, int epochs, int batch_size,
                             AdamState& adam, std::uint64_t shuffle_seed,
                             std::optional<AngleClamp> base_clamp) {
  if (sample_indices.empty()) throw std::invalid_argument("client dataset is empty");
  if (batch_size < 1) throw std::invalid_argument("batch size must be positive");
  params.validate();
  if (adam.m.size() != params.total_params())
    throw std::invalid_argument("adam state does not match parameter count");

  LocalTrainResult result;
  const Eigen::Index nb = params.theta_b.size();
  const Eigen::Index np = params.theta_p.size();
  std::vector<int> order(sample_indices.begin(), sample_indices.end());
  GradientEngine engine(params);
  Eigen::VectorXd grad(params.total_params());
  Eigen::VectorXd flat(params.total_params());

  for (int e = 0; e < epochs; ++e) {
    auto rng = make_rng(shuffle_seed, {std::uint64_t(e)});
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_total = 0.0;
    Eigen::Index sample_count = 0;
    for (std::size_t start = 0; start < order.size(); start += std::size_t(batch_size)) {
      const std::size_t stop = std::min(order.size(), start + std::size_t(batch_size));
      const Eigen::Index bsz = Eigen::Index(stop - start);

      engine.set_params(params);
      grad.setZero();
      double batch_total = 0.0;
      for (std::size_t s = start; s < stop; ++s)
        batch_total += engine.accumulate(data_inputs.col(order[s]), data_labels[order[s]], grad);
      grad /= double(bsz);
      epoch_total += batch_total;
      sample_count += bsz;

      flat.head(nb) = params.theta_b;
      if (np > 0) flat.tail(np) = params.theta_p;
      adam_step(adam, flat, grad);
      params.theta_b = flat.head(nb);
      if (np > 0) params.theta_p = flat.tail(np);

      if (base_clamp) {
        for (Eigen::Index i = 0; i < nb; ++i) {
          const double clamped = std::clamp(params.theta_b[i], base_clamp->lo, base_clamp->hi);
          if (clamped != params.theta_b[i]) {
            params.theta_b[i] = clamped;
            ++result.clamped_params;
          }
        }
      }
    }
    result.epoch_loss.push_back(epoch_total / double(sample_count));
  }
  return result;
}

}  // namespace qfed::train
