// Circuit builders and evaluators for the classifier models: amplitude
// encoder, shared base layer (k repeated slices), client-private personal
// layer, and the composed client/server circuits.
//
// Parameter order is load-bearing: aggregation aligns parameters across
// clients positionally. Within one base slice of 4n angles:
//   [0, 2n)   two stacked RY per qubit, qubit-major (qubit i gets
//             slice[2i], slice[2i+1]);
//   [2n, 4n)  ring entanglers, for i = 0..n-1 with j = (i+1) mod n:
//             CNOT(i,j), RY(j) with slice[2n+2i], RY((j+1) mod n) with
//             slice[2n+2i+1], CNOT(i,j).
// The full base layer is k consecutive slices; the personal layer is two
// stacked RY per qubit (2n angles, qubit-major).
#pragma once

#include <Eigen/Core>
#include <vector>

#include "qfed/statevector.hpp"

namespace qfed::model {

using sim::GateOp;

inline Eigen::Index base_param_count(int n, int k) { return Eigen::Index(4) * n * k; }
inline Eigen::Index personal_param_count(int n) { return Eigen::Index(2) * n; }

/// Ansatz depth in slices; the personal layer counts as one extra slice.
constexpr int server_depth_slices(int k) { return k; }
constexpr int client_depth_slices(int k) { return k + 1; }

/// Trainable angles of one client or server model. An empty `theta_p`
/// selects the server architecture (base layer only).
struct ModelParams {
  Eigen::VectorXd theta_b;  // length 4nk
  Eigen::VectorXd theta_p;  // length 2n, or empty
  int n = 4;
  int k = 3;

  bool has_personal_layer() const { return theta_p.size() > 0; }
  Eigen::Index total_params() const { return theta_b.size() + theta_p.size(); }
  void validate() const;

  static ModelParams zeros(int n, int k, bool personal = true);
};

/// Gate sequence of one base-layer slice (consumes 4n angles).
std::vector<GateOp> base_layer_slice(Eigen::Ref<const Eigen::VectorXd> slice_params, int n);

/// Gate sequence of the personal layer (consumes 2n angles).
std::vector<GateOp> personal_layer(Eigen::Ref<const Eigen::VectorXd> theta_p, int n);

/// Flattened ansatz (k base slices, then the personal layer when present)
/// with a map from parameter index to the gate consuming it. Every
/// parameter drives exactly one RY gate.
struct CompiledAnsatz {
  int n = 0;
  std::vector<GateOp> gates;
  std::vector<std::size_t> param_gate;

  void set_param(Eigen::Index p, double angle) { gates[param_gate[p]].angle = angle; }
  double param(Eigen::Index p) const { return gates[param_gate[p]].angle; }
};

CompiledAnsatz compile_ansatz(const ModelParams& params);

/// Encodes a classical vector of length 2^n as state amplitudes
/// (normalized copy; mathematically identical to the X/RY/controlled-RY
/// encoder network, which this simulator does not synthesize).
sim::Statevector amplitude_encode(Eigen::Ref<const Eigen::VectorXd> features, int n);

/// Readout: class j's score is <Z> on qubit j. Kept in one place so the
/// measurement choice can be swapped.
Eigen::Vector2d class_scores(const sim::RealStatevector& state);

/// Runs encoder + base + personal layer and returns (<Z> on qubit 0,
/// <Z> on qubit 1).
Eigen::Vector2d run_client_model(Eigen::Ref<const Eigen::VectorXd> input,
                                 const ModelParams& params);

/// Same composition without the personal layer.
Eigen::Vector2d run_server_model(Eigen::Ref<const Eigen::VectorXd> input,
                                 Eigen::Ref<const Eigen::VectorXd> theta_b, int n, int k);

/// Fast path shared by training and evaluation: encodes into a reused
/// real-amplitude register and runs a compiled ansatz.
Eigen::Vector2d eval_scores(const CompiledAnsatz& ansatz,
                            Eigen::Ref<const Eigen::VectorXd> input,
                            sim::RealStatevector& scratch);

}  // namespace qfed::model
