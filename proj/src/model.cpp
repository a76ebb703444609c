#include "qfed/model.hpp"

#include <stdexcept>

namespace qfed::model {

void ModelParams::validate() const {
  if (n < 1 || n > sim::kMaxQubits) throw std::invalid_argument("qubit count out of range");
  if (k < 1) throw std::invalid_argument("base repetition count must be positive");
  if (theta_b.size() != base_param_count(n, k))
    throw std::invalid_argument("base layer expects 4nk angles");
  if (theta_p.size() != 0 && theta_p.size() != personal_param_count(n))
    throw std::invalid_argument("personal layer expects 2n angles (or none)");
  if (!theta_b.allFinite() || !theta_p.allFinite())
    throw std::invalid_argument("model angles must be finite");
}

ModelParams ModelParams::zeros(int n, int k, bool personal) {
  ModelParams p;
  p.n = n;
  p.k = k;
  p.theta_b = Eigen::VectorXd::Zero(base_param_count(n, k));
  if (personal) p.theta_p = Eigen::VectorXd::Zero(personal_param_count(n));
  return p;
}

std::vector<GateOp> base_layer_slice(Eigen::Ref<const Eigen::VectorXd> slice, int n) {
  if (slice.size() != 4 * n) throw std::invalid_argument("base slice expects 4n angles");
  std::vector<GateOp> gates;
  gates.reserve(6 * n);
  for (int i = 0; i < n; ++i) {
    gates.push_back(GateOp::ry(i, slice[2 * i]));
    gates.push_back(GateOp::ry(i, slice[2 * i + 1]));
  }
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    gates.push_back(GateOp::cnot(i, j));
    gates.push_back(GateOp::ry(j, slice[2 * n + 2 * i]));
    gates.push_back(GateOp::ry((j + 1) % n, slice[2 * n + 2 * i + 1]));
    gates.push_back(GateOp::cnot(i, j));
  }
  return gates;
}

std::vector<GateOp> personal_layer(Eigen::Ref<const Eigen::VectorXd> theta_p, int n) {
  if (theta_p.size() != 2 * n) throw std::invalid_argument("personal layer expects 2n angles");
  std::vector<GateOp> gates;
  gates.reserve(2 * n);
  for (int i = 0; i < n; ++i) {
    gates.push_back(GateOp::ry(i, theta_p[2 * i]));
    gates.push_back(GateOp::ry(i, theta_p[2 * i + 1]));
  }
  return gates;
}

CompiledAnsatz compile_ansatz(const ModelParams& params) {
  params.validate();
  const int n = params.n;
  CompiledAnsatz out;
  out.n = n;
  for (int z = 0; z < params.k; ++z) {
    auto slice = base_layer_slice(params.theta_b.segment(4 * n * z, 4 * n), n);
    out.gates.insert(out.gates.end(), slice.begin(), slice.end());
  }
  if (params.has_personal_layer()) {
    auto pl = personal_layer(params.theta_p, n);
    out.gates.insert(out.gates.end(), pl.begin(), pl.end());
  }
  out.param_gate.reserve(params.total_params());
  for (std::size_t g = 0; g < out.gates.size(); ++g)
    if (out.gates[g].kind == sim::GateKind::RY) out.param_gate.push_back(g);
  return out;
}

sim::Statevector amplitude_encode(Eigen::Ref<const Eigen::VectorXd> features, int n) {
  if (features.size() != (Eigen::Index(1) << n))
    throw std::invalid_argument("encoder expects 2^n features");
  sim::Statevector state(n);
  sim::set_amplitudes(state, features);
  return state;
}

Eigen::Vector2d class_scores(const sim::RealStatevector& state) {
  return {sim::expectation_pauli_z(state, 0), sim::expectation_pauli_z(state, 1)};
}

Eigen::Vector2d eval_scores(const CompiledAnsatz& ansatz,
                            Eigen::Ref<const Eigen::VectorXd> input,
                            sim::RealStatevector& scratch) {
  sim::set_amplitudes(scratch, input);
  sim::apply_circuit(scratch, ansatz.gates);
  return class_scores(scratch);
}

Eigen::Vector2d run_client_model(Eigen::Ref<const Eigen::VectorXd> input,
                                 const ModelParams& params) {
  const CompiledAnsatz ansatz = compile_ansatz(params);
  sim::RealStatevector state(params.n);
  return eval_scores(ansatz, input, state);
}

Eigen::Vector2d run_server_model(Eigen::Ref<const Eigen::VectorXd> input,
                                 Eigen::Ref<const Eigen::VectorXd> theta_b, int n, int k) {
  ModelParams server;
  server.n = n;
  server.k = k;
  server.theta_b = theta_b;
  return run_client_model(input, server);
}

}  // namespace qfed::model
