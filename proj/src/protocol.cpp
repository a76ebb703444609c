#include "qfed/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace qfed::channel {

void ChannelConfig::validate() const {
  if (mode == ChannelMode::sampled && shots < 1)
    throw std::invalid_argument("sampled channel requires at least one shot");
}

WeightedScores weighted_scores(std::span<const long> counts) {
  if (counts.empty()) throw std::invalid_argument("no client sample counts");
  long total = 0;
  for (long c : counts) {
    if (c <= 0) throw std::invalid_argument("client sample counts must be positive");
    total += c;
  }
  WeightedScores out;
  out.counts.assign(counts.begin(), counts.end());
  out.f.resize(Eigen::Index(counts.size()));
  for (Eigen::Index m = 0; m < out.f.size(); ++m) out.f[m] = double(counts[m]) / double(total);
  return out;
}

sim::Statevector ghz_prepare(int clients) {
  if (clients < 1 || clients > 10) throw std::out_of_range("GHZ register supports 1..10 qubits");
  sim::Statevector state(clients);
  sim::apply_gate_in_place(state, sim::GateOp::h(0));
  for (int q = 0; q + 1 < clients; ++q)
    sim::apply_gate_in_place(state, sim::GateOp::cnot(q, q + 1));
  return state;
}

namespace {

bool plausibly_ghz(const sim::Statevector& state) {
  const Eigen::Index last = state.dim() - 1;
  const double r = 1.0 / std::sqrt(2.0);
  return std::abs(std::abs(state.amplitude(0)) - r) < 1e-6 &&
         std::abs(std::abs(state.amplitude(last)) - r) < 1e-6;
}

}  // namespace

sim::Statevector encode_phases(sim::Statevector ghz, Eigen::Ref<const Eigen::VectorXd> payloads) {
  if (payloads.size() != ghz.qubits())
    throw std::invalid_argument("one payload per GHZ qubit required");
  if (!plausibly_ghz(ghz)) throw std::invalid_argument("register is not a GHZ state");
  for (int m = 0; m < ghz.qubits(); ++m)
    sim::apply_gate_in_place(ghz, sim::GateOp::rz(m, payloads[m]));
  return ghz;
}

sim::Statevector decode_ghz(sim::Statevector state) {
  for (int q = state.qubits() - 2; q >= 0; --q)
    sim::apply_gate_in_place(state, sim::GateOp::cnot(q, q + 1));
  sim::apply_gate_in_place(state, sim::GateOp::h(0));
  return state;
}

double estimate_angle(double p_zero) {
  const double x = std::clamp(2.0 * p_zero - 1.0, -1.0, 1.0);
  return std::acos(x);
}

namespace {

void check_range_strict(double value, const ChannelConfig& channel) {
  if (channel.strict && (value < 0.0 || value > M_PI))
    throw std::domain_error("encoded angle outside the recoverable range [0, pi]");
}

// One estimate of the phase sum carried by a GHZ register: exact
// probability in ideal mode, empirical frequency of R single-shot
// measurements (fresh register per shot) otherwise.
double estimate_ghz_sum(Eigen::Ref<const Eigen::VectorXd> payloads, const ChannelConfig& channel,
                        std::mt19937_64& rng, double* p_zero_out) {
  const int m = int(payloads.size());
  double p0;
  if (channel.mode == ChannelMode::ideal) {
    const sim::Statevector decoded = decode_ghz(encode_phases(ghz_prepare(m), payloads));
    p0 = sim::prob_zero(decoded, 0);
  } else {
    long zeros = 0;
    for (int shot = 0; shot < channel.shots; ++shot) {
      const sim::Statevector decoded = decode_ghz(encode_phases(ghz_prepare(m), payloads));
      zeros += (sim::sample_bit(decoded, 0, rng) == 0) ? 1 : 0;
    }
    p0 = double(zeros) / double(channel.shots);
  }
  if (p_zero_out) *p_zero_out = p0;
  return estimate_angle(p0);
}

}  // namespace

UplinkResult aggregate_uplink(const Eigen::MatrixXd& client_thetas, const WeightedScores& scores,
                              const ChannelConfig& channel, std::mt19937_64& rng) {
  channel.validate();
  const int clients = scores.clients();
  if (client_thetas.cols() != clients)
    throw std::invalid_argument("one parameter column per client required");

  UplinkResult out;
  out.transcript.mode = channel.mode;
  out.transcript.shots = channel.mode == ChannelMode::sampled ? channel.shots : 0;
  out.theta.resize(client_thetas.rows());
  out.transcript.records.reserve(std::size_t(client_thetas.rows()));

  for (Eigen::Index i = 0; i < client_thetas.rows(); ++i) {
    ParamRecord rec;
    rec.param_index = int(i);
    rec.payloads = client_thetas.row(i).transpose().cwiseProduct(scores.f);
    rec.payload_sum = rec.payloads.sum();
    check_range_strict(rec.payload_sum, channel);
    rec.estimate = estimate_ghz_sum(rec.payloads, channel, rng, &rec.p_zero);
    out.theta[i] = rec.estimate;
    out.transcript.records.push_back(std::move(rec));
  }
  return out;
}

Eigen::MatrixXd broadcast_downlink(Eigen::Ref<const Eigen::VectorXd> theta_b, int clients,
                                   const ChannelConfig& channel, std::mt19937_64& rng) {
  channel.validate();
  if (clients < 1) throw std::invalid_argument("at least one client required");

  Eigen::MatrixXd received(theta_b.size(), clients);
  for (Eigen::Index i = 0; i < theta_b.size(); ++i) {
    check_range_strict(theta_b[i], channel);
    for (int m = 0; m < clients; ++m) {
      // |+>, phase rotation, X-basis readout via H + computational-basis
      // measurement: prob_zero = (1 + cos theta)/2.
      auto carrier = [&] {
        sim::Statevector q(1);
        sim::apply_gate_in_place(q, sim::GateOp::h(0));
        sim::apply_gate_in_place(q, sim::GateOp::rz(0, theta_b[i]));
        sim::apply_gate_in_place(q, sim::GateOp::h(0));
        return q;
      };
      double p0;
      if (channel.mode == ChannelMode::ideal) {
        p0 = sim::prob_zero(carrier(), 0);
      } else {
        long zeros = 0;
        for (int shot = 0; shot < channel.shots; ++shot)
          zeros += (sim::sample_bit(carrier(), 0, rng) == 0) ? 1 : 0;
        p0 = double(zeros) / double(channel.shots);
      }
      received(i, m) = estimate_angle(p0);
    }
  }
  return received;
}

Eigen::Matrix2cd reduced_density(const sim::Statevector& state, int qubit) {
  state.check_qubit(qubit);
  const auto& amp = state.amplitudes();
  const Eigen::Index mask = Eigen::Index(1) << state.bit_position(qubit);
  Eigen::Matrix2cd rho = Eigen::Matrix2cd::Zero();
  for (Eigen::Index i = 0; i < amp.size(); ++i) {
    if (i & mask) continue;
    const std::complex<double> a0 = amp[i];
    const std::complex<double> a1 = amp[i | mask];
    rho(0, 0) += a0 * std::conj(a0);
    rho(0, 1) += a0 * std::conj(a1);
    rho(1, 0) += a1 * std::conj(a0);
    rho(1, 1) += a1 * std::conj(a1);
  }
  return rho;
}

void write_transcript_jsonl(std::ostream& os, int round, const AggregationTranscript& transcript) {
  for (const ParamRecord& rec : transcript.records) {
    nlohmann::json j;
    j["round"] = round;
    j["param"] = rec.param_index;
    j["layer"] = "base";
    j["payloads"] = std::vector<double>(rec.payloads.begin(), rec.payloads.end());
    j["payload_sum"] = rec.payload_sum;
    j["p_zero"] = rec.p_zero;
    j["estimate"] = rec.estimate;
    j["mode"] = transcript.mode == ChannelMode::ideal ? "ideal" : "sampled";
    if (transcript.mode == ChannelMode::sampled) j["shots"] = transcript.shots;
    os << j.dump() << '\n';
  }
}

}  // namespace qfed::channel
