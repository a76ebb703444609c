// The quantum communication layer.
//
// Uplink (one register per base-layer parameter): the server prepares an
// M-qubit GHZ state, client m applies RZ(F_m * theta_{m,i}) to its qubit,
// the server undoes the preparation circuit and reads qubit 0, whose
// zero-probability is (1 + cos S)/2 for the encoded sum S, recovered as
// S = arccos(2 Pr - 1). Downlink: one |+> qubit per (parameter, client)
// carries RZ(theta_i); the client measures in the X basis and inverts the
// same estimator.
//
// Both directions run in an ideal mode (probabilities read exactly) or a
// sampled mode (R shots per estimate, each on a freshly prepared register).
#pragma once

#include <Eigen/Core>
#include <Eigen/Dense>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "qfed/statevector.hpp"

namespace qfed::channel {

enum class ChannelMode { ideal, sampled };

struct ChannelConfig {
  ChannelMode mode = ChannelMode::ideal;
  int shots = 1000;        // R, sampled mode only
  std::uint64_t seed = 0;  // folded into the sampling streams
  bool strict = false;     // out-of-range encoded values become hard errors

  void validate() const;
};

/// Sample-count weights F_m = l_m / sum(l) (sum exactly 1).
struct WeightedScores {
  Eigen::VectorXd f;
  std::vector<long> counts;

  int clients() const { return int(f.size()); }
};

WeightedScores weighted_scores(std::span<const long> counts);

/// One record per parameter: what was encoded, what was measured, what was
/// recovered. Only base-layer values ever enter a transcript.
struct ParamRecord {
  int param_index = 0;
  Eigen::VectorXd payloads;  // F_m * theta_{m,i} per client
  double payload_sum = 0.0;
  double p_zero = 0.0;  // exact probability or empirical frequency
  double estimate = 0.0;
};

struct AggregationTranscript {
  ChannelMode mode = ChannelMode::ideal;
  int shots = 0;
  std::vector<ParamRecord> records;
};

/// M-qubit GHZ state (|0...0> + |1...1>)/sqrt(2), built as H on qubit 0
/// followed by a CNOT chain.
sim::Statevector ghz_prepare(int clients);

/// Applies RZ(payloads[m]) to qubit m; the |1...1> branch picks up
/// exp(i * sum(payloads)).
sim::Statevector encode_phases(sim::Statevector ghz, Eigen::Ref<const Eigen::VectorXd> payloads);

/// Inverse of the preparation circuit: descending CNOT chain, then H on
/// qubit 0. For an encoded GHZ, prob_zero(qubit 0) = (1 + cos S)/2.
sim::Statevector decode_ghz(sim::Statevector state);

/// Inverts the estimator: arccos(2 p0 - 1), clamped against tiny numeric
/// excursions outside [0, 1]. Result in [0, pi].
double estimate_angle(double p_zero);

struct UplinkResult {
  Eigen::VectorXd theta;  // aggregated base-layer parameters
  AggregationTranscript transcript;
};

/// Runs the full per-parameter protocol over `client_thetas` (K x M, one
/// column per client). In ideal mode the result equals the weighted mean
/// exactly whenever each payload sum lies in [0, pi].
UplinkResult aggregate_uplink(const Eigen::MatrixXd& client_thetas, const WeightedScores& scores,
                              const ChannelConfig& channel, std::mt19937_64& rng);

/// Per-parameter, per-client phase-encoded broadcast; returns the K x M
/// matrix of client-side estimates.
Eigen::MatrixXd broadcast_downlink(Eigen::Ref<const Eigen::VectorXd> theta_b, int clients,
                                   const ChannelConfig& channel, std::mt19937_64& rng);

/// Partial trace onto one qubit. Every qubit of an encoded GHZ reduces to
/// I/2: local measurements reveal nothing about individual payloads.
Eigen::Matrix2cd reduced_density(const sim::Statevector& state, int qubit);

/// One JSON object per parameter record, newline-delimited.
void write_transcript_jsonl(std::ostream& os, int round, const AggregationTranscript& transcript);

}  // namespace qfed::channel
