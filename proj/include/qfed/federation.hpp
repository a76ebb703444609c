// The global federated loop: seeded initialization, per-round downlink,
// concurrent local training, secure uplink aggregation, evaluation, and
// overhead accounting.
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "qfed/dataset.hpp"
#include "qfed/model.hpp"
#include "qfed/protocol.hpp"
#include "qfed/train.hpp"

namespace qfed::fed {

/// Projection interval for base-layer angles; keeps every uplink payload
/// sum recoverable by the arccos estimator.
inline constexpr double kAngleMargin = 0.05;
inline constexpr double kAngleLo = 0.0;
inline double angle_hi() { return M_PI - kAngleMargin; }

struct FedConfig {
  int clients = 2;           // M
  double alpha = 100.0;      // Dirichlet concentration
  int rounds = 100;          // global training rounds
  int local_epochs = 1;      // E
  int base_reps = 3;         // k
  int qubits = 4;            // n
  double learning_rate = 0.01;
  int batch_size = 50;
  bool personalized = true;
  int sample_cap = 500;      // per-client training samples; 0 = no cap
  int test_cap = 500;        // shared test samples; 0 = no cap
  std::uint64_t seed = 42;
  int threads = 0;           // client-level parallelism; 0 = hardware
  channel::ChannelConfig channel;
  data::DataPaths data;

  void validate() const;

  static FedConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct RoundMetrics {
  int round = 0;  // 1-based
  double server_accuracy = 0.0;
  std::vector<double> client_accuracy;
  std::vector<double> client_loss;  // local training loss, one per client
  double global_objective = 0.0;    // mean of client_loss
  int clamped_params = 0;           // base angles projected this round
};

/// Communication/computation accounting for a full run, evaluated from the
/// closed-form cost model with t_c = 2.5e-8 s and t_n = 1e-3 s.
struct OverheadReport {
  double downlink_seconds = 0.0;  // 4nk*N*t_c*(M+1) + N*t_n
  double uplink_seconds = 0.0;    // 8nk*N*t_c + N*t_n
  long server_storage_qubits = 0;  // 4nk*N*M
  long client_storage_qubits = 0;  // 4nk*N
  int server_depth = 0;            // k
  int client_depth = 0;            // k+1
  int circuit_qubits = 0;          // 2*log2(L) for an LxL image
  double t_c = 2.5e-8;
  double t_n = 1e-3;

  nlohmann::json to_json() const;
};

OverheadReport overhead_report(const FedConfig& config);

/// Mean of per-client losses.
double global_objective(std::span<const double> client_losses);

/// Accuracy on a testset; prediction is the arg-max class score with ties
/// broken toward class 0.
double evaluate(const model::ModelParams& params, const data::Dataset& testset);

struct RunResult {
  std::vector<RoundMetrics> rounds;
  model::ModelParams server;
  std::vector<model::ModelParams> clients;
  std::vector<std::vector<int>> client_indices;  // training samples per client
  int total_clamped = 0;
};

using TranscriptSink = std::function<void(int round, const channel::AggregationTranscript&)>;

/// Runs the full federated loop on a preprocessed dataset.
RunResult run_federated(const FedConfig& config, const data::Dataset& train,
                        const data::Dataset& test, const TranscriptSink& sink = {});

/// Convenience overload that loads the dataset from config.data.
RunResult run_federated(const FedConfig& config, const TranscriptSink& sink = {});

/// Per-client training indices: Dirichlet partition, then a per-client
/// shuffle, then the sample cap. Exposed so tests and the partition-stats
/// report reproduce the run's splits exactly.
std::vector<std::vector<int>> client_splits(const FedConfig& config, std::span<const int> labels);

/// Testset truncation used by runs (first `test_cap` samples).
data::Dataset capped_testset(const data::Dataset& test, int test_cap);

/// Seed-stream paths; exposed so the degenerate-case tests can replay the
/// orchestrator's randomness exactly.
namespace seeds {
std::uint64_t server_init(std::uint64_t master);
std::uint64_t client_init(std::uint64_t master, int client);
std::uint64_t partition(std::uint64_t master);
std::uint64_t cap_shuffle(std::uint64_t master, int client);
std::uint64_t local_shuffle(std::uint64_t master, int round, int client);
std::uint64_t channel_stream(std::uint64_t master, int round, int direction);
std::uint64_t channel_stream(std::uint64_t master, std::uint64_t channel_seed, int round,
                             int direction);
}  // namespace seeds

/// Uniform draw in [0, pi - margin); theta_b initialization.
Eigen::VectorXd random_angles(Eigen::Index count, std::uint64_t seed);

/// Near-identity personal-layer initialization, uniform in [0, 0.1). Large
/// random personal rotations would start as an approximate bit-flip on
/// every qubit (two stacked RY averaging pi), steering training toward an
/// inverted base layer that only the clients can read.
Eigen::VectorXd random_personal_angles(Eigen::Index count, std::uint64_t seed);

std::string metrics_csv(std::span<const RoundMetrics> rounds);
nlohmann::json summary_json(const FedConfig& config, const RunResult& result);

}  // namespace qfed::fed
