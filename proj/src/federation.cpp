#include "qfed/federation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "qfed/rng.hpp"

namespace qfed::fed {

namespace {

// Tags for seed-path derivation.
enum : std::uint64_t {
  kServerInit = 1,
  kClientInit = 2,
  kPartition = 3,
  kCapShuffle = 4,
  kLocalShuffle = 5,
  kChannel = 6,
};

}  // namespace

namespace seeds {
std::uint64_t server_init(std::uint64_t master) { return derive_seed(master, {kServerInit}); }
std::uint64_t client_init(std::uint64_t master, int client) {
  return derive_seed(master, {kClientInit, std::uint64_t(client)});
}
std::uint64_t partition(std::uint64_t master) { return derive_seed(master, {kPartition}); }
std::uint64_t cap_shuffle(std::uint64_t master, int client) {
  return derive_seed(master, {kCapShuffle, std::uint64_t(client)});
}
std::uint64_t local_shuffle(std::uint64_t master, int round, int client) {
  return derive_seed(master, {kLocalShuffle, std::uint64_t(round), std::uint64_t(client)});
}
std::uint64_t channel_stream(std::uint64_t master, int round, int direction) {
  return derive_seed(master, {kChannel, std::uint64_t(round), std::uint64_t(direction)});
}
std::uint64_t channel_stream(std::uint64_t master, std::uint64_t channel_seed, int round,
                             int direction) {
  return channel_stream(master ^ mix64(channel_seed), round, direction);
}
}  // namespace seeds

void FedConfig::validate() const {
  if (clients < 1) throw std::invalid_argument("client count must be positive");
  if (alpha <= 0.0) throw std::invalid_argument("dirichlet concentration must be positive");
  if (rounds < 0) throw std::invalid_argument("round count must be nonnegative");
  if (local_epochs < 0) throw std::invalid_argument("local epoch count must be nonnegative");
  if (base_reps < 1) throw std::invalid_argument("base repetition count must be positive");
  if (learning_rate <= 0.0) throw std::invalid_argument("learning rate must be positive");
  if (batch_size < 1) throw std::invalid_argument("batch size must be positive");
  if (sample_cap < 0 || test_cap < 0) throw std::invalid_argument("caps must be nonnegative");
  if (qubits != 4)
    throw std::invalid_argument("the 4x4 preprocessing grid requires a 4-qubit register");
  channel.validate();
}

FedConfig FedConfig::from_json(const nlohmann::json& j) {
  FedConfig c;
  c.clients = j.value("clients", c.clients);
  c.alpha = j.value("alpha", c.alpha);
  c.rounds = j.value("rounds", c.rounds);
  c.local_epochs = j.value("local_epochs", c.local_epochs);
  c.base_reps = j.value("base_reps", c.base_reps);
  c.qubits = j.value("qubits", c.qubits);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.personalized = j.value("personalized", c.personalized);
  c.sample_cap = j.value("sample_cap", c.sample_cap);
  c.test_cap = j.value("test_cap", c.test_cap);
  c.seed = j.value("seed", c.seed);
  c.threads = j.value("threads", c.threads);
  if (j.contains("channel")) {
    const auto& jc = j.at("channel");
    const std::string mode = jc.value("mode", "ideal");
    if (mode == "ideal")
      c.channel.mode = channel::ChannelMode::ideal;
    else if (mode == "sampled")
      c.channel.mode = channel::ChannelMode::sampled;
    else
      throw std::invalid_argument("channel.mode must be 'ideal' or 'sampled'");
    c.channel.shots = jc.value("shots", c.channel.shots);
    c.channel.seed = jc.value("seed", c.channel.seed);
    c.channel.strict = jc.value("strict", c.channel.strict);
  }
  if (j.contains("data")) {
    const auto& jd = j.at("data");
    c.data.root = jd.value("root", c.data.root);
    if (jd.contains("train_images")) c.data.train_images = jd.at("train_images").get<std::string>();
    if (jd.contains("train_labels")) c.data.train_labels = jd.at("train_labels").get<std::string>();
    if (jd.contains("test_images")) c.data.test_images = jd.at("test_images").get<std::string>();
    if (jd.contains("test_labels")) c.data.test_labels = jd.at("test_labels").get<std::string>();
    c.data.class_a = jd.value("class_a", c.data.class_a);
    c.data.class_b = jd.value("class_b", c.data.class_b);
  }
  return c;
}

nlohmann::json FedConfig::to_json() const {
  nlohmann::json j;
  j["clients"] = clients;
  j["alpha"] = alpha;
  j["rounds"] = rounds;
  j["local_epochs"] = local_epochs;
  j["base_reps"] = base_reps;
  j["qubits"] = qubits;
  j["learning_rate"] = learning_rate;
  j["batch_size"] = batch_size;
  j["personalized"] = personalized;
  j["sample_cap"] = sample_cap;
  j["test_cap"] = test_cap;
  j["seed"] = seed;
  j["threads"] = threads;
  j["channel"] = {{"mode", channel.mode == channel::ChannelMode::ideal ? "ideal" : "sampled"},
                  {"shots", channel.shots},
                  {"seed", channel.seed},
                  {"strict", channel.strict}};
  nlohmann::json jd;
  jd["root"] = data.root;
  if (data.train_images) jd["train_images"] = *data.train_images;
  if (data.train_labels) jd["train_labels"] = *data.train_labels;
  if (data.test_images) jd["test_images"] = *data.test_images;
  if (data.test_labels) jd["test_labels"] = *data.test_labels;
  jd["class_a"] = data.class_a;
  jd["class_b"] = data.class_b;
  j["data"] = jd;
  return j;
}

OverheadReport overhead_report(const FedConfig& config) {
  OverheadReport r;
  const double n = config.qubits, k = config.base_reps, rounds = config.rounds;
  const double m = config.clients;
  r.downlink_seconds = 4.0 * n * k * rounds * r.t_c * (m + 1.0) + rounds * r.t_n;
  r.uplink_seconds = 8.0 * n * k * rounds * r.t_c + rounds * r.t_n;
  r.server_storage_qubits = 4L * config.qubits * config.base_reps * config.rounds * config.clients;
  r.client_storage_qubits = 4L * config.qubits * config.base_reps * config.rounds;
  r.server_depth = model::server_depth_slices(config.base_reps);
  r.client_depth = model::client_depth_slices(config.base_reps);
  r.circuit_qubits = config.qubits;  // 2*log2(L) qubits for an LxL input image
  return r;
}

nlohmann::json OverheadReport::to_json() const {
  return {{"downlink_seconds", downlink_seconds},
          {"uplink_seconds", uplink_seconds},
          {"server_storage_qubits", server_storage_qubits},
          {"client_storage_qubits", client_storage_qubits},
          {"server_depth", server_depth},
          {"client_depth", client_depth},
          {"circuit_qubits", circuit_qubits},
          {"t_c", t_c},
          {"t_n", t_n}};
}

double global_objective(std::span<const double> client_losses) {
  if (client_losses.empty()) throw std::invalid_argument("no client losses");
  double sum = 0.0;
  for (double l : client_losses) sum += l;
  return sum / double(client_losses.size());
}

double evaluate(const model::ModelParams& params, const data::Dataset& testset) {
  if (testset.size() == 0) throw std::invalid_argument("empty testset");
  const model::CompiledAnsatz ansatz = model::compile_ansatz(params);
  sim::RealStatevector scratch(params.n);
  long correct = 0;
  for (Eigen::Index i = 0; i < testset.size(); ++i) {
    const Eigen::Vector2d s = model::eval_scores(ansatz, testset.features.col(i), scratch);
    const int predicted = s[1] > s[0] ? 1 : 0;
    if (predicted == testset.labels[std::size_t(i)]) ++correct;
  }
  return double(correct) / double(testset.size());
}

Eigen::VectorXd random_angles(Eigen::Index count, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> u(kAngleLo, angle_hi());
  Eigen::VectorXd out(count);
  for (Eigen::Index i = 0; i < count; ++i) out[i] = u(rng);
  return out;
}

Eigen::VectorXd random_personal_angles(Eigen::Index count, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> u(0.0, 0.1);
  Eigen::VectorXd out(count);
  for (Eigen::Index i = 0; i < count; ++i) out[i] = u(rng);
  return out;
}

std::vector<std::vector<int>> client_splits(const FedConfig& config, std::span<const int> labels) {
  auto part_rng = make_rng(seeds::partition(config.seed));
  const data::PartitionMatrix d =
      data::sample_partition_matrix(config.alpha, 2, config.clients, part_rng);
  auto splits = data::partition(labels, d, part_rng);
  for (int m = 0; m < config.clients; ++m) {
    auto rng = make_rng(seeds::cap_shuffle(config.seed, m));
    std::shuffle(splits[m].begin(), splits[m].end(), rng);
    if (config.sample_cap > 0 && int(splits[m].size()) > config.sample_cap)
      splits[m].resize(std::size_t(config.sample_cap));
  }
  return splits;
}

data::Dataset capped_testset(const data::Dataset& test, int test_cap) {
  if (test_cap <= 0 || test.size() <= test_cap) return test;
  data::Dataset out;
  out.features = test.features.leftCols(test_cap);
  out.labels.assign(test.labels.begin(), test.labels.begin() + test_cap);
  return out;
}

namespace {

// Uplink payload values must come from theta_b only. A theta_p value
// showing up bit-identically in a transcript record means personalized
// parameters leaked into the channel; abort the run.
void check_transcript_hygiene(const channel::AggregationTranscript& transcript,
                              const std::vector<model::ModelParams>& clients,
                              const Eigen::MatrixXd& uploaded) {
  for (const auto& rec : transcript.records) {
    if (rec.param_index < 0 || rec.param_index >= uploaded.rows())
      throw std::logic_error("transcript references a parameter outside the base layer");
    for (const auto& c : clients)
      for (Eigen::Index p = 0; p < c.theta_p.size(); ++p)
        for (Eigen::Index m = 0; m < rec.payloads.size(); ++m)
          if (rec.payloads[m] != 0.0 && rec.payloads[m] == c.theta_p[p])
            throw std::logic_error("personalized parameter value found in uplink transcript");
  }
}

void run_clients_concurrently(int clients, int threads, const std::function<void(int)>& work) {
  const int hw = int(std::thread::hardware_concurrency());
  int pool = threads > 0 ? threads : (hw > 0 ? hw : 1);
  pool = std::min(pool, clients);
  if (pool <= 1) {
    for (int m = 0; m < clients; ++m) work(m);
    return;
  }
  std::vector<std::thread> workers;
  std::atomic<int> next{0};
  for (int t = 0; t < pool; ++t)
    workers.emplace_back([&] {
      for (int m = next.fetch_add(1); m < clients; m = next.fetch_add(1)) work(m);
    });
  for (auto& w : workers) w.join();
}

}  // namespace

RunResult run_federated(const FedConfig& config, const data::Dataset& train,
                        const data::Dataset& test, const TranscriptSink& sink) {
  config.validate();
  if (train.size() == 0) throw std::invalid_argument("empty training set");
  const int m_clients = config.clients;
  const int n = config.qubits, k = config.base_reps;
  const Eigen::Index nb = model::base_param_count(n, k);
  const Eigen::Index np = model::personal_param_count(n);

  RunResult result;
  result.client_indices = client_splits(config, train.labels);
  for (const auto& idx : result.client_indices)
    if (idx.empty())
      throw std::runtime_error("a client received no training samples; rerun with a different seed");

  const data::Dataset testset = capped_testset(test, config.test_cap);

  // Server initializes theta_b; each client initializes its own theta_p.
  result.server.n = n;
  result.server.k = k;
  result.server.theta_b = random_angles(nb, seeds::server_init(config.seed));
  result.clients.assign(std::size_t(m_clients), result.server);
  std::vector<train::AdamState> adam;
  adam.resize(std::size_t(m_clients));
  for (int m = 0; m < m_clients; ++m) {
    if (config.personalized)
      result.clients[std::size_t(m)].theta_p =
          random_personal_angles(np, seeds::client_init(config.seed, m));
    adam[std::size_t(m)] = train::AdamState::init(
        result.clients[std::size_t(m)].total_params(), config.learning_rate);
  }

  std::vector<long> counts;
  counts.reserve(std::size_t(m_clients));
  for (const auto& idx : result.client_indices) counts.push_back(long(idx.size()));
  const channel::WeightedScores scores = channel::weighted_scores(counts);

  const train::AngleClamp clamp{kAngleLo, angle_hi()};

  for (int round = 1; round <= config.rounds; ++round) {
    // Downlink: every client receives the current base layer.
    auto down_rng =
        make_rng(seeds::channel_stream(config.seed, config.channel.seed, round, 0));
    const Eigen::MatrixXd received =
        channel::broadcast_downlink(result.server.theta_b, m_clients, config.channel, down_rng);

    RoundMetrics metrics;
    metrics.round = round;
    metrics.client_accuracy.resize(std::size_t(m_clients));
    metrics.client_loss.resize(std::size_t(m_clients));
    std::vector<int> clamped(std::size_t(m_clients), 0);

    run_clients_concurrently(m_clients, config.threads, [&](int m) {
      auto& params = result.clients[std::size_t(m)];
      params.theta_b = received.col(m);
      const auto r = train::local_train(
          train.features, train.labels, result.client_indices[std::size_t(m)], params,
          config.local_epochs, config.batch_size, adam[std::size_t(m)],
          seeds::local_shuffle(config.seed, round, m), clamp);
      metrics.client_loss[std::size_t(m)] = r.epoch_loss.empty() ? 0.0 : r.epoch_loss.back();
      clamped[std::size_t(m)] = r.clamped_params;
      metrics.client_accuracy[std::size_t(m)] = evaluate(params, testset);
    });

    // Uplink: weighted aggregation of the base layers over the channel.
    Eigen::MatrixXd uploaded(nb, m_clients);
    for (int m = 0; m < m_clients; ++m) uploaded.col(m) = result.clients[std::size_t(m)].theta_b;
    auto up_rng = make_rng(seeds::channel_stream(config.seed, config.channel.seed, round, 1));
    channel::UplinkResult up =
        channel::aggregate_uplink(uploaded, scores, config.channel, up_rng);
    check_transcript_hygiene(up.transcript, result.clients, uploaded);
    result.server.theta_b = std::move(up.theta);
    if (sink) sink(round, up.transcript);

    metrics.server_accuracy = evaluate(result.server, testset);
    metrics.global_objective = global_objective(metrics.client_loss);
    for (int c : clamped) metrics.clamped_params += c;
    result.total_clamped += metrics.clamped_params;
    result.rounds.push_back(std::move(metrics));
  }
  return result;
}

RunResult run_federated(const FedConfig& config, const TranscriptSink& sink) {
  const data::Dataset train = data::load_binary_dataset(config.data, true);
  const data::Dataset test = data::load_binary_dataset(config.data, false);
  return run_federated(config, train, test, sink);
}

std::string metrics_csv(std::span<const RoundMetrics> rounds) {
  std::string out = "round,server_acc";
  const std::size_t m = rounds.empty() ? 0 : rounds.front().client_accuracy.size();
  for (std::size_t i = 0; i < m; ++i) out += ",client_" + std::to_string(i) + "_acc";
  out += ",mean_client_acc,global_objective\n";
  char buf[64];
  for (const RoundMetrics& r : rounds) {
    out += std::to_string(r.round);
    const auto push = [&](double v) {
      std::snprintf(buf, sizeof buf, ",%.10g", v);
      out += buf;
    };
    push(r.server_accuracy);
    double mean = 0.0;
    for (double a : r.client_accuracy) {
      push(a);
      mean += a;
    }
    push(r.client_accuracy.empty() ? 0.0 : mean / double(r.client_accuracy.size()));
    push(r.global_objective);
    out += '\n';
  }
  return out;
}

nlohmann::json summary_json(const FedConfig& config, const RunResult& result) {
  nlohmann::json j;
  j["config"] = config.to_json();
  j["overhead"] = overhead_report(config).to_json();
  j["rounds_completed"] = result.rounds.size();
  j["total_clamped_params"] = result.total_clamped;
  nlohmann::json sizes = nlohmann::json::array();
  for (const auto& idx : result.client_indices) sizes.push_back(idx.size());
  j["client_sample_counts"] = sizes;
  if (!result.rounds.empty()) {
    const RoundMetrics& last = result.rounds.back();
    j["final"] = {{"round", last.round},
                  {"server_accuracy", last.server_accuracy},
                  {"client_accuracy", last.client_accuracy},
                  {"mean_client_accuracy",
                   std::accumulate(last.client_accuracy.begin(), last.client_accuracy.end(), 0.0) /
                       double(last.client_accuracy.size())},
                  {"global_objective", last.global_objective}};
  }
  return j;
}

}  // namespace qfed::fed
