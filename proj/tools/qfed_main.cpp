// qfed: configure, run, and report federated quantum-classifier experiments.
//
// Subcommands: train, sweep, overhead, protocol-check, partition-stats.
// Settings resolve as defaults < config file < command-line flags; the
// QFED_DATA_ROOT environment variable fills in the dataset root when the
// config file does not name one.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "qfed/federation.hpp"
#include "qfed/protocol_checks.hpp"
#include "qfed/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir = "qfed-out";
  std::optional<std::uint64_t> seed;
  std::optional<int> clients;
  std::optional<double> alpha;
  std::optional<int> rounds;
  std::optional<std::string> channel_mode;
  std::optional<int> shots;
  bool no_personalized = false;
  std::optional<int> sample_cap;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file");
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--clients", f.clients, "client count M");
  cmd->add_option("--alpha", f.alpha, "Dirichlet concentration");
  cmd->add_option("--rounds", f.rounds, "global training rounds");
  cmd->add_option("--channel", f.channel_mode, "channel mode: ideal or sampled")
      ->check(CLI::IsMember({"ideal", "sampled"}));
  cmd->add_option("--shots", f.shots, "shots per estimate (sampled channel)");
  cmd->add_flag("--no-personalized", f.no_personalized, "drop the personal layer");
  cmd->add_option("--sample-cap", f.sample_cap, "per-client training sample cap (0 = off)");
}

json read_config_json(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  json j;
  in >> j;
  return j;
}

qfed::fed::FedConfig build_config(const CommonFlags& f) {
  const json j = read_config_json(f.config_path);
  qfed::fed::FedConfig cfg = qfed::fed::FedConfig::from_json(j);

  const bool config_names_root = j.contains("data") && j.at("data").contains("root");
  if (!config_names_root) {
    if (const char* env = std::getenv("QFED_DATA_ROOT")) cfg.data.root = env;
  }

  if (f.seed) cfg.seed = *f.seed;
  if (f.clients) cfg.clients = *f.clients;
  if (f.alpha) cfg.alpha = *f.alpha;
  if (f.rounds) cfg.rounds = *f.rounds;
  if (f.channel_mode)
    cfg.channel.mode = *f.channel_mode == "sampled" ? qfed::channel::ChannelMode::sampled
                                                    : qfed::channel::ChannelMode::ideal;
  if (f.shots) cfg.channel.shots = *f.shots;
  if (f.no_personalized) cfg.personalized = false;
  if (f.sample_cap) cfg.sample_cap = *f.sample_cap;
  return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

struct RunArtifacts {
  qfed::fed::RunResult result;
};

// Runs one experiment and writes metrics.csv, summary.json, and
// transcript.jsonl into `dir`.
RunArtifacts run_and_write(const qfed::fed::FedConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  const qfed::data::Dataset train = qfed::data::load_binary_dataset(cfg.data, true);
  const qfed::data::Dataset test = qfed::data::load_binary_dataset(cfg.data, false);

  std::ofstream transcript(dir / "transcript.jsonl", std::ios::binary);
  if (!transcript) throw std::runtime_error("cannot write " + (dir / "transcript.jsonl").string());
  auto sink = [&](int round, const qfed::channel::AggregationTranscript& t) {
    qfed::channel::write_transcript_jsonl(transcript, round, t);
  };

  RunArtifacts a{qfed::fed::run_federated(cfg, train, test, sink)};
  write_file(dir / "metrics.csv", qfed::fed::metrics_csv(a.result.rounds));
  write_file(dir / "summary.json", qfed::fed::summary_json(cfg, a.result).dump(2) + "\n");
  return a;
}

int cmd_train(const CommonFlags& flags) {
  const qfed::fed::FedConfig cfg = build_config(flags);
  const RunArtifacts a = run_and_write(cfg, flags.out_dir);
  if (!a.result.rounds.empty()) {
    const auto& last = a.result.rounds.back();
    std::cout << "rounds=" << last.round << " server_acc=" << last.server_accuracy
              << " objective=" << last.global_objective << "\n";
  }
  std::cout << "artifacts written to " << flags.out_dir << "\n";
  return 0;
}

int cmd_sweep(const CommonFlags& flags) {
  const json j = read_config_json(flags.config_path);
  std::vector<double> alphas = {1.0, 10.0, 100.0};
  std::vector<int> client_grid = {2, 4, 8};
  std::vector<bool> personalized_grid = {true, false};
  int workers = 1;
  if (j.contains("sweep")) {
    const auto& js = j.at("sweep");
    if (js.contains("alphas")) alphas = js.at("alphas").get<std::vector<double>>();
    if (js.contains("clients")) client_grid = js.at("clients").get<std::vector<int>>();
    if (js.contains("personalized"))
      personalized_grid = js.at("personalized").get<std::vector<bool>>();
    workers = js.value("workers", workers);
  }
  if (flags.alpha) alphas = {*flags.alpha};
  if (flags.clients) client_grid = {*flags.clients};
  if (flags.no_personalized) personalized_grid = {false};
  if (alphas.empty() || client_grid.empty() || personalized_grid.empty())
    throw std::runtime_error("sweep grid is empty");

  struct Cell {
    qfed::fed::FedConfig cfg;
    fs::path dir;
    std::string row;
    std::string error;
  };
  std::vector<Cell> cells;
  for (double alpha : alphas)
    for (int m : client_grid)
      for (bool pers : personalized_grid) {
        CommonFlags cell_flags = flags;
        cell_flags.alpha = alpha;
        cell_flags.clients = m;
        cell_flags.no_personalized = false;
        Cell cell;
        cell.cfg = build_config(cell_flags);
        cell.cfg.personalized = pers;
        if (workers > 1) cell.cfg.threads = 1;  // cells already run in parallel
        char name[64];
        std::snprintf(name, sizeof name, "alpha%g_m%d_%s", alpha, m, pers ? "pers" : "nopers");
        cell.dir = fs::path(flags.out_dir) / "cells" / name;
        cells.push_back(std::move(cell));
      }

  const auto run_cell = [](Cell& cell) {
    try {
      const RunArtifacts a = run_and_write(cell.cfg, cell.dir);
      const auto& last = a.result.rounds.back();
      double mean_client = 0.0;
      for (double acc : last.client_accuracy) mean_client += acc;
      mean_client /= double(last.client_accuracy.size());
      char row[160];
      std::snprintf(row, sizeof row, "%g,%d,%d,%.10g,%.10g\n", cell.cfg.alpha, cell.cfg.clients,
                    cell.cfg.personalized ? 1 : 0, last.server_accuracy, mean_client);
      cell.row = row;
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  };

  if (workers <= 1) {
    for (Cell& cell : cells) run_cell(cell);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1))
          run_cell(cells[i]);
      });
    for (auto& t : pool) t.join();
  }

  std::string combined = "alpha,M,personalized,server_acc,mean_client_acc\n";
  int failures = 0;
  for (const Cell& cell : cells) {
    if (!cell.error.empty()) {
      ++failures;
      std::cerr << "cell " << cell.dir.filename().string() << " failed: " << cell.error << "\n";
      continue;
    }
    combined += cell.row;
  }
  fs::create_directories(flags.out_dir);
  write_file(fs::path(flags.out_dir) / "combined.csv", combined);
  std::cout << combined;
  if (failures > 0) std::cerr << failures << " sweep cell(s) failed\n";
  return failures == 0 ? 0 : 1;
}

int cmd_overhead(const CommonFlags& flags) {
  const qfed::fed::FedConfig cfg = build_config(flags);
  const json report = qfed::fed::overhead_report(cfg).to_json();
  std::cout << report.dump(2) << "\n";
  if (!flags.out_dir.empty() && flags.out_dir != "qfed-out") {
    fs::create_directories(flags.out_dir);
    write_file(fs::path(flags.out_dir) / "overhead.json", report.dump(2) + "\n");
  }
  return 0;
}

int cmd_protocol_check(const CommonFlags& flags) {
  namespace checks = qfed::channel::checks;
  const std::uint64_t seed = flags.seed.value_or(20240801);
  bool ok = true;
  const auto verdict = [&](bool pass) {
    ok = ok && pass;
    return pass ? "PASS" : "FAIL";
  };

  const auto rt = checks::ideal_roundtrip_check(100, 48, seed);
  std::printf("ideal uplink round-trip   max_err=%.3e (tol 1e-9)  %s\n", rt.max_uplink_error,
              verdict(rt.max_uplink_error < 1e-9));
  std::printf("ideal downlink round-trip max_err=%.3e (tol 1e-9)  %s\n", rt.max_downlink_error,
              verdict(rt.max_downlink_error < 1e-9));

  const auto mix = checks::mixedness_check(50, seed + 1);
  std::printf("encoded-GHZ mixedness     max_dev=%.3e (tol 1e-10) %s\n", mix.max_deviation,
              verdict(mix.max_deviation < 1e-10));

  const auto noise = checks::shot_noise_check({100, 1000, 10000}, 200, seed + 2);
  std::printf("shot-noise slope          slope=%.3f (want -1 +/- 0.2) %s\n", noise.slope,
              verdict(std::abs(noise.slope + 1.0) < 0.2));
  for (std::size_t i = 0; i < noise.shot_grid.size(); ++i)
    std::printf("  R=%-6d var=%.6e\n", noise.shot_grid[i], noise.variances[i]);

  std::printf("%s\n", ok ? "all protocol checks passed" : "protocol checks FAILED");
  return ok ? 0 : 1;
}

int cmd_partition_stats(const CommonFlags& flags) {
  const qfed::fed::FedConfig cfg = build_config(flags);
  const qfed::data::Dataset train = qfed::data::load_binary_dataset(cfg.data, true);

  // Skew statistic: over 200 seeds, how far the most-loaded client's share
  // of label 0 strays from the uniform 1/M.
  std::cout << "alpha,mean_max_skew_label0\n";
  for (double alpha : {1.0, 10.0, 100.0}) {
    double total_skew = 0.0;
    long label0_total = 0;
    for (int l : train.labels) label0_total += (l == 0) ? 1 : 0;
    for (int s = 0; s < 200; ++s) {
      auto rng = qfed::make_rng(qfed::derive_seed(cfg.seed, {std::uint64_t(s)}));
      const auto d = qfed::data::sample_partition_matrix(alpha, 2, cfg.clients, rng);
      const auto splits = qfed::data::partition(train.labels, d, rng);
      long assigned = 0;
      double max_skew = 0.0;
      for (const auto& idx : splits) {
        long c0 = 0;
        for (int i : idx) c0 += (train.labels[std::size_t(i)] == 0) ? 1 : 0;
        assigned += long(idx.size());
        max_skew = std::max(max_skew,
                            std::abs(double(c0) / double(label0_total) - 1.0 / cfg.clients));
      }
      if (assigned != long(train.labels.size()))
        throw std::runtime_error("partition lost or duplicated samples");
      total_skew += max_skew;
    }
    std::printf("%g,%.6f\n", alpha, total_skew / 200.0);
  }
  std::cout << "conservation: every seed assigned all " << train.labels.size() << " samples\n";

  std::cout << "client,samples,label0,label1  (alpha=" << cfg.alpha << ", seed=" << cfg.seed
            << ", cap=" << cfg.sample_cap << ")\n";
  const auto splits = qfed::fed::client_splits(cfg, train.labels);
  for (std::size_t m = 0; m < splits.size(); ++m) {
    long c0 = 0;
    for (int i : splits[m]) c0 += (train.labels[std::size_t(i)] == 0) ? 1 : 0;
    std::cout << m << "," << splits[m].size() << "," << c0 << "," << (long(splits[m].size()) - c0)
              << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"federated quantum-classifier experiments over a simulated entangled channel"};
  app.require_subcommand(1);

  CommonFlags flags;
  auto* train = app.add_subcommand("train", "run one federated training experiment");
  add_common_flags(train, flags);
  auto* sweep = app.add_subcommand("sweep", "run the (alpha x clients x personalization) grid");
  add_common_flags(sweep, flags);
  auto* overhead = app.add_subcommand("overhead", "print the communication/computation cost model");
  add_common_flags(overhead, flags);
  auto* protocol = app.add_subcommand("protocol-check", "run channel diagnostics");
  add_common_flags(protocol, flags);
  auto* partition = app.add_subcommand("partition-stats", "report Dirichlet partition statistics");
  add_common_flags(partition, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(flags);
    if (sweep->parsed()) return cmd_sweep(flags);
    if (overhead->parsed()) return cmd_overhead(flags);
    if (protocol->parsed()) return cmd_protocol_check(flags);
    if (partition->parsed()) return cmd_partition_stats(flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
