// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// gate fails. Every tolerance is pinned here, in code.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qfed/federation.hpp"
#include "qfed/protocol_checks.hpp"
#include "qfed/rng.hpp"

using namespace qfed;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Criterion {
  std::string name;
  std::function<bool(std::string&)> check;
};

// ---- shared fixtures -------------------------------------------------------

const data::Dataset& acceptance_train() {
  static const data::Dataset ds =
      data::preprocess_all(data::filter_binary(data::make_synthetic_clothing(6600, 20240801), 1, 9));
  return ds;
}

const data::Dataset& acceptance_test() {
  static const data::Dataset ds =
      data::preprocess_all(data::filter_binary(data::make_synthetic_clothing(1100, 20240802), 1, 9));
  return ds;
}

fed::FedConfig desk_config(double alpha, int clients, std::uint64_t seed, bool personalized) {
  fed::FedConfig cfg;
  cfg.alpha = alpha;
  cfg.clients = clients;
  cfg.rounds = 100;
  cfg.sample_cap = 500;
  cfg.test_cap = 500;
  cfg.seed = seed;
  cfg.personalized = personalized;
  return cfg;
}

model::ModelParams random_model(std::uint64_t seed) {
  model::ModelParams p = model::ModelParams::zeros(4, 3, true);
  p.theta_b = fed::random_angles(48, derive_seed(seed, {1}));
  p.theta_p = fed::random_angles(8, derive_seed(seed, {2}));
  return p;
}

Eigen::VectorXd random_input(std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Eigen::VectorXd v(16);
  for (Eigen::Index i = 0; i < 16; ++i) v[i] = u(rng);
  return v / v.norm();
}

// ---- criteria --------------------------------------------------------------

bool protocol_exactness(std::string& detail) {
  const auto report = channel::checks::ideal_roundtrip_check(100, 48, 101);
  char buf[160];
  std::snprintf(buf, sizeof buf, "max_err=%.3e (tol 1e-9), %.1fs (limit 10s)",
                std::max(report.max_uplink_error, report.max_downlink_error), report.seconds);
  detail = buf;
  return report.max_uplink_error < 1e-9 && report.max_downlink_error < 1e-9 &&
         report.seconds < 10.0;
}

bool shot_noise_law(std::string& detail) {
  const auto report = channel::checks::shot_noise_check({100, 1000, 10000}, 200, 102);
  char buf[160];
  std::snprintf(buf, sizeof buf, "slope=%.3f (want -1 +/- 0.2), %.1fs (limit 60s)", report.slope,
                report.seconds);
  detail = buf;
  return std::abs(report.slope + 1.0) < 0.2 && report.seconds < 60.0;
}

bool privacy_mixedness(std::string& detail) {
  const auto report = channel::checks::mixedness_check(50, 103);
  char buf[128];
  std::snprintf(buf, sizeof buf, "max |rho - I/2| = %.3e (tol 1e-10)", report.max_deviation);
  detail = buf;
  return report.max_deviation < 1e-10;
}

bool gradient_correctness(std::string& detail) {
  double worst = 0.0;
  for (int draw = 0; draw < 20; ++draw) {
    const model::ModelParams p = random_model(300 + std::uint64_t(draw));
    train::Batch batch;
    batch.inputs = random_input(400 + std::uint64_t(draw));
    batch.labels = {draw % 2};
    const Eigen::VectorXd analytic = train::loss_gradient(p, batch);
    const Eigen::VectorXd fd = oracles::fd_loss_gradient(p, batch, 1e-5);
    for (Eigen::Index i = 0; i < analytic.size(); ++i)
      worst = std::max(worst,
                       std::abs(analytic[i] - fd[i]) / std::max(std::abs(fd[i]), 1e-6));
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "20 draws, max rel err = %.3e (tol 1e-4)", worst);
  detail = buf;
  return worst < 1e-4;
}

bool circuit_oracle(std::string& detail) {
  double worst = 0.0;
  for (int draw = 0; draw < 20; ++draw) {
    const model::ModelParams p = random_model(500 + std::uint64_t(draw));
    const Eigen::VectorXd input = random_input(600 + std::uint64_t(draw));

    const Eigen::Vector2d client = model::run_client_model(input, p);
    const Eigen::Vector2d client_oracle = oracles::matrix_model_scores(input, p);
    worst = std::max(worst, (client - client_oracle).cwiseAbs().maxCoeff());

    model::ModelParams server = p;
    server.theta_p.resize(0);
    const Eigen::Vector2d srv = model::run_server_model(input, p.theta_b, 4, 3);
    const Eigen::Vector2d srv_oracle = oracles::matrix_model_scores(input, server);
    worst = std::max(worst, (srv - srv_oracle).cwiseAbs().maxCoeff());
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "20 draws, max |fast - matrix| = %.3e (tol 1e-10)", worst);
  detail = buf;
  return worst < 1e-10;
}

bool desk_scale_accuracy(std::string& detail) {
  const auto start = Clock::now();
  bool ok = true;
  std::string parts;
  for (int clients : {2, 8}) {
    const auto result = fed::run_federated(desk_config(100.0, clients, 42, true),
                                           acceptance_train(), acceptance_test());
    const double acc = result.rounds.back().server_accuracy;
    const double first_loss = result.rounds.front().global_objective;
    const double last_loss = result.rounds.back().global_objective;
    const bool cell_ok = acc >= 0.90 && last_loss < 0.5 * first_loss;
    ok = ok && cell_ok;
    char buf[128];
    std::snprintf(buf, sizeof buf, "M=%d: acc=%.3f (>=0.90), loss %.3f->%.3f (<50%%); ",
                  clients, acc, first_loss, last_loss);
    parts += buf;
  }
  const double elapsed = seconds_since(start);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.0fs (limit 900s)", elapsed);
  detail = parts + buf;
  return ok && elapsed < 900.0;
}

bool personalization_effect(std::string& detail) {
  double with_sum = 0.0, without_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (bool personalized : {true, false}) {
      const auto result = fed::run_federated(desk_config(1.0, 2, seed, personalized),
                                             acceptance_train(), acceptance_test());
      const auto& acc = result.rounds.back().client_accuracy;
      const double mean = (acc[0] + acc[1]) / 2.0;
      (personalized ? with_sum : without_sum) += mean;
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "mean client acc over 5 seeds: with=%.4f, without=%.4f (want with >= without)",
                with_sum / 5.0, without_sum / 5.0);
  detail = buf;
  return with_sum >= without_sum;
}

bool partition_statistics(std::string& detail) {
  const auto& labels = acceptance_train().labels;
  long label0_total = 0;
  for (int l : labels) label0_total += l == 0 ? 1 : 0;

  const auto mean_max_skew = [&](double alpha) {
    double total = 0.0;
    for (int s = 0; s < 200; ++s) {
      auto rng = make_rng(derive_seed(700, {std::uint64_t(s)}));
      const auto d = data::sample_partition_matrix(alpha, 2, 2, rng);
      const auto splits = data::partition(labels, d, rng);
      double max_skew = 0.0;
      for (const auto& client : splits) {
        long c0 = 0;
        for (int idx : client) c0 += labels[std::size_t(idx)] == 0 ? 1 : 0;
        max_skew = std::max(max_skew, std::abs(double(c0) / double(label0_total) - 0.5));
      }
      total += max_skew;
    }
    return total / 200.0;
  };
  const double skew_low = mean_max_skew(1.0);
  const double skew_high = mean_max_skew(100.0);

  bool conserved = true;
  for (double alpha : {1.0, 10.0, 100.0})
    for (int clients : {2, 4, 8}) {
      auto rng = make_rng(derive_seed(701, {std::uint64_t(alpha), std::uint64_t(clients)}));
      const auto d = data::sample_partition_matrix(alpha, 2, clients, rng);
      const auto splits = data::partition(labels, d, rng);
      std::size_t assigned = 0;
      for (const auto& client : splits) assigned += client.size();
      conserved = conserved && assigned == labels.size();
    }

  char buf[160];
  std::snprintf(buf, sizeof buf,
                "mean max skew: alpha=1 -> %.4f > alpha=100 -> %.4f; conservation %s", skew_low,
                skew_high, conserved ? "holds" : "VIOLATED");
  detail = buf;
  return skew_low > skew_high && conserved;
}

bool overhead_arithmetic(std::string& detail) {
  fed::FedConfig cfg;
  cfg.clients = 2;
  cfg.rounds = 100;  // n=4, k=3 defaults
  const auto report = fed::overhead_report(cfg);
  const bool ok = std::abs(report.downlink_seconds - 0.10036) < 1e-12 &&
                  std::abs(report.uplink_seconds - 0.10024) < 1e-12 &&
                  report.server_storage_qubits == 9600 && report.client_storage_qubits == 4800 &&
                  report.server_depth == 3 && report.client_depth == 4;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "T_down=%.5f (0.10036), T_up=%.5f (0.10024), storage=%ld/%ld (9600/4800)",
                report.downlink_seconds, report.uplink_seconds, report.server_storage_qubits,
                report.client_storage_qubits);
  detail = buf;
  return ok;
}

bool determinism(std::string& detail) {
  fed::FedConfig cfg = desk_config(100.0, 2, 7, true);
  cfg.rounds = 5;
  cfg.sample_cap = 200;
  const auto a = fed::run_federated(cfg, acceptance_train(), acceptance_test());
  const auto b = fed::run_federated(cfg, acceptance_train(), acceptance_test());
  const std::string csv_a = fed::metrics_csv(a.rounds);
  const bool identical = csv_a == fed::metrics_csv(b.rounds);
  detail = identical ? "two seeded runs, byte-identical metrics CSV" : "CSV bytes differ";
  return identical;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"protocol-exactness-ideal", protocol_exactness},
      {"shot-noise-law", shot_noise_law},
      {"privacy-mixedness", privacy_mixedness},
      {"gradient-correctness", gradient_correctness},
      {"circuit-oracle", circuit_oracle},
      {"desk-scale-accuracy", desk_scale_accuracy},
      {"personalization-effect", personalization_effect},
      {"partition-statistics", partition_statistics},
      {"overhead-arithmetic", overhead_arithmetic},
      {"determinism", determinism},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    std::string detail;
    bool pass = false;
    try {
      pass = criteria[i].check(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    if (!pass) ++failures;
    std::printf("[%2zu] %-26s %s  %s\n", i + 1, criteria[i].name.c_str(),
                pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
  }
  if (failures == 0)
    std::printf("all %zu acceptance criteria passed\n", criteria.size());
  else
    std::printf("%d of %zu acceptance criteria FAILED\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
