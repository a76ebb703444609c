#include "qfed/protocol_checks.hpp"

#include <chrono>
#include <cmath>

#include "qfed/rng.hpp"

namespace qfed::channel::checks {

namespace {

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

constexpr int kClientGrid[] = {2, 4, 8};

}  // namespace

RoundTripReport ideal_roundtrip_check(int instances, int params_per_instance,
                                      std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> angle(0.0, M_PI - 0.05);
  std::uniform_int_distribution<long> count(1, 1000);
  ChannelConfig ideal;

  RoundTripReport report;
  report.instances = instances;
  for (int t = 0; t < instances; ++t) {
    const int m = kClientGrid[t % 3];
    std::vector<long> counts(m);
    for (long& c : counts) c = count(rng);
    const WeightedScores scores = weighted_scores(counts);

    Eigen::MatrixXd thetas(params_per_instance, m);
    for (Eigen::Index i = 0; i < thetas.size(); ++i) thetas.data()[i] = angle(rng);

    // Convex weights keep every payload sum inside [0, pi - 0.05].
    const UplinkResult up = aggregate_uplink(thetas, scores, ideal, rng);
    const Eigen::VectorXd direct = thetas * scores.f;
    report.max_uplink_error =
        std::max(report.max_uplink_error, (up.theta - direct).cwiseAbs().maxCoeff());

    Eigen::VectorXd broadcast = Eigen::VectorXd::NullaryExpr(
        params_per_instance, [&](Eigen::Index) { return angle(rng); });
    const Eigen::MatrixXd received = broadcast_downlink(broadcast, m, ideal, rng);
    report.max_downlink_error = std::max(
        report.max_downlink_error,
        (received.colwise() - broadcast).cwiseAbs().maxCoeff());
  }
  report.seconds = elapsed_seconds(start);
  return report;
}

MixednessReport mixedness_check(int payload_sets, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);

  MixednessReport report;
  report.payload_sets = payload_sets;
  for (int t = 0; t < payload_sets; ++t) {
    const int m = kClientGrid[t % 3];
    Eigen::VectorXd payloads(m);
    for (Eigen::Index i = 0; i < m; ++i) payloads[i] = phase(rng);
    const sim::Statevector encoded = encode_phases(ghz_prepare(m), payloads);
    for (int q = 0; q < m; ++q) {
      Eigen::Matrix2cd rho = reduced_density(encoded, q);
      rho -= 0.5 * Eigen::Matrix2cd::Identity();
      report.max_deviation = std::max(report.max_deviation, rho.cwiseAbs().maxCoeff());
    }
  }
  return report;
}

ShotNoiseReport shot_noise_check(const std::vector<int>& shot_grid, int repetitions,
                                 std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  auto rng = make_rng(seed);

  // True sum pi/2 split across two clients with equal weights.
  const std::vector<long> counts = {1, 1};
  const WeightedScores scores = weighted_scores(counts);
  Eigen::MatrixXd thetas(1, 2);
  thetas << M_PI / 2.0, M_PI / 2.0;

  ShotNoiseReport report;
  report.shot_grid = shot_grid;
  for (int shots : shot_grid) {
    ChannelConfig sampled;
    sampled.mode = ChannelMode::sampled;
    sampled.shots = shots;
    double sum = 0.0, sum_sq = 0.0;
    for (int rep = 0; rep < repetitions; ++rep) {
      const double est = aggregate_uplink(thetas, scores, sampled, rng).theta[0];
      sum += est;
      sum_sq += est * est;
    }
    const double mean = sum / repetitions;
    report.variances.push_back((sum_sq - repetitions * mean * mean) / (repetitions - 1));
  }

  // Least-squares slope of log(var) against log(R).
  const int n = int(shot_grid.size());
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += std::log(double(shot_grid[i]));
    my += std::log(report.variances[std::size_t(i)]);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    const double dx = std::log(double(shot_grid[i])) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(report.variances[std::size_t(i)]) - my);
  }
  report.slope = sxy / sxx;
  report.seconds = elapsed_seconds(start);
  return report;
}

}  // namespace qfed::channel::checks
