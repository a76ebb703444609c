// Self-contained channel diagnostics: ideal-mode round trips against direct
// arithmetic, single-qubit mixedness of encoded registers, and the 1/R
// shot-noise law. Backs the `protocol-check` subcommand and the acceptance
// suite.
#pragma once

#include <cstdint>
#include <vector>

#include "qfed/protocol.hpp"

namespace qfed::channel::checks {

struct RoundTripReport {
  int instances = 0;
  double max_uplink_error = 0.0;    // |aggregate - weighted mean|
  double max_downlink_error = 0.0;  // |received - sent|
  double seconds = 0.0;
};

/// Random uplink/downlink instances with client counts cycling over
/// {2, 4, 8}, `params_per_instance` parameters each, payload sums kept in
/// [0, pi - 0.05].
RoundTripReport ideal_roundtrip_check(int instances, int params_per_instance,
                                      std::uint64_t seed);

struct MixednessReport {
  int payload_sets = 0;
  double max_deviation = 0.0;  // entrywise |rho - I/2| over every qubit
};

/// Encodes random payload sets into GHZ registers (M cycling over
/// {2, 4, 8}) and measures how far any single-qubit reduced density matrix
/// strays from I/2.
MixednessReport mixedness_check(int payload_sets, std::uint64_t seed);

struct ShotNoiseReport {
  std::vector<int> shot_grid;
  std::vector<double> variances;  // estimator variance per grid point
  double slope = 0.0;             // log-log regression slope
  double seconds = 0.0;
};

/// Repeatedly estimates a true phase sum of pi/2 in sampled mode and
/// regresses log(variance) on log(R); the channel obeys sigma^2 ~ 1/R, so
/// the slope should sit near -1.
ShotNoiseReport shot_noise_check(const std::vector<int>& shot_grid, int repetitions,
                                 std::uint64_t seed);

}  // namespace qfed::channel::checks
