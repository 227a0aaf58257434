#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cohbench/optics.hpp"

namespace cohbench::selfcheck {

struct CheckResult {
  std::string name;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;  // reproduction hint for the worst draw
};

struct Options {
  int draws = 100;
  std::uint64_t seed = 0x5eedc0de;
};

/// Deterministic uniform draw (avoids the implementation-defined
/// std::uniform_real_distribution).
double uniform(std::mt19937_64& rng, double lo, double hi);

/// Random valid bench for round-trip checks: a laser feeding random chains
/// through optional PBS/BS splits, detectors on every dangling output.
BenchGraph random_bench(std::mt19937_64& rng, int index);

/// Analytic vs sampled detector means and joint correlations over random
/// parameter draws; tolerance 1e-3 relative.
CheckResult check_pipeline_equivalence(int draws, std::uint64_t seed);

/// Total field power before/after each lossless element on random fields.
CheckResult check_energy_conservation(int trials, std::uint64_t seed);

/// parse(serialize(g)) == g for the built-in bench and random benches.
CheckResult check_parser_roundtrip(int count, std::uint64_t seed);

/// Detector coefficient structure of the built-in bench against the
/// closed-form two-term patterns (the s1 check is the canary for a wrong
/// splitter phase convention).
CheckResult check_fig1_coefficients();
CheckResult check_detector_coefficients(const PropagationResult& result);

/// <I_s1> + <I_s2> = I0/2 (and the idler pair) across polarizer angles and
/// phases.
CheckResult check_detector_complementarity();

std::vector<CheckResult> run_all(const Options& opts);

}  // namespace cohbench::selfcheck
