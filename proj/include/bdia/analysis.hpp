#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "bdia/core.hpp"

namespace bdia {

using SampleSet = std::vector<Vector>;

struct ReconstructionError {
  double max_abs = 0.0;
  double rms = 0.0;
};

// Elementwise max-abs and RMS difference over a batch.
ReconstructionError reconstruction_error(const SampleSet& original,
                                         const SampleSet& reconstructed);

struct EnergyDistanceOptions {
  int workers = 1;
  // Sets larger than this use `pairs` random pairs per term instead of all pairs.
  std::size_t subsample_threshold = 10000;
  std::size_t pairs = 1000000;
  std::uint64_t seed = 0;
};

// 2 E|x - y| - E|x - x'| - E|y - y'| (V-statistic, diagonal included).
// Symmetric in its arguments bit for bit and independent of `workers`.
double energy_distance(const SampleSet& a, const SampleSet& b,
                       const EnergyDistanceOptions& options = {});

struct SlicedW1Options {
  int projections = 64;
  std::uint64_t seed = 0;
  int workers = 1;
};

// Mean over random unit directions of the 1-D Wasserstein-1 distance between
// the projected empirical distributions.
double sliced_w1(const SampleSet& a, const SampleSet& b,
                 const SlicedW1Options& options = {});

// Least-squares slope of log(error) against log(step size).
double convergence_order(const std::vector<std::pair<double, double>>& h_and_error);

/// One row of a solver comparison.  Fields that do not apply are NaN.
struct ComparisonReport {
  std::string solver;
  int n_steps = 0;
  double param = 0.0;
  double terminal_error = 0.0;
  double roundtrip_error = 0.0;
  double energy_distance = 0.0;
  double sliced_w1 = 0.0;
  std::size_t nfe = 0;
  double wall_time_s = 0.0;
};

// Shortest round-trip decimal form; "nan", "inf", "-inf" for non-finite values.
std::string format_double(double x);

std::string report_csv_header();
std::string report_csv_row(const ComparisonReport& report);
void write_reports_csv(std::ostream& out, const std::vector<ComparisonReport>& reports);
// JSON array of objects with the CSV column names as keys; NaN becomes null.
void write_reports_json(std::ostream& out, const std::vector<ComparisonReport>& reports);

}  // namespace bdia
