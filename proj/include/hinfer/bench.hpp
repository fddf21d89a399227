#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "hinfer/common.hpp"

namespace hinfer::bench {

// One measured operation. Counts are exact integers checked against the
// closed forms; values carry times in other units, noise, bytes and ratios.
struct BenchReport {
  std::string bench;
  std::string op;
  std::string shape;
  std::size_t trials = 0;
  double median_us = 0;
  double mean_us = 0;
  std::vector<std::pair<std::string, u64>> counts;
  std::vector<std::pair<std::string, double>> values;

  std::optional<double> value(const std::string& key) const;
  std::optional<u64> count(const std::string& key) const;
  std::string to_json() const;
};

struct BenchOptions {
  std::size_t trials = 5;
  u64 seed = 1;
  std::size_t warmup = 1;
  // Activation sizes; the defaults are used when empty.
  std::vector<std::size_t> sizes;
};

// Thrown when a timed operation produces a wrong value.
class OracleFailure : public Error {
 public:
  using Error::Error;
};

struct Timing {
  std::size_t trials = 0;
  double median_us = 0;
  double mean_us = 0;
  std::size_t reps = 1;  // calls per trial
};

// Runs `warmup` untimed calls, then `trials` timed ones (bumped to an odd
// count). With min_trial_us set, each trial repeats the body until it lasts
// about that long and reports the time per call. The body throws
// OracleFailure on a wrong result.
Timing time_trials(std::size_t trials, std::size_t warmup, const std::function<void()>& body, double min_trial_us = 0);

struct PairTiming {
  Timing a, b;
  double ratio = 0;  // median over trials of time(b) / time(a)
};

// Alternates trials of `a` and `b` so both see the same machine conditions.
PairTiming time_pair(std::size_t trials, std::size_t warmup, const std::function<void()>& a, const std::function<void()>& b,
                     double min_trial_us = 0);

std::string hardware_summary();

// Every function returns an empty set when opt.trials is zero.
std::vector<BenchReport> bench_primitives(const BenchOptions& opt);
std::vector<BenchReport> bench_matvec(const BenchOptions& opt);
std::vector<BenchReport> bench_conv(const BenchOptions& opt);
std::vector<BenchReport> bench_activations(const BenchOptions& opt);
std::vector<BenchReport> bench_networks(const BenchOptions& opt);

void print_json(std::ostream& os, const std::vector<BenchReport>& reports);
void print_table(std::ostream& os, const std::vector<BenchReport>& reports);

}  // namespace hinfer::bench
