#include <sys/utsname.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <thread>

#include "hinfer/bench.hpp"
#include "json.hpp"

namespace hinfer::bench {

using nlohmann::ordered_json;

std::optional<double> BenchReport::value(const std::string& key) const {
  for (const auto& [k, v] : values)
    if (k == key) return v;
  return std::nullopt;
}

std::optional<u64> BenchReport::count(const std::string& key) const {
  for (const auto& [k, v] : counts)
    if (k == key) return v;
  return std::nullopt;
}

std::string BenchReport::to_json() const {
  ordered_json j;
  j["bench"] = bench;
  j["op"] = op;
  j["shape"] = shape;
  j["trials"] = trials;
  j["median_us"] = median_us;
  j["mean_us"] = mean_us;
  ordered_json c = ordered_json::object();
  for (const auto& [k, v] : counts) c[k] = v;
  j["counts"] = c;
  ordered_json v = ordered_json::object();
  for (const auto& [k, x] : values) v[k] = x;
  j["values"] = v;
  return j.dump();
}

Timing time_trials(std::size_t trials, std::size_t warmup, const std::function<void()>& body, double min_trial_us) {
  using Clock = std::chrono::steady_clock;
  if (trials == 0) return {};
  if (trials % 2 == 0) ++trials;
  auto elapsed = [](Clock::time_point t0) { return std::chrono::duration<double, std::micro>(Clock::now() - t0).count(); };
  double once = 0;
  for (std::size_t i = 0; i < std::max<std::size_t>(warmup, min_trial_us > 0 ? 1 : 0); ++i) {
    const auto t0 = Clock::now();
    body();
    once = elapsed(t0);
  }
  const std::size_t reps = min_trial_us > 0 && once > 0 ? std::max<std::size_t>(1, static_cast<std::size_t>(min_trial_us / once)) : 1;
  std::vector<double> us(trials);
  for (auto& t : us) {
    const auto t0 = Clock::now();
    for (std::size_t r = 0; r < reps; ++r) body();
    t = elapsed(t0) / static_cast<double>(reps);
  }
  Timing out;
  out.trials = trials;
  out.reps = reps;
  out.mean_us = std::accumulate(us.begin(), us.end(), 0.0) / static_cast<double>(trials);
  std::nth_element(us.begin(), us.begin() + static_cast<std::ptrdiff_t>(trials / 2), us.end());
  out.median_us = us[trials / 2];
  return out;
}

PairTiming time_pair(std::size_t trials, std::size_t warmup, const std::function<void()>& a, const std::function<void()>& b,
                     double min_trial_us) {
  if (trials == 0) return {};
  if (trials % 2 == 0) ++trials;
  // Calibrate both sides once, then alternate single trials so that drift in
  // machine speed hits both equally.
  const Timing ca = time_trials(1, warmup, a, min_trial_us);
  const Timing cb = time_trials(1, warmup, b, min_trial_us);
  std::vector<double> ta, tb, ratio;
  for (std::size_t i = 0; i < trials; ++i) {
    const Timing x = time_trials(1, 0, [&] {
      for (std::size_t r = 0; r < ca.reps; ++r) a();
    });
    const Timing y = time_trials(1, 0, [&] {
      for (std::size_t r = 0; r < cb.reps; ++r) b();
    });
    ta.push_back(x.median_us / static_cast<double>(ca.reps));
    tb.push_back(y.median_us / static_cast<double>(cb.reps));
    ratio.push_back(tb.back() / ta.back());
  }
  auto summarize = [&](std::vector<double> v, std::size_t reps) {
    Timing t;
    t.trials = trials;
    t.reps = reps;
    t.mean_us = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(trials);
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(trials / 2), v.end());
    t.median_us = v[trials / 2];
    return t;
  };
  PairTiming out;
  out.a = summarize(ta, ca.reps);
  out.b = summarize(tb, cb.reps);
  std::nth_element(ratio.begin(), ratio.begin() + static_cast<std::ptrdiff_t>(trials / 2), ratio.end());
  out.ratio = ratio[trials / 2];
  return out;
}

std::string hardware_summary() {
  std::string cpu = "unknown cpu";
  std::ifstream info("/proc/cpuinfo");
  for (std::string line; std::getline(info, line);) {
    if (line.rfind("model name", 0) == 0) {
      cpu = line.substr(line.find(':') + 2);
      break;
    }
  }
  utsname u{};
  uname(&u);
  std::ostringstream os;
  os << cpu << "; " << std::thread::hardware_concurrency() << " hardware threads; " << u.sysname << ' ' << u.release << ' '
     << u.machine << "; " << "gcc " << __VERSION__;
  return os.str();
}

void print_json(std::ostream& os, const std::vector<BenchReport>& reports) {
  for (const auto& r : reports) os << r.to_json() << '\n';
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  if (v != 0 && (std::abs(v) >= 1e7 || std::abs(v) < 1e-2))
    os << std::setprecision(3) << std::scientific << v;
  else
    os << std::fixed << std::setprecision(v == std::floor(v) && std::abs(v) < 1e7 ? 0 : 2) << v;
  return os.str();
}

}  // namespace

void print_table(std::ostream& os, const std::vector<BenchReport>& reports) {
  std::vector<std::array<std::string, 7>> rows;
  rows.push_back({"bench", "op", "shape", "trials", "median_us", "mean_us", "details"});
  for (const auto& r : reports) {
    std::string details;
    for (const auto& [k, v] : r.counts) details += k + "=" + std::to_string(v) + " ";
    for (const auto& [k, v] : r.values) details += k + "=" + fmt(v) + " ";
    if (!details.empty()) details.pop_back();
    rows.push_back({r.bench, r.op, r.shape, std::to_string(r.trials), fmt(r.median_us), fmt(r.mean_us), details});
  }
  std::array<std::size_t, 7> width{};
  for (const auto& row : rows)
    for (std::size_t i = 0; i < 6; ++i) width[i] = std::max(width[i], row[i].size());
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < 7; ++i) {
      const bool numeric = i >= 3 && i <= 5;
      if (i == 6)
        os << row[i];
      else
        os << (numeric ? std::right : std::left) << std::setw(static_cast<int>(width[i])) << row[i] << "  ";
    }
    os << '\n';
  }
}

}  // namespace hinfer::bench
