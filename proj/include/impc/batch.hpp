#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "impc/engine.hpp"
#include "impc/io.hpp"
#include "impc/scenario.hpp"
#include "impc/verify.hpp"

namespace impc {

struct BatchSpec {
  std::string preset_name = "2d_crowded";
  std::string kind = "random_transition";
  std::vector<int> counts = {4, 8, 14};
  int trials = 20;
  uint64_t seed_base = 1;
  std::vector<std::string> methods = {"impc_dr", "bvc"};
  RunConfig config;  // method is overridden per run
};

inline BatchSpec batch_spec_from_json(const json& j) {
  BatchSpec s;
  if (j.contains("preset")) s.preset_name = j.at("preset").get<std::string>();
  if (j.contains("kind")) s.kind = j.at("kind").get<std::string>();
  if (j.contains("counts")) s.counts = j.at("counts").get<std::vector<int>>();
  if (j.contains("trials")) s.trials = j.at("trials").get<int>();
  if (j.contains("seed_base")) s.seed_base = j.at("seed_base").get<uint64_t>();
  if (j.contains("methods")) s.methods = j.at("methods").get<std::vector<std::string>>();
  if (j.contains("config")) s.config = config_from_json(j.at("config"));
  if (s.counts.empty()) throw IoError("batch spec: counts must be non-empty");
  if (s.trials <= 0) throw IoError("batch spec: trials must be positive");
  if (s.methods.empty()) throw IoError("batch spec: methods must be non-empty");
  return s;
}

inline json batch_spec_to_json(const BatchSpec& s) {
  json j;
  j["preset"] = s.preset_name;
  j["kind"] = s.kind;
  j["counts"] = s.counts;
  j["trials"] = s.trials;
  j["seed_base"] = s.seed_base;
  j["methods"] = s.methods;
  j["config"] = config_to_json(s.config);
  return j;
}

// Stateless mix so every (base, robot count, trial) triple owns a distinct
// scenario seed regardless of sweep shape.
inline uint64_t derive_seed(uint64_t base, int n, int trial) {
  uint64_t z = base + 0x9E3779B97F4A7C15ull * (static_cast<uint64_t>(n) * 131071ull +
                                               static_cast<uint64_t>(trial) + 1ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

struct TrialRecord {
  std::string method;
  int n = 0;
  int trial = 0;
  uint64_t seed = 0;
  bool success = false;
  double completion_time = 0.0;
  double min_distance = std::numeric_limits<double>::infinity();
  bool collision_free = true;
  int infeasible_events = 0;
  int deadlock_activations = 0;
  int solver_fallbacks = 0;
  bool feasibility_violation = false;
  double wall_clock_s = 0.0;
};

struct BatchResult {
  std::vector<BatchRow> rows;
  std::vector<TrialRecord> trials;  // methods-major, then counts, then trial
};

inline int worker_count(size_t n_tasks) {
  unsigned n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("SWARM_IMPC_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = static_cast<unsigned>(v);
  }
  return static_cast<int>(std::min<size_t>(n, std::max<size_t>(n_tasks, 1)));
}

// Runs every (count, trial) scenario once per method. Each trial's scenario is
// shared across methods so the comparison is paired. Workers fill
// preallocated slots, so the outcome is independent of scheduling.
inline BatchResult run_batch(const BatchSpec& spec) {
  struct Task {
    size_t count_idx;
    int trial;
  };
  std::vector<Task> tasks;
  for (size_t ci = 0; ci < spec.counts.size(); ++ci)
    for (int t = 0; t < spec.trials; ++t) tasks.push_back({ci, t});

  const size_t n_methods = spec.methods.size();
  std::vector<TrialRecord> records(tasks.size() * n_methods);
  std::atomic<size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;

  auto work = [&]() {
    while (true) {
      const size_t ti = next.fetch_add(1);
      if (ti >= tasks.size()) return;
      try {
        const Task& task = tasks[ti];
        const int n = spec.counts[task.count_idx];
        const uint64_t seed = derive_seed(spec.seed_base, n, task.trial);
        const Scenario scen = gen_scenario(spec.kind, n, spec.preset_name, seed);
        for (size_t mi = 0; mi < n_methods; ++mi) {
          RunConfig cfg = spec.config;
          cfg.method = spec.methods[mi];
          const RunResult res = run_scenario(scen, cfg);
          const RunMetrics m = run_metrics(res);
          TrialRecord& rec =
              records[(mi * spec.counts.size() + task.count_idx) *
                          static_cast<size_t>(spec.trials) +
                      static_cast<size_t>(task.trial)];
          rec.method = cfg.method;
          rec.n = n;
          rec.trial = task.trial;
          rec.seed = seed;
          rec.success = m.success;
          rec.completion_time = m.completion_time;
          rec.min_distance = m.min_distance;
          rec.collision_free = m.collision_free;
          rec.infeasible_events = m.infeasible_events;
          rec.deadlock_activations = m.deadlock_activations;
          rec.solver_fallbacks = m.solver_fallbacks;
          rec.feasibility_violation = m.feasibility_violation;
          rec.wall_clock_s = res.wall_clock_s;
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const int n_workers = worker_count(tasks.size());
  if (n_workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(n_workers));
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(work);
    for (std::thread& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  BatchResult out;
  out.trials = std::move(records);
  for (size_t mi = 0; mi < n_methods; ++mi) {
    for (size_t ci = 0; ci < spec.counts.size(); ++ci) {
      BatchRow row;
      row.method = spec.methods[mi];
      row.n = spec.counts[ci];
      row.trials = spec.trials;
      std::vector<double> completions;
      double wall_sum = 0.0;
      double min_dist = std::numeric_limits<double>::infinity();
      for (int t = 0; t < spec.trials; ++t) {
        const TrialRecord& rec =
            out.trials[(mi * spec.counts.size() + ci) * static_cast<size_t>(spec.trials) +
                       static_cast<size_t>(t)];
        if (rec.success) {
          ++row.success_count;
          completions.push_back(rec.completion_time);
        }
        if (rec.infeasible_events > 0) ++row.infeasible_count;
        wall_sum += rec.wall_clock_s;
        min_dist = std::min(min_dist, rec.min_distance);
      }
      row.mean_wall_clock_s = wall_sum / static_cast<double>(spec.trials);
      row.min_distance_m = min_dist;
      if (completions.empty()) {
        row.mean_completion_s = std::numeric_limits<double>::quiet_NaN();
        row.p95_completion_s = std::numeric_limits<double>::quiet_NaN();
      } else {
        double sum = 0.0;
        for (double c : completions) sum += c;
        row.mean_completion_s = sum / static_cast<double>(completions.size());
        std::sort(completions.begin(), completions.end());
        const size_t rank = static_cast<size_t>(
            std::ceil(0.95 * static_cast<double>(completions.size())));
        row.p95_completion_s = completions[std::max<size_t>(rank, 1) - 1];
      }
      out.rows.push_back(row);
    }
  }
  return out;
}

}  // namespace impc
