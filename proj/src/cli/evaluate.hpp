#pragma once

#include <filesystem>
#include <vector>

#include "eval/metrics.hpp"
#include "eval/timing.hpp"
#include "model/variants.hpp"

namespace jointpred::cli {

struct EvalOptions {
  int64_t k = 6;
  Sampling sampling = Sampling::sample;
  int64_t runs = 1;      // sampling variants are rerun with fresh seeds
  double miss_threshold = 2.0;
  int64_t threads = 0;   // 0 = hardware concurrency (capped)
  uint64_t seed = 0;
};

struct MetricAggregate {
  double min_sade = 0.0;
  double min_sfde = 0.0;
  double actor_mr = 0.0;
  double actor_cr = 0.0;
};

struct EvalReport {
  std::string variant;
  std::string config_digest;
  std::string sampling;
  int64_t k = 0;
  int64_t runs = 1;
  int64_t num_scenes = 0;
  std::vector<eval::SceneMetrics> scenes;       // first run
  std::vector<MetricAggregate> run_aggregates;  // one per run
  MetricAggregate mean;                          // across runs
  MetricAggregate stddev;                        // across runs (0 for runs=1)
};

// Scene-level parallel evaluation with a deterministic ordered reduction:
// per-scene RNG streams are forked from (seed, run, scene index), so results
// are independent of thread scheduling. The report carries no wall-clock
// content; timing lives in the bench path.
EvalReport evaluate_model(const model::PredictionModel& m, const std::vector<scene::Scene>& scenes,
                          const EvalOptions& opts);

void write_report_json(const std::filesystem::path& path, const EvalReport& report);
void write_report_csv(const std::filesystem::path& path, const EvalReport& report);
// per-scene metric distributions, one histogram panel per metric
void write_metrics_svg(const std::filesystem::path& path, const EvalReport& report);

// ---- inference timing ----

struct BenchOptions {
  int64_t k = 6;
  Sampling sampling = Sampling::sample;
  int64_t repetitions = 30;
  int64_t warmups = 2;
  uint64_t seed = 0;
};

struct BenchResult {
  std::string variant;
  std::string config_digest;
  std::vector<eval::TimingSample> samples;  // one row per (scene, repetition)
  eval::TimingModel model;
  double mean_ms = 0.0;
  double std_ms = 0.0;
};

// Wall-clock per-scene prediction (forward pass plus recombination
// post-processing where the variant uses it), warm-up runs excluded.
BenchResult bench_inference(const model::PredictionModel& m, const std::vector<scene::Scene>& scenes,
                            const BenchOptions& opts);

void write_bench_json(const std::filesystem::path& path, const BenchResult& result);
// timing-vs-agent-count scatter with the fitted line
void write_bench_svg(const std::filesystem::path& path, const BenchResult& result);

}  // namespace jointpred::cli
