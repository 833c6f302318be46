#include "cli/evaluate.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

namespace jointpred::cli {

using model::PredictionModel;
using model::SceneFeatures;
using nlohmann::json;

namespace {

eval::GroundTruth ground_truth_of(const scene::Scene& sc) {
  eval::GroundTruth gt;
  for (const auto& a : sc.agents) gt.push_back(a.future);
  return gt;
}

MetricAggregate aggregate_of(const std::vector<eval::SceneMetrics>& rows) {
  MetricAggregate agg;
  for (const auto& r : rows) {
    agg.min_sade += r.min_sade;
    agg.min_sfde += r.min_sfde;
    agg.actor_mr += r.actor_mr;
    agg.actor_cr += r.actor_cr;
  }
  const double n = static_cast<double>(rows.size());
  agg.min_sade /= n;
  agg.min_sfde /= n;
  agg.actor_mr /= n;
  agg.actor_cr /= n;
  return agg;
}

int64_t worker_count(int64_t requested, size_t jobs) {
  int64_t n = requested > 0 ? requested : static_cast<int64_t>(std::thread::hardware_concurrency());
  n = std::max<int64_t>(1, std::min<int64_t>(n, 8));
  return std::min<int64_t>(n, static_cast<int64_t>(jobs));
}

}  // namespace

EvalReport evaluate_model(const PredictionModel& m, const std::vector<scene::Scene>& scenes,
                          const EvalOptions& opts) {
  if (scenes.empty()) throw ValidationError("evaluate: empty dataset");
  for (const scene::Scene& sc : scenes) {
    if (!sc.has_futures()) throw ValidationError("evaluate: scene " + sc.id + " has no futures");
  }
  if (opts.runs < 1) throw ValidationError("evaluate: runs must be >= 1");

  std::vector<SceneFeatures> features;
  features.reserve(scenes.size());
  for (const scene::Scene& sc : scenes) features.push_back(m.featurize_scene(sc));

  EvalReport report;
  report.variant = variant_name(m.config().variant);
  report.config_digest = config_digest(m.config());
  report.sampling = sampling_name(opts.sampling);
  report.k = opts.k;
  report.runs = opts.runs;
  report.num_scenes = static_cast<int64_t>(scenes.size());

  Rng master(opts.seed ^ 0x510e527fade682d1ull);
  for (int64_t run = 0; run < opts.runs; ++run) {
    Rng run_rng = master.fork(static_cast<uint64_t>(run));
    std::vector<eval::SceneMetrics> rows(scenes.size());
    const int64_t workers = worker_count(opts.threads, scenes.size());
    std::vector<std::thread> pool;
    std::atomic<size_t> next{0};
    auto work = [&]() {
      ad::NoGradGuard ng;
      for (size_t i = next.fetch_add(1); i < scenes.size(); i = next.fetch_add(1)) {
        Rng rng = run_rng.fork(i);
        eval::ScenePrediction pred = m.predict(features[i], opts.k, opts.sampling, rng);
        rows[i] = eval::evaluate_scene(scenes[i].id, pred, ground_truth_of(scenes[i]),
                                       features[i].agent_types, opts.miss_threshold);
      }
    };
    if (workers <= 1) {
      work();
    } else {
      for (int64_t w = 0; w < workers; ++w) pool.emplace_back(work);
      for (auto& t : pool) t.join();
    }
    if (run == 0) report.scenes = rows;
    report.run_aggregates.push_back(aggregate_of(rows));
  }

  // mean and sample stddev across runs
  const double n = static_cast<double>(opts.runs);
  for (const auto& a : report.run_aggregates) {
    report.mean.min_sade += a.min_sade / n;
    report.mean.min_sfde += a.min_sfde / n;
    report.mean.actor_mr += a.actor_mr / n;
    report.mean.actor_cr += a.actor_cr / n;
  }
  if (opts.runs > 1) {
    MetricAggregate acc;
    for (const auto& a : report.run_aggregates) {
      acc.min_sade += (a.min_sade - report.mean.min_sade) * (a.min_sade - report.mean.min_sade);
      acc.min_sfde += (a.min_sfde - report.mean.min_sfde) * (a.min_sfde - report.mean.min_sfde);
      acc.actor_mr += (a.actor_mr - report.mean.actor_mr) * (a.actor_mr - report.mean.actor_mr);
      acc.actor_cr += (a.actor_cr - report.mean.actor_cr) * (a.actor_cr - report.mean.actor_cr);
    }
    report.stddev.min_sade = std::sqrt(acc.min_sade / (n - 1.0));
    report.stddev.min_sfde = std::sqrt(acc.min_sfde / (n - 1.0));
    report.stddev.actor_mr = std::sqrt(acc.actor_mr / (n - 1.0));
    report.stddev.actor_cr = std::sqrt(acc.actor_cr / (n - 1.0));
  }
  return report;
}

namespace {

json aggregate_json(const MetricAggregate& a) {
  return {{"min_sade", a.min_sade}, {"min_sfde", a.min_sfde}, {"actor_mr", a.actor_mr}, {"actor_cr", a.actor_cr}};
}

}  // namespace

void write_report_json(const std::filesystem::path& path, const EvalReport& report) {
  json j;
  j["variant"] = report.variant;
  j["config_digest"] = report.config_digest;
  j["sampling"] = report.sampling;
  j["k"] = report.k;
  j["runs"] = report.runs;
  j["num_scenes"] = report.num_scenes;
  j["aggregate"] = aggregate_json(report.mean);
  j["aggregate_std"] = aggregate_json(report.stddev);
  json runs = json::array();
  for (const auto& a : report.run_aggregates) runs.push_back(aggregate_json(a));
  j["run_aggregates"] = std::move(runs);
  json rows = json::array();
  for (const auto& r : report.scenes) {
    rows.push_back({{"id", r.scene_id},
                    {"n_agents", r.n_agents},
                    {"min_sade", r.min_sade},
                    {"min_sfde", r.min_sfde},
                    {"actor_mr", r.actor_mr},
                    {"actor_cr", r.actor_cr},
                    {"best_mode", r.best_mode}});
  }
  j["scenes"] = std::move(rows);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write report: " + path.string());
  out << j.dump(2) << "\n";
}

void write_report_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write report: " + path.string());
  out << "scene_id,n_agents,min_sade,min_sfde,actor_mr,actor_cr,best_mode\n";
  char row[320];
  for (const auto& r : report.scenes) {
    std::snprintf(row, sizeof(row), "%s,%lld,%.9g,%.9g,%.9g,%.9g,%lld\n", r.scene_id.c_str(),
                  static_cast<long long>(r.n_agents), r.min_sade, r.min_sfde, r.actor_mr, r.actor_cr,
                  static_cast<long long>(r.best_mode));
    out << row;
  }
  std::snprintf(row, sizeof(row), "aggregate,%lld,%.9g,%.9g,%.9g,%.9g,\n",
                static_cast<long long>(report.num_scenes), report.mean.min_sade, report.mean.min_sfde,
                report.mean.actor_mr, report.mean.actor_cr);
  out << row;
}

namespace {

struct Panel {
  const char* title;
  std::vector<double> values;
};

void svg_histogram(std::string& svg, const Panel& panel, double x0, double y0, double w, double h) {
  char buf[512];
  const int bins = 16;
  double lo = panel.values[0], hi = panel.values[0];
  for (double v : panel.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi <= lo) hi = lo + 1.0;
  std::vector<int> counts(bins, 0);
  for (double v : panel.values) {
    int b = static_cast<int>((v - lo) / (hi - lo) * bins);
    b = std::min(bins - 1, std::max(0, b));
    counts[static_cast<size_t>(b)]++;
  }
  int peak = 1;
  for (int c : counts) peak = std::max(peak, c);
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" font-family=\"sans-serif\">%s</text>\n",
                x0, y0 - 6.0, panel.title);
  svg += buf;
  const double bw = w / bins;
  for (int b = 0; b < bins; ++b) {
    const double bh = h * counts[static_cast<size_t>(b)] / peak;
    std::snprintf(buf, sizeof(buf),
                  "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"#4878a8\"/>\n",
                  x0 + b * bw, y0 + h - bh, bw - 1.0, bh);
    svg += buf;
  }
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.1f\" y=\"%.1f\" font-size=\"10\" font-family=\"sans-serif\">%.4g</text>\n",
                x0, y0 + h + 12.0, lo);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.1f\" y=\"%.1f\" font-size=\"10\" font-family=\"sans-serif\" text-anchor=\"end\">%.4g</text>\n",
                x0 + w, y0 + h + 12.0, hi);
  svg += buf;
}

}  // namespace

void write_metrics_svg(const std::filesystem::path& path, const EvalReport& report) {
  std::vector<Panel> panels{{"minSADE [m]", {}}, {"minSFDE [m]", {}}, {"actorMR", {}}, {"actorCR", {}}};
  for (const auto& r : report.scenes) {
    panels[0].values.push_back(r.min_sade);
    panels[1].values.push_back(r.min_sfde);
    panels[2].values.push_back(r.actor_mr);
    panels[3].values.push_back(r.actor_cr);
  }
  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" viewBox=\"0 0 640 420\">\n"
      "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
  const double w = 260.0, h = 140.0;
  for (size_t p = 0; p < panels.size(); ++p) {
    const double x0 = 40.0 + (p % 2) * (w + 40.0);
    const double y0 = 30.0 + (p / 2) * (h + 60.0);
    svg_histogram(svg, panels[p], x0, y0, w, h);
  }
  svg += "</svg>\n";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write svg: " + path.string());
  out << svg;
}

BenchResult bench_inference(const PredictionModel& m, const std::vector<scene::Scene>& scenes,
                            const BenchOptions& opts) {
  if (scenes.empty()) throw ValidationError("bench: empty dataset");
  if (opts.repetitions < 1) throw ValidationError("bench: repetitions must be >= 1");

  BenchResult result;
  result.variant = variant_name(m.config().variant);
  result.config_digest = config_digest(m.config());

  ad::NoGradGuard ng;
  Rng master(opts.seed ^ 0x9b05688c2b3e6c1full);
  for (size_t i = 0; i < scenes.size(); ++i) {
    SceneFeatures f = m.featurize_scene(scenes[i]);
    for (int64_t wu = 0; wu < opts.warmups; ++wu) {
      Rng rng = master.fork(i * 1000003 + static_cast<uint64_t>(wu));
      (void)m.predict(f, opts.k, opts.sampling, rng);
    }
    for (int64_t rep = 0; rep < opts.repetitions; ++rep) {
      Rng rng = master.fork(i * 1000003 + 100 + static_cast<uint64_t>(rep));
      const auto start = std::chrono::steady_clock::now();
      eval::ScenePrediction pred = m.predict(f, opts.k, opts.sampling, rng);
      const auto end = std::chrono::steady_clock::now();
      if (pred.traj.empty()) throw NumericError("bench: empty prediction");
      const double ms = std::chrono::duration<double, std::milli>(end - start).count();
      result.samples.push_back({scenes[i].n_agents(), scenes[i].n_map(), ms});
    }
  }
  double mean = 0.0;
  for (const auto& s : result.samples) mean += s.ms;
  mean /= static_cast<double>(result.samples.size());
  double var = 0.0;
  for (const auto& s : result.samples) var += (s.ms - mean) * (s.ms - mean);
  result.mean_ms = mean;
  result.std_ms = result.samples.size() > 1
                      ? std::sqrt(var / static_cast<double>(result.samples.size() - 1))
                      : 0.0;
  result.model = fit_timing_model(result.samples);
  return result;
}

void write_bench_json(const std::filesystem::path& path, const BenchResult& result) {
  json j;
  j["variant"] = result.variant;
  j["config_digest"] = result.config_digest;
  j["mean_ms"] = result.mean_ms;
  j["std_ms"] = result.std_ms;
  j["timing_model"] = {{"gamma0", result.model.gamma0},
                       {"gamma_agent", result.model.gamma_agent},
                       {"gamma_lane", result.model.gamma_lane},
                       {"r_squared", result.model.r_squared}};
  json rows = json::array();
  for (const auto& s : result.samples) {
    rows.push_back({{"n_agents", s.n_agents}, {"n_lanes", s.n_lanes}, {"ms", s.ms}});
  }
  j["samples"] = std::move(rows);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write bench json: " + path.string());
  out << j.dump(2) << "\n";
}

void write_bench_svg(const std::filesystem::path& path, const BenchResult& result) {
  double max_na = 1.0, max_ms = 0.0;
  for (const auto& s : result.samples) {
    max_na = std::max(max_na, static_cast<double>(s.n_agents));
    max_ms = std::max(max_ms, s.ms);
  }
  if (max_ms <= 0.0) max_ms = 1.0;
  const double w = 520.0, h = 300.0, x0 = 60.0, y0 = 30.0;
  char buf[512];
  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n"
      "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.1f\" y=\"18\" font-size=\"12\" font-family=\"sans-serif\">"
                "inference time vs agent count (%s)</text>\n",
                x0, result.variant.c_str());
  svg += buf;
  for (const auto& s : result.samples) {
    const double px = x0 + w * static_cast<double>(s.n_agents) / max_na;
    const double py = y0 + h - h * s.ms / max_ms;
    std::snprintf(buf, sizeof(buf), "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2.5\" fill=\"#4878a8\" fill-opacity=\"0.5\"/>\n",
                  px, py);
    svg += buf;
  }
  // fitted line at the mean lane count
  double mean_nl = 0.0;
  for (const auto& s : result.samples) mean_nl += static_cast<double>(s.n_lanes);
  mean_nl /= static_cast<double>(result.samples.size());
  const double yl = result.model.gamma0 + result.model.gamma_lane * mean_nl;
  const double yr = yl + result.model.gamma_agent * max_na;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#a84848\" stroke-width=\"1.5\"/>\n",
                x0, y0 + h - h * yl / max_ms, x0 + w, y0 + h - h * yr / max_ms);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.1f\" y=\"%.1f\" font-size=\"10\" font-family=\"sans-serif\">"
                "fit: %.4g + %.4g*N_a + %.4g*N_l ms, R^2=%.4g</text>\n",
                x0, y0 + h + 30.0, result.model.gamma0, result.model.gamma_agent,
                result.model.gamma_lane, result.model.r_squared);
  svg += buf;
  svg += "</svg>\n";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write svg: " + path.string());
  out << svg;
}

}  // namespace jointpred::cli
