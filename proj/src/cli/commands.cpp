#include "cli/commands.hpp"

#include <cstdio>
#include <fstream>

#include "autodiff/grad_check.hpp"
#include "eval/metrics.hpp"
#include "joint/recombination.hpp"
#include "scene/generator.hpp"
#include "scene/scene_io.hpp"

namespace jointpred::cli {

using model::PredictionModel;
using nlohmann::json;

namespace {

std::string scene_file_name(int64_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%05lld.json", static_cast<long long>(i));
  return buf;
}

PredictionModel model_from_checkpoint(const std::filesystem::path& path, Checkpoint* out_ckpt = nullptr) {
  Checkpoint ckpt = load_checkpoint(path);
  PredictionModel m(ckpt.config);
  nn::ParamMap pm = m.params();
  restore_params(ckpt, pm);
  if (out_ckpt) *out_ckpt = std::move(ckpt);
  return m;
}

std::vector<scene::Scene> load_scenes_checked(const std::filesystem::path& dir, const std::string& split,
                                              const ExperimentConfig& cfg) {
  scene::DatasetIndex index = scene::read_index(dir);
  if (index.t_p != cfg.t_p || index.t != cfg.t) {
    throw ValidationError("dataset horizons (t_p=" + std::to_string(index.t_p) + ", t=" +
                          std::to_string(index.t) + ") do not match the config (t_p=" +
                          std::to_string(cfg.t_p) + ", t=" + std::to_string(cfg.t) + ")");
  }
  return scene::load_split(dir, split);
}

}  // namespace

json joint_prediction_to_json(const std::string& scene_id, const std::string& digest,
                              const std::string& sampling, const std::vector<int64_t>& agent_ids,
                              const eval::ScenePrediction& pred) {
  json j;
  j["scene_id"] = scene_id;
  j["config_digest"] = digest;
  j["frame"] = "global";
  j["k"] = pred.k();
  j["sampling"] = sampling;
  j["agent_ids"] = agent_ids;
  json modes = json::array();
  for (int64_t m = 0; m < pred.k(); ++m) {
    json jm;
    jm["score"] = pred.scores[static_cast<size_t>(m)];
    json trajs = json::array();
    for (const auto& agent : pred.traj[static_cast<size_t>(m)]) {
      json tr = json::array();
      for (const auto& p : agent) tr.push_back({p[0], p[1]});
      trajs.push_back(std::move(tr));
    }
    jm["trajectories"] = std::move(trajs);
    modes.push_back(std::move(jm));
  }
  j["modes"] = std::move(modes);
  return j;
}

json marginal_prediction_to_json(const std::string& scene_id, const std::string& digest,
                                 const model::MarginalPrediction& pred) {
  json j;
  j["scene_id"] = scene_id;
  j["config_digest"] = digest;
  j["frame"] = "global";
  j["k"] = pred.scores.empty() ? 0 : static_cast<int64_t>(pred.scores[0].size());
  json agents = json::array();
  for (size_t i = 0; i < pred.scores.size(); ++i) {
    json ja;
    ja["id"] = pred.agent_ids[i];
    ja["scores"] = pred.scores[i];
    json trajs = json::array();
    for (const auto& mode : pred.traj[i]) {
      json tr = json::array();
      for (const auto& p : mode) tr.push_back({p[0], p[1]});
      trajs.push_back(std::move(tr));
    }
    ja["trajectories"] = std::move(trajs);
    agents.push_back(std::move(ja));
  }
  j["agents"] = std::move(agents);
  return j;
}

int cmd_generate(const GenerateArgs& args) {
  if (args.count <= 0) throw ValidationError("generate: count must be positive");
  std::vector<scene::ScenarioKind> kinds;
  if (args.kinds.empty()) {
    kinds = {scene::ScenarioKind::straight, scene::ScenarioKind::intersection_yield,
             scene::ScenarioKind::merge, scene::ScenarioKind::turn_multi_modal};
  } else {
    for (const std::string& k : args.kinds) kinds.push_back(scene::scenario_kind_from_name(k));
  }
  std::error_code ec;
  std::filesystem::create_directories(args.out_dir, ec);
  if (ec) throw ValidationError("generate: cannot create " + args.out_dir.string() + ": " + ec.message());

  scene::GeneratorParams gp;
  gp.t_p = args.t_p;
  gp.t = args.t;
  gp.dt = args.dt;

  scene::DatasetIndex index;
  index.t_p = gp.t_p;
  index.t = gp.t;
  index.dt = gp.dt;
  const int64_t n_val = static_cast<int64_t>(static_cast<double>(args.count) * args.val_fraction);
  for (int64_t i = 0; i < args.count; ++i) {
    const scene::ScenarioKind kind = kinds[static_cast<size_t>(i) % kinds.size()];
    scene::Scene sc = scene::generate_scene(kind, args.seed + static_cast<uint64_t>(i), gp);
    if (eval::ground_truth_collision_rate(sc) != 0.0) {
      throw NumericError("generate: collision in ground truth of " + sc.id);
    }
    const std::string name = scene_file_name(i);
    scene::write_scene(args.out_dir / name, sc);
    if (i < args.count - n_val) index.train.push_back(name);
    else index.val.push_back(name);
  }
  scene::write_index(args.out_dir, index);
  std::printf("generated %lld scenes (%zu train, %zu val) in %s\n", static_cast<long long>(args.count),
              index.train.size(), index.val.size(), args.out_dir.string().c_str());
  return 0;
}

int cmd_train(const TrainArgs& args) {
  ExperimentConfig cfg = load_config(args.config_path);
  if (args.seed_override >= 0) cfg.seed = static_cast<uint64_t>(args.seed_override);
  const std::filesystem::path data =
      args.data_dir.empty() ? std::filesystem::path(cfg.data_dir) : args.data_dir;
  if (data.empty()) throw ValidationError("train: no dataset directory (config data_dir or --data)");
  std::vector<scene::Scene> scenes = load_scenes_checked(data, args.split, cfg);

  PredictionModel m(cfg);
  TrainOptions opts;
  opts.out_dir = args.out_dir;
  opts.stop_min_sade = args.stop_min_sade;
  if (cfg.variant == Variant::cvae) opts.probe_sampling = Sampling::prior_mean_first;
  TrainResult res = train_model(m, scenes, opts);
  std::printf("trained %s for %lld steps (%lld epochs), final loss %.6g; checkpoint %s\n",
              variant_name(cfg.variant), static_cast<long long>(res.steps),
              static_cast<long long>(res.epochs), res.final_loss,
              res.checkpoint_path.string().c_str());
  return 0;
}

int cmd_predict(const PredictArgs& args) {
  PredictionModel m = model_from_checkpoint(args.checkpoint);
  const ExperimentConfig& cfg = m.config();
  scene::Scene sc = scene::read_scene(args.scene_file);
  sc.validate(cfg.t_p, cfg.t);
  model::SceneFeatures f = m.featurize_scene(sc);
  const std::string digest = config_digest(cfg);

  json out;
  if (args.marginal) {
    out = marginal_prediction_to_json(sc.id, digest, m.predict_marginal(f));
  } else {
    Rng rng(args.seed ^ 0x1f83d9abfb41bd6bull);
    eval::ScenePrediction pred = m.predict(f, args.k, sampling_from_name(args.sampling), rng);
    out = joint_prediction_to_json(sc.id, digest, args.sampling, f.agent_ids, pred);
  }
  std::ofstream os(args.out_file, std::ios::binary);
  if (!os) throw ValidationError("predict: cannot write " + args.out_file.string());
  os << out.dump(2) << "\n";
  std::printf("wrote %s\n", args.out_file.string().c_str());
  return 0;
}

int cmd_evaluate(const EvaluateArgs& args) {
  PredictionModel m = model_from_checkpoint(args.checkpoint);
  std::vector<scene::Scene> scenes = load_scenes_checked(args.data_dir, args.split, m.config());

  EvalOptions opts;
  opts.k = args.k;
  opts.sampling = sampling_from_name(args.sampling);
  if (opts.sampling == Sampling::prior_mean_first && m.config().variant != Variant::cvae) {
    throw ValidationError("evaluate: prior-mean-first sampling requires a cvae checkpoint");
  }
  opts.runs = args.runs;
  opts.miss_threshold = m.config().miss_threshold;
  opts.threads = args.threads;
  opts.seed = args.seed;
  EvalReport report = evaluate_model(m, scenes, opts);

  std::filesystem::create_directories(args.out_dir);
  write_report_json(args.out_dir / "report.json", report);
  write_report_csv(args.out_dir / "report.csv", report);
  write_metrics_svg(args.out_dir / "metrics.svg", report);
  std::printf("%s on %lld scenes (K=%lld, runs=%lld): minSADE %.4g±%.2g  minSFDE %.4g±%.2g  "
              "actorMR %.4g  actorCR %.4g\n",
              report.variant.c_str(), static_cast<long long>(report.num_scenes),
              static_cast<long long>(report.k), static_cast<long long>(report.runs),
              report.mean.min_sade, report.stddev.min_sade, report.mean.min_sfde,
              report.stddev.min_sfde, report.mean.actor_mr, report.mean.actor_cr);
  return 0;
}

int cmd_recombine(const RecombineArgs& args) {
  std::ifstream in(args.marginal_file, std::ios::binary);
  if (!in) throw ValidationError("recombine: cannot open " + args.marginal_file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("recombine: malformed input: " + std::string(e.what()));
  }

  std::vector<std::vector<double>> scores;
  std::vector<std::vector<std::vector<scene::Vec2>>> trajs;
  std::vector<int64_t> agent_ids;
  std::string scene_id, digest;
  try {
    scene_id = j.value("scene_id", "");
    digest = j.value("config_digest", "");
    for (const json& ja : j.at("agents")) {
      agent_ids.push_back(ja.at("id").get<int64_t>());
      scores.push_back(ja.at("scores").get<std::vector<double>>());
      std::vector<std::vector<scene::Vec2>> agent_trajs;
      for (const json& mode : ja.at("trajectories")) {
        std::vector<scene::Vec2> tr;
        for (const json& p : mode) tr.push_back({p[0].get<double>(), p[1].get<double>()});
        agent_trajs.push_back(std::move(tr));
      }
      trajs.push_back(std::move(agent_trajs));
    }
  } catch (const json::exception& e) {
    throw ValidationError("recombine: malformed marginal prediction: " + std::string(e.what()));
  }

  std::vector<joint::JointMode> modes = args.bruteforce
                                            ? joint::recombine_bruteforce(scores, args.k)
                                            : joint::recombine_beam(scores, args.k);
  eval::ScenePrediction pred;
  for (const auto& jm : modes) {
    pred.scores.push_back(jm.score);
    std::vector<std::vector<scene::Vec2>> mode;
    for (size_t i = 0; i < trajs.size(); ++i) {
      mode.push_back(trajs[i][static_cast<size_t>(jm.mode_per_agent[i])]);
    }
    pred.traj.push_back(std::move(mode));
  }
  json out = joint_prediction_to_json(scene_id, digest, "recombined", agent_ids, pred);
  std::ofstream os(args.out_file, std::ios::binary);
  if (!os) throw ValidationError("recombine: cannot write " + args.out_file.string());
  os << out.dump(2) << "\n";
  std::printf("wrote %lld joint modes to %s\n", static_cast<long long>(pred.k()),
              args.out_file.string().c_str());
  return 0;
}

int cmd_bench(const BenchArgs& args) {
  PredictionModel m = [&]() {
    if (!args.checkpoint.empty()) return model_from_checkpoint(args.checkpoint);
    if (args.variant.empty()) {
      throw ValidationError("bench: need --checkpoint or --variant for randomly initialized weights");
    }
    ExperimentConfig cfg;
    cfg.variant = variant_from_name(args.variant);
    apply_preset(cfg, args.preset);
    cfg.seed = args.seed;
    return PredictionModel(cfg);
  }();
  std::vector<scene::Scene> scenes = load_scenes_checked(args.data_dir, args.split, m.config());

  BenchOptions opts;
  opts.k = args.k;
  opts.sampling = sampling_from_name(args.sampling);
  opts.repetitions = args.repetitions;
  opts.seed = args.seed;
  BenchResult result = bench_inference(m, scenes, opts);

  std::filesystem::create_directories(args.out_dir);
  write_bench_json(args.out_dir / "bench.json", result);
  write_bench_svg(args.out_dir / "timing.svg", result);
  std::printf("%s: %.3f±%.3f ms/scene; fit %.4g + %.4g*N_a + %.4g*N_l (R^2=%.4g)\n",
              result.variant.c_str(), result.mean_ms, result.std_ms, result.model.gamma0,
              result.model.gamma_agent, result.model.gamma_lane, result.model.r_squared);
  return 0;
}

namespace {

struct CheckRow {
  std::string name;
  double err;
  bool pass;
};

void run_op_checks(std::vector<CheckRow>& rows, double tol, double h, uint64_t seed) {
  using namespace ad;
  Rng rng(seed ^ 0x71374491428a2f98ull);
  auto check = [&](const std::string& name, const std::function<Tensor(const Tensor&)>& fn,
                   const Tensor& x) {
    const double err = grad_check(fn, x, h);
    rows.push_back({"op:" + name, err, err <= tol});
  };
  Tensor w = Tensor::randn({4, 3}, rng);
  Tensor c23 = Tensor::rand_uniform({2, 3}, rng, -1, 1);
  Tensor c24 = Tensor::rand_uniform({2, 4}, rng, -1, 1);
  Tensor c42 = Tensor::rand_uniform({4, 2}, rng, -1, 1);
  Tensor c44 = Tensor::rand_uniform({4, 4}, rng, -1, 1);
  Tensor c2 = Tensor::rand_uniform({2}, rng, -1, 1);
  Tensor y = Tensor::randn({2, 4}, rng);
  check("matmul", [&](const Tensor& t) { return reduce_sum(mul(matmul(t, w), c23)); },
        Tensor::randn({2, 4}, rng, 1.0, true));
  check("add", [&](const Tensor& t) { return reduce_sum(mul(add(t, y), c24)); },
        Tensor::randn({2, 4}, rng, 1.0, true));
  check("mul", [&](const Tensor& t) { return reduce_sum(mul(mul(t, y), c24)); },
        Tensor::randn({2, 4}, rng, 1.0, true));
  check("concat", [&](const Tensor& t) { return reduce_sum(mul(concat({t, y}, 0), c44)); },
        Tensor::randn({2, 4}, rng, 1.0, true));
  check("slice", [&](const Tensor& t) { return reduce_sum(mul(slice(t, 1, 1, 3), c23)); },
        Tensor::randn({2, 4}, rng, 1.0, true));
  check("reshape", [&](const Tensor& t) { return reduce_sum(mul(reshape(t, {4, 2}), c42)); },
        Tensor::randn({2, 4}, rng, 1.0, true));
  check("transpose", [&](const Tensor& t) { return reduce_sum(mul(transpose(t), c42)); },
        Tensor::randn({2, 4}, rng, 1.0, true));
  check("relu", [&](const Tensor& t) { return reduce_sum(mul(relu(t), c24)); },
        Tensor::randn({2, 4}, rng, 1.0, true));
  check("softmax", [&](const Tensor& t) { return reduce_sum(mul(softmax(t), c24)); },
        Tensor::randn({2, 4}, rng, 1.0, true));
  check("layer_norm", [&](const Tensor& t) { return reduce_sum(mul(layer_norm(t), c24)); },
        Tensor::randn({2, 4}, rng, 1.0, true));
  check("reduce_sum", [&](const Tensor& t) { return mul(reduce_sum(t), Tensor::scalar(0.7)); },
        Tensor::randn({2, 4}, rng, 1.0, true));
  check("reduce_mean", [&](const Tensor& t) { return mul(reduce_mean(t), Tensor::scalar(0.7)); },
        Tensor::randn({2, 4}, rng, 1.0, true));
  check("reduce_max", [&](const Tensor& t) { return reduce_sum(mul(reduce_max(t, 1), c2)); },
        Tensor::randn({2, 4}, rng, 1.0, true));
  check("exp", [&](const Tensor& t) { return reduce_sum(mul(exp(t), c24)); },
        Tensor::randn({2, 4}, rng, 0.5, true));
  check("log", [&](const Tensor& t) { return reduce_sum(mul(log(exp(t)), c24)); },
        Tensor::randn({2, 4}, rng, 0.5, true));
  check("sqrt", [&](const Tensor& t) { return reduce_sum(mul(sqrt(t), c24)); },
        Tensor::rand_uniform({2, 4}, rng, 0.5, 2.0, true));
  check("smooth_l1", [&](const Tensor& t) { return reduce_sum(mul(smooth_l1(t, y, 1.0), c24)); },
        Tensor::randn({2, 4}, rng, 2.0, true));
}

ExperimentConfig tiny_config(Variant v, uint64_t seed) {
  ExperimentConfig cfg;
  cfg.variant = v;
  cfg.d = 8;
  cfg.heads = 2;
  cfg.sft_layers = 1;
  cfg.cvae_sft_layers = 1;
  cfg.k = 2;
  cfg.l = 1;
  cfg.d_b = 4;
  cfg.t_p = 10;
  cfg.t = 6;
  cfg.seed = seed;
  return cfg;
}

void run_variant_checks(std::vector<CheckRow>& rows, double tol, double h, uint64_t seed,
                        int64_t instances) {
  const Variant variants[] = {Variant::marginal_recombination, Variant::joint_loss, Variant::multi_mlp,
                              Variant::anchor_transformer, Variant::cvae};
  for (Variant v : variants) {
    for (int64_t inst = 0; inst < instances; ++inst) {
      ExperimentConfig cfg = tiny_config(v, seed + static_cast<uint64_t>(inst));
      PredictionModel m(cfg);
      scene::GeneratorParams gp{cfg.t_p, cfg.t, 0.1, 2};
      scene::Scene sc = scene::generate_scene(scene::ScenarioKind::straight,
                                              seed + static_cast<uint64_t>(inst) * 17, gp);
      model::SceneFeatures f = m.featurize_scene(sc);
      nn::ParamMap pm = m.params();
      std::string worst;
      const double err = ad::grad_check_multi(
          [&]() {
            Rng frozen(seed + static_cast<uint64_t>(inst));
            return m.training_loss(f, frozen).total;
          },
          pm.items, h, 2, &worst);
      rows.push_back({std::string("loss:") + variant_name(v) + "#" + std::to_string(inst) +
                          (err > tol ? " (worst " + worst + ")" : ""),
                      err, err <= tol});
    }
  }
}

}  // namespace

int cmd_gradcheck(const GradcheckArgs& args) {
  std::vector<CheckRow> rows;
  run_op_checks(rows, args.tolerance, args.h, args.seed);
  run_variant_checks(rows, args.tolerance, args.h, args.seed, args.instances);
  int failures = 0;
  for (const CheckRow& r : rows) {
    std::printf("%-46s %-12.3e %s\n", r.name.c_str(), r.err, r.pass ? "PASS" : "FAIL");
    failures += r.pass ? 0 : 1;
  }
  if (failures > 0) {
    std::printf("gradcheck: %d of %zu checks failed (tolerance %.1e)\n", failures, rows.size(),
                args.tolerance);
    return 3;
  }
  std::printf("gradcheck: all %zu checks passed (tolerance %.1e)\n", rows.size(), args.tolerance);
  return 0;
}

}  // namespace jointpred::cli
