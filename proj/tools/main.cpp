#include <cstdio>
#include <exception>

#include <CLI11.hpp>

#include "cli/commands.hpp"

using namespace jointpred;

int main(int argc, char** argv) {
  CLI::App app{"Joint multi-agent motion prediction lab: five model variants over synthetic traffic scenes"};
  app.require_subcommand(1);

  cli::GenerateArgs gen;
  CLI::App* cgen = app.add_subcommand("generate", "Generate a synthetic scene dataset");
  cgen->add_option("--out", gen.out_dir, "Output dataset directory")->required();
  cgen->add_option("--count", gen.count, "Number of scenes");
  cgen->add_option("--kinds", gen.kinds,
                   "Scenario kinds (straight, intersection_yield, merge, turn_multi_modal)")
      ->delimiter(',');
  cgen->add_option("--seed", gen.seed, "Base seed");
  cgen->add_option("--tp", gen.t_p, "Past steps per track");
  cgen->add_option("--t", gen.t, "Future steps per track");
  cgen->add_option("--dt", gen.dt, "Timestep in seconds");
  cgen->add_option("--val-fraction", gen.val_fraction, "Fraction of scenes in the val split");

  cli::TrainArgs tr;
  CLI::App* ctr = app.add_subcommand("train", "Train one model variant");
  ctr->add_option("--config", tr.config_path, "Experiment config JSON")->required();
  ctr->add_option("--data", tr.data_dir, "Dataset directory (overrides config)");
  ctr->add_option("--split", tr.split, "Dataset split to train on");
  ctr->add_option("--out", tr.out_dir, "Run directory for checkpoints and curves")->required();
  ctr->add_option("--seed", tr.seed_override, "Seed override");
  ctr->add_option("--stop-min-sade", tr.stop_min_sade, "Early stop once train minSADE falls below this");

  cli::PredictArgs pr;
  CLI::App* cpr = app.add_subcommand("predict", "Predict joint modes for one scene file");
  cpr->add_option("--checkpoint", pr.checkpoint, "Checkpoint file")->required();
  cpr->add_option("--scene", pr.scene_file, "Scene JSON file")->required();
  cpr->add_option("--out", pr.out_file, "Output prediction JSON")->required();
  cpr->add_option("--k", pr.k, "Number of joint modes");
  cpr->add_option("--sampling", pr.sampling, "sample | prior-mean-first (cvae only)");
  cpr->add_option("--seed", pr.seed, "Sampling seed");
  cpr->add_flag("--marginal", pr.marginal, "Emit raw marginal modes instead of joint modes");

  cli::EvaluateArgs ev;
  CLI::App* cev = app.add_subcommand("evaluate", "Evaluate a checkpoint over a dataset split");
  cev->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  cev->add_option("--data", ev.data_dir, "Dataset directory")->required();
  cev->add_option("--split", ev.split, "Split to evaluate");
  cev->add_option("--out", ev.out_dir, "Report directory")->required();
  cev->add_option("--k", ev.k, "Modes per scene");
  cev->add_option("--sampling", ev.sampling, "sample | prior-mean-first (cvae only)");
  cev->add_option("--runs", ev.runs, "Sampling repetitions reported as mean±std");
  cev->add_option("--seed", ev.seed, "Evaluation seed");
  cev->add_option("--threads", ev.threads, "Worker threads (0 = auto)");

  cli::RecombineArgs rc;
  CLI::App* crc = app.add_subcommand("recombine", "Combine marginal modes into top-K joint modes");
  crc->add_option("--marginal", rc.marginal_file, "Marginal prediction JSON (predict --marginal)")
      ->required();
  crc->add_option("--out", rc.out_file, "Output joint prediction JSON")->required();
  crc->add_option("--k", rc.k, "Number of joint modes");
  crc->add_flag("--bruteforce", rc.bruteforce, "Exhaustive enumeration instead of beam search");

  cli::BenchArgs be;
  CLI::App* cbe = app.add_subcommand("bench", "Measure per-scene inference time and fit the timing model");
  cbe->add_option("--checkpoint", be.checkpoint, "Checkpoint file (trained weights)");
  cbe->add_option("--variant", be.variant, "Variant for randomly initialized weights");
  cbe->add_option("--preset", be.preset, "desk | paper (with --variant)");
  cbe->add_option("--data", be.data_dir, "Dataset directory")->required();
  cbe->add_option("--split", be.split, "Split to benchmark");
  cbe->add_option("--out", be.out_dir, "Output directory")->required();
  cbe->add_option("--k", be.k, "Modes per scene");
  cbe->add_option("--sampling", be.sampling, "sample | prior-mean-first (cvae only)");
  cbe->add_option("--reps", be.repetitions, "Timed repetitions per scene");
  cbe->add_option("--seed", be.seed, "Seed");

  cli::GradcheckArgs gc;
  CLI::App* cgc = app.add_subcommand("gradcheck", "Finite-difference checks for ops and variant losses");
  cgc->add_option("--tol", gc.tolerance, "Max relative error");
  cgc->add_option("--step", gc.h, "Central difference step");
  cgc->add_option("--seed", gc.seed, "Seed");
  cgc->add_option("--instances", gc.instances, "Random instances per variant loss");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc_code = app.exit(e);
    return rc_code == 0 ? 0 : 1;  // usage errors exit 1
  }

  try {
    if (cgen->parsed()) return cli::cmd_generate(gen);
    if (ctr->parsed()) return cli::cmd_train(tr);
    if (cpr->parsed()) return cli::cmd_predict(pr);
    if (cev->parsed()) return cli::cmd_evaluate(ev);
    if (crc->parsed()) return cli::cmd_recombine(rc);
    if (cbe->parsed()) return cli::cmd_bench(be);
    if (cgc->parsed()) return cli::cmd_gradcheck(gc);
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
