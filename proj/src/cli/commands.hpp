#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cli/evaluate.hpp"
#include "cli/train.hpp"

namespace jointpred::cli {

struct GenerateArgs {
  std::filesystem::path out_dir;
  int64_t count = 100;
  std::vector<std::string> kinds;  // empty = all four
  uint64_t seed = 0;
  int64_t t_p = 20;
  int64_t t = 30;
  double dt = 0.1;
  double val_fraction = 0.2;
};

struct TrainArgs {
  std::string config_path;
  std::filesystem::path data_dir;  // overrides config data_dir when set
  std::string split = "train";
  std::filesystem::path out_dir;
  int64_t seed_override = -1;
  double stop_min_sade = 0.0;
};

struct PredictArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path scene_file;
  std::filesystem::path out_file;
  int64_t k = 6;
  std::string sampling = "sample";
  uint64_t seed = 0;
  bool marginal = false;  // emit raw marginal modes (marginal_recombination only)
};

struct EvaluateArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path data_dir;
  std::string split = "val";
  std::filesystem::path out_dir;
  int64_t k = 6;
  std::string sampling = "sample";
  int64_t runs = 1;
  uint64_t seed = 0;
  int64_t threads = 0;
};

struct RecombineArgs {
  std::filesystem::path marginal_file;
  std::filesystem::path out_file;
  int64_t k = 6;
  bool bruteforce = false;
};

struct BenchArgs {
  std::filesystem::path checkpoint;  // or variant+preset for random weights
  std::string variant;
  std::string preset = "desk";
  std::filesystem::path data_dir;
  std::string split = "val";
  std::filesystem::path out_dir;
  int64_t k = 6;
  std::string sampling = "sample";
  int64_t repetitions = 30;
  uint64_t seed = 0;
};

struct GradcheckArgs {
  double tolerance = 1e-4;
  double h = 1e-5;
  uint64_t seed = 0;
  int64_t instances = 3;  // random instances per check
};

int cmd_generate(const GenerateArgs& args);
int cmd_train(const TrainArgs& args);
int cmd_predict(const PredictArgs& args);
int cmd_evaluate(const EvaluateArgs& args);
int cmd_recombine(const RecombineArgs& args);
int cmd_bench(const BenchArgs& args);
int cmd_gradcheck(const GradcheckArgs& args);

// prediction file helpers shared by predict/recombine and their tests
nlohmann::json joint_prediction_to_json(const std::string& scene_id, const std::string& digest,
                                        const std::string& sampling,
                                        const std::vector<int64_t>& agent_ids,
                                        const eval::ScenePrediction& pred);
nlohmann::json marginal_prediction_to_json(const std::string& scene_id, const std::string& digest,
                                           const model::MarginalPrediction& pred);

}  // namespace jointpred::cli
