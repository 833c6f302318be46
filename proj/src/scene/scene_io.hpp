#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "scene/scene.hpp"

namespace jointpred::scene {

nlohmann::json scene_to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& j);

void write_scene(const std::filesystem::path& path, const Scene& scene);
Scene read_scene(const std::filesystem::path& path);

// A dataset directory holds one JSON file per scene plus index.json listing
// the split membership and the horizon the scenes were generated with.
struct DatasetIndex {
  int64_t t_p = 20;
  int64_t t = 30;
  double dt = 0.1;
  std::vector<std::string> train;
  std::vector<std::string> val;

  const std::vector<std::string>& split(const std::string& name) const;
};

void write_index(const std::filesystem::path& dir, const DatasetIndex& index);
DatasetIndex read_index(const std::filesystem::path& dir);

std::vector<Scene> load_split(const std::filesystem::path& dir, const std::string& split);

}  // namespace jointpred::scene
