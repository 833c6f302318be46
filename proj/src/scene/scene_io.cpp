#include "scene/scene_io.hpp"

#include <fstream>

namespace jointpred::scene {

using nlohmann::json;

json scene_to_json(const Scene& scene) {
  json j;
  j["id"] = scene.id;
  j["dt"] = scene.dt;
  json agents = json::array();
  for (const AgentTrack& a : scene.agents) {
    json ja;
    ja["id"] = a.id;
    ja["type"] = agent_type_name(a.type);
    json past = json::array();
    for (const PastStep& s : a.past) {
      past.push_back({s.x, s.y, s.heading, s.speed, s.valid ? 1.0 : 0.0});
    }
    ja["past"] = std::move(past);
    if (!a.future.empty()) {
      json fut = json::array();
      for (const Vec2& p : a.future) fut.push_back({p[0], p[1]});
      ja["future"] = std::move(fut);
    }
    agents.push_back(std::move(ja));
  }
  j["agents"] = std::move(agents);
  json map = json::array();
  for (const MapPolyline& p : scene.map) {
    json jp;
    jp["id"] = p.id;
    jp["lane_type"] = p.lane_type;
    json pts = json::array();
    for (const Vec2& q : p.points) pts.push_back({q[0], q[1]});
    jp["points"] = std::move(pts);
    map.push_back(std::move(jp));
  }
  j["map"] = std::move(map);
  return j;
}

Scene scene_from_json(const json& j) {
  Scene scene;
  try {
    scene.id = j.at("id").get<std::string>();
    scene.dt = j.at("dt").get<double>();
    for (const json& ja : j.at("agents")) {
      AgentTrack a;
      a.id = ja.at("id").get<int64_t>();
      a.type = agent_type_from_name(ja.at("type").get<std::string>());
      for (const json& row : ja.at("past")) {
        if (row.size() != 5) throw ValidationError("scene json: past row must have 5 columns");
        PastStep s;
        s.x = row[0].get<double>();
        s.y = row[1].get<double>();
        s.heading = row[2].get<double>();
        s.speed = row[3].get<double>();
        s.valid = row[4].get<double>() != 0.0;
        a.past.push_back(s);
      }
      if (ja.contains("future")) {
        for (const json& row : ja.at("future")) {
          if (row.size() != 2) throw ValidationError("scene json: future row must have 2 columns");
          a.future.push_back({row[0].get<double>(), row[1].get<double>()});
        }
      }
      scene.agents.push_back(std::move(a));
    }
    for (const json& jp : j.at("map")) {
      MapPolyline p;
      p.id = jp.at("id").get<int64_t>();
      p.lane_type = jp.at("lane_type").get<std::string>();
      for (const json& row : jp.at("points")) {
        if (row.size() != 2) throw ValidationError("scene json: map point must have 2 columns");
        p.points.push_back({row[0].get<double>(), row[1].get<double>()});
      }
      scene.map.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("scene json: ") + e.what());
  }
  return scene;
}

void write_scene(const std::filesystem::path& path, const Scene& scene) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open for writing: " + path.string());
  out << scene_to_json(scene).dump(2) << "\n";
  if (!out) throw ValidationError("write failed: " + path.string());
}

Scene read_scene(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open scene file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("malformed scene file " + path.string() + ": " + e.what());
  }
  return scene_from_json(j);
}

const std::vector<std::string>& DatasetIndex::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  throw ValidationError("unknown split: " + name + " (expected train or val)");
}

void write_index(const std::filesystem::path& dir, const DatasetIndex& index) {
  json j;
  j["t_p"] = index.t_p;
  j["t"] = index.t;
  j["dt"] = index.dt;
  j["splits"] = {{"train", index.train}, {"val", index.val}};
  std::ofstream out(dir / "index.json", std::ios::binary);
  if (!out) throw ValidationError("cannot write index in " + dir.string());
  out << j.dump(2) << "\n";
}

DatasetIndex read_index(const std::filesystem::path& dir) {
  std::ifstream in(dir / "index.json", std::ios::binary);
  if (!in) throw ValidationError("missing index.json in " + dir.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("malformed index.json: " + std::string(e.what()));
  }
  DatasetIndex index;
  try {
    index.t_p = j.at("t_p").get<int64_t>();
    index.t = j.at("t").get<int64_t>();
    index.dt = j.at("dt").get<double>();
    index.train = j.at("splits").at("train").get<std::vector<std::string>>();
    index.val = j.at("splits").at("val").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ValidationError("malformed index.json: " + std::string(e.what()));
  }
  return index;
}

std::vector<Scene> load_split(const std::filesystem::path& dir, const std::string& split) {
  DatasetIndex index = read_index(dir);
  std::vector<Scene> scenes;
  for (const std::string& name : index.split(split)) {
    Scene s = read_scene(dir / name);
    s.validate(index.t_p, index.t);
    scenes.push_back(std::move(s));
  }
  return scenes;
}

}  // namespace jointpred::scene
