#include "cli/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace jointpred::cli {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'M', 'J', 'P', 'C'};

void write_u32(std::ofstream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ofstream& out, uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_f64(std::ofstream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

uint32_t read_u32(std::ifstream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

uint64_t read_u64(std::ifstream& in) {
  uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

std::vector<double> read_f64(std::ifstream& in, size_t n) {
  std::vector<double> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  json header;
  header["config"] = config_to_json(ckpt.config);
  header["digest"] = config_digest(ckpt.config);
  header["epoch"] = ckpt.epoch;
  json params = json::array();
  for (const auto& p : ckpt.params) {
    params.push_back({{"name", p.name}, {"shape", p.tensor.shape()}});
  }
  header["params"] = std::move(params);
  header["optimizer"] = {{"present", ckpt.has_optimizer},
                         {"step", ckpt.optimizer.step},
                         {"beta1", ckpt.optimizer.beta1},
                         {"beta2", ckpt.optimizer.beta2},
                         {"eps", ckpt.optimizer.eps}};
  const std::string hs = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write checkpoint: " + path.string());
  out.write(kMagic, 4);
  write_u32(out, ckpt.version);
  write_u64(out, hs.size());
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& p : ckpt.params) write_f64(out, p.tensor.values());
  if (ckpt.has_optimizer) {
    for (const auto& m : ckpt.optimizer.m) write_f64(out, m);
    for (const auto& v : ckpt.optimizer.v) write_f64(out, v);
  }
  if (!out) throw ValidationError("checkpoint write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw ValidationError("not a checkpoint file: " + path.string());
  }
  Checkpoint ckpt;
  ckpt.version = read_u32(in);
  if (ckpt.version != 1) {
    throw ValidationError("unsupported checkpoint version " + std::to_string(ckpt.version));
  }
  const uint64_t hlen = read_u64(in);
  std::string hs(hlen, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw ValidationError("truncated checkpoint header: " + path.string());
  json header;
  try {
    header = json::parse(hs);
    ckpt.config = config_from_json(header.at("config"));
    ckpt.epoch = header.at("epoch").get<int64_t>();
    for (const json& jp : header.at("params")) {
      const std::string name = jp.at("name").get<std::string>();
      const ad::Shape shape = jp.at("shape").get<ad::Shape>();
      std::vector<double> data = read_f64(in, static_cast<size_t>(ad::numel(shape)));
      if (!in) throw ValidationError("truncated checkpoint payload at " + name);
      ckpt.params.push_back({name, ad::Tensor::param(shape, std::move(data))});
    }
    const json& opt = header.at("optimizer");
    ckpt.has_optimizer = opt.at("present").get<bool>();
    if (ckpt.has_optimizer) {
      ckpt.optimizer.step = opt.at("step").get<int64_t>();
      ckpt.optimizer.beta1 = opt.at("beta1").get<double>();
      ckpt.optimizer.beta2 = opt.at("beta2").get<double>();
      ckpt.optimizer.eps = opt.at("eps").get<double>();
      for (const auto& p : ckpt.params) {
        ckpt.optimizer.m.push_back(read_f64(in, p.tensor.values().size()));
      }
      for (const auto& p : ckpt.params) {
        ckpt.optimizer.v.push_back(read_f64(in, p.tensor.values().size()));
      }
      if (!in) throw ValidationError("truncated optimizer state: " + path.string());
    }
  } catch (const json::exception& e) {
    throw ValidationError("malformed checkpoint header: " + std::string(e.what()));
  }
  return ckpt;
}

void restore_params(const Checkpoint& ckpt, nn::ParamMap& params) {
  if (ckpt.params.size() != params.items.size()) {
    throw ValidationError("checkpoint holds " + std::to_string(ckpt.params.size()) +
                          " tensors but the model has " + std::to_string(params.items.size()));
  }
  for (size_t i = 0; i < params.items.size(); ++i) {
    const auto& src = ckpt.params[i];
    auto& dst = params.items[i];
    if (src.name != dst.name) {
      throw ValidationError("checkpoint parameter order mismatch: " + src.name + " vs " + dst.name);
    }
    if (src.tensor.shape() != dst.tensor.shape()) {
      throw ValidationError("checkpoint shape mismatch for " + src.name);
    }
    dst.tensor.mutable_values() = src.tensor.values();
  }
}

}  // namespace jointpred::cli
