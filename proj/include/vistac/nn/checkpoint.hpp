#pragma once

#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "vistac/nn/layers.hpp"

namespace vistac::nn {

using json = nlohmann::json;

inline json to_json(const ConvNetConfig& c) {
  return json{{"in_channels", c.in_channels},
              {"stage_channels", c.stage_channels},
              {"head_dim", c.head_dim},
              {"normalize_output", c.normalize_output},
              {"head_init_scale", c.head_init_scale},
              {"image_size", c.image_size}};
}

inline ConvNetConfig convnet_config_from_json(const json& j) {
  ConvNetConfig c;
  c.in_channels = j.value("in_channels", c.in_channels);
  c.stage_channels = j.value("stage_channels", c.stage_channels);
  c.head_dim = j.value("head_dim", c.head_dim);
  c.normalize_output = j.value("normalize_output", c.normalize_output);
  c.head_init_scale = j.value("head_init_scale", c.head_init_scale);
  c.image_size = j.value("image_size", c.image_size);
  return c;
}

inline constexpr char kCheckpointMagic[8] = {'V', 'T', 'C', 'K', 'P', 'T', '1', '\n'};

// binary checkpoint: magic, u64 header length, json header, f32 blob
inline void save_checkpoint(const ConvNet& net, const std::string& path,
                            const json& meta = json::object()) {
  json header{{"arch", to_json(net.config())}, {"meta", meta}};
  const std::string header_str = header.dump();
  const auto blob = net.serialize();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
  f.write(kCheckpointMagic, 8);
  const std::uint64_t hlen = header_str.size();
  f.write(reinterpret_cast<const char*>(&hlen), 8);
  f.write(header_str.data(), std::streamsize(header_str.size()));
  f.write(reinterpret_cast<const char*>(blob.data()),
          std::streamsize(blob.size() * sizeof(float)));
  if (!f) throw std::runtime_error("save_checkpoint: short write to " + path);
}

struct LoadedCheckpoint {
  ConvNet net;
  json meta;
};

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  std::uint64_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), 8);
  std::string header_str(hlen, '\0');
  f.read(header_str.data(), std::streamsize(hlen));
  const json header = json::parse(header_str);

  LoadedCheckpoint out;
  out.meta = header.value("meta", json::object());
  out.net = ConvNet(convnet_config_from_json(header.at("arch")), /*init_seed=*/0);
  std::vector<float> blob(out.net.param_count());
  f.read(reinterpret_cast<char*>(blob.data()),
         std::streamsize(blob.size() * sizeof(float)));
  if (!f) throw std::runtime_error("load_checkpoint: truncated blob in " + path);
  out.net.deserialize(blob);
  return out;
}

}  // namespace vistac::nn
