#pragma once

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "json.hpp"

#include "segaa/data/split.hpp"
#include "segaa/models/architectures.hpp"

namespace segaa::models {

using json = nlohmann::ordered_json;

inline constexpr char kCheckpointMagic[] = "SEGAA1";
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Everything stored beside the weights.
struct CheckpointContext {
  std::string model_kind;  // ModelKind name, or a cascade stage kind
  std::vector<Target> targets;
  data::Standardizer standardizer;
  data::LabelSchema schema;
  json config = json::object();
  json metrics = json::object();
  json extra = json::object();
};

inline json to_json(const nn::LayerSpec& l) {
  json j;
  j["kind"] = std::string(nn::to_string(l.kind));
  switch (l.kind) {
    case nn::LayerKind::Dense: j["units"] = l.units; break;
    case nn::LayerKind::Conv1d:
      j["filters"] = l.filters;
      j["kernel"] = l.kernel;
      j["stride"] = l.stride;
      j["padding"] = l.padding == nn::Padding::Same ? "same" : "valid";
      break;
    case nn::LayerKind::MaxPool1d:
      j["pool"] = l.pool;
      j["stride"] = l.stride;
      break;
    case nn::LayerKind::Dropout: j["rate"] = l.rate; break;
    default: break;
  }
  return j;
}

inline nn::LayerSpec layer_from_json(const json& j) {
  nn::LayerSpec l;
  l.kind = nn::parse_layer_kind(j.at("kind").get<std::string>());
  l.units = j.value("units", std::size_t{0});
  l.filters = j.value("filters", std::size_t{0});
  l.kernel = j.value("kernel", std::size_t{0});
  l.stride = j.value("stride", std::size_t{1});
  l.padding = j.value("padding", std::string("same")) == "valid" ? nn::Padding::Valid : nn::Padding::Same;
  l.pool = j.value("pool", std::size_t{0});
  l.rate = j.value("rate", 0.0);
  return l;
}

inline json to_json(const NetworkSpec& s) {
  json j;
  j["name"] = s.name;
  j["input"] = s.input;
  j["trunk"] = json::array();
  for (const auto& l : s.trunk) j["trunk"].push_back(to_json(l));
  j["heads"] = json::array();
  for (const auto& h : s.heads) {
    j["heads"].push_back({{"name", h.name}, {"units", h.units}, {"activation", std::string(nn::to_string(h.activation))}});
  }
  return j;
}

inline NetworkSpec spec_from_json(const json& j) {
  NetworkSpec s;
  s.name = j.at("name").get<std::string>();
  s.input = j.at("input").get<nn::Shape>();
  for (const auto& l : j.at("trunk")) s.trunk.push_back(layer_from_json(l));
  for (const auto& h : j.at("heads")) {
    s.heads.push_back({h.at("name").get<std::string>(), h.at("units").get<std::size_t>(),
                       nn::parse_activation(h.at("activation").get<std::string>())});
  }
  return s;
}

inline json to_json(const data::Standardizer& s) {
  return {{"mean", std::vector<double>(s.mean.begin(), s.mean.end())},
          {"std", std::vector<double>(s.stddev.begin(), s.stddev.end())}};
}

inline data::Standardizer standardizer_from_json(const json& j) {
  data::Standardizer s;
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto sd = j.at("std").get<std::vector<double>>();
  if (mean.size() != s.mean.size() || sd.size() != s.stddev.size()) {
    throw DataError("checkpoint standardizer has the wrong dimension");
  }
  std::copy(mean.begin(), mean.end(), s.mean.begin());
  std::copy(sd.begin(), sd.end(), s.stddev.begin());
  return s;
}

inline json to_json(const data::LabelSchema& s) {
  return {{"emotions", s.emotions}, {"genders", s.genders}, {"age_bins", s.age_bins}};
}

/// Container layout: "SEGAA1", u32 header length, JSON header (spec, layer
/// table, standardizer, schema, config, metrics), then one little-endian
/// float32 payload per layer-table entry, in table order.
inline std::string encode_checkpoint(nn::Network<float>& net, const CheckpointContext& ctx) {
  json h;
  h["format_version"] = kCheckpointVersion;
  h["model_kind"] = ctx.model_kind;
  h["targets"] = json::array();
  for (Target t : ctx.targets) h["targets"].push_back(std::string(data::to_string(t)));
  h["network"] = to_json(net.spec());
  h["layers"] = json::array();
  for (const auto& nt : net.named_tensors()) {
    h["layers"].push_back({{"name", nt.name}, {"shape", nt.tensor->shape}, {"trainable", nt.trainable}});
  }
  h["standardizer"] = to_json(ctx.standardizer);
  h["label_schema"] = to_json(ctx.schema);
  h["config"] = ctx.config;
  h["metrics"] = ctx.metrics;
  h["extra"] = ctx.extra;
  const std::string header = h.dump();

  std::string out(kCheckpointMagic, 6);
  const auto len = static_cast<std::uint32_t>(header.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((len >> (8 * i)) & 0xFF));
  out += header;
  for (const auto& nt : net.named_tensors()) {
    for (float v : nt.tensor->data) {
      const auto u = std::bit_cast<std::uint32_t>(v);
      for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
    }
  }
  return out;
}

struct LoadedCheckpoint {
  nn::Network<float> network;
  CheckpointContext context;
};

inline LoadedCheckpoint decode_checkpoint(const std::string& bytes, const std::string& name = "<checkpoint>") {
  if (bytes.size() < 10 || bytes.compare(0, 6, kCheckpointMagic) != 0) {
    throw DataError(name + ": not a checkpoint (magic mismatch)");
  }
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[6 + i])) << (8 * i);
  if (bytes.size() < 10 + static_cast<std::size_t>(len)) throw DataError(name + ": truncated checkpoint header");
  json h;
  try {
    h = json::parse(bytes.substr(10, len));
  } catch (const json::exception& e) {
    throw DataError(name + ": corrupt checkpoint header: " + e.what());
  }

  try {
    if (h.at("format_version").get<std::uint32_t>() != kCheckpointVersion) {
      throw DataError(name + ": unsupported checkpoint version");
    }
    CheckpointContext ctx;
    ctx.model_kind = h.at("model_kind").get<std::string>();
    for (const auto& t : h.at("targets")) ctx.targets.push_back(data::parse_target(t.get<std::string>()));
    ctx.standardizer = standardizer_from_json(h.at("standardizer"));
    const auto& ls = h.at("label_schema");
    ctx.schema.emotions = ls.at("emotions").get<std::vector<std::string>>();
    ctx.schema.genders = ls.at("genders").get<std::vector<std::string>>();
    ctx.schema.age_bins = ls.at("age_bins").get<std::vector<std::string>>();
    if (!ctx.schema.is_canonical()) throw DataError(name + ": checkpoint label schema differs from this toolkit's");
    ctx.config = h.at("config");
    ctx.metrics = h.at("metrics");
    ctx.extra = h.at("extra");

    nn::Network<float> net(spec_from_json(h.at("network")), 0);
    auto tensors = net.named_tensors();
    const auto& table = h.at("layers");
    if (table.size() != tensors.size()) throw DataError(name + ": layer table does not match network spec");
    std::size_t expected = 10 + len;
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      if (table[i].at("name").get<std::string>() != tensors[i].name ||
          table[i].at("shape").get<nn::Shape>() != tensors[i].tensor->shape) {
        throw DataError(name + ": layer table inconsistent at entry " + tensors[i].name);
      }
      expected += 4 * tensors[i].tensor->size();
    }
    if (bytes.size() < expected) throw DataError(name + ": truncated checkpoint payload");
    if (bytes.size() > expected) throw DataError(name + ": trailing bytes after checkpoint payload");
    std::size_t pos = 10 + len;
    for (auto& nt : tensors) {
      for (float& v : nt.tensor->data) {
        std::uint32_t u = 0;
        for (int i = 0; i < 4; ++i) u |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
        v = std::bit_cast<float>(u);
        pos += 4;
      }
    }
    return {std::move(net), std::move(ctx)};
  } catch (const json::exception& e) {
    throw DataError(name + ": malformed checkpoint header: " + e.what());
  } catch (const UsageError& e) {
    throw DataError(name + ": invalid network in checkpoint: " + e.what());
  }
}

inline void save_checkpoint(const std::filesystem::path& path, nn::Network<float>& net, const CheckpointContext& ctx) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::string bytes = encode_checkpoint(net, ctx);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("error writing checkpoint " + path.string());
}

inline LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes, path.string());
}

}  // namespace segaa::models
