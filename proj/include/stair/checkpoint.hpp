#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "stair/backbone.hpp"
#include "stair/residual.hpp"

// Self-describing binary checkpoint container:
//
//   bytes 0..3   magic "STCK"
//   bytes 4..7   format version (little-endian u32)
//   bytes 8..15  JSON header length (little-endian u64)
//   ...          JSON header: dtype, bank kind/config, optional residual
//                section, tensor directory (name, shape, element offset)
//   ...          raw little-endian tensor payload
//
// The header JSON is emitted with sorted keys and tensors are written in
// block-traversal order, so identical parameters produce identical bytes.

namespace stair {

inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <class T>
const char* dtype_name();
template <>
inline const char* dtype_name<float>() { return "f32"; }
template <>
inline const char* dtype_name<double>() { return "f64"; }

inline nlohmann::json backbone_config_json(const BackboneConfig& c) {
  return {{"layers", c.layers},         {"hidden", c.hidden},
          {"activation", to_string(c.activation)}, {"dropout_rate", c.dropout_rate},
          {"input_len", c.input_len},   {"horizon", c.horizon}};
}

inline BackboneConfig backbone_config_from_json(const nlohmann::json& j) {
  BackboneConfig c;
  c.layers = j.at("layers").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.activation = activation_from_string(j.at("activation").get<std::string>());
  c.dropout_rate = j.at("dropout_rate").get<double>();
  c.input_len = j.at("input_len").get<int>();
  c.horizon = j.at("horizon").get<int>();
  return c;
}

// Allocates a bank with the right block structure and zeroed values.
template <class T>
ParamBank<T> allocate_bank(const BackboneConfig& config, BankKind kind, std::size_t channels) {
  ParamBank<T> bank = init_shared<T>(config, 0);
  if (kind == BankKind::Shared) return bank;
  return clone_to_individual(bank, channels);
}

}  // namespace detail

template <class T>
struct Checkpoint {
  ParamBank<T> bank;
  std::optional<ResidualParams<T>> residual;
};

template <class T>
void save_checkpoint(const std::string& path, const ParamBank<T>& bank,
                     const ResidualParams<T>* residual = nullptr) {
  nlohmann::json header;
  header["format_version"] = kCheckpointVersion;
  header["dtype"] = detail::dtype_name<T>();
  header["backbone"] = {
      {"kind", bank.kind == BankKind::Shared ? "shared" : "individual"},
      {"channels", bank.channels},
      {"config", detail::backbone_config_json(bank.config)},
  };
  if (residual) {
    header["residual"] = {
        {"channels", residual->channels}, {"input_len", residual->input_len},
        {"horizon", residual->horizon},   {"hidden", residual->hidden},
        {"rank", residual->rank},         {"scale", static_cast<double>(residual->scale)},
    };
  }

  std::vector<const ParamBlock<T>*> blocks = bank.blocks();
  if (residual) {
    for (const auto* blk : residual->blocks()) blocks.push_back(blk);
  }
  nlohmann::json tensors = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto* blk : blocks) {
    tensors.push_back({{"name", blk->name}, {"shape", blk->shape}, {"offset", offset}});
    offset += blk->size();
  }
  header["tensors"] = tensors;

  const std::string header_str = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out.write("STCK", 4);
  const std::uint32_t version = kCheckpointVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const std::uint64_t hlen = header_str.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const auto* blk : blocks) {
    out.write(reinterpret_cast<const char*>(blk->value.data()),
              static_cast<std::streamsize>(blk->size() * sizeof(T)));
  }
  if (!out) throw std::runtime_error("save_checkpoint: write failed: " + path);
}

template <class T>
Checkpoint<T> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "STCK", 4) != 0) {
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  }
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != kCheckpointVersion) {
    throw std::runtime_error("load_checkpoint: unsupported format version " +
                             std::to_string(version));
  }
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string header_str(hlen, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw std::runtime_error("load_checkpoint: truncated header in " + path);
  const nlohmann::json header = nlohmann::json::parse(header_str);
  if (header.at("dtype").get<std::string>() != detail::dtype_name<T>()) {
    throw std::runtime_error("load_checkpoint: dtype mismatch (file " +
                             header.at("dtype").get<std::string>() + ", requested " +
                             detail::dtype_name<T>() + ")");
  }

  Checkpoint<T> ckpt;
  const auto& bb = header.at("backbone");
  const BankKind kind =
      bb.at("kind").get<std::string>() == "shared" ? BankKind::Shared : BankKind::Individual;
  ckpt.bank = detail::allocate_bank<T>(detail::backbone_config_from_json(bb.at("config")), kind,
                                       bb.at("channels").get<std::size_t>());
  if (header.contains("residual")) {
    const auto& rj = header.at("residual");
    ckpt.residual = init_residual<T>(
        rj.at("channels").get<std::size_t>(), rj.at("input_len").get<std::size_t>(),
        rj.at("horizon").get<std::size_t>(), rj.at("hidden").get<std::size_t>(),
        rj.at("rank").get<std::size_t>(), static_cast<T>(rj.at("scale").get<double>()), 0);
  }

  std::vector<ParamBlock<T>*> blocks = ckpt.bank.blocks();
  if (ckpt.residual) {
    for (auto* blk : ckpt.residual->blocks()) blocks.push_back(blk);
  }
  const auto& tensors = header.at("tensors");
  if (tensors.size() != blocks.size()) {
    throw std::runtime_error("load_checkpoint: tensor count mismatch in " + path);
  }
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& tj = tensors[i];
    if (tj.at("name").get<std::string>() != blocks[i]->name ||
        tj.at("shape").get<std::vector<std::size_t>>() != blocks[i]->shape) {
      throw std::runtime_error("load_checkpoint: tensor directory mismatch at '" +
                               blocks[i]->name + "' in " + path);
    }
    in.read(reinterpret_cast<char*>(blocks[i]->value.data()),
            static_cast<std::streamsize>(blocks[i]->size() * sizeof(T)));
  }
  if (!in) throw std::runtime_error("load_checkpoint: truncated payload in " + path);
  return ckpt;
}

}  // namespace stair
