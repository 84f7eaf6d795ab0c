// Copyright 2026 The mvocc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// JSON form of MethodConfig and the binary model container.
//
// Container layout (all little-endian):
//   "MVOC" | u32 version | u32 count | count x entry
//   entry: u32 name_len | name bytes | u32 rank | rank x u64 extent | f64 data
// The configuration travels as the UTF-8 bytes of its JSON text in the
// tensor "meta/config", one byte per f64.

#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvocc/data.hpp"
#include "mvocc/errors.hpp"
#include "mvocc/methods.hpp"

namespace mvocc {

using nlohmann::json;

// ---------------------------------------------------------------------------
// MethodConfig <-> JSON

inline json mlp_to_json(const MlpSpec& s) {
  return {{"widths", s.widths},
          {"hidden", std::string(to_string(s.hidden))},
          {"output", std::string(to_string(s.output))},
          {"bias", s.use_bias}};
}

inline MlpSpec mlp_from_json(const json& j) {
  MlpSpec s;
  s.widths = j.at("widths").get<std::vector<std::size_t>>();
  s.hidden = parse_activation(j.value("hidden", "tanh"));
  s.output = parse_activation(j.value("output", "linear"));
  s.use_bias = j.value("bias", true);
  return s;
}

inline FusionKind parse_fusion_kind(const std::string& s) {
  for (FusionKind k : {FusionKind::Sum, FusionKind::Max, FusionKind::NN, FusionKind::TF})
    if (to_string(k) == s) return k;
  throw ConfigError("invalid fusion kind '" + s + "' (expected SUM, MAX, NN or TF)");
}

inline Similarity parse_similarity(const std::string& s) {
  if (s == "dot") return Similarity::Dot;
  if (s == "cosine") return Similarity::Cosine;
  throw ConfigError("invalid similarity '" + s + "' (expected dot or cosine)");
}

inline json config_to_json(const MethodConfig& c) {
  json j;
  j["method"] = std::string(to_string(c.method));
  j["encoders"] = json::array();
  for (const MlpSpec& e : c.encoders) j["encoders"].push_back(mlp_to_json(e));
  j["decoders"] = json::array();
  for (const MlpSpec& d : c.decoders) j["decoders"].push_back(mlp_to_json(d));
  if (c.fusion) {
    j["fusion"] = {{"kind", std::string(to_string(c.fusion->kind))},
                   {"out_dim", c.fusion->out_dim},
                   {"nn_hidden", c.fusion->nn_hidden},
                   {"nn_activation", std::string(to_string(c.fusion->nn_activation))},
                   {"rank", c.fusion->rank}};
  }
  if (c.align) {
    j["align"] = {{"alpha", c.align->alpha},
                  {"p", c.align->p},
                  {"margin", c.align->margin},
                  {"similarity", c.align->similarity == Similarity::Dot ? "dot" : "cosine"},
                  {"r", c.align->r}};
  }
  j["lr"] = c.lr;
  j["l2"] = c.l2;
  j["epochs"] = c.epochs;
  j["pretrain_epochs"] = c.pretrain_epochs;
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  return j;
}

/// Applies the recognised keys of `j` on top of `c`. Architecture keys
/// ("embed_dim", "hidden_widths", "activation") rebuild the per-view specs;
/// "encoders"/"decoders" replace them verbatim.
inline void apply_overrides(MethodConfig& c, const json& j) {
  static const std::set<std::string> known{
      "method", "encoders", "decoders", "fusion", "align", "lr", "l2", "epochs",
      "pretrain_epochs", "batch_size", "seed", "embed_dim", "hidden_widths", "activation"};
  if (!j.is_object()) throw ConfigError("method overrides must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown method setting '" + key + "'");
  }
  try {
    if (j.contains("embed_dim") || j.contains("hidden_widths") || j.contains("activation")) {
      const std::size_t D = j.value("embed_dim", c.embed_dim());
      const Activation act =
          j.contains("activation") ? parse_activation(j["activation"].get<std::string>())
                                   : c.encoders.front().hidden;
      const bool bias = c.encoders.front().use_bias;
      for (std::size_t v = 0; v < c.encoders.size(); ++v) {
        const std::size_t d = c.encoders[v].input_width();
        MlpSpec enc{{d}, act, Activation::Linear, bias};
        if (j.contains("hidden_widths")) {
          for (std::size_t w : j["hidden_widths"].get<std::vector<std::size_t>>())
            enc.widths.push_back(w);
        } else {
          enc.widths.push_back(default_hidden_width(d));
        }
        enc.widths.push_back(D);
        c.encoders[v] = enc;
        if (v < c.decoders.size()) {
          MlpSpec dec = enc.mirrored();
          dec.use_bias = true;
          c.decoders[v] = dec;
        }
      }
      if (c.fusion) c.fusion->out_dim = D;
    }
    if (j.contains("encoders")) {
      c.encoders.clear();
      for (const json& e : j["encoders"]) c.encoders.push_back(mlp_from_json(e));
    }
    if (j.contains("decoders")) {
      c.decoders.clear();
      for (const json& d : j["decoders"]) c.decoders.push_back(mlp_from_json(d));
    }
    if (j.contains("fusion")) {
      const json& f = j["fusion"];
      if (!c.fusion) throw ConfigError(std::string(to_string(c.method)) + " takes no fusion settings");
      if (f.contains("kind")) c.fusion->kind = parse_fusion_kind(f["kind"].get<std::string>());
      if (f.contains("out_dim")) c.fusion->out_dim = f["out_dim"].get<std::size_t>();
      if (f.contains("nn_hidden")) c.fusion->nn_hidden = f["nn_hidden"].get<std::vector<std::size_t>>();
      if (f.contains("nn_activation"))
        c.fusion->nn_activation = parse_activation(f["nn_activation"].get<std::string>());
      if (f.contains("rank")) c.fusion->rank = f["rank"].get<std::size_t>();
    }
    if (j.contains("align")) {
      const json& a = j["align"];
      if (!c.align) throw ConfigError(std::string(to_string(c.method)) + " takes no alignment settings");
      if (a.contains("alpha")) c.align->alpha = a["alpha"].get<double>();
      if (a.contains("p")) c.align->p = a["p"].get<int>();
      if (a.contains("margin")) c.align->margin = a["margin"].get<double>();
      if (a.contains("similarity"))
        c.align->similarity = parse_similarity(a["similarity"].get<std::string>());
      if (a.contains("r")) c.align->r = a["r"].get<double>();
    }
    if (j.contains("lr")) c.lr = j["lr"].get<double>();
    if (j.contains("l2")) c.l2 = j["l2"].get<double>();
    if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
    if (j.contains("pretrain_epochs")) c.pretrain_epochs = j["pretrain_epochs"].get<int>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<std::size_t>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad method setting: ") + e.what());
  }
}

inline MethodConfig config_from_json(const json& j) {
  MethodConfig c;
  try {
    c.method = parse_method(j.at("method").get<std::string>());
    for (const json& e : j.at("encoders")) c.encoders.push_back(mlp_from_json(e));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad method config: ") + e.what());
  }
  if (needs_fusion(c.method)) c.fusion = default_config(c.method, std::vector<std::size_t>{1, 1}, 1).fusion;
  if (is_alignment(c.method)) c.align = default_config(c.method, std::vector<std::size_t>{1, 1}, 1).align;
  json rest = j;
  rest.erase("method");
  rest.erase("encoders");
  apply_overrides(c, rest);
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Binary container

inline constexpr std::uint32_t kModelVersion = 1;

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) os.put(static_cast<char>((v >> (8 * b)) & 0xFF));
}

inline std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) {
    const int c = is.get();
    if (c == EOF) throw DataError("model file truncated");
    v |= static_cast<std::uint64_t>(c & 0xFF) << (8 * b);
  }
  return v;
}

inline Tensor string_tensor(const std::string& s) {
  Tensor t({std::max<std::size_t>(s.size(), 1)});
  for (std::size_t i = 0; i < s.size(); ++i) t[i] = static_cast<unsigned char>(s[i]);
  return t;
}

inline std::string tensor_string(const Tensor& t) {
  std::string s;
  for (double v : t.data())
    if (v > 0) s.push_back(static_cast<char>(static_cast<int>(v)));
  return s;
}

}  // namespace detail

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

inline void write_tensors(const std::filesystem::path& path, const NamedTensors& entries) {
  std::ofstream os = detail::open_out(path, true);
  os.write("MVOC", 4);
  detail::put_u32(os, kModelVersion);
  detail::put_u32(os, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, t] : entries) {
    detail::put_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::put_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t e : t.shape()) detail::put_u64(os, e);
    for (double v : t.data()) detail::put_u64(os, std::bit_cast<std::uint64_t>(v));
  }
  if (!os) throw DataError("failed writing " + path.string());
}

inline std::map<std::string, Tensor> read_tensors(const std::filesystem::path& path) {
  std::ifstream is = detail::open_in(path, true);
  char magic[4];
  if (!is.read(magic, 4) || std::string(magic, 4) != "MVOC") {
    throw DataError(path.string() + ": not an mvocc model file");
  }
  const std::uint32_t version = detail::get_u32(is);
  if (version != kModelVersion) {
    throw DataError(path.string() + ": unsupported model version " + std::to_string(version));
  }
  const std::uint32_t count = detail::get_u32(is);
  std::map<std::string, Tensor> out;
  for (std::uint32_t k = 0; k < count; ++k) {
    std::string name(detail::get_u32(is), '\0');
    if (!is.read(name.data(), static_cast<std::streamsize>(name.size()))) {
      throw DataError(path.string() + ": truncated entry name");
    }
    Shape shape(detail::get_u32(is));
    for (std::size_t& e : shape) e = detail::get_u64(is);
    Tensor t(shape);
    for (double& v : t.data()) v = std::bit_cast<double>(detail::get_u64(is));
    out.emplace(std::move(name), std::move(t));
  }
  return out;
}

inline void save_model(const Model& m, const std::filesystem::path& path) {
  NamedTensors e;
  e.emplace_back("meta/config", detail::string_tensor(config_to_json(m.config).dump()));
  auto put_params = [&](const std::string& prefix, const Params& p) {
    for (std::size_t l = 0; l < p.weights.size(); ++l)
      e.emplace_back(prefix + "/w" + std::to_string(l), p.weights[l]);
    for (std::size_t l = 0; l < p.biases.size(); ++l)
      e.emplace_back(prefix + "/b" + std::to_string(l), p.biases[l]);
  };
  for (std::size_t v = 0; v < m.encoders.size(); ++v) put_params("encoder/" + std::to_string(v), m.encoders[v]);
  for (std::size_t v = 0; v < m.decoders.size(); ++v) put_params("decoder/" + std::to_string(v), m.decoders[v]);
  put_params("fusion/nn", m.fusion.nn);
  for (std::size_t v = 0; v < m.fusion.factors.size(); ++v)
    e.emplace_back("fusion/factor" + std::to_string(v), m.fusion.factors[v]);
  if (!m.fusion.bias.empty()) e.emplace_back("fusion/bias", m.fusion.bias);
  for (std::size_t v = 0; v < m.centers.size(); ++v) e.emplace_back("center/" + std::to_string(v), m.centers[v]);
  for (std::size_t v = 0; v < m.norm.min.size(); ++v) {
    e.emplace_back("norm/min/" + std::to_string(v), m.norm.min[v]);
    e.emplace_back("norm/max/" + std::to_string(v), m.norm.max[v]);
  }
  write_tensors(path, e);
}

inline Model load_model(const std::filesystem::path& path) {
  std::map<std::string, Tensor> t = read_tensors(path);
  auto take = [&](const std::string& name) -> std::optional<Tensor> {
    auto it = t.find(name);
    if (it == t.end()) return std::nullopt;
    return it->second;
  };
  const auto meta = take("meta/config");
  if (!meta) throw DataError(path.string() + ": missing meta/config");
  Model m;
  try {
    m.config = config_from_json(json::parse(detail::tensor_string(*meta)));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": corrupt config: " + e.what());
  }
  auto get_params = [&](const std::string& prefix) {
    Params p;
    for (std::size_t l = 0;; ++l) {
      auto w = take(prefix + "/w" + std::to_string(l));
      if (!w) break;
      p.weights.push_back(*w);
      if (auto b = take(prefix + "/b" + std::to_string(l))) p.biases.push_back(*b);
    }
    return p;
  };
  for (std::size_t v = 0; v < m.config.encoders.size(); ++v)
    m.encoders.push_back(get_params("encoder/" + std::to_string(v)));
  for (std::size_t v = 0; v < m.config.decoders.size(); ++v)
    m.decoders.push_back(get_params("decoder/" + std::to_string(v)));
  m.fusion.nn = get_params("fusion/nn");
  for (std::size_t v = 0;; ++v) {
    auto f = take("fusion/factor" + std::to_string(v));
    if (!f) break;
    m.fusion.factors.push_back(*f);
  }
  if (auto b = take("fusion/bias")) m.fusion.bias = *b;
  for (std::size_t v = 0;; ++v) {
    auto c = take("center/" + std::to_string(v));
    if (!c) break;
    m.centers.push_back(*c);
  }
  for (std::size_t v = 0;; ++v) {
    auto lo = take("norm/min/" + std::to_string(v));
    auto hi = take("norm/max/" + std::to_string(v));
    if (!lo || !hi) break;
    m.norm.min.push_back(*lo);
    m.norm.max.push_back(*hi);
  }
  for (std::size_t v = 0; v < m.config.encoders.size(); ++v) {
    if (m.encoders[v].weights.size() != m.config.encoders[v].layers()) {
      throw DataError(path.string() + ": encoder " + std::to_string(v) + " is incomplete");
    }
  }
  return m;
}

}  // namespace mvocc
