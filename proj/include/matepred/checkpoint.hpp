#pragma once

// MMCK checkpoint, little-endian:
//
//   "MMCK" | u32 version (=1) | u32 json_len | config JSON (UTF-8) |
//   u32 tensor_count | per tensor: u32 name_len | name | u32 rank |
//   rank * u32 dims | values as f64
//
// Parameters come first in canonical block order, then buffers.

#include <cstring>
#include <filesystem>
#include <string>

#include "matepred/model.hpp"
#include "matepred/store.hpp"

namespace matepred {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// True when two configurations produce interchangeable parameter layouts.
inline bool same_architecture(const ModelConfig& a, const ModelConfig& b) {
    return a.d_model == b.d_model && a.context == b.context && a.heads == b.heads &&
           a.proj_hidden == b.proj_hidden && a.ffn_hidden == b.ffn_hidden && a.head_hidden == b.head_hidden &&
           a.fusion == b.fusion && a.use_pcf == b.use_pcf && a.use_cmap == b.use_cmap &&
           (a.embedding_mode == EmbeddingMode::TrainedFromScratch) ==
               (b.embedding_mode == EmbeddingMode::TrainedFromScratch);
}

namespace detail {

inline void put_tensor(std::string& out, const std::string& name, const Tensor& t) {
    le::put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    le::put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) le::put_u32(out, static_cast<std::uint32_t>(d));
    for (Real v : t.data()) le::put_f64(out, static_cast<double>(v));
}

} // namespace detail

/// Length-prefixed JSON: the `--config` file format and the checkpoint header blob.
inline std::string encode_config(const ModelConfig& c) {
    const std::string json = nlohmann::json(c).dump();
    std::string out;
    le::put_u32(out, static_cast<std::uint32_t>(json.size()));
    return out + json;
}

inline ModelConfig parse_config_json(std::string_view text) {
    try {
        auto c = nlohmann::json::parse(text).get<ModelConfig>();
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model config: ") + e.what());
    }
}

/// Accepts either the length-prefixed form or bare JSON text.
inline ModelConfig decode_config(std::span<const char> bytes) {
    if (bytes.size() >= 4 && bytes[0] != '{' && bytes[0] != ' ' && bytes[0] != '\n') {
        le::Reader in(bytes);
        const auto n = in.u32();
        const auto s = in.take(n);
        return parse_config_json(std::string_view(s.data(), s.size()));
    }
    return parse_config_json(std::string_view(bytes.data(), bytes.size()));
}

inline ModelConfig read_config(const std::filesystem::path& path) { return decode_config(le::read_file(path)); }

inline void write_config(const ModelConfig& c, const std::filesystem::path& path) {
    le::write_file(path, encode_config(c));
}

inline std::string encode_checkpoint(ModelParams& p) {
    std::string out = "MMCK";
    le::put_u32(out, kCheckpointVersion);
    out += encode_config(p.config);
    const auto params = p.named_parameters();
    const auto buffers = p.named_buffers();
    le::put_u32(out, static_cast<std::uint32_t>(params.size() + buffers.size()));
    for (const auto& [name, v] : params) detail::put_tensor(out, name, v.value());
    for (const auto& [name, t] : buffers) detail::put_tensor(out, name, *t);
    return out;
}

inline void save_checkpoint(ModelParams& p, const std::filesystem::path& path) {
    le::write_file(path, encode_checkpoint(p));
}

/// Rebuilds the model described by the embedded config. With `expected` set,
/// an architecture that differs from it raises ConfigMismatch.
inline ModelParams decode_checkpoint(std::span<const char> bytes, const ModelConfig* expected = nullptr) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "MMCK", 4) != 0) throw BadMagic("expected MMCK");
    le::Reader in(bytes);
    in.take(4);
    const auto version = in.u32();
    if (version != kCheckpointVersion)
        throw VersionMismatch("checkpoint version " + std::to_string(version) + ", expected " +
                              std::to_string(kCheckpointVersion));
    const auto json_len = in.u32();
    const auto json = in.take(json_len);
    const ModelConfig config = parse_config_json(std::string_view(json.data(), json.size()));
    if (expected && !same_architecture(config, *expected))
        throw ConfigMismatch("checkpoint config " + nlohmann::json(config).dump() + " vs expected " +
                             nlohmann::json(*expected).dump());

    ModelParams p = ModelParams::init(config, 0);
    std::vector<std::pair<std::string, Tensor*>> slots;
    for (auto& [name, v] : p.named_parameters()) {
        Var handle = v;
        slots.emplace_back(name, &handle.mutable_value());
    }
    for (auto& b : p.named_buffers()) slots.push_back(b);

    const auto count = in.u32();
    if (count != slots.size())
        throw ConfigMismatch("checkpoint holds " + std::to_string(count) + " tensors, model expects " +
                             std::to_string(slots.size()));
    for (const auto& [name, target] : slots) {
        const auto name_len = in.u32();
        const auto got = in.take(name_len);
        if (std::string_view(got.data(), got.size()) != name)
            throw ConfigMismatch("tensor '" + std::string(got.data(), got.size()) + "' where '" + name +
                                 "' was expected");
        Shape shape(in.u32());
        for (auto& d : shape) d = in.u32();
        if (shape != target->shape())
            throw ConfigMismatch(name + ": shape " + to_string(shape) + " vs " + to_string(target->shape()));
        for (auto& v : target->storage()) v = static_cast<Real>(in.f64());
    }
    if (!in.exhausted()) throw ParseError("trailing bytes after checkpoint tensors");
    return p;
}

inline ModelParams load_checkpoint(const std::filesystem::path& path, const ModelConfig* expected = nullptr) {
    const auto bytes = le::read_file(path);
    return decode_checkpoint(bytes, expected);
}

} // namespace matepred
