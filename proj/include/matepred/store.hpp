#pragma once

// MMEB container: precomputed embedding matrices or contact maps keyed by
// sequence. All integers and floats little-endian.
//
//   header : "MMEB" | u32 version (=1) | u32 record_count | u8 kind
//   record : u32 key_len | key bytes (UTF-8) | u32 rows | u32 cols |
//            rows*cols f32, row-major

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "matepred/contact_map.hpp"
#include "matepred/errors.hpp"
#include "matepred/rng.hpp"
#include "matepred/sequence.hpp"

namespace matepred {

enum class StoreKind : std::uint8_t { Embeddings = 0, ContactMaps = 1 };

inline constexpr std::uint32_t kStoreVersion = 1;
inline constexpr std::size_t kStoreHeaderBytes = 13;

/// One keyed rows x cols float32 matrix. Used for both embeddings and maps.
struct StoreRecord {
    std::string key;
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<float> data;

    float at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    friend bool operator==(const StoreRecord&, const StoreRecord&) = default;
};

using EmbeddingMatrix = StoreRecord;

namespace le {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

/// Bounds-checked little-endian reader over an in-memory buffer.
class Reader {
public:
    explicit Reader(std::span<const char> bytes) : bytes_(bytes) {}

    bool exhausted() const noexcept { return pos_ == bytes_.size(); }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

    std::span<const char> take(std::size_t n) {
        if (remaining() < n) throw TruncatedFile("need " + std::to_string(n) + " bytes at offset " +
                                                 std::to_string(pos_));
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
    std::uint32_t u32() {
        const auto s = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[i])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        const auto s = take(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[i])) << (8 * i);
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

private:
    std::span<const char> bytes_;
    std::size_t pos_ = 0;
};

inline std::vector<char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoFailure("write failed: " + path.string());
}

} // namespace le

/// Read-only keyed collection loaded from an MMEB file.
class EmbeddingStore {
public:
    EmbeddingStore() = default;
    EmbeddingStore(StoreKind kind, std::vector<StoreRecord> records) : kind_(kind), records_(std::move(records)) {
        index_.reserve(records_.size());
        for (std::size_t i = 0; i < records_.size(); ++i)
            if (!index_.emplace(records_[i].key, i).second) throw DuplicateKey(records_[i].key);
    }

    StoreKind kind() const noexcept { return kind_; }
    std::size_t size() const noexcept { return records_.size(); }
    const std::vector<StoreRecord>& records() const noexcept { return records_; }

    const StoreRecord* find(const std::string& key) const {
        const auto it = index_.find(key);
        return it == index_.end() ? nullptr : &records_[it->second];
    }

private:
    StoreKind kind_ = StoreKind::Embeddings;
    std::vector<StoreRecord> records_;
    std::unordered_map<std::string, std::size_t> index_;
};

inline std::string encode_store(StoreKind kind, std::span<const StoreRecord> records) {
    std::unordered_set<std::string> keys;
    std::string out = "MMEB";
    le::put_u32(out, kStoreVersion);
    le::put_u32(out, static_cast<std::uint32_t>(records.size()));
    out.push_back(static_cast<char>(kind));
    for (const auto& r : records) {
        if (!keys.insert(r.key).second) throw DuplicateKey(r.key);
        if (static_cast<std::size_t>(r.rows) * r.cols != r.data.size())
            throw ShapeMismatch("record " + r.key + ": rows*cols != data length");
        le::put_u32(out, static_cast<std::uint32_t>(r.key.size()));
        out += r.key;
        le::put_u32(out, r.rows);
        le::put_u32(out, r.cols);
        for (float v : r.data) le::put_f32(out, v);
    }
    return out;
}

inline void write_store(StoreKind kind, std::span<const StoreRecord> records,
                        const std::filesystem::path& path) {
    le::write_file(path, encode_store(kind, records));
}

inline EmbeddingStore decode_store(std::span<const char> bytes) {
    le::Reader in(bytes);
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "MMEB", 4) != 0) throw BadMagic("expected MMEB");
    in.take(4);
    const auto version = in.u32();
    if (version != kStoreVersion) throw UnsupportedVersion(std::to_string(version));
    const auto count = in.u32();
    const auto kind = in.u8();
    if (kind > 1) throw ParseError("unknown store kind " + std::to_string(kind));
    std::vector<StoreRecord> records;
    records.reserve(std::min<std::size_t>(count, in.remaining() / 12));
    for (std::uint32_t i = 0; i < count; ++i) {
        StoreRecord r;
        const auto key_len = in.u32();
        const auto key = in.take(key_len);
        r.key.assign(key.begin(), key.end());
        r.rows = in.u32();
        r.cols = in.u32();
        const std::size_t n = static_cast<std::size_t>(r.rows) * r.cols;
        if (in.remaining() / 4 < n) throw TruncatedFile("record " + r.key);
        r.data.resize(n);
        for (auto& v : r.data) v = in.f32();
        records.push_back(std::move(r));
    }
    return EmbeddingStore(static_cast<StoreKind>(kind), std::move(records));
}

inline EmbeddingStore read_store(const std::filesystem::path& path) {
    const auto bytes = le::read_file(path);
    return decode_store(bytes);
}

/// Validates a contact-map store record.
inline ContactMap load_contact_map(const StoreRecord& record) {
    return ContactMap::from_matrix(record.rows, record.cols, std::span<const float>(record.data));
}

inline StoreRecord to_record(const std::string& key, const ContactMap& map) {
    StoreRecord r{key, static_cast<std::uint32_t>(map.size()), static_cast<std::uint32_t>(map.size()), {}};
    r.data.assign(map.values().begin(), map.values().end());
    return r;
}

/// Deterministic stand-in embedder: entry (i, j) is N(0, 1) keyed on
/// (seed, residue at i, i, j), scaled by 1/sqrt(d_emb). PAD rows are zero.
inline EmbeddingMatrix mock_embed(const ShapedSequence& seq, std::size_t d_emb, std::uint64_t seed) {
    if (d_emb == 0) throw InvalidArgument("d_emb must be >= 1");
    EmbeddingMatrix m;
    m.key = render(seq);
    m.rows = static_cast<std::uint32_t>(seq.context());
    m.cols = static_cast<std::uint32_t>(d_emb);
    m.data.assign(seq.context() * d_emb, 0.0f);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d_emb));
    for (std::size_t i = 0; i < seq.context(); ++i) {
        if (!seq.mask[i]) continue;
        for (std::size_t j = 0; j < d_emb; ++j)
            m.data[i * d_emb + j] =
                static_cast<float>(scale * rng::counter_normal(seed, seq.tokens[i], i, j));
    }
    return m;
}

} // namespace matepred
