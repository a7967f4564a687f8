#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "matepred/errors.hpp"

namespace matepred {

inline constexpr std::string_view kAlphabet = "ACDEFGHIKLMNPQRSTVWY";
inline constexpr std::size_t kNumResidues = 20;
inline constexpr std::size_t kDefaultContext = 22;

/// Token ids 0..19 follow kAlphabet; 20 is padding.
using Token = std::uint8_t;
inline constexpr Token kPadToken = 20;
inline constexpr std::size_t kVocabSize = 21;

/// Index of a one-letter code in kAlphabet, or -1.
constexpr int residue_index(char c) noexcept {
    for (std::size_t i = 0; i < kAlphabet.size(); ++i)
        if (kAlphabet[i] == c) return static_cast<int>(i);
    return -1;
}

/// A validated, uppercase amino-acid string of length >= 1.
class AaSequence {
public:
    /// Trims surrounding whitespace, uppercases, validates.
    static AaSequence parse(std::string_view text) {
        std::size_t b = 0, e = text.size();
        while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
        if (b == e) throw EmptySequence("blank input");
        std::string residues;
        residues.reserve(e - b);
        for (std::size_t i = b; i < e; ++i) {
            const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(text[i])));
            if (residue_index(c) < 0) throw InvalidResidue(i - b, c);
            residues.push_back(c);
        }
        return AaSequence(std::move(residues));
    }

    std::size_t raw_length() const noexcept { return residues_.size(); }
    std::size_t size() const noexcept { return residues_.size(); }
    const std::string& str() const noexcept { return residues_; }
    char operator[](std::size_t i) const { return residues_[i]; }
    auto begin() const noexcept { return residues_.begin(); }
    auto end() const noexcept { return residues_.end(); }

    Token token(std::size_t i) const { return static_cast<Token>(residue_index(residues_[i])); }

    friend bool operator==(const AaSequence&, const AaSequence&) = default;
    friend auto operator<=>(const AaSequence&, const AaSequence&) = default;

private:
    explicit AaSequence(std::string residues) : residues_(std::move(residues)) {}
    std::string residues_;
};

inline AaSequence parse_sequence(std::string_view text) { return AaSequence::parse(text); }

/// Fixed-length view: residues first, then PAD; mask is true on residues.
struct ShapedSequence {
    std::vector<Token> tokens;
    std::vector<bool> mask;

    std::size_t context() const noexcept { return tokens.size(); }
    std::size_t real_length() const noexcept {
        std::size_t n = 0;
        for (bool m : mask) n += m;
        return n;
    }
    friend bool operator==(const ShapedSequence&, const ShapedSequence&) = default;
};

/// Keeps the N-terminal prefix when truncating; right-pads otherwise.
inline ShapedSequence shape_sequence(const AaSequence& seq,
                                     std::size_t context_length = kDefaultContext) {
    if (context_length == 0) throw InvalidArgument("context_length must be >= 1");
    ShapedSequence out;
    out.tokens.assign(context_length, kPadToken);
    out.mask.assign(context_length, false);
    const std::size_t kept = std::min(seq.size(), context_length);
    for (std::size_t i = 0; i < kept; ++i) {
        out.tokens[i] = seq.token(i);
        out.mask[i] = true;
    }
    return out;
}

/// Residue letters of the kept (non-PAD) positions.
inline std::string render(const ShapedSequence& shaped) {
    std::string s;
    for (std::size_t i = 0; i < shaped.tokens.size(); ++i)
        if (shaped.mask[i]) s.push_back(kAlphabet[shaped.tokens[i]]);
    return s;
}

} // namespace matepred
