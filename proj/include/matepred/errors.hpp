#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace matepred {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define MATEPRED_DEFINE_ERROR(Name)                \
    class Name : public Error {                    \
    public:                                        \
        explicit Name(const std::string& what)     \
            : Error(#Name ": " + what) {}          \
    }

MATEPRED_DEFINE_ERROR(EmptySequence);
MATEPRED_DEFINE_ERROR(ShapeMismatch);
MATEPRED_DEFINE_ERROR(NonSquare);
MATEPRED_DEFINE_ERROR(NonFinite);
MATEPRED_DEFINE_ERROR(DuplicateKey);
MATEPRED_DEFINE_ERROR(IoFailure);
MATEPRED_DEFINE_ERROR(BadMagic);
MATEPRED_DEFINE_ERROR(UnsupportedVersion);
MATEPRED_DEFINE_ERROR(TruncatedFile);
MATEPRED_DEFINE_ERROR(NonScalarRoot);
MATEPRED_DEFINE_ERROR(MissingModality);
MATEPRED_DEFINE_ERROR(VersionMismatch);
MATEPRED_DEFINE_ERROR(ConfigMismatch);
MATEPRED_DEFINE_ERROR(ExhaustedDecoys);
MATEPRED_DEFINE_ERROR(TooFewEpitopes);
MATEPRED_DEFINE_ERROR(MissingEmbedding);
MATEPRED_DEFINE_ERROR(SingleClass);
MATEPRED_DEFINE_ERROR(InvalidArgument);
MATEPRED_DEFINE_ERROR(ParseError);

#undef MATEPRED_DEFINE_ERROR

/// Symbol outside the 20-letter alphabet; position is 0-based.
class InvalidResidue : public Error {
public:
    InvalidResidue(std::size_t position, char symbol)
        : Error("InvalidResidue: '" + std::string(1, symbol) + "' at position " +
                std::to_string(position)),
          position_(position), symbol_(symbol) {}

    std::size_t position() const noexcept { return position_; }
    char symbol() const noexcept { return symbol_; }

private:
    std::size_t position_;
    char symbol_;
};

class AsymmetricMap : public Error {
public:
    explicit AsymmetricMap(double max_deviation)
        : Error("AsymmetricMap: max deviation " + std::to_string(max_deviation)),
          max_deviation_(max_deviation) {}

    double max_deviation() const noexcept { return max_deviation_; }

private:
    double max_deviation_;
};

} // namespace matepred
