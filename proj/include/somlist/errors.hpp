#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace som {

// Broad class of a failure; the CLI maps these onto exit codes.
enum class ErrorClass { config, data, io };

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
    ErrorClass error_class() const noexcept { return cls_; }

private:
    ErrorClass cls_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorClass::config, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorClass::data, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorClass::io, what) {}
};

/// Malformed JSON input. `byte_offset` points at the byte where parsing failed.
class ParseError : public DataError {
public:
    ParseError(const std::string& what, std::size_t byte_offset)
        : DataError(what + " (at byte " + std::to_string(byte_offset) + ")"), byte_offset_(byte_offset) {}
    std::size_t byte_offset() const noexcept { return byte_offset_; }

private:
    std::size_t byte_offset_;
};

/// An id that does not resolve (dangling image_id, category_id, tag, ...).
class ReferentialError : public DataError {
public:
    ReferentialError(const std::string& what, std::int64_t offending_id)
        : DataError(what), offending_id_(offending_id) {}
    std::int64_t offending_id() const noexcept { return offending_id_; }

private:
    std::int64_t offending_id_;
};

class DimensionError : public DataError {
public:
    using DataError::DataError;
};

class ShapeError : public DataError {
public:
    using DataError::DataError;
};

class EmptyMaskError : public DataError {
public:
    using DataError::DataError;
};

class BoundsError : public DataError {
public:
    using DataError::DataError;
};

class EmptyResponseError : public DataError {
public:
    using DataError::DataError;
};

/// Prediction keyed by an image id the gold file does not contain.
class KeyError : public DataError {
public:
    KeyError(const std::string& what, std::int64_t key) : DataError(what), key_(key) {}
    std::int64_t key() const noexcept { return key_; }

private:
    std::int64_t key_;
};

class RecipeError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Network failure that survived the retry budget.
class TransportError : public IoError {
public:
    TransportError(const std::string& what, int attempts) : IoError(what), attempts_(attempts) {}
    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

/// Response arrived but its envelope could not be understood.
class ProtocolError : public IoError {
public:
    using IoError::IoError;
};

}  // namespace som
