#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>

namespace snel {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian and read/written via memcpy");

// Error hierarchy. Every failure surfaced by the library derives from Error;
// the category decides the C API status code (user/data error vs internal).
class Error : public std::runtime_error {
public:
    explicit Error(std::string message) : std::runtime_error(std::move(message)) {}
};

// Bad input data or files: malformed schema, missing file, value out of range.
class DataError : public Error {
public:
    using Error::Error;
};

class IoError : public DataError {
public:
    using DataError::DataError;
};

// SQL syntax error with source position.
class SyntaxError : public Error {
public:
    SyntaxError(std::string message, int line, int column)
        : Error(std::move(message)), line(line), column(column) {}
    int line;
    int column;
};

// Query is well-formed SQL but cannot be lowered: unknown table/column,
// type mismatch, or a construct the engine does not support.
class BindError : public Error {
public:
    using Error::Error;
};

// Plan references data that is not available (metadata-only table, missing index).
class CompileError : public Error {
public:
    using Error::Error;
};

// Invariant violation inside the engine.
class InternalError : public Error {
public:
    using Error::Error;
};

// All on-disk formats are little-endian.
template <typename T>
inline void store_le(unsigned char* dst, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::memcpy(dst, &value, sizeof(T));
}

template <typename T>
inline T load_le(const unsigned char* src) {
    static_assert(std::is_trivially_copyable_v<T>);
    T value;
    std::memcpy(&value, src, sizeof(T));
    return value;
}

}  // namespace snel
