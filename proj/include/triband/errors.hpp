#pragma once

#include <stdexcept>
#include <string>

namespace triband {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : Error {
    using Error::Error;
};

struct MalformedFile : Error {
    using Error::Error;
};

struct ReflectanceOutOfRange : Error {
    using Error::Error;
};

struct ParseError : Error {
    explicit ParseError(const std::string& what, int line = -1)
        : Error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what), line_no(line) {}
    int line_no;
};

struct MissingKey : Error {
    explicit MissingKey(const std::string& key) : Error("missing key: " + key), key(key) {}
    std::string key;
};

struct DegenerateBox : Error {
    using Error::Error;
};

struct DomainError : Error {
    using Error::Error;
};

struct ShapeMismatch : Error {
    using Error::Error;
};

struct EmptyInput : Error {
    using Error::Error;
};

struct EmptyBatch : Error {
    using Error::Error;
};

struct NoSupportingPoints : Error {
    using Error::Error;
};

struct WeightMismatch : Error {
    using Error::Error;
};

struct FrameSetMismatch : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

} // namespace triband
