#pragma once

#include <stdexcept>
#include <string>

namespace mdphom {

/// Invalid configuration or incompatible artifacts (bad shapes, bad ranges,
/// mismatched checkpoint/dataset pairs). Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// API misuse: stepping a finished episode, backward before forward,
/// dimension mismatches at call sites.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

/// Corrupt or unrecognized file content. Carries the byte offset at which
/// parsing failed.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, std::size_t byte_offset)
        : std::runtime_error(what + " (at byte " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
    std::size_t offset;
};

/// Non-finite values encountered during training or inference.
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mdphom
