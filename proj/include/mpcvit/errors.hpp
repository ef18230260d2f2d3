#pragma once

#include <stdexcept>
#include <string>

namespace mpcvit {

// Error taxonomy. Every failure mode that callers are expected to handle gets
// its own type; anything else is a plain std::runtime_error.

// Malformed or truncated file contents (checkpoints, datasets, tables).
struct CorruptFile : std::runtime_error {
    explicit CorruptFile(const std::string& what) : std::runtime_error(what) {}
};

// File was readable but written by an incompatible format version.
struct VersionMismatch : std::runtime_error {
    explicit VersionMismatch(const std::string& what) : std::runtime_error(what) {}
};

// A Beaver triple was consumed twice.
struct TripleReuse : std::runtime_error {
    explicit TripleReuse(const std::string& what) : std::runtime_error(what) {}
};

// Bad user-supplied configuration (ranges, missing keys, inconsistent shapes).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Tensor/matrix dimension mismatch.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mpcvit
