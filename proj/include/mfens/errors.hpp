#ifndef MFENS_ERRORS_HPP
#define MFENS_ERRORS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mfens {

// Malformed input data: bad rating lines, duplicate pairs, corrupt checkpoints.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem problems distinct from malformed content.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid configuration or usage detected before any work starts.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Training produced a non-finite value.  The run is aborted rather than
// clipped; the failing model, epoch and entry are carried for diagnostics.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(int kind_index, std::uint64_t epoch, std::uint32_t row,
                    std::uint32_t col)
        : std::runtime_error("model k" + std::to_string(kind_index) +
                             " diverged (non-finite value) at epoch " +
                             std::to_string(epoch) + ", entry (" +
                             std::to_string(row) + "," + std::to_string(col) + ")"),
          kind_index(kind_index), epoch(epoch), row(row), col(col) {}

    int kind_index;
    std::uint64_t epoch;
    std::uint32_t row;
    std::uint32_t col;
};

} // namespace mfens

#endif
