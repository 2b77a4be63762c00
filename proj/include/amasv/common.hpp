// ============================================================================
// amasv/common.hpp: shared identifiers, values and error types
// ============================================================================
#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace amasv {

using AgentId = std::uint32_t;
using EventId = std::uint32_t;
using VarId = std::uint32_t;
using LocalStateId = std::uint32_t;
using StateId = std::uint32_t;
using ViewId = std::uint32_t;

inline constexpr AgentId kNoAgent = std::numeric_limits<AgentId>::max();
inline constexpr StateId kNoState = std::numeric_limits<StateId>::max();

/// The silent event of undeadlocked models. Owned by nobody.
inline constexpr EventId kEpsilon = std::numeric_limits<EventId>::max();

// ── Value ───────────────────────────────────────────────────────────────────
// Variables hold booleans (0/1) or 32-bit integers. kUnset is the bottom
// value every variable starts with.

using Value = std::int32_t;
inline constexpr Value kUnset = std::numeric_limits<Value>::min();

inline std::string value_to_string(Value v, bool is_bool) {
    if (v == kUnset) return "unset";
    if (is_bool) return v != 0 ? "true" : "false";
    return std::to_string(v);
}

// ── Errors ──────────────────────────────────────────────────────────────────

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& msg)
        : std::runtime_error(line == 0 ? msg : "line " + std::to_string(line) + ": " + msg),
          line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a configured resource cap (states, strategies, nodes) is hit.
class LimitExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace amasv
