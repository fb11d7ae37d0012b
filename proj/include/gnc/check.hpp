#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace gnc {

// Thrown when an input violates an operation's preconditions.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Thrown when a computation produces non-finite values or otherwise
// cannot continue (divergence, unsolvable state).
class ComputeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {
[[noreturn]] inline void fail_invalid(const char* expr, const std::string& msg) {
    std::ostringstream os;
    os << msg << " (violated: " << expr << ")";
    throw InvalidInput(os.str());
}
[[noreturn]] inline void fail_compute(const char* expr, const std::string& msg) {
    std::ostringstream os;
    os << msg << " (violated: " << expr << ")";
    throw ComputeError(os.str());
}
}  // namespace detail

}  // namespace gnc

#define GNC_REQUIRE(cond, msg)                          \
    do {                                                \
        if (!(cond)) ::gnc::detail::fail_invalid(#cond, (msg)); \
    } while (0)

#define GNC_CHECK_FINITE(cond, msg)                     \
    do {                                                \
        if (!(cond)) ::gnc::detail::fail_compute(#cond, (msg)); \
    } while (0)
