#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace mapereg {

/// Raised for malformed or out-of-contract input. The CLI maps it to exit code 2.
class input_error : public std::invalid_argument {
public:
    explicit input_error(const std::string& what) : std::invalid_argument(what) {}

    input_error(const std::string& what, std::size_t row)
        : std::invalid_argument(what), row_(row) {}

    /// Zero-based sample index the error refers to, when there is one.
    std::optional<std::size_t> row() const noexcept { return row_; }

private:
    std::optional<std::size_t> row_;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
    if (!condition) throw input_error(message);
}

}  // namespace detail

}  // namespace mapereg
