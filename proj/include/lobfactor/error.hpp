#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace lobfactor {

/// Base exception for every failure raised by the library.
///
/// `code()` is module-qualified ("lob_core.EmptySide", "matfun.SingularInput", ...)
/// so callers such as the CLI can report it in a machine-readable form.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

/// Raised by total_cost when the order walks past the last level.
class InsufficientDepth : public Error {
public:
    InsufficientDepth(std::int64_t requested, std::int64_t max_fillable)
        : Error("lob_core.InsufficientDepth",
                "order of " + std::to_string(requested) + " shares exceeds book depth of " +
                    std::to_string(max_fillable)),
          max_fillable_(max_fillable) {}

    /// Largest absolute quantity the relevant side can fill.
    std::int64_t max_fillable() const noexcept { return max_fillable_; }

private:
    std::int64_t max_fillable_;
};

/// Raised by sample_books for a timestamp that goes backwards.
class OutOfOrderEvent : public Error {
public:
    OutOfOrderEvent(std::int64_t ts, const std::string& message)
        : Error("book_builder.OutOfOrderEvent", message), ts_(ts) {}

    std::int64_t timestamp() const noexcept { return ts_; }

private:
    std::int64_t ts_;
};

} // namespace lobfactor
