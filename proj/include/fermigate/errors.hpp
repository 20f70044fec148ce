#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fermigate {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A factorization met a non-positive pivot where positive definiteness was required.
class IndefiniteMatrix : public Error {
public:
    IndefiniteMatrix(const std::string& what, std::size_t pivot_index)
        : Error(what + " (pivot " + std::to_string(pivot_index) + ")"), pivot_index_(pivot_index) {}

    [[nodiscard]] std::size_t pivot_index() const noexcept { return pivot_index_; }

private:
    std::size_t pivot_index_;
};

/// An iterative method stopped before reaching its tolerance.
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, std::size_t iterations, double residual)
        : Error(what + " after " + std::to_string(iterations) + " iterations (residual " +
                std::to_string(residual) + ")"),
          iterations_(iterations),
          residual_(residual) {}

    [[nodiscard]] std::size_t iterations() const noexcept { return iterations_; }
    [[nodiscard]] double residual() const noexcept { return residual_; }

private:
    std::size_t iterations_;
    double residual_;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw InvalidArgument(message);
}

}  // namespace fermigate
