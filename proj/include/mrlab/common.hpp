#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>

namespace mrlab {

using Complex = std::complex<double>;

/// Largest spatial dimension the samplers and grids are instantiated for.
inline constexpr int kMaxDim = 4;

// Small fixed-capacity vectors/matrices: no heap traffic in per-point evaluation.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using CVec = Eigen::Matrix<Complex, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using RMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using CMat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parameter outside its admissible range (μ ∉ (0, d/2), θ out of range, ...).
class RangeError : public Error {
public:
    using Error::Error;
};

/// Malformed input file; `offset` is a byte offset (binary) or line number (text).
class FormatError : public Error {
public:
    FormatError(const std::string& what, long long offset)
        : Error(what + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}
    [[nodiscard]] long long offset() const noexcept { return offset_; }

private:
    long long offset_;
};

/// Evaluation at or beyond the self-similar collapse time t = 1.
class SingularTimeError : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    SolverError(const std::string& what, int iterations, double residual)
        : Error(what + " (iterations=" + std::to_string(iterations) +
                ", residual=" + std::to_string(residual) + ")"),
          iterations_(iterations), residual_(residual) {}
    [[nodiscard]] int iterations() const noexcept { return iterations_; }
    [[nodiscard]] double residual() const noexcept { return residual_; }

private:
    int iterations_;
    double residual_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is
/// handled exactly once; callers write results per index so that the outcome
/// does not depend on the thread count.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

/// Default worker count (hardware concurrency, at least 1).
int default_threads();

}  // namespace mrlab
