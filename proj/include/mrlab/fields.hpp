#pragma once

#include "mrlab/common.hpp"

#include <array>
#include <memory>
#include <optional>

namespace mrlab {

/// ∂_k of a matrix-valued map, one matrix per coordinate direction.
using MatrixGradient = std::array<CMat, kMaxDim>;

struct EllipticityBounds {
    double lambda = 1.0;  ///< coercivity: Re(Bξ·conj ξ) ≥ λ|ξ|²
    double Lambda = 1.0;  ///< boundedness: |Bξ| ≤ Λ|ξ|

    /// Throws RangeError unless 0 < lambda ≤ Lambda.
    void check() const;
};

/// Complex scalar map y ∈ ℝ^d → ℂ. Derivatives default to central differences
/// of `value` with step fd_step(); subclasses with closed forms override them
/// and report has_gradient()/has_hessian().
class ScalarField {
public:
    explicit ScalarField(int dim, double fd_step = 1e-4);
    virtual ~ScalarField() = default;

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] double fd_step() const noexcept { return fd_step_; }

    [[nodiscard]] virtual Complex value(const Vec& y) const = 0;
    [[nodiscard]] virtual bool has_gradient() const { return false; }
    [[nodiscard]] virtual bool has_hessian() const { return false; }
    [[nodiscard]] virtual CVec gradient(const Vec& y) const;
    [[nodiscard]] virtual CMat hessian(const Vec& y) const;

private:
    int dim_;
    double fd_step_;
};

/// Complex matrix map y ∈ ℝ^d → ℂ^{d×d}.
class MatrixField {
public:
    explicit MatrixField(int dim, double fd_step = 1e-4);
    virtual ~MatrixField() = default;

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] double fd_step() const noexcept { return fd_step_; }

    [[nodiscard]] virtual CMat value(const Vec& y) const = 0;
    [[nodiscard]] virtual bool has_derivative() const { return false; }
    [[nodiscard]] virtual MatrixGradient derivative(const Vec& y) const;

private:
    int dim_;
    double fd_step_;
};

/// Space-time scalar field (t, x) → ℂ.
class SpaceTimeField {
public:
    explicit SpaceTimeField(int dim, double fd_step = 1e-4);
    virtual ~SpaceTimeField() = default;

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] double fd_step() const noexcept { return fd_step_; }

    [[nodiscard]] virtual Complex value(double t, const Vec& x) const = 0;
    [[nodiscard]] virtual bool has_gradient() const { return false; }
    [[nodiscard]] virtual bool has_hessian() const { return false; }
    [[nodiscard]] virtual bool has_time_derivative() const { return false; }
    [[nodiscard]] virtual CVec gradient(double t, const Vec& x) const;
    [[nodiscard]] virtual CMat hessian(double t, const Vec& x) const;
    [[nodiscard]] virtual Complex time_derivative(double t, const Vec& x) const;

private:
    int dim_;
    double fd_step_;
};

/// Space-time coefficient field (t, x) → ℂ^{d×d}; derivative() is spatial.
class SpaceTimeMatrixField {
public:
    explicit SpaceTimeMatrixField(int dim, double fd_step = 1e-4);
    virtual ~SpaceTimeMatrixField() = default;

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] double fd_step() const noexcept { return fd_step_; }

    [[nodiscard]] virtual CMat value(double t, const Vec& x) const = 0;
    [[nodiscard]] virtual bool has_derivative() const { return false; }
    [[nodiscard]] virtual MatrixGradient derivative(double t, const Vec& x) const;
    /// True when value(t, x) does not depend on t (lets solvers reuse factorizations).
    [[nodiscard]] virtual bool time_independent() const { return false; }
    [[nodiscard]] virtual std::optional<EllipticityBounds> bounds() const { return std::nullopt; }

private:
    int dim_;
    double fd_step_;
};

// Central-difference helpers using values only (O(h²)).
[[nodiscard]] CVec fd_gradient(const ScalarField& f, const Vec& y, double h);
[[nodiscard]] CMat fd_hessian(const ScalarField& f, const Vec& y, double h);
[[nodiscard]] MatrixGradient fd_derivative(const MatrixField& a, const Vec& y, double h);
[[nodiscard]] CVec fd_gradient(const SpaceTimeField& f, double t, const Vec& x, double h);
[[nodiscard]] CMat fd_hessian(const SpaceTimeField& f, double t, const Vec& x, double h);
[[nodiscard]] Complex fd_time_derivative(const SpaceTimeField& f, double t, const Vec& x, double h);
[[nodiscard]] MatrixGradient fd_derivative(const SpaceTimeMatrixField& b, double t, const Vec& x,
                                           double h);

/// Coercivity witness: min over unit ξ of Re(ξ^H B ξ) (smallest eigenvalue of
/// the Hermitian part) together with the minimizing ξ.
struct CoercivityProbe {
    double coercivity = 0.0;
    CVec xi;
};
[[nodiscard]] CoercivityProbe coercivity(const CMat& b);

/// Operator 2-norm |B| = sup |Bξ|/|ξ|.
[[nodiscard]] double operator_norm(const CMat& b);

// ---------------------------------------------------------------------------
// Closure-backed fields for tests, manufactured solutions and CLI scenarios.

class LambdaSpaceTimeField final : public SpaceTimeField {
public:
    using ValueFn = std::function<Complex(double, const Vec&)>;
    using GradFn = std::function<CVec(double, const Vec&)>;
    using HessFn = std::function<CMat(double, const Vec&)>;

    LambdaSpaceTimeField(int dim, ValueFn value, GradFn grad = {}, HessFn hess = {},
                         ValueFn dt = {});

    [[nodiscard]] Complex value(double t, const Vec& x) const override { return value_(t, x); }
    [[nodiscard]] bool has_gradient() const override { return static_cast<bool>(grad_); }
    [[nodiscard]] bool has_hessian() const override { return static_cast<bool>(hess_); }
    [[nodiscard]] bool has_time_derivative() const override { return static_cast<bool>(dt_); }
    [[nodiscard]] CVec gradient(double t, const Vec& x) const override;
    [[nodiscard]] CMat hessian(double t, const Vec& x) const override;
    [[nodiscard]] Complex time_derivative(double t, const Vec& x) const override;

private:
    ValueFn value_;
    GradFn grad_;
    HessFn hess_;
    ValueFn dt_;
};

class LambdaMatrixField final : public SpaceTimeMatrixField {
public:
    using ValueFn = std::function<CMat(double, const Vec&)>;
    using DerivFn = std::function<MatrixGradient(double, const Vec&)>;

    LambdaMatrixField(int dim, ValueFn value, DerivFn deriv = {}, bool time_independent = false,
                      std::optional<EllipticityBounds> bounds = std::nullopt);

    [[nodiscard]] CMat value(double t, const Vec& x) const override { return value_(t, x); }
    [[nodiscard]] bool has_derivative() const override { return static_cast<bool>(deriv_); }
    [[nodiscard]] MatrixGradient derivative(double t, const Vec& x) const override;
    [[nodiscard]] bool time_independent() const override { return time_independent_; }
    [[nodiscard]] std::optional<EllipticityBounds> bounds() const override { return bounds_; }

private:
    ValueFn value_;
    DerivFn deriv_;
    bool time_independent_;
    std::optional<EllipticityBounds> bounds_;
};

/// B(t, x) = c·I, time independent, with the matching ellipticity bounds.
[[nodiscard]] std::shared_ptr<SpaceTimeMatrixField> constant_identity(int dim, Complex c = 1.0);

/// The zero forcing.
[[nodiscard]] std::shared_ptr<SpaceTimeField> zero_field(int dim);

}  // namespace mrlab
