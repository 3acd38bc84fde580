#pragma once

// Concrete samplers for profile pairs: tabulated data (radial and Cartesian
// grids) and a few closed-form families used as test and synthetic inputs.

#include "mrlab/profile.hpp"

#include <memory>
#include <vector>

namespace mrlab::profile {

/// w(y) = W(|y|), a(y) = A(|y|) tabulated on strictly increasing radii.
/// Interpolation order follows the stored derivatives: W only → 4-point
/// Lagrange; W, W' → cubic Hermite; W, W', W'' → quintic Hermite.
struct RadialTable {
    int d = 2;
    std::vector<double> rho;
    std::vector<Complex> W;
    std::vector<Complex> dW;    ///< empty or one per node
    std::vector<Complex> d2W;   ///< empty or one per node (requires dW)
    std::vector<CMat> A;
    std::vector<CMat> dA;       ///< empty or one per node: dA/dρ

    void check() const;
};

/// Uniform tensor grid, first axis slowest. Interpolation is tensor-product
/// cubic Lagrange (bicubic in 2D, tricubic in 3D); stored derivative samples,
/// when present, are interpolated the same way and used as the gradient.
struct CartesianTable {
    int d = 2;
    std::array<int, kMaxDim> shape{};
    std::array<double, kMaxDim> lo{};
    std::array<double, kMaxDim> h{};
    std::vector<Complex> w;
    std::vector<Complex> grad_w;   ///< empty or n·d entries, node-major
    std::vector<CMat> a;
    std::vector<Complex> grad_a;   ///< empty or n·d·d·d entries: node, k, i, j (∂_k a_ij)

    [[nodiscard]] std::size_t node_count() const;
    [[nodiscard]] Vec node(std::size_t index) const;
    void check() const;
};

class RadialScalarField final : public ScalarField {
public:
    explicit RadialScalarField(std::shared_ptr<const RadialTable> table);
    [[nodiscard]] Complex value(const Vec& y) const override;
    [[nodiscard]] bool has_gradient() const override { return true; }
    [[nodiscard]] bool has_hessian() const override { return true; }
    [[nodiscard]] CVec gradient(const Vec& y) const override;
    [[nodiscard]] CMat hessian(const Vec& y) const override;

    /// (W, W', W'') of the interpolant at radius ρ.
    [[nodiscard]] std::array<Complex, 3> radial_jet(double rho) const;
    [[nodiscard]] const RadialTable& table() const noexcept { return *table_; }
    [[nodiscard]] std::shared_ptr<const RadialTable> table_ptr() const { return table_; }

private:
    std::shared_ptr<const RadialTable> table_;
};

class RadialMatrixField final : public MatrixField {
public:
    explicit RadialMatrixField(std::shared_ptr<const RadialTable> table);
    [[nodiscard]] CMat value(const Vec& y) const override;
    [[nodiscard]] bool has_derivative() const override { return true; }
    [[nodiscard]] MatrixGradient derivative(const Vec& y) const override;
    [[nodiscard]] std::shared_ptr<const RadialTable> table_ptr() const { return table_; }

private:
    std::shared_ptr<const RadialTable> table_;
};

class CartesianScalarField final : public ScalarField {
public:
    explicit CartesianScalarField(std::shared_ptr<const CartesianTable> table);
    [[nodiscard]] Complex value(const Vec& y) const override;
    [[nodiscard]] bool has_gradient() const override { return true; }
    [[nodiscard]] bool has_hessian() const override { return true; }
    [[nodiscard]] CVec gradient(const Vec& y) const override;
    [[nodiscard]] CMat hessian(const Vec& y) const override;
    [[nodiscard]] std::shared_ptr<const CartesianTable> table_ptr() const { return table_; }

private:
    std::shared_ptr<const CartesianTable> table_;
};

class CartesianMatrixField final : public MatrixField {
public:
    explicit CartesianMatrixField(std::shared_ptr<const CartesianTable> table);
    [[nodiscard]] CMat value(const Vec& y) const override;
    [[nodiscard]] bool has_derivative() const override { return true; }
    [[nodiscard]] MatrixGradient derivative(const Vec& y) const override;
    [[nodiscard]] std::shared_ptr<const CartesianTable> table_ptr() const { return table_; }

private:
    std::shared_ptr<const CartesianTable> table_;
};

// ---------------------------------------------------------------------------
// Closed-form families

/// w(y) = c·exp(−|y|²/4), a = I. Not a profile (residual ≈ 1.53 at y → 0 for
/// d = 2, μ = 0.9); used to exercise the validator.
[[nodiscard]] ProfilePair gaussian_test_profile(int d, double mu);

/// w(y) = c·(1+|y|²)^{−μ/2} with a(y) = (2 + 1/(1+|y|²))·I. Has the decay of a
/// genuine profile but does not solve the profile equation.
[[nodiscard]] ProfilePair decay_test_profile(int d, double mu, Complex c = 1.0);

/// w ≡ 0, a = I.
[[nodiscard]] ProfilePair zero_test_profile(int d, double mu);

/// Pair with user-supplied fields; bounds and decay constants are measured.
[[nodiscard]] ProfilePair custom_profile(int d, double mu, std::shared_ptr<const ScalarField> w,
                                         std::shared_ptr<const MatrixField> a);

/// a(y) ≡ M.
[[nodiscard]] std::shared_ptr<MatrixField> constant_matrix_field(CMat m);

/// a(y) = (2 + 1/(1+|y|²))·I.
[[nodiscard]] std::shared_ptr<MatrixField> bump_scalar_coefficient(int d);

/// a(y) = I + c·(y yᵀ)/(1+|y|²): zero-homogeneous at infinity, |∇a| ≲ |y|^{−1}.
[[nodiscard]] std::shared_ptr<MatrixField> radial_anisotropic_coefficient(int d, double c);

/// Builds an interpolating pair from a radial table.
[[nodiscard]] ProfilePair pair_from_table(std::shared_ptr<const RadialTable> table, double mu);
[[nodiscard]] ProfilePair pair_from_table(std::shared_ptr<const CartesianTable> table, double mu);

}  // namespace mrlab::profile
