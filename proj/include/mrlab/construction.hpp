#pragma once

// Counterexample fields built from a profile pair:
//   B(t,x) = a(x/√(1−t)),  ζ(t,x) = (1−t)^{−(μ+i)/2} w(x/√(1−t)),
//   u = t ζ η,  f = η ζ − t Σ_{k,l}(B_kl + B_lk) ∂_kζ ∂_lη − t ζ div(B∇η).

#include "mrlab/fields.hpp"
#include "mrlab/profile.hpp"

#include <memory>
#include <span>
#include <vector>

namespace mrlab::construction {

using profile::ProfilePair;

/// Difference step in the self-similar variable when a has no closed-form derivative.
inline constexpr double kCoefficientFdStep = 1e-4;

class CoefficientField final : public SpaceTimeMatrixField {
public:
    explicit CoefficientField(ProfilePair p);

    [[nodiscard]] CMat value(double t, const Vec& x) const override;
    [[nodiscard]] bool has_derivative() const override { return true; }
    [[nodiscard]] MatrixGradient derivative(double t, const Vec& x) const override;
    [[nodiscard]] std::optional<EllipticityBounds> bounds() const override { return pair_.bounds; }
    [[nodiscard]] const ProfilePair& source() const noexcept { return pair_; }

private:
    ProfilePair pair_;
};

/// η(x) = G(2−|x|)/(G(2−|x|) + G(|x|−1)), G(τ) = e^{−1/τ} for τ > 0.
class Cutoff {
public:
    explicit Cutoff(int d);

    [[nodiscard]] int dim() const noexcept { return d_; }
    /// (η, η', η'') as functions of r = |x|.
    [[nodiscard]] std::array<double, 3> radial(double r) const;
    [[nodiscard]] double value(const Vec& x) const;
    [[nodiscard]] Vec gradient(const Vec& x) const;
    [[nodiscard]] RMat hessian(const Vec& x) const;

private:
    int d_;
};

class ZetaField final : public SpaceTimeField {
public:
    explicit ZetaField(ProfilePair p);

    [[nodiscard]] Complex value(double t, const Vec& x) const override;
    [[nodiscard]] bool has_gradient() const override { return true; }
    [[nodiscard]] bool has_hessian() const override { return true; }
    [[nodiscard]] bool has_time_derivative() const override { return true; }
    [[nodiscard]] CVec gradient(double t, const Vec& x) const override;
    [[nodiscard]] CMat hessian(double t, const Vec& x) const override;
    [[nodiscard]] Complex time_derivative(double t, const Vec& x) const override;

    /// (1−t)^{−(μ+i)/2}.
    [[nodiscard]] Complex amplitude(double t) const;
    [[nodiscard]] const ProfilePair& source() const noexcept { return pair_; }

private:
    ProfilePair pair_;
};

class UField final : public SpaceTimeField {
public:
    UField(std::shared_ptr<const ZetaField> zeta, std::shared_ptr<const Cutoff> eta);

    [[nodiscard]] Complex value(double t, const Vec& x) const override;
    [[nodiscard]] bool has_gradient() const override { return true; }
    [[nodiscard]] bool has_hessian() const override { return true; }
    [[nodiscard]] bool has_time_derivative() const override { return true; }
    [[nodiscard]] CVec gradient(double t, const Vec& x) const override;
    [[nodiscard]] CMat hessian(double t, const Vec& x) const override;
    [[nodiscard]] Complex time_derivative(double t, const Vec& x) const override;

private:
    std::shared_ptr<const ZetaField> zeta_;
    std::shared_ptr<const Cutoff> eta_;
};

/// The three-term forcing.
class ForcingField final : public SpaceTimeField {
public:
    ForcingField(std::shared_ptr<const ZetaField> zeta, std::shared_ptr<const Cutoff> eta,
                 std::shared_ptr<const CoefficientField> b);
    [[nodiscard]] Complex value(double t, const Vec& x) const override;

private:
    std::shared_ptr<const ZetaField> zeta_;
    std::shared_ptr<const Cutoff> eta_;
    std::shared_ptr<const CoefficientField> b_;
};

/// ∂_t u − div(B∇u) evaluated in closed form: the three-term forcing minus
/// t η (1−t)^{−(μ+i)/2−1} R(x/√(1−t)). Equals ForcingField when R ≡ 0.
class ExactForcingField final : public SpaceTimeField {
public:
    ExactForcingField(std::shared_ptr<const ForcingField> f, std::shared_ptr<const ZetaField> zeta,
                      std::shared_ptr<const Cutoff> eta);
    [[nodiscard]] Complex value(double t, const Vec& x) const override;

private:
    std::shared_ptr<const ForcingField> f_;
    std::shared_ptr<const ZetaField> zeta_;
    std::shared_ptr<const Cutoff> eta_;
};

struct SolutionBundle {
    ProfilePair source;
    std::shared_ptr<const CoefficientField> coefficients;
    std::shared_ptr<const Cutoff> cutoff;
    std::shared_ptr<const ZetaField> zeta;
    std::shared_ptr<const UField> u;
    std::shared_ptr<const ForcingField> f;
    std::shared_ptr<const ExactForcingField> f_exact;
};

[[nodiscard]] std::shared_ptr<CoefficientField> build_coefficients(const ProfilePair& p);
[[nodiscard]] std::shared_ptr<Cutoff> build_cutoff(int d);
[[nodiscard]] SolutionBundle build_bundle(const ProfilePair& p);

struct SpaceTimePoint {
    double t = 0.0;
    Vec x;
};

enum class ResidualMode { Analytic, FiniteDifference };

struct ResidualOptions {
    ResidualMode mode = ResidualMode::Analytic;
    double fd_step = 1e-4;
    /// Samples with |x| below this radius are reported in the near-origin block only.
    double near_origin_radius = 1e-2;
    int threads = 1;
};

struct ResidualStats {
    double sup = 0.0;
    double l2 = 0.0;            ///< root mean square over the bulk samples
    SpaceTimePoint argmax;
    std::size_t count = 0;
    double near_origin_sup = 0.0;
    std::size_t near_origin_count = 0;
    std::vector<double> values;  ///< |residual| per input sample, in input order
};

/// |∂_t u − div(B∇u) − f| at each sample. Rejects t ∉ (0, 1) and x = 0.
[[nodiscard]] ResidualStats pde_residual(const SpaceTimeField& u, const SpaceTimeMatrixField& b,
                                         const SpaceTimeField& f, std::span<const SpaceTimePoint> samples,
                                         const ResidualOptions& opt = {});
[[nodiscard]] ResidualStats pde_residual(const SolutionBundle& bundle, std::span<const SpaceTimePoint> samples,
                                         const ResidualOptions& opt = {});

}  // namespace mrlab::construction
