#pragma once

// Self-similar profile pairs (w, a): the seed of every counterexample field.
//
// A pair solves the profile equation
//     R(y) := div(a∇w)(y) − ½ y·∇w(y) − ((μ+i)/2) w(y) = 0
// exactly when ζ(t,x) = (1−t)^{−μ/2} e^{−(i/2)log(1−t)} w(x/(1−t)^{1/2}) solves
// ∂_t ζ = div(a(x/(1−t)^{1/2}) ∇ζ). Pairs are input data: they are loaded,
// validated against that equation and the standing decay/ellipticity
// hypotheses, or synthesized on a best-effort basis.

#include "mrlab/common.hpp"
#include "mrlab/fields.hpp"

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mrlab::profile {

/// Decay constants C_α (α = |multi-index| ∈ {0,1,2}) in
/// |∂^α w(y)| ≤ C_α |y|^{−|α|−μ} and |∂^α a(y)| ≤ C_α |y|^{−|α|} for |y| ≥ 1.
struct DecayConstants {
    std::array<double, 3> C{0.0, 0.0, 0.0};
    double lipschitz_at_zero = 0.0;

    void check() const;
};

enum class Provenance { Imported, Synthesized, AnalyticTest };

[[nodiscard]] std::string to_string(Provenance p);
[[nodiscard]] Provenance provenance_from_string(const std::string& s);

/// Radial range on which a pair is meaningful. Unbounded pairs leave this empty.
struct Annulus {
    double inner = 0.0;
    double outer = 0.0;
};

struct ProfilePair {
    int d = 2;
    double mu = 0.5;
    std::shared_ptr<const ScalarField> w;
    std::shared_ptr<const MatrixField> a;
    EllipticityBounds bounds;
    DecayConstants decay;
    Provenance provenance = Provenance::AnalyticTest;
    /// Data or construction is only valid on `support` (not globally regular at 0).
    bool local_only = false;
    std::optional<Annulus> support;
    std::string label;
};

/// Checks d ≥ 2, 0 < μ < d/2, dimension agreement of w and a, bounds and decay
/// constants. Throws RangeError on violation.
void check_profile(const ProfilePair& p);

/// Scales w by a nonzero complex constant (a unchanged); decay constants scale by |c|.
[[nodiscard]] ProfilePair scaled(const ProfilePair& p, Complex c);

// ---------------------------------------------------------------------------
// Validation

enum class DerivativeMode {
    Auto,              ///< closed-form derivatives where the sampler has them, else differences
    FiniteDifference,  ///< central differences of values only
};

struct ValidationTolerances {
    double fd_step = 1e-3;
    double r0 = 1e-3;              ///< excluded ball around y = 0
    double residual_gate = 1e-4;   ///< residual_sup ≤ gate · sup|w| for validated status
    double ellipticity_slack = 1e-9;
    double decay_slack = 1e-9;
    DerivativeMode mode = DerivativeMode::Auto;
    int threads = 1;
};

struct EllipticityWitness {
    Vec y;
    CVec xi;
    double coercivity = 0.0;   ///< measured Re(a(y)ξ·conj ξ) for unit ξ
    double bound = 0.0;        ///< measured |a(y)| at the witness of the boundedness check
};

struct DecayWitness {
    Vec y;
    int order = 0;             ///< 0, 1: w; 3: first derivative of a
    double ratio = 0.0;        ///< |∂^α ·(y)| |y|^{power} at the witness
    double declared = 0.0;
};

struct ValidationReport {
    double residual_sup = 0.0;
    double residual_l2 = 0.0;      ///< root mean square of |R| over the sample set
    Vec residual_argmax;
    double w_sup = 0.0;
    bool degenerate = false;       ///< w vanishes on the whole sample set
    bool ellipticity_ok = true;
    EllipticityWitness ellipticity;   ///< worst coercivity sample
    double measured_lambda = 0.0;
    double measured_Lambda = 0.0;
    bool decay_ok = true;
    DecayWitness decay;            ///< worst decay sample (largest ratio/declared)
    std::array<double, 3> measured_C_w{0.0, 0.0, 0.0};
    double measured_C_a1 = 0.0;
    double C_dw = 0.0;             ///< |B_1|^{1/2} · sup_{B_1}(|w| + |∇w|)
    double lipschitz_estimate = 0.0;
    std::size_t samples = 0;
    std::size_t decay_samples = 0;
    bool validated = false;        ///< residual gate, ellipticity and decay all pass
    std::string notes;
};

/// Spherical-shell sample set: n_radial geometric radii in [r_min, r_max] times
/// a deterministic direction set (n_angular directions in 2D, n_angular² in 3D;
/// d = 4 uses coordinate and diagonal directions).
[[nodiscard]] std::vector<Vec> shell_samples(int d, double r_min, double r_max, int n_radial,
                                             int n_angular);

/// Default sample set for a pair: honours its support annulus, otherwise
/// r ∈ [r0, 12].
[[nodiscard]] std::vector<Vec> default_sample_set(const ProfilePair& p,
                                                  const ValidationTolerances& tol);

/// Residual of the profile equation at y, using the derivative mode requested.
[[nodiscard]] Complex profile_residual(const ProfilePair& p, const Vec& y,
                                       DerivativeMode mode, double fd_step);

/// Measures residual, ellipticity, decay and the constant C_dw on `samples`.
/// Throws RangeError when a sample lies inside the excluded ball |y| < r0.
[[nodiscard]] ValidationReport validate_profile(const ProfilePair& p,
                                                std::span<const Vec> samples,
                                                const ValidationTolerances& tol);

/// Measured decay constants on samples with |y| ≥ 1, multiplied by `safety`.
[[nodiscard]] DecayConstants measure_decay_constants(const ProfilePair& p,
                                                     std::span<const Vec> samples,
                                                     double safety = 1.05);

// ---------------------------------------------------------------------------
// Synthesis

enum class SynthesisMode { RadialOde, AnnulusPde };

[[nodiscard]] std::string to_string(SynthesisMode m);
[[nodiscard]] SynthesisMode synthesis_mode_from_string(const std::string& s);

struct SynthesisConfig {
    // radial-ode
    Complex alpha{1.0, 0.0};       ///< a = α·I
    double rho_inner = 1.0;
    double rho_outer = 8.0;
    int radial_nodes = 449;        ///< nodes of the stored radial table
    int substeps = 16;             ///< RK4 substeps between stored nodes
    // annulus-pde
    std::shared_ptr<const MatrixField> a;   ///< user coefficient; required for AnnulusPde
    double grid_h = 1.0 / 16.0;
    /// Dirichlet data on nodes outside the annulus. Default: y ↦ |y|^{−(μ+i)}.
    std::function<Complex(const Vec&)> boundary;
    ValidationTolerances tolerances;
    int validation_radial = 48;
    int validation_angular = 24;
};

/// Best-effort numerical profile candidate plus its honest validation report.
/// Both modes mark the result local_only with support = [rho_inner, rho_outer].
[[nodiscard]] std::pair<ProfilePair, ValidationReport> synthesize_candidate(
    int d, double mu, SynthesisMode mode, const SynthesisConfig& config);

/// Radial reduction of the profile equation for a = α·I: returns (W', W'')
/// given (ρ, W, W'), i.e. W'' = (ρ/(2α) − (d−1)/ρ) W' + ((μ+i)/(2α)) W.
[[nodiscard]] std::pair<Complex, Complex> radial_profile_rhs(int d, double mu, Complex alpha,
                                                             double rho, Complex W, Complex dW);

}  // namespace mrlab::profile
