#pragma once

// Norms of sampled and discrete fields, Bochner-type time norms, blow-up
// exponent fits and the maximal-regularity / duality probes.

#include "mrlab/fields.hpp"
#include "mrlab/pde.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace mrlab::analysis {

enum class NormTag { Ls, L2ball, H1, GradL2, Hminus1 };

struct NormKind {
    NormTag tag = NormTag::Ls;
    double s = 2.0;                                          ///< exponent for Ls
    double radius = std::numeric_limits<double>::infinity(); ///< restrict to the ball B_radius
    std::optional<std::pair<double, double>> box;            ///< restrict to [lo, hi]^d instead

    static NormKind Ls(double s, double radius = std::numeric_limits<double>::infinity());
    static NormKind L2ball(double radius);
    static NormKind H1();
    static NormKind GradL2();
    static NormKind Hminus1();
    [[nodiscard]] std::string to_string() const;
};

struct NormSeries {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<bool> divergent;   ///< per entry; a flagged entry carries no finite value
    NormKind kind;
    std::string label;
};

struct RateFit {
    double beta = 0.0;
    double stderr_beta = 0.0;
    double intercept = 0.0;        ///< log c
    double window_lo = 0.0, window_hi = 0.0;
    std::size_t points = 0;
};

struct MaxRegReport {
    double p = 2.0;
    double ratio = 0.0;
    double T = 0.0;
    double u_norm = 0.0;           ///< ‖u‖_{L^p(0,T;H¹)}
    double f_norm = 0.0;           ///< ‖f‖_{L^p(0,T;H^{−1})}
    std::size_t steps = 0;
};

// ---------------------------------------------------------------------------
// Quadrature for sampled fields.

struct QuadratureOptions {
    double support_radius = 2.0;   ///< integration radius when the kind does not restrict it
    int geometric_depth = 48;      ///< dyadic panels toward the origin below the first breakpoint
    int radial_order = 10;         ///< Gauss–Legendre points per radial panel
    std::vector<double> breakpoints{1.0};
    int panels_per_unit = 8;       ///< uniform panels between breakpoints
    int angular = 0;               ///< 0 → dimension default (2D: 32 angles)
    int box_panels = 8;            ///< per axis, for box regions
    int threads = 1;
};

/// Gauss–Legendre nodes and weights on [−1, 1].
[[nodiscard]] std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n);

/// Slice norm of f(t, ·). Hminus1 needs a discretization (sampled onto its nodes).
[[nodiscard]] double slice_norm(const SpaceTimeField& f, double t, const NormKind& kind,
                                const QuadratureOptions& q = {});
[[nodiscard]] double slice_norm(const SpaceTimeField& f, double t, const NormKind& kind,
                                const pde::Discretization& disc);
/// Slice norm of a nodal vector on a grid; `norms` is built on demand when null.
[[nodiscard]] double slice_norm(const pde::CVector& u, const pde::Discretization& disc, const NormKind& kind,
                                const pde::DiscreteNorms* norms = nullptr);

[[nodiscard]] NormSeries norm_series(const SpaceTimeField& f, const std::vector<double>& times,
                                     const NormKind& kind, const QuadratureOptions& q = {});
[[nodiscard]] NormSeries norm_series(const pde::DiscreteField& u, const NormKind& kind, int threads = 1);

// ---------------------------------------------------------------------------

struct BochnerResult {
    double value = 0.0;            ///< (∫ n^r)^{1/r}, including the extrapolated tail when convergent
    bool divergent = false;
    bool converged = false;        ///< last dyadic block below 1% of the partial sum
    double tail = 0.0;             ///< extrapolated ∫ n^r beyond the last sample
    double last_block_fraction = 0.0;
    std::vector<double> block_sums;   ///< ∫ n^r over [1 − 2^{−j}, 1 − 2^{−j−1}] ∩ interval
    std::string notes;
};

/// ‖t ↦ n(t)‖_{L^r(a, b)} with a log-linear interpolant between samples
/// (exact for powers of 1 − t). An interval reaching t = 1 is closed by a
/// power-law tail when the dyadic Cauchy test passes; it is flagged divergent
/// when each of the last three blocks contributes more than 10% of the sum.
[[nodiscard]] BochnerResult bochner_norm(const NormSeries& series, double r, double a = 0.0, double b = 1.0);

struct FractionalNormResult {
    double value = 0.0;
    double squared = 0.0;
    bool divergent = false;
    std::array<double, 3> refinements{0.0, 0.0, 0.0};   ///< squared norms on every 4th, 2nd, every node
    std::string notes;
};

/// Gagliardo H^ν(0, T; L²) norm by product trapezoid quadrature without the
/// diagonal; levels weighted by `weight` (h^d for nodal vectors). Divergence is
/// flagged when the increment under halving the mesh does not contract.
[[nodiscard]] FractionalNormResult fractional_time_norm(const std::vector<double>& times,
                                                        const std::vector<pde::CVector>& levels, double weight,
                                                        double nu, int threads = 1);
[[nodiscard]] FractionalNormResult fractional_time_norm(const pde::DiscreteField& u, double nu, int threads = 1);

struct FitWindow {
    double lo = 1e-4, hi = 1e-1;   ///< range of 1 − t
};

/// [max(4h², 1 − T_max), 0.1].
[[nodiscard]] FitWindow default_fit_window(double h, double T_max);

[[nodiscard]] RateFit fit_exponent(const NormSeries& series, const FitWindow& window);

struct PredictedExponents {
    double u_Ls = 0.0;      ///< −μ/2 + d/(2s)
    double grad_u_L2 = 0.0; ///< −(μ+1)/2 + d/4
    double u_L2 = 0.0;      ///< −μ/2 + d/4
};

[[nodiscard]] PredictedExponents predicted_exponents(int d, double mu, double s);

/// Discrete ‖u‖_{L^p(0,T;H¹)} / ‖f‖_{L^p(0,T;H^{−1})} over the steps ending at or before T.
[[nodiscard]] MaxRegReport maxreg_ratio(const pde::DiscreteField& u, const SpaceTimeField& f, double p,
                                        const pde::Discretization& disc,
                                        std::optional<double> T = std::nullopt);
/// Ratios at several truncations sharing one pass over the levels.
[[nodiscard]] std::vector<MaxRegReport> maxreg_ratios(const pde::DiscreteField& u, const SpaceTimeField& f,
                                                      const std::vector<double>& ps,
                                                      const std::vector<double>& truncations,
                                                      const pde::Discretization& disc, int threads = 1);

/// Least-squares slope of log ratio against the truncation index.
[[nodiscard]] double growth_trend(const std::vector<MaxRegReport>& series);

struct DualityReport {
    Complex forward_pairing{};     ///< Σ Δt ⟨G_k, u_{k+1}⟩  (∫⟨g, u⟩)
    Complex dual_pairing{};        ///< Σ Δt ⟨v_k, F_k⟩      (∫⟨v, f⟩)
    double difference = 0.0;
    double relative = 0.0;         ///< difference / max(|forward|, ε)
    double p = 2.0;
    double holder_bound = 0.0;     ///< ‖v‖_{L^p H¹} ‖f‖_{L^{p'} H^{−1}}
    bool holder_holds = false;
};

[[nodiscard]] DualityReport duality_check(const pde::DiscreteField& u, const SpaceTimeField& f,
                                          const pde::DualBundle& v, const SpaceTimeField& g,
                                          const pde::Discretization& disc, double p = 2.0,
                                          double eps = 1e-300);

}  // namespace mrlab::analysis
