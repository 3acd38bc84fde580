#pragma once

// θ-scheme solver for u' − div(B∇u) = f, u(0) = 0, on a box with homogeneous
// Dirichlet walls. Space: P1 elements on the Kuhn triangulation of a uniform
// grid (d! simplices per cube), B sampled at cube centres, lumped mass h^d·I.

#include "mrlab/fields.hpp"

#include <Eigen/Sparse>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mrlab::pde {

using CVector = Eigen::VectorXcd;
using SpMat = Eigen::SparseMatrix<Complex>;

enum class TimeMeshKind { Graded, Uniform };

struct DiscretizationConfig {
    int d = 2;
    double L = 3.0;                 ///< box [−L, L]^d unless lo/hi are given
    std::optional<double> lo, hi;   ///< explicit box [lo, hi]^d
    double h = 1.0 / 32.0;
    TimeMeshKind mesh = TimeMeshKind::Graded;
    int M = 8;                      ///< steps per dyadic block (graded)
    double T_max = 1.0 - 1.0 / 1024.0;
    int uniform_steps = 0;          ///< steps on [0, T_max] (uniform); 0 → ceil(T_max/h²)
    double theta = 1.0;
    bool resolution_guard = false;  ///< require 1 − T_max ≥ h²
    bool require_support = false;   ///< require B_2 strictly inside the box
};

struct Discretization {
    int d = 2;
    double lo = -3.0, hi = 3.0, h = 1.0 / 32.0;
    int n = 192;                    ///< intervals per axis; (n−1)^d interior unknowns
    std::vector<double> times;      ///< 0 = t_0 < ... < t_N = T_max
    double theta = 1.0;
    TimeMeshKind mesh = TimeMeshKind::Graded;
    int M = 0;
    // Roles of the Gelfand triple realised by the discrete spaces.
    std::string space_V = "H^1_0(box), P1 Kuhn elements";
    std::string space_H = "L^2(box), lumped mass";
    std::string space_Vstar = "H^-1(box), Riesz map of (-Laplace + 1)";

    [[nodiscard]] std::size_t unknowns() const;
    [[nodiscard]] std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
    [[nodiscard]] double cell_volume() const;
    /// Interior node position; index runs with the first axis slowest.
    [[nodiscard]] Vec node(std::size_t index) const;
    [[nodiscard]] int per_axis() const { return n - 1; }
};

[[nodiscard]] Discretization build_discretization(const DiscretizationConfig& c);

/// Graded points on [0, T_max]: M uniform steps in each dyadic block [1−2^{−j}, 1−2^{−j−1}].
[[nodiscard]] std::vector<double> graded_time_mesh(double T_max, int M);

/// Precomputed sparsity and element data, shared by all assemblies on a grid.
class Assembler {
public:
    explicit Assembler(const Discretization& disc);

    [[nodiscard]] const Discretization& disc() const noexcept { return disc_; }
    /// Pattern with explicit zero values.
    [[nodiscard]] const SpMat& pattern() const noexcept { return pattern_; }
    [[nodiscard]] std::size_t cells() const;
    [[nodiscard]] Vec cell_centre(std::size_t cell) const;

    /// K assembled from one matrix per cell (cell-major order).
    [[nodiscard]] SpMat stiffness(const std::vector<CMat>& cell_coefficients) const;
    /// B(t, ·) sampled at cube centres, evaluated in parallel.
    [[nodiscard]] std::vector<CMat> sample(const SpaceTimeMatrixField& b, double t, int threads) const;
    [[nodiscard]] SpMat stiffness(const SpaceTimeMatrixField& b, double t, int threads = 1) const;
    [[nodiscard]] SpMat laplacian() const;
    /// Position in pattern().valuePtr() of each diagonal entry.
    [[nodiscard]] const std::vector<int>& diagonal_slots() const noexcept { return diag_; }

private:
    Discretization disc_;
    SpMat pattern_;
    std::vector<int> diag_;
    std::vector<int> slot_;                   // per node, per offset code → value slot or −1
    std::vector<std::vector<double>> E_;      // E_[k*d+l] local (2^d)² matrices
};

enum class TimeSampling { Midpoint, LeftEndpoint };

struct SolverOptions {
    TimeSampling sampling = TimeSampling::Midpoint;
    double rtol = 1e-10;
    int max_iterations = 2000;
    std::size_t direct_limit = 250000;  ///< unknown counts above this use BiCGSTAB + ILUT
    bool store_levels = true;
    bool store_loads = true;
    bool check_ellipticity = true;
    int threads = 1;
    /// Called with (k, t_k, u_k) for k = 0..N.
    std::function<void(std::size_t, double, const CVector&)> observer;
};

struct SolveStats {
    std::size_t steps = 0;
    std::size_t factorizations = 0;
    int max_iterations_used = 0;
    double max_residual = 0.0;
    double min_coercivity = 0.0;   ///< over all sampled cell centres
    double max_norm = 0.0;
};

struct DiscreteField {
    std::shared_ptr<const Discretization> disc;
    std::vector<double> times;      ///< times of the stored levels
    std::vector<CVector> levels;    ///< nodal values; boundary nodes are implicit zeros
    std::vector<CVector> loads;     ///< F_k, k = 0..N−1 (load vectors, h^d-scaled)
    SolveStats stats;
};

/// F_k: h^d times the two-point Gauss average of f over [t_k, t_{k+1}] at the nodes.
[[nodiscard]] std::vector<CVector> compute_loads(const Discretization& disc, const SpaceTimeField& f,
                                                 int threads = 1);
[[nodiscard]] CVector nodal_values(const Discretization& disc, const SpaceTimeField& f, double t,
                                   int threads = 1);

[[nodiscard]] DiscreteField solve_forward(const SpaceTimeMatrixField& b, const SpaceTimeField& f,
                                          std::shared_ptr<const Discretization> disc,
                                          const SolverOptions& opt = {});

/// A(s, x) = B(−s, x)^H.
class ReflectedAdjoint final : public SpaceTimeMatrixField {
public:
    explicit ReflectedAdjoint(const SpaceTimeMatrixField& b) : SpaceTimeMatrixField(b.dim()), b_(b) {}
    [[nodiscard]] CMat value(double s, const Vec& x) const override { return b_.value(-s, x).adjoint(); }
    [[nodiscard]] bool time_independent() const override { return b_.time_independent(); }
    [[nodiscard]] std::optional<EllipticityBounds> bounds() const override { return b_.bounds(); }

private:
    const SpaceTimeMatrixField& b_;
};

struct DualBundle {
    DiscreteField v;                    ///< v_k on the forward times; v_N = 0
    std::vector<CVector> g_loads;       ///< G_k, aligned with forward steps
    std::vector<double> reflected_times;
    std::string transformation = "s = -t; A(s,x) = B(-s,x)^H; g~(s,x) = g(-s,x); v(t) = v~(-t)";
};

/// Dual problem −v' − div(B^H∇v) = g, v(T) = 0, via literal time reflection.
[[nodiscard]] DualBundle solve_dual(const SpaceTimeMatrixField& b, const SpaceTimeField& g,
                                    std::shared_ptr<const Discretization> disc,
                                    const SolverOptions& opt = {});

/// Discrete L², H¹ and H^{−1} (Riesz map of −Δ + 1) on a grid.
class DiscreteNorms {
public:
    explicit DiscreteNorms(const Discretization& disc);
    explicit DiscreteNorms(const Assembler& asmb);
    ~DiscreteNorms();
    DiscreteNorms(const DiscreteNorms&) = delete;
    DiscreteNorms& operator=(const DiscreteNorms&) = delete;

    [[nodiscard]] double l2(const CVector& u) const;
    [[nodiscard]] double grad_l2(const CVector& u) const;
    [[nodiscard]] double h1(const CVector& u) const;
    /// Norm of the functional v ↦ F^H v.
    [[nodiscard]] double hminus1_load(const CVector& F) const;
    /// Norm of nodal g as the functional v ↦ ⟨g, v⟩_{L²}.
    [[nodiscard]] double hminus1(const CVector& g) const;
    /// ⟨a, b⟩ = h^d Σ conj(a_i) b_i.
    [[nodiscard]] Complex pairing(const CVector& a, const CVector& b) const;
    [[nodiscard]] const Eigen::SparseMatrix<double>& laplacian() const noexcept { return K_; }
    [[nodiscard]] double cell_volume() const noexcept { return vol_; }

private:
    struct Impl;
    Eigen::SparseMatrix<double> K_;
    double vol_;
    std::unique_ptr<Impl> impl_;
};

struct EnergyReport {
    double lambda = 0.0;
    double gradient_term = 0.0;   ///< λ Σ Δt_k |∇u_{k+1}|²
    double terminal_term = 0.0;   ///< ½ |u_N|²
    double lhs = 0.0;
    double pairing = 0.0;         ///< |Σ Δt_k ⟨F_k, u_{k+1}⟩|
    double f_norm = 0.0;          ///< ‖f‖_{L²(0,T;H^{−1})}
    double u_norm = 0.0;          ///< ‖u‖_{L²(0,T;H¹)}
    double rhs = 0.0;             ///< f_norm · u_norm
    double margin = 0.0;          ///< rhs − lhs
    bool holds = false;
    double full_norm_lhs = 0.0;   ///< λ‖u‖²_{L²H¹} (the full-norm form)
    bool full_norm_holds = false;
};

/// Testing the implicit Euler scheme with u_{k+1}. λ is the smallest sampled
/// coercivity recorded by the solve (or supplied).
[[nodiscard]] EnergyReport energy_check(const DiscreteField& u, const SpaceTimeMatrixField& b,
                                        const SpaceTimeField& f, const Discretization& disc,
                                        std::optional<double> lambda = std::nullopt);

// ---------------------------------------------------------------------------
// Seeded random data for property tests and sweeps.

struct RandomCoefficientOptions {
    double lambda = 0.5;          ///< Hermitian part is λI + R Rᴴ, so coercivity ≥ λ
    int time_pieces = 6;          ///< B is piecewise constant on a uniform partition of [0, horizon]
    double horizon = 1.0;
    double amplitude = 1.0;       ///< size of R and of the anti-Hermitian part
};

/// B(t, x) = λI + R(x)R(x)ᴴ + S(x) − S(x)ᴴ with smooth random R, S per time piece.
[[nodiscard]] std::shared_ptr<SpaceTimeMatrixField> random_coefficient(int d, std::uint64_t seed,
                                                                       const RandomCoefficientOptions& o = {});
/// Sum of a few Gaussian bumps with random centres in [−L/2, L/2]^d and random complex time profiles.
[[nodiscard]] std::shared_ptr<SpaceTimeField> random_forcing(int d, std::uint64_t seed, double L);

/// Checkpoint layout: see docs/checkpoint-format.md.
void write_checkpoint(const std::filesystem::path& path, const DiscreteField& u);
[[nodiscard]] DiscreteField read_checkpoint(const std::filesystem::path& path);

}  // namespace mrlab::pde
