#pragma once

// Scenario parameters, experiment pipelines and report emission.

#include "mrlab/analysis.hpp"
#include "mrlab/profile.hpp"
#include "mrlab/profile_io.hpp"

#include <boost/rational.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mrlab::harness {

using Rational = boost::rational<long long>;

/// Parses "3", "-2/3", "0.75" or "1e-3" exactly (decimal literals become exact fractions).
[[nodiscard]] Rational parse_rational(const std::string& text);
[[nodiscard]] std::string to_string(const Rational& q);
[[nodiscard]] double to_double(const Rational& q);

struct MuInterval {
    Rational lo, hi;
};

/// (2/r + d/s, d/2) when nonempty; std::nullopt is the rejection value.
[[nodiscard]] std::optional<MuInterval> admissible_mu(int d, const Rational& r, const Rational& s);

struct ExponentPair {
    Rational r, s;
};

/// d ≥ 3: (p, 2d/(d−2)); d = 2: (p, 2p/(p−2) + 1).
[[nodiscard]] ExponentPair sobolev_pairing(const Rational& p, int d);

struct InterpolationResult {
    Rational r, s;
    Rational lhs;        ///< 2/r + d/s
    Rational rhs;        ///< d/2
    bool admissible = false;
};

/// 1/r = 1/2 − νθ, 1/s = 1/2 − (1−θ)/d, for ν ∈ (1/2, 1], θ ∈ (0, 1/(2ν)).
[[nodiscard]] InterpolationResult interpolation_parameters(const Rational& nu, const Rational& theta, int d);
/// 0.8/(2ν).
[[nodiscard]] Rational default_theta(const Rational& nu);

enum class Origin { User, Derived };

struct Param {
    Rational value;
    Origin origin = Origin::User;
};

struct ScenarioParams {
    int d = 2;
    std::optional<Param> mu, r, s, p, nu, theta;

    /// Fills r, s (from p or ν) and θ (default) where missing, then checks the invariants.
    void derive();
    void check() const;
};

// ---------------------------------------------------------------------------

enum class ScenarioMode { AnalysisOnly, Solve };

struct ScenarioConfig {
    std::filesystem::path base_dir;     ///< relative profile paths resolve here

    // [profile]
    std::string source = "decay-test";  ///< decay-test | gaussian-test | file | synthesize
    std::string coefficient = "bump";   ///< bump | anisotropic | identity
    double anisotropy = 0.5;
    Complex scale{1.0, 0.0};
    std::string file;
    std::string synth_mode = "radial-ode";
    Complex alpha{1.0, 0.0};
    double rho_inner = 1.0, rho_outer = 8.0;

    // [mesh]
    pde::DiscretizationConfig mesh;

    // [scenario]
    ScenarioParams params;
    ScenarioMode mode = ScenarioMode::AnalysisOnly;
    double norm_s = 4.0;                ///< exponent of the L^s(B_1) series (defaults to s when given)
    std::optional<analysis::FitWindow> fit_window;
    std::vector<int> truncations{3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<double> p_list{2.0, 4.0};
    std::uint64_t seed = 1;
    bool dual = true;
    double fractional_nu = 0.75;
    double compare_until = 0.9;
    int quadrature_angular = 0;

    // [tolerances]
    double residual_gate = 1e-4;
    double fd_step = 1e-3;
    double r0 = 1e-3;
    double comparison = 0.05;
    double exponent = 0.05;             ///< |measured − predicted| allowed by the exponent gates
    int threads = 1;

    /// Every key with its effective value, grouped by section.
    [[nodiscard]] std::vector<std::tuple<std::string, std::string, std::string>> echo() const;
};

/// INI file with sections [profile], [mesh], [scenario], [tolerances]; see docs/config.md.
[[nodiscard]] ScenarioConfig load_config(const std::filesystem::path& path);
[[nodiscard]] ScenarioConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");

// ---------------------------------------------------------------------------

struct ExponentRow {
    std::string quantity;
    double predicted = 0.0;
    std::optional<double> measured, stderr_beta;
    double window_lo = 0.0, window_hi = 0.0;
    std::string provenance;
    std::string status;                 ///< "fit" or the reason it is absent
};

struct Membership {
    std::string name;                   ///< e.g. "u in L^r(0,1;L^s(B_1))"
    std::string status;                 ///< divergent | convergent | inconclusive | not-run
    std::optional<double> value;
    std::string provenance;
    std::string notes;
};

struct Gate {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct SeriesEntry {
    analysis::NormSeries series;
    std::string provenance;
    std::optional<analysis::RateFit> fit;
    std::optional<double> predicted;
};

struct MeshStats {
    std::size_t unknowns = 0, steps = 0, factorizations = 0;
    double h = 0.0, T_max = 0.0, max_residual = 0.0, min_coercivity = 0.0;
};

struct RunReport {
    std::string command;
    std::vector<std::tuple<std::string, std::string, std::string>> config;
    ScenarioParams params;
    std::optional<profile::ValidationReport> validation;
    std::string claims = "not validated";
    std::vector<SeriesEntry> series;
    std::vector<ExponentRow> exponents;
    std::vector<Membership> memberships;
    std::vector<analysis::MaxRegReport> maxreg;
    std::map<double, double> growth;        ///< p → growth trend over truncations
    std::optional<analysis::DualityReport> duality;
    std::optional<double> comparison_error; ///< relative L²(0, T_c; L²) error, numeric vs analytic u
    std::optional<MeshStats> mesh;
    std::vector<Gate> gates;
    std::map<std::string, double> timing;   ///< wall-clock seconds per stage (written separately)
    std::string failed_stage;
    std::string error;

    std::vector<std::pair<std::string, double>> extras;   ///< command-specific scalars (mms orders, ...)

    // Stage artifacts written next to the report when present.
    std::shared_ptr<const pde::DiscreteField> solution;
    std::optional<profile::ProfileFile> profile_artifact;

    [[nodiscard]] bool gates_passed() const;
};

/// Profile → validation → bundle → (solve) → norm series → fits → report.
/// Stage failures are recorded in failed_stage / error; the partial report is returned.
[[nodiscard]] RunReport run_scenario(const ScenarioConfig& config);

/// Max-reg ratios over p × truncations T_j = 1 − 2^{−j} from one forward solve.
[[nodiscard]] RunReport sweep_p(const ScenarioConfig& config, const std::vector<double>& ps,
                                const std::vector<int>& truncations);

struct MmsLevel {
    double h = 0.0, dt = 0.0;
    double space_error = 0.0;   ///< Crank–Nicolson vs exact (time error vanishes for this solution)
    double time_error = 0.0;    ///< implicit Euler vs Crank–Nicolson on the same grid
};

struct MmsResult {
    std::vector<MmsLevel> levels;
    double spatial_order = 0.0;
    double temporal_order = 0.0;
    double seconds = 0.0;
};

/// u* = t sin(πx₁) sin(πx₂) on (0, 1)², B = I, Δt = h², T = T_max.
[[nodiscard]] MmsResult mms_convergence(const std::vector<double>& hs, double T, int threads = 1);
[[nodiscard]] RunReport mms_report(const ScenarioConfig& config);

struct DualCheckResult {
    analysis::DualityReport dense;    ///< the configured small instance
    int instances = 0;
    int holder_violations = 0;
    double worst_relative = 0.0;
    double worst_holder_ratio = 0.0;  ///< max |∫⟨g,u⟩| / bound
};

/// Random coercive B, random f and g on a small grid; `instances` seeds from `seed`.
[[nodiscard]] DualCheckResult dual_check(int d, double h, int steps, double T, double p, std::uint64_t seed,
                                         int instances);
[[nodiscard]] RunReport dual_check_report(const ScenarioConfig& config);

enum class Format { Json = 1, Csv = 2, Svg = 4 };

/// Parses "json,csv,svg".
[[nodiscard]] int parse_formats(const std::string& list);

/// report.json, series.csv, exponents.csv, plot_<k>.svg, timing.json. Deterministic except timing.json.
std::vector<std::filesystem::path> emit_report(const RunReport& report, const std::filesystem::path& dir,
                                               int formats = 7);
[[nodiscard]] std::string report_json(const RunReport& report);

/// CLI exit code: 0 all gates passed, 2 gates failed, 1 execution error.
[[nodiscard]] int exit_code(const RunReport& report);

}  // namespace mrlab::harness
