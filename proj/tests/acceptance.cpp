// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are fixed here.

#include "mrlab/analysis.hpp"
#include "mrlab/construction.hpp"
#include "mrlab/harness.hpp"
#include "mrlab/samplers.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>

using namespace mrlab;
using namespace mrlab::harness;

namespace {

constexpr double kPi = std::numbers::pi;

// Criterion thresholds.
constexpr double kTemporalOrder = 0.9;
constexpr double kSpatialOrder = 1.9;
constexpr double kMmsSeconds = 120.0;
constexpr double kExponentTol = 0.05;
constexpr double kScalingSeconds = 60.0;
constexpr double kBlockChange = 0.01;
constexpr double kGagliardoRel = 0.01;
constexpr double kHminus1Tol = 1e-6;
constexpr double kDualityTol = 1e-8;
constexpr double kCompareTol = 0.05;

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void line(int k, bool pass, const std::string& detail) {
    std::printf("criterion %2d: %s  %s\n", k, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

void guarded(int k, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        line(k, false, std::string("exception: ") + e.what());
    }
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

const char* kScaling = R"([profile]
source = decay-test
[mesh]
h = 1/128
M = 8
T_max = 16383/16384
[scenario]
d = 2
mu = 0.9
s = 4
fit_window = 1e-4, 1e-1
)";

const ExponentRow* row(const RunReport& r, const std::string& q) {
    for (const auto& e : r.exponents)
        if (e.quantity == q) return &e;
    return nullptr;
}

void criterion1() {
    const auto m = mms_convergence({1.0 / 16, 1.0 / 32, 1.0 / 64}, 0.5, 1);
    line(1, m.temporal_order >= kTemporalOrder && m.spatial_order >= kSpatialOrder && m.seconds < kMmsSeconds,
         fmt("temporal order %.4f (>= 0.9), spatial order %.4f (>= 1.9), %.1f s (< 120)", m.temporal_order,
             m.spatial_order, m.seconds));
}

void criterion2() {
    const auto t0 = Clock::now();
    const auto r = run_scenario(parse_config(kScaling));
    const double secs = since(t0);
    if (!r.failed_stage.empty()) throw Error(r.failed_stage + ": " + r.error);
    const auto* u = row(r, "u Ls(B1)");
    const auto* g = row(r, "grad u L2");
    if (!u || !u->measured || !g || !g->measured) throw Error("exponent rows missing");
    const bool ok = std::abs(*u->measured + 0.20) <= kExponentTol && std::abs(*g->measured + 0.45) <= kExponentTol &&
                    secs < kScalingSeconds;
    line(2, ok, fmt("u L^4(B_1) exponent %.4f (-0.20 +- 0.05), grad u L2 exponent %.4f (-0.45 +- 0.05), %.1f s (< 60)",
                    *u->measured, *g->measured, secs));
}

void criterion3() {
    auto c = parse_config(kScaling);
    c.coefficient = "anisotropic";
    c.anisotropy = 0.5;
    const auto r = run_scenario(c);
    if (!r.failed_stage.empty()) throw Error(r.failed_stage + ": " + r.error);
    const auto* f = row(r, "f L2");
    if (!f || !f->measured) throw Error("f exponent missing");
    double mx = 0.0;
    bool finite = false;
    for (const auto& [k, v] : r.extras)
        if (k == "f_L2_max") {
            mx = v;
            finite = std::isfinite(v);
        }
    line(3, std::abs(*f->measured) < kExponentTol && finite,
         fmt("f L2 exponent %.4f in (-0.05, 0.05), max over the graded mesh %.4g", *f->measured, mx));
}

void criterion4() {
    const int d = 2;
    const double mu = 0.9;
    const auto b = construction::build_bundle(profile::decay_test_profile(d, mu));
    analysis::QuadratureOptions q;
    const double T = 1.0 - std::ldexp(1.0, -16);
    const auto coarse = pde::graded_time_mesh(T, 8), fine = pde::graded_time_mesh(T, 16);
    std::string detail;
    bool ok = true;
    for (auto [r, s] : {std::pair{10.0, 4.0}, std::pair{6.0, 4.0}, std::pair{2.0, 4.0}, std::pair{4.0, 3.0}}) {
        const bool below = 2.0 / r + d / s < mu;
        const auto sc = analysis::norm_series(*b.u, coarse, analysis::NormKind::Ls(s, 1.0), q);
        const auto bc = analysis::bochner_norm(sc, r);
        char buf[160];
        if (below) {
            ok = ok && bc.divergent;
            std::snprintf(buf, sizeof buf, "(r,s)=(%g,%g) below mu: %s; ", r, s, bc.divergent ? "divergent" : "NOT flagged");
        } else {
            const auto bf = analysis::bochner_norm(analysis::norm_series(*b.u, fine, analysis::NormKind::Ls(s, 1.0), q), r);
            const double last_c = bc.block_sums.back(), last_f = bf.block_sums.back();
            const double change = std::abs(last_f - last_c) / last_f;
            const bool good = !bc.divergent && !bf.divergent && bf.converged && change < kBlockChange;
            ok = ok && good;
            std::snprintf(buf, sizeof buf, "(r,s)=(%g,%g) above mu: %s, last-block change %.2e; ", r, s,
                          good ? "convergent" : "NOT convergent", change);
        }
        detail += buf;
    }
    line(4, ok, detail);
}

void criterion5() {
    const int N = 8192;
    std::vector<double> t(N + 1);
    std::vector<pde::CVector> lin(N + 1);
    for (int k = 0; k <= N; ++k) {
        t[static_cast<std::size_t>(k)] = static_cast<double>(k) / N;
        lin[static_cast<std::size_t>(k)] = pde::CVector::Constant(1, t[static_cast<std::size_t>(k)]);
    }
    const auto r = analysis::fractional_time_norm(t, lin, 1.0, 0.75);
    const double rel = std::abs(r.value - std::sqrt(3.0)) / std::sqrt(3.0);
    int flagged = 0;
    for (int n : {256, 512, 1024}) {
        std::vector<double> tt(static_cast<std::size_t>(n) + 1);
        std::vector<pde::CVector> jj(static_cast<std::size_t>(n) + 1);
        for (int k = 0; k <= n; ++k) {
            tt[static_cast<std::size_t>(k)] = static_cast<double>(k) / n;
            jj[static_cast<std::size_t>(k)] = pde::CVector::Constant(1, tt[static_cast<std::size_t>(k)] > 0.5 ? 1.0 : 0.0);
        }
        if (analysis::fractional_time_norm(tt, jj, 1.0, 0.75).divergent) ++flagged;
    }
    line(5, rel < kGagliardoRel && !r.divergent && flagged == 3,
         fmt("linear path %.6f vs sqrt(3) (rel %.2e < 1e-2); jump flagged at %g of 3 refinements", r.value, rel, flagged));
}

void criterion6() {
    pde::DiscretizationConfig c;
    c.L = 1.0;
    c.h = 1.0 / 16;
    c.mesh = pde::TimeMeshKind::Uniform;
    c.uniform_steps = 1;
    c.T_max = 0.5;
    const auto D = pde::build_discretization(c);
    const pde::DiscreteNorms nm(D);
    const double len = D.hi - D.lo;
    double worst = 0.0;
    for (auto [j, k] : {std::pair{1, 1}, std::pair{1, 2}, std::pair{2, 1}}) {
        pde::CVector phi(static_cast<Eigen::Index>(D.unknowns()));
        for (std::size_t i = 0; i < D.unknowns(); ++i) {
            const Vec x = D.node(i);
            phi[static_cast<Eigen::Index>(i)] = std::sin(j * kPi * (x[0] - D.lo) / len) * std::sin(k * kPi * (x[1] - D.lo) / len);
        }
        phi /= nm.l2(phi);
        // Five-point eigenvalue of the mode.
        const double lam = 4.0 / (D.h * D.h) *
                           (std::pow(std::sin(j * kPi * D.h / (2 * len)), 2) + std::pow(std::sin(k * kPi * D.h / (2 * len)), 2));
        const double got = analysis::slice_norm(phi, D, analysis::NormKind::Hminus1());
        worst = std::max(worst, std::abs(got - 1.0 / std::sqrt(1.0 + lam)));
    }
    line(6, worst < kHminus1Tol, fmt("worst |H^-1 norm - (1+lambda_k)^(-1/2)| over 3 modes = %.2e (< 1e-6)", worst));
}

void criterion7() {
    const auto r2 = dual_check(2, 0.2, 8, 0.5, 2.0, 7, 50);
    const auto r4 = dual_check(2, 0.2, 8, 0.5, 4.0, 1007, 50);
    const double rel = std::max(r2.worst_relative, r4.worst_relative);
    const int viol = r2.holder_violations + r4.holder_violations;
    line(7, rel < kDualityTol && viol == 0,
         fmt("worst relative pairing difference %.2e (< 1e-8); Hoelder violations %g in 50 (p=2) + 50 (p=4); worst ratio %.3f",
             rel, viol, std::max(r2.worst_holder_ratio, r4.worst_holder_ratio)));
}

void criterion8() {
    pde::DiscretizationConfig c;
    c.lo = -1.0;
    c.hi = 1.0;
    c.h = 1.0 / 8;
    c.mesh = pde::TimeMeshKind::Uniform;
    c.uniform_steps = 32;
    c.T_max = 0.9;
    const auto disc = std::make_shared<pde::Discretization>(pde::build_discretization(c));
    pde::RandomCoefficientOptions ro;
    ro.lambda = 0.5;
    ro.horizon = c.T_max;
    int violations = 0;
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const auto B = pde::random_coefficient(2, 500 + i, ro);
        const auto f = pde::random_forcing(2, 900 + i, 1.0);
        const auto u = pde::solve_forward(*B, *f, disc);
        const double ratio = analysis::maxreg_ratio(u, *f, 2.0, *disc).ratio;
        worst = std::max(worst, ratio);
        if (!(ratio <= 1.0 / ro.lambda)) ++violations;
    }
    line(8, violations == 0, fmt("largest p=2 ratio %.4f over 20 fields, bound 1/lambda = 2; %g violations", worst, violations));
}

void criterion9() {
    using R = Rational;
    bool ok = true;
    const auto a = admissible_mu(2, R(6), R(6));
    ok = ok && a && a->lo == R(2, 3) && a->hi == R(1);
    const auto p = sobolev_pairing(R(4), 3);
    ok = ok && p.r == R(4) && p.s == R(6);
    const auto ip = interpolation_parameters(R(1), R(2, 5), 2);
    ok = ok && ip.r == R(10) && ip.s == R(5);
    std::mt19937_64 rng(2024);
    auto uni = [&](long long lo, long long hi) { return std::uniform_int_distribution<long long>(lo, hi)(rng); };
    int bad = 0;
    for (int k = 0; k < 1000; ++k) {
        const int d = static_cast<int>(uni(2, 4));
        const auto rs = sobolev_pairing(R(2) + R(uni(1, 300), uni(1, 300)), d);
        if (!admissible_mu(d, rs.r, rs.s)) ++bad;
        const long long den = uni(2, 300);
        const R nu(den / 2 + 1 + uni(0, (den - 1) / 2), den);
        const R theta = R(1) / (2 * nu) * R(uni(1, 999), 1000);
        const auto q = interpolation_parameters(nu, theta, d);
        if (!q.admissible || !admissible_mu(d, q.r, q.s)) ++bad;
    }
    line(9, ok && bad == 0,
         std::string("worked values ") + (ok ? "exact" : "WRONG") +
             fmt("; composition failures %g of 2000 checks on 1000 random inputs", bad));
}

void criterion10() {
    auto c = parse_config("[profile]\nsource = synthesize\nmode = radial-ode\n[scenario]\nd = 2\nmu = 0.9\n");
    const auto r = run_scenario(c);
    const bool gate = r.validation && r.validation->validated;
    bool global = false;
    for (const auto& e : r.exponents) global = global || e.measured.has_value();
    if (!gate || !global) {
        line(10, true,
             std::string("not applicable: no profile regular on all of R^d passed the residual gate (radial-ode candidate ") +
                 (gate ? "passes only on its annulus" : "failed the gate") + "); asymptotic counterexample claims are not certified");
        return;
    }
    auto s = c;
    s.mode = ScenarioMode::Solve;
    s.truncations = {3, 4, 5, 6, 7, 8, 9, 10};
    s.p_list = {4.0};
    const auto rs = run_scenario(s);
    const bool ok = rs.comparison_error && *rs.comparison_error <= kCompareTol && rs.growth.count(4.0) && rs.growth.at(4.0) > 0.0;
    line(10, ok, fmt("comparison %.4f (<= 0.05), p=4 growth trend %.4f (> 0)", rs.comparison_error.value_or(NAN),
                     rs.growth.count(4.0) ? rs.growth.at(4.0) : NAN));
}

}  // namespace

int main() {
    const auto t0 = Clock::now();
    guarded(1, criterion1);
    guarded(2, criterion2);
    guarded(3, criterion3);
    guarded(4, criterion4);
    guarded(5, criterion5);
    guarded(6, criterion6);
    guarded(7, criterion7);
    guarded(8, criterion8);
    guarded(9, criterion9);
    guarded(10, criterion10);
    std::printf("acceptance: %d failed, %.1f s\n", failures, since(t0));
    return failures == 0 ? 0 : 1;
}
