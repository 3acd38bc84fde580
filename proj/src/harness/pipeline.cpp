#include "mrlab/construction.hpp"
#include "mrlab/harness.hpp"
#include "mrlab/samplers.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

namespace mrlab::harness {

namespace {

using Clock = std::chrono::steady_clock;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// Runs stages in order, timing each; the first exception stops the run.
class Stages {
public:
    explicit Stages(RunReport& r) : r_(r) {}

    template <class F>
    bool run(const std::string& name, F&& fn) {
        if (!r_.failed_stage.empty()) return false;
        const auto t0 = Clock::now();
        try {
            fn();
        } catch (const std::exception& e) {
            r_.failed_stage = name;
            r_.error = e.what();
        }
        r_.timing[name] += std::chrono::duration<double>(Clock::now() - t0).count();
        return r_.failed_stage.empty();
    }

private:
    RunReport& r_;
};

std::shared_ptr<const MatrixField> coefficient_field(const ScenarioConfig& c) {
    const int d = c.params.d;
    if (c.coefficient == "anisotropic") return profile::radial_anisotropic_coefficient(d, c.anisotropy);
    if (c.coefficient == "identity") return profile::constant_matrix_field(CMat::Identity(d, d));
    return profile::bump_scalar_coefficient(d);
}

profile::ValidationTolerances tolerances(const ScenarioConfig& c) {
    profile::ValidationTolerances tol;
    tol.fd_step = c.fd_step;
    tol.r0 = c.r0;
    tol.residual_gate = c.residual_gate;
    tol.threads = c.threads;
    return tol;
}

struct Context {
    profile::ProfilePair pair;
    std::shared_ptr<const pde::Discretization> disc;
    std::optional<construction::SolutionBundle> bundle;
    std::shared_ptr<const SpaceTimeField> forcing;   // the f handed to the solver
    std::string forcing_name;
    std::shared_ptr<pde::DiscreteField> u;
};

void build_profile(const ScenarioConfig& c, RunReport& rep, Context& ctx) {
    const int d = c.params.d;
    const double mu = to_double(c.params.mu->value);
    if (c.source == "decay-test") {
        auto base = profile::decay_test_profile(d, mu, c.scale);
        if (c.coefficient != "bump") {
            auto p = profile::custom_profile(d, mu, base.w, coefficient_field(c));
            p.label = base.label + " with " + c.coefficient + " coefficient";
            p.provenance = base.provenance;
            base = p;
        }
        ctx.pair = base;
    } else if (c.source == "gaussian-test") {
        ctx.pair = profile::gaussian_test_profile(d, mu);
        if (c.scale != Complex(1.0)) ctx.pair = profile::scaled(ctx.pair, c.scale);
    } else if (c.source == "file") {
        auto path = std::filesystem::path(c.file);
        if (path.is_relative()) path = c.base_dir / path;
        ctx.pair = profile::load_profile(path);
        if (ctx.pair.d != d) throw ConfigError("profile file has d = " + std::to_string(ctx.pair.d) + ", config has d = " + std::to_string(d));
        if (std::abs(ctx.pair.mu - mu) > 1e-12 * mu) throw ConfigError("profile file has mu = " + num(ctx.pair.mu) + ", config has mu = " + num(mu));
        if (c.scale != Complex(1.0)) ctx.pair = profile::scaled(ctx.pair, c.scale);
    } else {
        profile::SynthesisConfig sc;
        sc.alpha = c.alpha;
        sc.rho_inner = c.rho_inner;
        sc.rho_outer = c.rho_outer;
        sc.tolerances = tolerances(c);
        const auto mode = profile::synthesis_mode_from_string(c.synth_mode);
        if (mode == profile::SynthesisMode::AnnulusPde) sc.a = coefficient_field(c);
        auto [pair, report] = profile::synthesize_candidate(d, mu, mode, sc);
        ctx.pair = pair;
        rep.validation = report;
        rep.profile_artifact = profile::profile_file_of(pair);
        if (!rep.profile_artifact) {
            if (const auto* rw = dynamic_cast<const profile::RadialScalarField*>(pair.w.get())) {
                rep.profile_artifact = profile::sample_radial(pair, rw->table().rho);
            }
        }
    }
    profile::check_profile(ctx.pair);
}

void validate(const ScenarioConfig& c, RunReport& rep, Context& ctx) {
    if (!rep.validation) {
        const auto tol = tolerances(c);
        const auto samples = profile::default_sample_set(ctx.pair, tol);
        rep.validation = profile::validate_profile(ctx.pair, samples, tol);
    }
    const auto& v = *rep.validation;
    rep.claims = v.validated ? (ctx.pair.local_only ? "validated (local only)" : "validated") : "not validated";
    std::string detail = "residual_sup=" + num(v.residual_sup) + " gate=" + num(c.residual_gate * v.w_sup) +
                         (v.ellipticity_ok ? "" : " ellipticity failed") + (v.decay_ok ? "" : " decay failed");
    rep.gates.push_back({"profile validated", v.validated, detail});
}

// Analytic u sampled on a Cartesian point set of B_2, scaled for unit weight.
std::vector<pde::CVector> sampled_levels(const SpaceTimeField& u, const std::vector<double>& times, int d, int threads,
                                         double& weight) {
    const int n = std::max(8, static_cast<int>(std::floor(std::pow(40000.0, 1.0 / d))));
    const double h = 4.0 / n;
    std::vector<Vec> pts;
    std::size_t total = 1;
    for (int k = 0; k < d; ++k) total *= static_cast<std::size_t>(n);
    for (std::size_t i = 0; i < total; ++i) {
        Vec x(d);
        std::size_t idx = i;
        for (int k = d - 1; k >= 0; --k) {
            x[k] = -2.0 + h * (static_cast<double>(idx % n) + 0.5);
            idx /= n;
        }
        if (x.norm() < 2.0) pts.push_back(x);
    }
    std::vector<pde::CVector> levels(times.size(), pde::CVector(static_cast<Eigen::Index>(pts.size())));
    parallel_for(times.size(), threads, [&](std::size_t k) {
        for (std::size_t i = 0; i < pts.size(); ++i) levels[k][static_cast<Eigen::Index>(i)] = u.value(times[k], pts[i]);
    });
    weight = std::pow(h, d);
    return levels;
}

void add_fit(const ScenarioConfig& c, RunReport& rep, SeriesEntry e, const std::string& quantity, double predicted,
             const std::string& validity, bool gated) {
    const auto window = c.fit_window.value_or(analysis::default_fit_window(c.mesh.h, c.mesh.T_max));
    ExponentRow row;
    row.quantity = quantity;
    row.predicted = predicted;
    row.window_lo = window.lo;
    row.window_hi = window.hi;
    row.provenance = e.provenance + " -> analysis.fit_exponent; predicted by analysis.predicted_exponents";
    e.predicted = predicted;
    try {
        const auto fit = analysis::fit_exponent(e.series, window);
        e.fit = fit;
        row.measured = fit.beta;
        row.stderr_beta = fit.stderr_beta;
        row.status = validity.empty() ? "fit" : "fit; " + validity;
    } catch (const Error& err) {
        row.status = std::string("not fitted: ") + err.what();
    }
    if (gated && validity.empty()) {
        const bool ok = row.measured && std::abs(*row.measured - predicted) <= c.exponent;
        rep.gates.push_back({"exponent " + quantity, ok,
                             row.measured ? "measured " + num(*row.measured) + " vs predicted " + num(predicted) +
                                                " (tolerance " + num(c.exponent) + ")"
                                          : row.status});
    }
    rep.exponents.push_back(row);
    rep.series.push_back(std::move(e));
}

void not_run_markers(RunReport& rep, const std::string& why) {
    for (const char* q : {"u Ls(B1)", "grad u L2", "f L2"}) {
        ExponentRow row;
        row.quantity = q;
        row.status = "not-run: " + why;
        row.provenance = "harness.run_scenario";
        rep.exponents.push_back(row);
    }
    rep.memberships.push_back({"u in L^r(0,1;L^s(B_1))", "not-run", std::nullopt, "harness.run_scenario", why});
    rep.memberships.push_back({"u in H^nu(0,1;L^2)", "not-run", std::nullopt, "harness.run_scenario", why});
}

void analysis_stage(const ScenarioConfig& c, RunReport& rep, Context& ctx) {
    const auto& b = *ctx.bundle;
    const int d = c.params.d;
    const double mu = ctx.pair.mu;
    const auto& times = ctx.disc->times;
    analysis::QuadratureOptions q;
    q.threads = c.threads;
    q.angular = c.quadrature_angular;
    const auto pred = analysis::predicted_exponents(d, mu, c.norm_s);
    const std::string src = "analysis.norm_series(quadrature) of construction.build_bundle";

    auto entry = [&](const SpaceTimeField& f, const analysis::NormKind& k, const std::string& label) {
        SeriesEntry e;
        e.series = analysis::norm_series(f, times, k, q);
        e.series.label = label;
        e.provenance = src + "." + label.substr(0, label.find(' '));
        return e;
    };
    const std::string ls_validity = mu * c.norm_s > d ? "" : "prediction requires mu*s > d";
    add_fit(c, rep, entry(*b.u, analysis::NormKind::Ls(c.norm_s, 1.0), "u Ls(B1)"), "u Ls(B1)", pred.u_Ls,
            ls_validity, true);
    add_fit(c, rep, entry(*b.u, analysis::NormKind::GradL2(), "u GradL2"), "grad u L2", pred.grad_u_L2, "", true);
    add_fit(c, rep, entry(*b.u, analysis::NormKind::L2ball(2.0), "u L2"), "u L2", pred.u_L2,
            "upper-bound exponent; the norm itself stays bounded", false);
    add_fit(c, rep, entry(*b.u, analysis::NormKind::H1(), "u H1"), "u H1", pred.grad_u_L2, "", false);
    add_fit(c, rep, entry(*b.f, analysis::NormKind::L2ball(2.0), "f L2"), "f L2", 0.0, "", true);
    {
        const auto& fs = rep.series.back().series;
        bool finite = !fs.values.empty();
        double mx = 0.0;
        for (double v : fs.values) {
            finite = finite && std::isfinite(v);
            mx = std::max(mx, v);
        }
        rep.extras.emplace_back("f_L2_max", mx);
        rep.gates.push_back({"f L2 finite on the mesh", finite, "max " + num(mx)});
    }

    // L^r(0, 1; L^s(B_1)) membership.
    Membership m{"u in L^r(0,1;L^s(B_1))", "not-run", std::nullopt, "analysis.bochner_norm of the u Ls(B1) series", ""};
    if (c.params.r && c.params.s) {
        const double r = to_double(c.params.r->value), s = to_double(c.params.s->value);
        m.name = "u in L^" + num(r) + "(0,1;L^" + num(s) + "(B_1))";
        analysis::NormSeries ser;
        for (const auto& e : rep.series)
            if (e.series.label == "u Ls(B1)") ser = e.series;
        if (std::abs(s - c.norm_s) > 1e-15 * s) {
            ser = analysis::norm_series(*b.u, times, analysis::NormKind::Ls(s, 1.0), q);
            m.provenance = "analysis.bochner_norm of analysis.norm_series(quadrature, Ls(" + num(s) + "))";
        }
        const auto br = analysis::bochner_norm(ser, r);
        m.status = br.divergent ? "divergent" : br.converged ? "convergent" : "inconclusive";
        if (!br.divergent) m.value = br.value;
        m.notes = br.notes + (br.notes.empty() ? "" : "; ") + "last block fraction " + num(br.last_block_fraction);
        const bool below = 2.0 / r + d / s < mu;
        rep.extras.emplace_back("bochner_last_block_fraction", br.last_block_fraction);
        if (mu * s > d && m.status != "inconclusive") {
            rep.gates.push_back({"L^r(L^s) verdict matches 2/r + d/s < mu", br.divergent == below,
                                 std::string("2/r + d/s ") + (below ? "<" : ">=") + " mu, verdict " + m.status});
        }
    } else {
        m.notes = "r and s not configured or derivable";
    }
    rep.memberships.push_back(m);

    // H^ν(0, T_max; L²) membership.
    Membership h{"u in H^" + num(c.fractional_nu) + "(0,T;L^2)", "not-run", std::nullopt, "", ""};
    analysis::FractionalNormResult fr;
    if (ctx.u) {
        fr = analysis::fractional_time_norm(*ctx.u, c.fractional_nu, c.threads);
        h.provenance = "analysis.fractional_time_norm of the numeric solution";
    } else {
        double w = 0.0;
        const auto levels = sampled_levels(*b.u, times, d, c.threads, w);
        fr = analysis::fractional_time_norm(times, levels, w, c.fractional_nu, c.threads);
        h.provenance = "analysis.fractional_time_norm of the analytic u on a Cartesian sample of B_2";
    }
    h.status = fr.divergent ? "divergent" : "convergent";
    if (!fr.divergent) h.value = fr.value;
    h.notes = fr.notes;
    rep.memberships.push_back(h);
}

double l2_relative_error(const pde::DiscreteField& u, const SpaceTimeField& exact, const pde::Discretization& disc,
                         double until, int threads) {
    double num2 = 0.0, den2 = 0.0;
    for (std::size_t k = 0; k + 1 < disc.times.size(); ++k) {
        const double t = disc.times[k + 1];
        if (t > until * (1 + 1e-14)) break;
        const double dt = t - disc.times[k];
        const auto ex = pde::nodal_values(disc, exact, t, threads);
        num2 += dt * (u.levels[k + 1] - ex).squaredNorm();
        den2 += dt * ex.squaredNorm();
    }
    if (!(den2 > 0.0)) throw RangeError("comparison window contains no nonzero analytic levels");
    return std::sqrt(num2 / den2);
}

std::vector<double> truncation_times(const std::vector<int>& js, double T_max) {
    std::vector<double> out;
    for (int j : js) {
        const double T = 1.0 - std::ldexp(1.0, -j);
        if (T <= T_max * (1 + 1e-14)) out.push_back(T);
    }
    return out;
}

void solve_stage(const ScenarioConfig& c, RunReport& rep, Context& ctx) {
    const auto& b = *ctx.bundle;
    const bool validated = rep.validation && rep.validation->validated;
    // An exact profile makes the three-term forcing exact; otherwise use the closed-form ∂_t u − div(B∇u).
    if (validated) {
        ctx.forcing = b.f;
        ctx.forcing_name = "construction.ForcingField";
    } else {
        ctx.forcing = b.f_exact;
        ctx.forcing_name = "construction.ExactForcingField";
    }
    pde::SolverOptions opt;
    opt.threads = c.threads;
    ctx.u = std::make_shared<pde::DiscreteField>(pde::solve_forward(*b.coefficients, *ctx.forcing, ctx.disc, opt));
    rep.solution = ctx.u;
    MeshStats ms;
    ms.unknowns = ctx.disc->unknowns();
    ms.steps = ctx.disc->steps();
    ms.factorizations = ctx.u->stats.factorizations;
    ms.h = ctx.disc->h;
    ms.T_max = ctx.disc->times.back();
    ms.max_residual = ctx.u->stats.max_residual;
    ms.min_coercivity = ctx.u->stats.min_coercivity;
    rep.mesh = ms;
}

void compare_stage(const ScenarioConfig& c, RunReport& rep, Context& ctx) {
    const double err = l2_relative_error(*ctx.u, *ctx.bundle->u, *ctx.disc, c.compare_until, c.threads);
    rep.comparison_error = err;
    const bool validated = rep.validation && rep.validation->validated;
    if (validated) {
        rep.gates.push_back({"numeric u matches analytic u on [0, " + num(c.compare_until) + "]", err <= c.comparison,
                             "relative L2 error " + num(err) + " (tolerance " + num(c.comparison) + ")"});
    }
}

void maxreg_stage(const ScenarioConfig& c, RunReport& rep, Context& ctx, const std::vector<double>& ps,
                  const std::vector<int>& js, bool gate_growth) {
    const auto Ts = truncation_times(js, ctx.disc->times.back());
    if (Ts.empty()) throw RangeError("no truncation T_j = 1 - 2^-j lies inside [0, T_max]");
    rep.maxreg = analysis::maxreg_ratios(*ctx.u, *ctx.forcing, ps, Ts, *ctx.disc, c.threads);
    if (Ts.size() >= 2) {
        for (std::size_t i = 0; i < ps.size(); ++i) {
            const std::vector<analysis::MaxRegReport> col(rep.maxreg.begin() + static_cast<long>(i * Ts.size()),
                                                          rep.maxreg.begin() + static_cast<long>((i + 1) * Ts.size()));
            rep.growth[ps[i]] = analysis::growth_trend(col);
        }
    }
    const double lambda = ctx.u->stats.min_coercivity;
    double worst = 0.0;
    bool any = false;
    for (const auto& m : rep.maxreg) {
        if (m.p != 2.0) continue;
        worst = std::max(worst, m.ratio);
        any = true;
    }
    if (any) {
        rep.gates.push_back({"p=2 ratios <= 1/lambda", worst <= 1.0 / lambda,
                             "largest ratio " + num(worst) + ", 1/lambda " + num(1.0 / lambda)});
    }
    if (gate_growth && rep.validation && rep.validation->validated && rep.growth.count(4.0)) {
        const double g = rep.growth.at(4.0);
        rep.gates.push_back({"p=4 growth trend positive", g > 0.0, "trend " + num(g)});
    }
}

void duality_stage(const ScenarioConfig& c, RunReport& rep, Context& ctx) {
    const double L = (ctx.disc->hi - ctx.disc->lo) / 2.0;
    const auto g = pde::random_forcing(c.params.d, c.seed, L);
    pde::SolverOptions opt;
    opt.threads = c.threads;
    const auto v = pde::solve_dual(*ctx.bundle->coefficients, *g, ctx.disc, opt);
    const double p = c.params.p ? to_double(c.params.p->value) : 2.0;
    rep.duality = analysis::duality_check(*ctx.u, *ctx.forcing, v, *g, *ctx.disc, p);
    rep.gates.push_back({"duality identity", rep.duality->relative < 1e-8, "relative " + num(rep.duality->relative)});
    rep.gates.push_back({"Hoelder bound", rep.duality->holder_holds,
                         "|pairing| " + num(std::abs(rep.duality->forward_pairing)) + " <= " + num(rep.duality->holder_bound)});
}

void numeric_series(const ScenarioConfig& c, RunReport& rep, Context& ctx) {
    const std::string src = "pde.solve_forward -> analysis.norm_series(discrete)";
    for (auto [kind, label] : {std::pair{analysis::NormKind::Ls(c.norm_s, 1.0), "numeric u Ls(B1)"},
                               std::pair{analysis::NormKind::GradL2(), "numeric u GradL2"},
                               std::pair{analysis::NormKind::L2ball(2.0), "numeric u L2"}}) {
        SeriesEntry e;
        e.series = analysis::norm_series(*ctx.u, kind, c.threads);
        e.series.label = label;
        e.provenance = src;
        try {
            e.fit = analysis::fit_exponent(e.series, c.fit_window.value_or(analysis::default_fit_window(c.mesh.h, c.mesh.T_max)));
        } catch (const Error&) {
        }
        rep.series.push_back(std::move(e));
    }
}

RunReport start(const ScenarioConfig& c, const std::string& command) {
    RunReport rep;
    rep.command = command;
    rep.config = c.echo();
    rep.params = c.params;
    return rep;
}

}  // namespace

bool RunReport::gates_passed() const {
    if (!failed_stage.empty()) return false;
    for (const auto& g : gates)
        if (!g.passed) return false;
    return true;
}

RunReport run_scenario(const ScenarioConfig& c) {
    RunReport rep = start(c, "run");
    Context ctx;
    Stages st(rep);
    st.run("profile", [&] { build_profile(c, rep, ctx); });
    st.run("validate", [&] { validate(c, rep, ctx); });
    st.run("mesh", [&] {
        auto mc = c.mesh;
        mc.resolution_guard = true;
        ctx.disc = std::make_shared<pde::Discretization>(pde::build_discretization(mc));
    });
    if (!rep.failed_stage.empty()) {
        not_run_markers(rep, "stage '" + rep.failed_stage + "' failed");
        return rep;
    }
    if (ctx.pair.local_only) {
        not_run_markers(rep, "profile is only valid on an annulus; the global construction needs a regular profile");
        return rep;
    }
    st.run("bundle", [&] { ctx.bundle = construction::build_bundle(ctx.pair); });
    if (c.mode == ScenarioMode::Solve) {
        st.run("solve", [&] { solve_stage(c, rep, ctx); });
        st.run("compare", [&] { compare_stage(c, rep, ctx); });
    }
    st.run("analysis", [&] { analysis_stage(c, rep, ctx); });
    if (c.mode == ScenarioMode::Solve) {
        st.run("numeric-series", [&] { numeric_series(c, rep, ctx); });
        st.run("maxreg", [&] { maxreg_stage(c, rep, ctx, c.p_list, c.truncations, true); });
        if (c.dual) st.run("duality", [&] { duality_stage(c, rep, ctx); });
    }
    if (!rep.failed_stage.empty() && rep.exponents.empty()) not_run_markers(rep, "stage '" + rep.failed_stage + "' failed");
    return rep;
}

RunReport sweep_p(const ScenarioConfig& c, const std::vector<double>& ps, const std::vector<int>& truncations) {
    RunReport rep = start(c, "sweep-p");
    Context ctx;
    Stages st(rep);
    st.run("profile", [&] { build_profile(c, rep, ctx); });
    st.run("validate", [&] { validate(c, rep, ctx); });
    st.run("mesh", [&] {
        auto mc = c.mesh;
        mc.resolution_guard = true;
        ctx.disc = std::make_shared<pde::Discretization>(pde::build_discretization(mc));
    });
    if (!rep.failed_stage.empty()) return rep;
    if (ctx.pair.local_only) {
        rep.failed_stage = "bundle";
        rep.error = "profile is only valid on an annulus; no global forward problem to sweep";
        return rep;
    }
    st.run("bundle", [&] { ctx.bundle = construction::build_bundle(ctx.pair); });
    st.run("solve", [&] { solve_stage(c, rep, ctx); });
    st.run("maxreg", [&] { maxreg_stage(c, rep, ctx, ps, truncations, true); });
    // The gate on profile validity says nothing about the sweep itself.
    std::erase_if(rep.gates, [](const Gate& g) { return g.name == "profile validated"; });
    return rep;
}

// ---------------------------------------------------------------------------

MmsResult mms_convergence(const std::vector<double>& hs, double T, int threads) {
    if (hs.size() < 2) throw RangeError("mms convergence needs at least two grid sizes");
    constexpr double pi = std::numbers::pi;
    const auto t0 = Clock::now();
    auto shape = [](const Vec& x) {
        double s = 1.0;
        for (Eigen::Index k = 0; k < x.size(); ++k) s *= std::sin(pi * x[k]);
        return s;
    };
    const int d = 2;
    const auto exact = std::make_shared<LambdaSpaceTimeField>(d, [&](double t, const Vec& x) { return Complex(t * shape(x)); });
    const auto f = std::make_shared<LambdaSpaceTimeField>(
        d, [&](double t, const Vec& x) { return Complex(shape(x) * (1.0 + d * pi * pi * t)); });
    const auto B = constant_identity(d);
    MmsResult out;
    for (double h : hs) {
        pde::DiscretizationConfig mc;
        mc.d = d;
        mc.lo = 0.0;
        mc.hi = 1.0;
        mc.h = h;
        mc.mesh = pde::TimeMeshKind::Uniform;
        mc.T_max = T;
        mc.uniform_steps = static_cast<int>(std::lround(T / (h * h)));
        pde::SolverOptions opt;
        opt.threads = threads;
        opt.store_levels = false;
        opt.store_loads = false;
        mc.theta = 0.5;
        auto cn_disc = std::make_shared<pde::Discretization>(pde::build_discretization(mc));
        mc.theta = 1.0;
        auto ie_disc = std::make_shared<pde::Discretization>(pde::build_discretization(mc));
        pde::CVector cn, ie;
        opt.observer = [&](std::size_t k, double, const pde::CVector& u) {
            if (k == cn_disc->steps()) cn = u;
        };
        (void) pde::solve_forward(*B, *f, cn_disc, opt);
        opt.observer = [&](std::size_t k, double, const pde::CVector& u) {
            if (k == ie_disc->steps()) ie = u;
        };
        (void) pde::solve_forward(*B, *f, ie_disc, opt);
        const auto ex = pde::nodal_values(*cn_disc, *exact, T, threads);
        const double vol = cn_disc->cell_volume();
        MmsLevel lv;
        lv.h = cn_disc->h;
        lv.dt = T / static_cast<double>(cn_disc->steps());
        lv.space_error = std::sqrt(vol) * (cn - ex).norm();
        lv.time_error = std::sqrt(vol) * (ie - cn).norm();
        out.levels.push_back(lv);
    }
    out.spatial_order = out.temporal_order = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < out.levels.size(); ++i) {
        const auto& a = out.levels[i - 1];
        const auto& b = out.levels[i];
        out.spatial_order = std::min(out.spatial_order, std::log(a.space_error / b.space_error) / std::log(a.h / b.h));
        out.temporal_order = std::min(out.temporal_order, std::log(a.time_error / b.time_error) / std::log(a.dt / b.dt));
    }
    out.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return out;
}

RunReport mms_report(const ScenarioConfig& c) {
    RunReport rep = start(c, "mms-convergence");
    rep.claims = "not applicable";
    Stages st(rep);
    st.run("mms", [&] {
        const auto r = mms_convergence({1.0 / 16, 1.0 / 32, 1.0 / 64}, 0.5, c.threads);
        for (std::size_t i = 0; i < r.levels.size(); ++i) {
            const auto& l = r.levels[i];
            const std::string k = std::to_string(i);
            rep.extras.emplace_back("level" + k + ".h", l.h);
            rep.extras.emplace_back("level" + k + ".dt", l.dt);
            rep.extras.emplace_back("level" + k + ".space_error", l.space_error);
            rep.extras.emplace_back("level" + k + ".time_error", l.time_error);
        }
        rep.extras.emplace_back("spatial_order", r.spatial_order);
        rep.extras.emplace_back("temporal_order", r.temporal_order);
        rep.gates.push_back({"spatial order >= 1.9", r.spatial_order >= 1.9, num(r.spatial_order)});
        rep.gates.push_back({"temporal order >= 0.9", r.temporal_order >= 0.9, num(r.temporal_order)});
    });
    return rep;
}

DualCheckResult dual_check(int d, double h, int steps, double T, double p, std::uint64_t seed, int instances) {
    if (instances < 1) throw RangeError("dual check needs at least one instance");
    pde::DiscretizationConfig mc;
    mc.d = d;
    mc.lo = -1.0;
    mc.hi = 1.0;
    mc.h = h;
    mc.mesh = pde::TimeMeshKind::Uniform;
    mc.T_max = T;
    mc.uniform_steps = steps;
    const auto disc = std::make_shared<pde::Discretization>(pde::build_discretization(mc));
    DualCheckResult out;
    out.instances = instances;
    pde::RandomCoefficientOptions ro;
    ro.horizon = T;
    for (int i = 0; i < instances; ++i) {
        const std::uint64_t s = seed + 3 * static_cast<std::uint64_t>(i);
        const auto B = pde::random_coefficient(d, s, ro);
        const auto f = pde::random_forcing(d, s + 1, 1.0);
        const auto g = pde::random_forcing(d, s + 2, 1.0);
        const auto u = pde::solve_forward(*B, *f, disc);
        const auto v = pde::solve_dual(*B, *g, disc);
        const auto rep = analysis::duality_check(u, *f, v, *g, *disc, p);
        if (i == 0) out.dense = rep;
        out.worst_relative = std::max(out.worst_relative, rep.relative);
        out.worst_holder_ratio = std::max(out.worst_holder_ratio, std::abs(rep.forward_pairing) / rep.holder_bound);
        if (!rep.holder_holds) ++out.holder_violations;
    }
    return out;
}

RunReport dual_check_report(const ScenarioConfig& c) {
    RunReport rep = start(c, "dual-check");
    rep.claims = "not applicable";
    Stages st(rep);
    st.run("dual-check", [&] {
        for (double p : c.p_list) {
            const auto r = dual_check(c.params.d, 0.2, 8, 0.5, p, c.seed, 50);
            if (!rep.duality) rep.duality = r.dense;
            const std::string k = "p=" + num(p);
            rep.extras.emplace_back(k + ".worst_relative", r.worst_relative);
            rep.extras.emplace_back(k + ".worst_holder_ratio", r.worst_holder_ratio);
            rep.extras.emplace_back(k + ".holder_violations", r.holder_violations);
            rep.gates.push_back({"duality identity " + k, r.worst_relative < 1e-8, "worst relative " + num(r.worst_relative)});
            rep.gates.push_back({"Hoelder bound " + k, r.holder_violations == 0,
                                 std::to_string(r.holder_violations) + " violations in " + std::to_string(r.instances)});
        }
    });
    return rep;
}

}  // namespace mrlab::harness
