#include <doctest.h>

#include "mrlab/harness.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

using namespace mrlab;
using namespace mrlab::harness;

namespace {

Rational Q(long long n, long long d = 1) { return {n, d}; }

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("mrlab_harness_" + name);
    std::filesystem::remove_all(p);
    return p;
}

const char* kDecayConfig = R"([profile]
source = decay-test
[mesh]
h = 1/128
T_max = 16383/16384
M = 8
[scenario]
d = 2
mu = 0.9
r = 10
s = 4
fit_window = 1e-4, 1e-1
[tolerances]
threads = 4
)";

const ExponentRow* row(const RunReport& r, const std::string& q) {
    for (const auto& e : r.exponents)
        if (e.quantity == q) return &e;
    return nullptr;
}

}  // namespace

TEST_CASE("parameter helpers reproduce the worked values exactly") {
    const auto a = admissible_mu(2, Q(6), Q(6));
    REQUIRE(a);
    CHECK(a->lo == Q(2, 3));
    CHECK(a->hi == Q(1));
    CHECK_FALSE(admissible_mu(2, Q(2), Q(2)));
    const auto b = admissible_mu(3, Q(4), Q(6));
    REQUIRE(b);
    CHECK(b->lo == Q(1));
    CHECK(b->hi == Q(3, 2));

    auto p1 = sobolev_pairing(Q(4), 3);
    CHECK((p1.r == Q(4) && p1.s == Q(6)));
    auto p2 = sobolev_pairing(Q(4), 2);
    CHECK((p2.r == Q(4) && p2.s == Q(5)));
    auto p3 = sobolev_pairing(Q(3), 4);
    CHECK((p3.r == Q(3) && p3.s == Q(4)));
    CHECK_THROWS_AS((void) sobolev_pairing(Q(2), 3), RangeError);

    auto i1 = interpolation_parameters(Q(1), Q(2, 5), 2);
    CHECK(i1.r == Q(10));
    CHECK(i1.s == Q(5));
    CHECK(i1.lhs == Q(3, 5));
    CHECK(i1.admissible);
    auto i2 = interpolation_parameters(Q(3, 4), Q(1, 2), 3);
    CHECK(i2.r == Q(8));
    CHECK(i2.s == Q(3));
    CHECK(i2.lhs == Q(5, 4));
    CHECK_THROWS_AS((void) interpolation_parameters(Q(3, 5), Q(1), 2), RangeError);
    CHECK(default_theta(Q(1)) == Q(2, 5));
}

TEST_CASE("pairing and interpolation outputs stay admissible on random inputs") {
    std::mt19937_64 rng(7);
    auto uni = [&](long long lo, long long hi) { return std::uniform_int_distribution<long long>(lo, hi)(rng); };
    for (int k = 0; k < 1000; ++k) {
        const int d = static_cast<int>(uni(2, 4));
        // p = 2 + a/b > 2
        const Rational p = Q(2) + Q(uni(1, 500), uni(1, 500));
        const auto rs = sobolev_pairing(p, d);
        CHECK(Q(2) / rs.r + Q(d) / rs.s < Q(d, 2));
        CHECK(admissible_mu(d, rs.r, rs.s).has_value());

        // ν ∈ (1/2, 1], θ ∈ (0, 1/(2ν))
        const long long den = uni(2, 400);
        const Rational nu = Q(den / 2 + 1 + uni(0, (den - 1) / 2), den);
        REQUIRE(nu > Q(1, 2));
        REQUIRE(nu <= Q(1));
        const Rational cap = Q(1) / (2 * nu);
        const Rational theta = cap * Q(uni(1, 999), 1000);
        const auto ip = interpolation_parameters(nu, theta, d);
        const Rational lhs = Q(2) / ip.r + Q(d) / ip.s;
        CHECK(lhs == ip.lhs);
        CHECK(lhs < Q(d, 2));
        CHECK(ip.admissible);
        CHECK(admissible_mu(d, ip.r, ip.s).has_value());
    }
}

TEST_CASE("rational literals") {
    CHECK(parse_rational("3") == Q(3));
    CHECK(parse_rational("-2/3") == Q(-2, 3));
    CHECK(parse_rational("0.75") == Q(3, 4));
    CHECK(parse_rational("1e-3") == Q(1, 1000));
    CHECK(parse_rational("2.5E1") == Q(25));
    CHECK(parse_rational(" 16383/16384 ") == Q(16383, 16384));
    for (const char* bad : {"", "abc", "1/0", "1e99", "1.2.3", "3x", "1/2/3"}) CHECK_THROWS_AS((void) parse_rational(bad), ConfigError);
    CHECK(to_string(Q(6, 4)) == "3/2");
    CHECK(to_string(Q(-4, 2)) == "-2");
}

TEST_CASE("config parsing derives parameters and rejects bad input") {
    const auto c = parse_config(R"([scenario]
d = 2
mu = 0.95
p = 4
mode = solve
truncations = 3..5, 8
p_list = 2, 4, 6
[mesh]
L = 3
h = 1/16
time_mesh = graded
T_max = 0.99
[tolerances]
comparison = 0.1
)");
    CHECK(c.params.r->value == Q(4));
    CHECK(c.params.s->value == Q(5));
    CHECK(c.params.s->origin == Origin::Derived);
    CHECK(c.params.p->origin == Origin::User);
    CHECK(c.norm_s == 5.0);
    CHECK(c.mode == ScenarioMode::Solve);
    CHECK(c.truncations == std::vector<int>{3, 4, 5, 8});
    CHECK(c.p_list.size() == 3);
    CHECK(c.mesh.h == 1.0 / 16);
    CHECK(c.comparison == 0.1);
    CHECK(c.mesh.resolution_guard);

    const auto n = parse_config("[scenario]\nd = 3\nmu = 1.2\nnu = 1\n");
    CHECK(n.params.theta->value == Q(2, 5));
    CHECK(n.params.theta->origin == Origin::Derived);
    CHECK(n.params.r->value == Q(10));
    CHECK(n.fractional_nu == 1.0);

    bool has_echo = false;
    for (const auto& [sec, key, val] : c.echo())
        if (sec == "tolerances" && key == "residual_gate") has_echo = !val.empty();
    CHECK(has_echo);

    for (const char* bad : {
             "[scenario]\nd = 2\n",                                    // missing mu
             "[scenario]\nd = 2\nmu = 0.9\nbogus = 1\n",              // unknown key
             "[scenario]\nd = 2\nmu = 0.9\n[extra]\nx = 1\n",         // unknown section
             "[scenario]\nd = 2\nmu = 0.9\nr = 2\ns = 2\n",           // 2/r + d/s ≥ μ
             "[scenario]\nd = 2\nmu = 0.9\nnu = 1\ninterp_theta = 0.6\n",
             "[scenario]\nd = 2\nmu = 0.9\n[profile]\nsource = nowhere\n",
             "[scenario]\nd = 2\nmu = 0.9\n[mesh]\ntime_mesh = fancy\n",
             "[scenario]\nd = 2\nmu = 0.9\n[mesh]\nlo = -1\n",
         }) {
        CHECK_THROWS_AS((void) parse_config(bad), ConfigError);
    }
}

TEST_CASE("a Gaussian test profile is reported but not validated") {
    auto c = parse_config("[profile]\nsource = gaussian-test\n[scenario]\nd = 2\nmu = 0.9\n[tolerances]\nthreads = 4\n");
    const auto r = run_scenario(c);
    CHECK(r.failed_stage.empty());
    REQUIRE(r.validation);
    CHECK_FALSE(r.validation->validated);
    CHECK(r.claims == "not validated");
    CHECK(exit_code(r) == 2);
    CHECK_FALSE(r.exponents.empty());
}

TEST_CASE("resolution guard refuses under-resolved meshes") {
    auto c = parse_config("[scenario]\nd = 2\nmu = 0.9\n[mesh]\nh = 1/16\nT_max = 0.999\n");
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = run_scenario(c);
    CHECK(r.failed_stage == "mesh");
    CHECK(r.error.find("resolution guard") != std::string::npos);
    CHECK(exit_code(r) == 1);
    CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 10.0);
    // Markers keep the report complete.
    CHECK(row(r, "u Ls(B1)") != nullptr);
}

TEST_CASE("decay-only profile: measured exponents match the scaling law") {
    const auto c = parse_config(kDecayConfig);
    const auto r = run_scenario(c);
    REQUIRE(r.failed_stage.empty());
    for (const char* q : {"u Ls(B1)", "grad u L2", "f L2"}) {
        const auto* e = row(r, q);
        REQUIRE(e);
        REQUIRE(e->measured);
        CHECK(std::abs(*e->measured - e->predicted) <= 0.05);
    }
    CHECK(row(r, "u Ls(B1)")->predicted == doctest::Approx(-0.2));
    CHECK(row(r, "grad u L2")->predicted == doctest::Approx(-0.45));
    // 2/10 + 2/4 < 0.9: outside the admissible region, so the mixed norm diverges.
    REQUIRE(r.memberships.size() == 2);
    CHECK(r.memberships[0].status == "divergent");
    CHECK(r.memberships[1].status != "not-run");
    for (const auto& g : r.gates) {
        if (g.name != "profile validated") CHECK_MESSAGE(g.passed, g.name << ": " << g.detail);
    }
    CHECK(exit_code(r) == 2);   // the decay-only family is not a profile
}

TEST_CASE("scaling w by a complex constant leaves exponents and verdicts unchanged") {
    auto a = parse_config(kDecayConfig);
    auto b = parse_config(kDecayConfig);
    b.scale = Complex(2.0, 1.0);
    const auto ra = run_scenario(a), rb = run_scenario(b);
    REQUIRE(ra.exponents.size() == rb.exponents.size());
    for (std::size_t k = 0; k < ra.exponents.size(); ++k) {
        REQUIRE(ra.exponents[k].measured);
        CHECK(*rb.exponents[k].measured == doctest::Approx(*ra.exponents[k].measured).epsilon(1e-9));
    }
    for (std::size_t k = 0; k < ra.memberships.size(); ++k) CHECK(ra.memberships[k].status == rb.memberships[k].status);
    const double c = std::sqrt(5.0);
    const auto& sa = ra.series.front().series.values;
    const auto& sb = rb.series.front().series.values;
    for (std::size_t k = 1; k < sa.size(); k += 17) CHECK(sb[k] == doctest::Approx(c * sa[k]).epsilon(1e-12));
}

TEST_CASE("reports are complete, deterministic and schema-stable") {
    auto c = parse_config("[scenario]\nd = 2\nmu = 0.9\ns = 4\nr = 6\n[tolerances]\nthreads = 3\n");
    const auto r = run_scenario(c);
    REQUIRE(r.failed_stage.empty());
    for (const char* q : {"u Ls(B1)", "grad u L2", "f L2"}) {
        const auto* e = row(r, q);
        REQUIRE(e);
        CHECK((e->measured.has_value() || e->status.rfind("not-run", 0) == 0));
    }
    REQUIRE(r.memberships.size() == 2);
    for (const auto& m : r.memberships) CHECK((m.value.has_value() || m.status == "divergent" || m.status == "not-run"));

    const auto d1 = scratch("det1"), d2 = scratch("det2");
    (void) emit_report(r, d1);
    (void) emit_report(run_scenario(c), d2);
    for (const char* f : {"report.json", "series.csv", "exponents.csv", "plot_0.svg"}) {
        CHECK_MESSAGE(slurp(d1 / f) == slurp(d2 / f), f);
    }
    const auto j = nlohmann::json::parse(slurp(d1 / "report.json"));
    CHECK(j["exponents"].size() == r.exponents.size());
    CHECK(j["params"]["s"]["provenance"] == "user");
    for (const auto& e : j["exponents"]) CHECK(e.contains("provenance"));
    std::istringstream csv(slurp(d1 / "exponents.csv"));
    std::string header, line;
    std::getline(csv, header);
    CHECK(header == "quantity,predicted,measured,stderr,window_lo,window_hi");
    int rows = 0;
    while (std::getline(csv, line)) {
        ++rows;
        CHECK(std::count(line.begin(), line.end(), ',') == 5);
    }
    CHECK(rows == static_cast<int>(r.exponents.size()));
    std::filesystem::remove_all(d1);
    std::filesystem::remove_all(d2);
}

TEST_CASE("empty report gives valid JSON with empty arrays and no plot") {
    RunReport r;
    r.command = "run";
    const auto dir = scratch("empty");
    const auto files = emit_report(r, dir);
    const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(j["series"].is_array());
    CHECK(j["series"].empty());
    CHECK(j["exponents"].empty());
    CHECK(j["maxreg"].empty());
    for (const auto& f : files) CHECK(f.extension() != ".svg");
    CHECK(slurp(dir / "series.csv") == "series,kind,t,one_minus_t,value,divergent\n");
    std::filesystem::remove_all(dir);
    CHECK(parse_formats("json, svg") == 5);
    CHECK_THROWS_AS((void) parse_formats("pdf"), ConfigError);
}

TEST_CASE("solve mode: numeric u tracks the analytic field and the dual identity holds") {
    auto c = parse_config(R"([scenario]
d = 2
mu = 0.9
mode = solve
s = 4
truncations = 3..6
[mesh]
h = 1/16
T_max = 63/64
M = 16
[tolerances]
threads = 4
)");
    const auto r = run_scenario(c);
    REQUIRE_MESSAGE(r.failed_stage.empty(), r.error);
    REQUIRE(r.comparison_error);
    CHECK(*r.comparison_error < 0.05);
    REQUIRE(r.duality);
    CHECK(r.duality->relative < 1e-8);
    CHECK(r.duality->holder_holds);
    REQUIRE(r.mesh);
    CHECK(r.mesh->steps == r.solution->levels.size() - 1);
    CHECK(r.growth.size() == 2);
    CHECK(r.maxreg.size() == 2 * 4);
    const auto dir = scratch("solve");
    (void) emit_report(r, dir);
    CHECK(std::filesystem::exists(dir / "solution.ckpt"));
    CHECK(std::filesystem::exists(dir / "maxreg.csv"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("sweep with an autonomous coefficient stays bounded") {
    auto c = parse_config(R"([profile]
coefficient = identity
[scenario]
d = 2
mu = 0.9
[mesh]
h = 1/16
T_max = 255/256
M = 4
[tolerances]
threads = 4
)");
    const auto r = sweep_p(c, {2.0, 3.0, 4.0}, {3, 4, 5, 6, 7, 8});
    REQUIRE_MESSAGE(r.failed_stage.empty(), r.error);
    REQUIRE(r.mesh);
    for (const auto& [p, g] : r.growth) CHECK_MESSAGE(g < 0.05, "p=" << p << " trend " << g);
    for (const auto& m : r.maxreg) {
        if (m.p == 2.0) CHECK(m.ratio <= 1.0 / r.mesh->min_coercivity);
    }
    CHECK(exit_code(r) == 0);
}

TEST_CASE("local-only profiles skip the global construction with markers") {
    auto c = parse_config("[profile]\nsource = synthesize\nmode = radial-ode\n[scenario]\nd = 2\nmu = 0.9\n");
    const auto r = run_scenario(c);
    CHECK(r.failed_stage.empty());
    REQUIRE(r.validation);
    for (const auto& e : r.exponents) CHECK(e.status.rfind("not-run", 0) == 0);
    REQUIRE(r.memberships.size() == 2);
    for (const auto& m : r.memberships) CHECK(m.status == "not-run");
    CHECK(r.profile_artifact.has_value());
}

TEST_CASE("manufactured solution and dual check drivers") {
    const auto m = mms_convergence({1.0 / 8, 1.0 / 16}, 0.5, 2);
    REQUIRE(m.levels.size() == 2);
    CHECK(m.spatial_order > 1.8);
    CHECK(m.temporal_order > 0.85);
    const auto d = dual_check(2, 0.25, 4, 0.5, 4.0, 11, 5);
    CHECK(d.instances == 5);
    CHECK(d.worst_relative < 1e-10);
    CHECK(d.holder_violations == 0);
    CHECK(d.worst_holder_ratio <= 1.0);
}
