#include <doctest.h>

#include "mrlab/profile.hpp"
#include "mrlab/profile_io.hpp"
#include "mrlab/samplers.hpp"

#include <boost/numeric/odeint.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

using namespace mrlab;
using namespace mrlab::profile;

namespace {

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

// Gaussian residual from the closed form: R = (|y|²/2 − d/2 − (μ+i)/2)·exp(−|y|²/4).
Complex gaussian_residual(int d, double mu, const Vec& y) {
    const double r2 = y.squaredNorm();
    return (0.5 * r2 - 0.5 * d - 0.5 * Complex(mu, 1.0)) * std::exp(-0.25 * r2);
}

}  // namespace

TEST_CASE("gaussian residual approaches the closed form near the origin") {
    const auto p = gaussian_test_profile(2, 0.9);
    const double expected = std::sqrt(1.45 * 1.45 + 0.25);
    CHECK(expected == doctest::Approx(1.5338).epsilon(1e-4));
    for (double r : {1e-2, 1e-3}) {
        const Vec y = vec2(r, 0.0);
        const Complex fd = profile_residual(p, y, DerivativeMode::FiniteDifference, 1e-3);
        CHECK(std::abs(fd - gaussian_residual(2, 0.9, y)) < 1e-5);
        CHECK(std::abs(fd) == doctest::Approx(expected).epsilon(1e-3));
    }
    ValidationTolerances tol;
    const auto samples = shell_samples(2, 1e-3, 6.0, 24, 12);
    const auto rep = validate_profile(p, samples, tol);
    CHECK(rep.residual_sup == doctest::Approx(expected).epsilon(1e-3));
    CHECK_FALSE(rep.validated);
    CHECK_FALSE(rep.degenerate);
}

TEST_CASE("zero profile is degenerate") {
    const auto p = zero_test_profile(2, 0.9);
    const auto samples = shell_samples(2, 1e-3, 4.0, 8, 8);
    const auto rep = validate_profile(p, samples, {});
    CHECK(rep.residual_sup == 0.0);
    CHECK(rep.degenerate);
    CHECK_FALSE(rep.validated);
}

TEST_CASE("indefinite coefficient fails ellipticity with witness e2") {
    CMat a = CMat::Zero(2, 2);
    a(0, 0) = 1.0;
    a(1, 1) = -1.0;
    auto p = gaussian_test_profile(2, 0.9);
    p.a = constant_matrix_field(a);
    const auto samples = shell_samples(2, 0.5, 2.0, 4, 4);
    const auto rep = validate_profile(p, samples, {});
    CHECK_FALSE(rep.ellipticity_ok);
    CHECK(rep.ellipticity.coercivity == doctest::Approx(-1.0));
    CHECK(std::abs(rep.ellipticity.xi[1]) == doctest::Approx(1.0));
    CHECK(std::abs(rep.ellipticity.xi[0]) < 1e-12);
}

TEST_CASE("samples inside the excluded ball are rejected") {
    const auto p = gaussian_test_profile(2, 0.9);
    std::vector<Vec> s{vec2(0.0, 0.0)};
    CHECK_THROWS_AS((void) validate_profile(p, s, {}), RangeError);
    std::vector<Vec> s2{vec2(1e-4, 0.0)};
    CHECK_THROWS_AS((void) validate_profile(p, s2, {}), RangeError);
}

TEST_CASE("mu outside (0, d/2) is rejected") {
    CHECK_THROWS_AS((void) gaussian_test_profile(2, 1.0), RangeError);
    CHECK_THROWS_AS((void) gaussian_test_profile(2, 0.0), RangeError);
    SynthesisConfig c;
    CHECK_THROWS_AS((void) synthesize_candidate(2, 1.0, SynthesisMode::RadialOde, c), RangeError);
    CHECK_THROWS_AS((void) synthesize_candidate(3, 1.5, SynthesisMode::RadialOde, c), RangeError);
}

TEST_CASE("validator soundness: analytic and difference residuals agree to O(h^2)") {
    const auto p = gaussian_test_profile(2, 0.9);
    const auto samples = shell_samples(2, 0.05, 5.0, 16, 8);
    double diff[2];
    int k = 0;
    for (double h : {1e-2, 1e-3}) {
        ValidationTolerances ta, tf;
        ta.fd_step = tf.fd_step = h;
        tf.mode = DerivativeMode::FiniteDifference;
        diff[k++] = std::abs(validate_profile(p, samples, ta).residual_sup -
                             validate_profile(p, samples, tf).residual_sup);
    }
    CHECK(diff[0] > 0.0);
    CHECK(diff[1] < diff[0] / 50.0);
    CHECK(diff[1] < 1e-6);
}

TEST_CASE("residual scales linearly under w -> c w") {
    const auto p = decay_test_profile(2, 0.9);
    const auto samples = default_sample_set(p, {});
    const double base = validate_profile(p, samples, {}).residual_sup;
    for (Complex c : {Complex(2.0, -1.0), Complex(0.0, 0.25), Complex(-3.0, 0.0)}) {
        const auto q = scaled(p, c);
        const double r = validate_profile(q, samples, {}).residual_sup;
        CHECK(r == doctest::Approx(std::abs(c) * base).epsilon(1e-12));
    }
    CHECK_THROWS_AS((void) scaled(p, 0.0), RangeError);
}

TEST_CASE("decay checker agrees with a brute-force scan") {
    for (double c0 : {0.5, 1.0, 1.2}) {
        auto p = decay_test_profile(2, 0.9);
        p.decay.C[0] = c0;
        const auto samples = shell_samples(2, 1e-3, 40.0, 40, 12);
        const auto rep = validate_profile(p, samples, {});
        bool ok = true;
        for (const auto& y : samples) {
            const double r = y.norm();
            const Complex w = p.w->value(y);
            ok = ok && std::abs(w) <= p.decay.C[0] * (1.0 + 1e-9);
            if (r >= 1.0) {
                ok = ok && std::abs(w) * std::pow(r, 0.9) <= p.decay.C[0] * (1.0 + 1e-9);
                ok = ok && p.w->gradient(y).norm() * std::pow(r, 1.9) <= p.decay.C[1] * (1.0 + 1e-9);
                const auto da = p.a->derivative(y);
                ok = ok && std::sqrt(da[0].squaredNorm() + da[1].squaredNorm()) * r <= p.decay.C[1] * (1.0 + 1e-9);
            }
        }
        CHECK(rep.decay_ok == ok);
    }
    auto p = decay_test_profile(2, 0.9);
    p.decay.C[1] = 0.0;
    CHECK_FALSE(validate_profile(p, shell_samples(2, 1.0, 4.0, 4, 4), {}).decay_ok);
}

TEST_CASE("C_dw is finite and matches its definition on a Lipschitz profile") {
    const auto p = decay_test_profile(2, 0.9);
    const auto samples = shell_samples(2, 1e-3, 8.0, 32, 16);
    const auto rep = validate_profile(p, samples, {});
    // sup over B_1 of |w| + |∇w| for (1+r²)^{-μ/2}: attained near r = 1/sqrt(1+μ).
    double sup = 0.0;
    for (const auto& y : samples) {
        const double r = y.norm();
        if (r > 1.0) continue;
        const double q = 1.0 + r * r;
        sup = std::max(sup, std::pow(q, -0.45) + 0.9 * r * std::pow(q, -1.45));
    }
    CHECK(std::isfinite(rep.C_dw));
    CHECK(rep.C_dw == doctest::Approx(std::sqrt(std::numbers::pi) * sup).epsilon(1e-9));
    CHECK(rep.lipschitz_estimate < 1e-2);
}

TEST_CASE("radial-ode candidate matches an adaptive ODE oracle") {
    SynthesisConfig c;
    auto [p, rep] = synthesize_candidate(2, 0.9, SynthesisMode::RadialOde, c);
    CHECK(p.local_only);
    CHECK(p.provenance == Provenance::Synthesized);
    REQUIRE(p.support.has_value());
    CHECK(rep.residual_sup < 1e-6);

    using State = std::array<double, 4>;
    auto sys = [](const State& x, State& dx, double rho) {
        const Complex W(x[0], x[1]), dW(x[2], x[3]);
        const Complex d2W = (rho / 2.0 - 1.0 / rho) * dW + Complex(0.9, 1.0) / 2.0 * W;
        dx = {dW.real(), dW.imag(), d2W.real(), d2W.imag()};
    };
    const Complex W8 = std::pow(Complex(8.0, 0.0), -Complex(0.9, 1.0));
    const Complex dW8 = -Complex(0.9, 1.0) * W8 / 8.0;
    namespace ode = boost::numeric::odeint;
    for (double target : {6.0, 3.0, 1.0}) {
        State x{W8.real(), W8.imag(), dW8.real(), dW8.imag()};
        ode::integrate_adaptive(ode::make_controlled<ode::runge_kutta_dopri5<State>>(1e-13, 1e-13), sys, x, 8.0,
                                target, -1e-3);
        Vec y = vec2(target, 0.0);
        const Complex w = p.w->value(y);
        CHECK(std::abs(w - Complex(x[0], x[1])) < 1e-9 * std::max(1.0, std::abs(w)));
    }
}

TEST_CASE("annulus-pde reproduces a radial solution to second order") {
    SynthesisConfig ro;
    ro.rho_inner = 0.5;
    ro.rho_outer = 5.0;
    const auto ref = synthesize_candidate(2, 0.9, SynthesisMode::RadialOde, ro).first;
    double err[2];
    int k = 0;
    for (double h : {1.0 / 8.0, 1.0 / 16.0}) {
        SynthesisConfig c;
        c.rho_inner = 1.0;
        c.rho_outer = 4.0;
        c.grid_h = h;
        c.a = constant_matrix_field(CMat::Identity(2, 2));
        c.boundary = [&](const Vec& y) {
            const double r = std::clamp(y.norm(), 0.5, 5.0);
            Vec e = y.norm() > 0 ? Vec(y / y.norm() * r) : vec2(r, 0.0);
            return ref.w->value(e);
        };
        c.validation_radial = 8;
        c.validation_angular = 8;
        auto [p, rep] = synthesize_candidate(2, 0.9, SynthesisMode::AnnulusPde, c);
        CHECK(p.local_only);
        CHECK(std::isfinite(rep.residual_sup));
        double e = 0.0;
        for (const auto& y : shell_samples(2, 1.5, 3.5, 5, 7)) e = std::max(e, std::abs(p.w->value(y) - ref.w->value(y)));
        err[k++] = e;
    }
    CHECK(err[1] < err[0] / 3.0);
    CHECK(err[1] < 1e-2);
}

TEST_CASE("profile file round-trips bit-exactly") {
    SynthesisConfig c;
    c.radial_nodes = 64;
    const auto p = synthesize_candidate(2, 0.9, SynthesisMode::RadialOde, c).first;
    std::vector<double> rho;
    for (int i = 0; i < 40; ++i) rho.push_back(1.0 + 0.1 * i + 1e-3 * std::sin(i));
    const ProfileFile radial = sample_radial(p, rho);

    const auto g = decay_test_profile(2, 0.9);
    const ProfileFile cart = sample_cartesian(g, {9, 7, 0, 0}, {-2.0, -1.5, 0, 0}, {0.5, 0.5, 0, 0});

    for (const ProfileFile* f : {&radial, &cart}) {
        for (PayloadKind kind : {PayloadKind::Binary, PayloadKind::Text}) {
            std::stringstream s1;
            write_profile(s1, *f, kind);
            const ProfileFile back = read_profile(s1);
            std::stringstream s2, s3;
            write_profile(s2, *f, kind);
            write_profile(s3, back, kind);
            CHECK(s2.str() == s3.str());
            CHECK(back.header.mu == f->header.mu);
            CHECK(back.header.decay.C == f->header.decay.C);
            CHECK(back.header.bounds.lambda == f->header.bounds.lambda);
            const auto q = to_pair(back);
            CHECK(q.provenance == f->header.provenance);
            CHECK(q.decay.C[1] == f->header.decay.C[1]);
        }
    }
    std::stringstream bin;
    write_profile(bin, radial, PayloadKind::Binary);
    const auto rt = std::get<0>(read_profile(bin).grid);
    const auto& orig = *std::get<0>(radial.grid);
    for (std::size_t i = 0; i < orig.rho.size(); ++i) {
        CHECK(rt->rho[i] == orig.rho[i]);
        CHECK(rt->W[i] == orig.W[i]);
        CHECK(rt->A[i] == orig.A[i]);
    }
}

TEST_CASE("profile loader rejects bad input") {
    auto g = decay_test_profile(2, 0.9);
    ProfileFile f = sample_cartesian(g, {5, 5, 0, 0}, {-1, -1, 0, 0}, {0.5, 0.5, 0, 0});
    std::stringstream s;
    write_profile(s, f, PayloadKind::Text);
    const std::string text = s.str();

    {
        std::string bad = text;
        const auto at = bad.find("\"mu\": 0.9");
        REQUIRE(at != std::string::npos);
        bad.replace(at, 9, "\"mu\": 1.2");
        std::stringstream in(bad);
        CHECK_THROWS_AS((void) read_profile(in), RangeError);
    }
    {
        std::string bad = text;
        const auto end = bad.find("END_HEADER\n") + 11;
        const auto eol = bad.find('\n', end);
        const auto eol2 = bad.find('\n', eol + 1);
        const auto sp = bad.find(' ', eol + 1);
        const auto sp2 = bad.find(' ', sp + 1);
        const auto sp3 = bad.find(' ', sp2 + 1);
        REQUIRE(sp3 < eol2);
        bad.replace(sp2 + 1, sp3 - sp2 - 1, "nan");
        std::stringstream in(bad);
        try {
            (void) read_profile(in);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("record 1") != std::string::npos);
            std::size_t lines = 1;
            for (std::size_t i = 0; i < eol + 1; ++i) lines += bad[i] == '\n';
            CHECK(e.offset() == static_cast<long long>(lines));
        }
    }
    {
        std::stringstream bin;
        write_profile(bin, f, PayloadKind::Binary);
        std::string b = bin.str();
        b.resize(b.size() - 3);
        std::stringstream in(b);
        CHECK_THROWS_AS((void) read_profile(in), FormatError);
    }
    {
        std::stringstream in("not a profile\n");
        CHECK_THROWS_AS((void) read_profile(in), FormatError);
    }
}
