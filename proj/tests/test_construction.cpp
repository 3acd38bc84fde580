#include <doctest.h>

#include "mrlab/construction.hpp"
#include "mrlab/samplers.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace mrlab;
using namespace mrlab::construction;

namespace {

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

std::vector<SpaceTimePoint> random_points(int n, double rmax, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ut(0.05, 0.95), ur(0.05, rmax), ua(0.0, 2.0 * std::numbers::pi);
    std::vector<SpaceTimePoint> pts;
    for (int i = 0; i < n; ++i) {
        const double r = ur(rng), a = ua(rng);
        pts.push_back({ut(rng), vec2(r * std::cos(a), r * std::sin(a))});
    }
    return pts;
}

}  // namespace

TEST_CASE("coefficient field substitutes the self-similar variable") {
    auto p = profile::custom_profile(2, 0.9, profile::decay_test_profile(2, 0.9).w,
                                     profile::bump_scalar_coefficient(2));
    const auto B = build_coefficients(p);
    const CMat b = B->value(0.75, vec2(1.0, 0.0));
    CHECK(b(0, 0).real() == doctest::Approx(2.2));
    CHECK(b(1, 1).real() == doctest::Approx(2.2));
    CHECK(std::abs(b(0, 1)) == 0.0);
    CHECK_THROWS_AS((void) B->value(1.0, vec2(0.0, 0.0)), SingularTimeError);
    CHECK_THROWS_AS((void) B->value(1.5, vec2(0.0, 0.0)), SingularTimeError);

    const auto id = build_coefficients(profile::gaussian_test_profile(2, 0.9));
    for (double t : {0.0, 0.5, 0.999}) CHECK((id->value(t, vec2(0.3, -1.0)) - CMat::Identity(2, 2)).norm() == 0.0);
}

TEST_CASE("coefficient derivative carries the chain-rule factor") {
    const auto p = profile::custom_profile(2, 0.9, profile::decay_test_profile(2, 0.9).w,
                                           profile::radial_anisotropic_coefficient(2, 0.7));
    const auto B = build_coefficients(p);
    const double t = 0.9;
    const Vec x = vec2(0.4, 0.2);
    const auto dB = B->derivative(t, x);
    const auto fd = fd_derivative(*B, t, x, 1e-6);
    for (int k = 0; k < 2; ++k) CHECK((dB[k] - fd[k]).norm() < 1e-6);
}

TEST_CASE("ellipticity transports to B") {
    const auto p = profile::custom_profile(2, 0.9, profile::decay_test_profile(2, 0.9).w,
                                           profile::radial_anisotropic_coefficient(2, -0.6));
    const auto B = build_coefficients(p);
    for (const auto& s : random_points(50, 2.5, 3)) {
        const Vec y = s.x / std::sqrt(1.0 - s.t);
        CHECK(coercivity(B->value(s.t, s.x)).coercivity == coercivity(p.a->value(y)).coercivity);
    }
}

TEST_CASE("cutoff values and derivatives") {
    const auto eta = build_cutoff(2);
    CHECK(eta->value(vec2(0.5, 0.0)) == 1.0);
    CHECK(eta->value(vec2(2.5, 0.0)) == 0.0);
    CHECK(eta->value(vec2(0.0, 1.5)) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(eta->value(vec2(1.0, 0.0)) == 1.0);
    CHECK(eta->value(vec2(2.0, 0.0)) == 0.0);
    for (double r = 0.0; r <= 3.0; r += 0.01) {
        const double v = eta->value(vec2(r, 0.0));
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        if (r < 1.0 || r > 2.0) CHECK(eta->gradient(vec2(r, 0.0)).norm() == 0.0);
    }
    for (double r : {1.1, 1.35, 1.5, 1.8, 1.97}) {
        const Vec x = vec2(r * 0.6, r * 0.8);
        const double h = 1e-5;
        Vec g(2);
        RMat H(2, 2);
        for (int k = 0; k < 2; ++k) {
            Vec xp = x, xm = x;
            xp[k] += h;
            xm[k] -= h;
            g[k] = (eta->value(xp) - eta->value(xm)) / (2 * h);
            H.col(k) = (eta->gradient(xp) - eta->gradient(xm)) / (2 * h);
        }
        CHECK((eta->gradient(x) - g).norm() < 1e-6 * std::max(1.0, g.norm()));
        CHECK((eta->hessian(x) - H).norm() < 1e-5 * std::max(1.0, H.norm()));
    }
}

TEST_CASE("zeta amplitude and time derivative") {
    const auto p = profile::decay_test_profile(2, 0.9);
    const auto b = build_bundle(p);
    CHECK(std::abs(b.zeta->value(0.75, vec2(0.0, 0.0))) == doctest::Approx(std::pow(0.25, -0.45)).epsilon(1e-14));
    CHECK(std::pow(0.25, -0.45) == doctest::Approx(1.8661).epsilon(1e-4));
    // Bit-identical self-similar formula.
    for (const auto& s : random_points(20, 3.0, 5)) {
        const double tau = 1.0 - s.t;
        const Complex pref = std::exp(-0.5 * Complex(0.9, 1.0) * std::log(tau));
        CHECK(b.zeta->value(s.t, s.x) == pref * p.w->value(s.x / std::sqrt(tau)));
        CHECK(std::abs(b.zeta->value(s.t, vec2(0.0, 0.0))) ==
              doctest::Approx(std::pow(tau, -0.45)).epsilon(1e-13));
    }
    double err[2];
    int k = 0;
    for (double h : {1e-2, 1e-3}) {
        double e = 0.0;
        for (const auto& s : random_points(20, 2.0, 9)) {
            const Complex fd = (b.zeta->value(s.t + h * (1 - s.t), s.x) - b.zeta->value(s.t - h * (1 - s.t), s.x)) /
                               (2.0 * h * (1 - s.t));
            e = std::max(e, std::abs(fd - b.zeta->time_derivative(s.t, s.x)) / std::abs(b.zeta->time_derivative(s.t, s.x)));
        }
        err[k++] = e;
    }
    CHECK(err[1] < err[0] / 50.0);
    CHECK(err[1] < 1e-5);
}

TEST_CASE("u and f vanish where the factors do") {
    const auto b = build_bundle(profile::decay_test_profile(2, 0.9));
    for (const auto& s : random_points(30, 4.0, 11)) {
        CHECK(b.u->value(0.0, s.x) == Complex{});
        CHECK(b.f->value(0.0, s.x) == b.cutoff->value(s.x) * b.zeta->value(0.0, s.x));
        if (s.x.norm() >= 2.0) {
            CHECK(b.u->value(s.t, s.x) == Complex{});
            CHECK(b.f->value(s.t, s.x) == Complex{});
        }
    }
    CHECK(b.u->value(0.5, vec2(2.5, 0.0)) == Complex{});
    CHECK(b.f->value(0.5, vec2(0.0, -2.0)) == Complex{});
    CHECK_THROWS_AS((void) b.u->value(1.0, vec2(0.0, 0.0)), SingularTimeError);
}

TEST_CASE("residual is zero for a constant-in-space field") {
    auto u = std::make_shared<LambdaSpaceTimeField>(2, [](double t, const Vec&) { return Complex(t); });
    auto f = std::make_shared<LambdaSpaceTimeField>(2, [](double, const Vec&) { return Complex(1.0); });
    const auto B = constant_identity(2);
    const auto pts = random_points(20, 1.0, 1);
    ResidualOptions opt;
    opt.mode = ResidualMode::FiniteDifference;
    opt.fd_step = 1e-3;
    const auto st = pde_residual(*u, *B, *f, pts, opt);
    CHECK(st.sup < 1e-10);
}

TEST_CASE("heat kernel residual is second order in the difference step") {
    const int d = 2;
    auto u = std::make_shared<LambdaSpaceTimeField>(d, [d](double t, const Vec& x) {
        return Complex(std::pow(4.0 * std::numbers::pi * (t + 1.0), -0.5 * d) * std::exp(-x.squaredNorm() / (4.0 * (t + 1.0))));
    });
    const auto zero = zero_field(d);
    const auto B = constant_identity(d);
    const auto pts = random_points(40, 2.5, 2);
    double sup[2];
    int k = 0;
    for (double h : {1e-2, 5e-3}) {
        ResidualOptions opt;
        opt.mode = ResidualMode::FiniteDifference;
        opt.fd_step = h;
        sup[k++] = pde_residual(*u, *B, *zero, pts, opt).sup;
    }
    CHECK(sup[0] / sup[1] == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("inside the unit ball the residual is t (1-t)^{-mu/2-1} |R_w|") {
    const auto p = profile::gaussian_test_profile(2, 0.9);
    const auto b = build_bundle(p);
    auto pts = random_points(60, 0.95, 4);
    const auto st = pde_residual(b, pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double tau = 1.0 - pts[i].t;
        const Vec y = pts[i].x / std::sqrt(tau);
        const double r2 = y.squaredNorm();
        const double R = std::abs((0.5 * r2 - 1.0 - 0.5 * Complex(0.9, 1.0)) * std::exp(-0.25 * r2));
        CHECK(st.values[i] == doctest::Approx(pts[i].t * std::pow(tau, -1.45) * R).epsilon(1e-9));
    }
    ResidualOptions fd;
    fd.mode = ResidualMode::FiniteDifference;
    fd.fd_step = 1e-4;
    const auto sf = pde_residual(b, pts, fd);
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK(sf.values[i] == doctest::Approx(st.values[i]).epsilon(1e-4));
}

TEST_CASE("closed-form forcing matches differences of u on non-profiles") {
    for (Complex c : {Complex(1.0), Complex(0.5, -2.0)}) {
        const auto base = profile::decay_test_profile(2, 0.9, c);
        const auto p = profile::custom_profile(2, 0.9, base.w, profile::radial_anisotropic_coefficient(2, 0.5));
        const auto b = build_bundle(p);
        auto pts = random_points(60, 2.3, 8);
        ResidualOptions fd;
        fd.mode = ResidualMode::FiniteDifference;
        fd.fd_step = 1e-4;
        const auto st = pde_residual(*b.u, *b.coefficients, *b.f_exact, pts, fd);
        double scale = 0.0;
        for (const auto& s : pts) scale = std::max(scale, std::abs(b.f_exact->value(s.t, s.x)));
        CHECK(st.sup < 1e-5 * scale);
        // The analytic path closes the identity to rounding.
        const auto sa = pde_residual(*b.u, *b.coefficients, *b.f_exact, pts);
        CHECK(sa.sup < 1e-9 * scale);
    }
}

TEST_CASE("near-origin samples are reported separately") {
    const auto b = build_bundle(profile::gaussian_test_profile(2, 0.9));
    std::vector<SpaceTimePoint> pts{{0.5, vec2(1e-3, 0.0)}, {0.5, vec2(0.5, 0.0)}};
    const auto st = pde_residual(b, pts);
    CHECK(st.near_origin_count == 1);
    CHECK(st.count == 1);
    CHECK(st.near_origin_sup > 0.0);
    std::vector<SpaceTimePoint> bad{{0.5, vec2(0.0, 0.0)}};
    CHECK_THROWS_AS((void) pde_residual(b, bad), RangeError);
    std::vector<SpaceTimePoint> bad_t{{1.0, vec2(0.5, 0.0)}};
    CHECK_THROWS_AS((void) pde_residual(b, bad_t), RangeError);
}
