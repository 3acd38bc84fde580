#include <doctest.h>

#include "mrlab/pde.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace mrlab;
using namespace mrlab::pde;

namespace {

constexpr double kPi = std::numbers::pi;

std::shared_ptr<const Discretization> grid(double L, double h, int steps, double T, int d = 2) {
    DiscretizationConfig c;
    c.d = d;
    c.L = L;
    c.h = h;
    c.mesh = TimeMeshKind::Uniform;
    c.uniform_steps = steps;
    c.T_max = T;
    return std::make_shared<Discretization>(build_discretization(c));
}

// Brute-force P1 stiffness: every simplex of every cube, gradients from the
// inverse of the vertex matrix [1 x].
Eigen::MatrixXcd dense_stiffness(const Discretization& D, const std::function<CMat(const Vec&)>& B) {
    const int d = D.d, n = D.n, P = n - 1;
    const auto N = static_cast<Eigen::Index>(D.unknowns());
    Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(N, N);
    std::vector<int> perm(static_cast<std::size_t>(d));
    std::vector<std::vector<int>> perms;
    for (int k = 0; k < d; ++k) perm[static_cast<std::size_t>(k)] = k;
    do perms.push_back(perm);
    while (std::next_permutation(perm.begin(), perm.end()));
    const int cells = static_cast<int>(std::pow(n, d));
    for (int cell = 0; cell < cells; ++cell) {
        std::vector<int> c(static_cast<std::size_t>(d));
        int rem = cell;
        for (int k = d - 1; k >= 0; --k) {
            c[static_cast<std::size_t>(k)] = rem % n;
            rem /= n;
        }
        Vec centre(d);
        for (int k = 0; k < d; ++k) centre[k] = D.lo + D.h * (c[static_cast<std::size_t>(k)] + 0.5);
        const CMat b = B(centre);
        for (const auto& pm : perms) {
            std::vector<std::vector<int>> verts(1, c);
            for (int m = 0; m < d; ++m) {
                auto v = verts.back();
                ++v[static_cast<std::size_t>(pm[static_cast<std::size_t>(m)])];
                verts.push_back(v);
            }
            Eigen::MatrixXd X(d + 1, d + 1);
            for (int a = 0; a <= d; ++a) {
                X(a, 0) = 1.0;
                for (int k = 0; k < d; ++k) X(a, k + 1) = D.lo + D.h * verts[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)];
            }
            const Eigen::MatrixXd C = X.inverse();  // column a holds the coefficients of φ_a
            const double vol = std::abs(X.determinant()) / std::tgamma(d + 1.0);
            for (int a = 0; a <= d; ++a)
                for (int bb = 0; bb <= d; ++bb) {
                    long ia = 0, ib = 0;
                    bool in = true;
                    for (int k = 0; k < d; ++k) {
                        const int ga = verts[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)];
                        const int gb = verts[static_cast<std::size_t>(bb)][static_cast<std::size_t>(k)];
                        in = in && ga >= 1 && ga <= P && gb >= 1 && gb <= P;
                        ia = ia * P + ga - 1;
                        ib = ib * P + gb - 1;
                    }
                    if (!in) continue;
                    Complex s{};
                    for (int k = 0; k < d; ++k)
                        for (int l = 0; l < d; ++l) s += C(k + 1, a) * b(k, l) * C(l + 1, bb);
                    K(ia, ib) += vol * s;
                }
        }
    }
    return K;
}

CMat sample_B(double t, const Vec& x) {
    CMat B(2, 2);
    const double s = 1.5 + 0.5 * std::sin(x[0]);
    B << Complex(1.0, 0.2), Complex(0.3, 0.1), Complex(-0.1, 0.4), Complex(1.4, -0.3);
    return B * (s * (1.0 + 0.5 * t));
}

}  // namespace

TEST_CASE("graded mesh has M steps per dyadic block") {
    const auto t = graded_time_mesh(1.0 - 1.0 / 1024.0, 8);
    CHECK(t.size() == 81);
    CHECK(t.front() == 0.0);
    CHECK(t.back() == 1.0 - 1.0 / 1024.0);
    for (std::size_t k = 0; k + 1 < t.size(); ++k) CHECK(t[k + 1] > t[k]);
    CHECK(t[8] == 0.5);
    CHECK(t[16] == 0.75);
    CHECK(t[1] == doctest::Approx(1.0 / 16.0));

    DiscretizationConfig c;
    c.T_max = 1.0;
    CHECK_THROWS_AS((void) build_discretization(c), SingularTimeError);
    c.T_max = 0.5;
    c.h = 0.0;
    CHECK_THROWS_AS((void) build_discretization(c), RangeError);
    c.h = -0.1;
    CHECK_THROWS_AS((void) build_discretization(c), RangeError);
    c.h = 0.07;
    CHECK_THROWS_AS((void) build_discretization(c), RangeError);
    c.h = 1.0 / 32.0;
    c.T_max = 1.0 - 1.0 / 2048.0;
    c.resolution_guard = true;
    CHECK_THROWS_AS((void) build_discretization(c), RangeError);
    c.resolution_guard = false;
    CHECK(build_discretization(c).n == 192);
    c.L = 2.0;
    c.require_support = true;
    CHECK_THROWS_AS((void) build_discretization(c), RangeError);
}

TEST_CASE("stiffness agrees with a brute-force element assembly") {
    for (int d : {1, 2, 3}) {
        const auto D = grid(1.0, d == 3 ? 0.5 : 0.25, 1, 0.5, d);
        const Assembler a(*D);
        auto B = [d](const Vec& x) {
            CMat b = CMat::Identity(d, d) * Complex(2.0 + x.sum(), 0.1);
            for (int k = 0; k + 1 < d; ++k) b(k, k + 1) = Complex(0.3, -0.2 * x[0]);
            return b;
        };
        LambdaMatrixField f(d, [&](double, const Vec& x) { return B(x); });
        const Eigen::MatrixXcd K = Eigen::MatrixXcd(a.stiffness(f, 0.0));
        const Eigen::MatrixXcd R = dense_stiffness(*D, B);
        CHECK((K - R).norm() < 1e-12 * R.norm());
    }
}

TEST_CASE("stiffness of the adjoint coefficient is the adjoint matrix") {
    const auto D = grid(1.0, 0.125, 1, 0.5);
    const Assembler a(*D);
    const auto B = random_coefficient(2, 17);
    const ReflectedAdjoint A(*B);
    const Eigen::MatrixXcd K = Eigen::MatrixXcd(a.stiffness(*B, 0.3));
    const Eigen::MatrixXcd KH = Eigen::MatrixXcd(a.stiffness(A, -0.3));
    CHECK((KH - K.adjoint()).norm() <= 1e-14 * K.norm());
    // Coercivity: Re uᴴKu ≥ λ uᴴ K_I u.
    const Eigen::MatrixXcd L = Eigen::MatrixXcd(a.laplacian());
    for (int s = 0; s < 10; ++s) {
        const Eigen::VectorXcd u = Eigen::VectorXcd::Random(K.rows());
        CHECK(u.dot(K * u).real() >= 0.5 * u.dot(L * u).real());
    }
}

TEST_CASE("discrete Laplacian converges at second order") {
    // Kφ/h^d against −div(B∇φ) at the nodes for smooth φ vanishing on the walls.
    auto phi = [](const Vec& x) { return std::sin(kPi * (x[0] + 1) / 2) * std::sin(kPi * (x[1] + 1) / 2) * std::exp(0.3 * x[0]); };
    auto div = [&](const Vec& x) {
        // B = s(x) C with s = 1.5 + 0.5 sin x₀; div(B∇φ) = Σ (∂_k s) C_kl ∂_l φ + s C_kl ∂_kl φ.
        const CMat C = sample_B(0.0, x) / (1.5 + 0.5 * std::sin(x[0]));
        const double s = 1.5 + 0.5 * std::sin(x[0]), ds0 = 0.5 * std::cos(x[0]);
        const double a = kPi / 2;
        const double Sx = std::sin(a * (x[0] + 1)), Cx = std::cos(a * (x[0] + 1));
        const double Sy = std::sin(a * (x[1] + 1)), Cy = std::cos(a * (x[1] + 1));
        const double e = std::exp(0.3 * x[0]);
        const double gx = (a * Cx + 0.3 * Sx) * e * Sy, gy = Sx * e * a * Cy;
        const double hxx = (-a * a * Sx + 0.6 * a * Cx + 0.09 * Sx) * e * Sy;
        const double hyy = -a * a * phi(x);
        const double hxy = (a * Cx + 0.3 * Sx) * e * a * Cy;
        return ds0 * (C(0, 0) * gx + C(0, 1) * gy) + s * (C(0, 0) * hxx + (C(0, 1) + C(1, 0)) * hxy + C(1, 1) * hyy);
    };
    LambdaMatrixField B(2, sample_B);
    double err[2];
    int i = 0;
    for (double h : {1.0 / 16, 1.0 / 32}) {
        const auto D = grid(1.0, h, 1, 0.5);
        const Assembler a(*D);
        const SpMat K = a.stiffness(B, 0.0);
        Eigen::VectorXcd p(static_cast<Eigen::Index>(D->unknowns()));
        for (std::size_t j = 0; j < D->unknowns(); ++j) p[static_cast<Eigen::Index>(j)] = phi(D->node(j));
        const Eigen::VectorXcd Kp = K * p / D->cell_volume();
        double e = 0.0;
        for (std::size_t j = 0; j < D->unknowns(); ++j) e = std::max(e, std::abs(Kp[static_cast<Eigen::Index>(j)] + div(D->node(j))));
        err[i++] = e;
    }
    CHECK(err[0] / err[1] > 3.5);
    CHECK(err[1] < 2e-2);
}

TEST_CASE("zero forcing gives the zero solution and zero dual") {
    const auto D = grid(1.0, 0.125, 10, 0.9);
    const auto B = random_coefficient(2, 4);
    const auto u = solve_forward(*B, *zero_field(2), D);
    for (const auto& l : u.levels) CHECK(l.norm() == 0.0);
    const auto v = solve_dual(*B, *zero_field(2), D);
    for (const auto& l : v.v.levels) CHECK(l.norm() == 0.0);
}

TEST_CASE("manufactured solution converges at O(h^2 + dt)") {
    auto S = [](const Vec& x) { return std::sin(kPi * (x[0] + 1) / 2) * std::sin(kPi * (x[1] + 1) / 2); };
    // u = (t + t²) S, B(t, x) = (1 + t/2) s(x) C; C constant and non-Hermitian.
    auto f = std::make_shared<LambdaSpaceTimeField>(2, [&](double t, const Vec& x) {
        const double a = kPi / 2;
        const double Sx = std::sin(a * (x[0] + 1)), Cx = std::cos(a * (x[0] + 1));
        const double Sy = std::sin(a * (x[1] + 1)), Cy = std::cos(a * (x[1] + 1));
        const double s = 1.5 + 0.5 * std::sin(x[0]), ds0 = 0.5 * std::cos(x[0]);
        const CMat C = sample_B(0.0, x) / s;
        const double gx = a * Cx * Sy, gy = a * Sx * Cy;
        const double hxx = -a * a * Sx * Sy, hyy = hxx, hxy = a * a * Cx * Cy;
        const Complex div = (1 + 0.5 * t) * (ds0 * (C(0, 0) * gx + C(0, 1) * gy) +
                                             s * (C(0, 0) * hxx + (C(0, 1) + C(1, 0)) * hxy + C(1, 1) * hyy));
        return Complex((1 + 2 * t) * S(x)) - (t + t * t) * div;
    });
    LambdaMatrixField B(2, sample_B);
    const double T = 0.5;
    double err[2];
    int i = 0;
    for (double h : {1.0 / 8, 1.0 / 16}) {
        const auto D = grid(1.0, h, static_cast<int>(std::lround(T / (h * h))), T);
        const auto u = solve_forward(B, *f, D);
        double e = 0.0;
        for (std::size_t j = 0; j < D->unknowns(); ++j) {
            e = std::max(e, std::abs(u.levels.back()[static_cast<Eigen::Index>(j)] - (T + T * T) * S(D->node(j))));
        }
        err[i++] = e;
    }
    CHECK(err[0] / err[1] > 3.3);
    CHECK(err[1] < 5e-3);
}

TEST_CASE("implicit Euler is stable for arbitrarily large steps") {
    const auto B = random_coefficient(2, 8, {.lambda = 0.5, .time_pieces = 3, .horizon = 1.0, .amplitude = 2.0});
    const auto f = random_forcing(2, 8, 1.0);
    for (int steps : {1, 2, 4, 64}) {
        const auto D = grid(1.0, 0.125, steps, 0.99);
        const auto u = solve_forward(*B, *f, D);
        const DiscreteNorms nm(*D);
        double bound = 0.0;
        for (std::size_t k = 0; k < D->steps(); ++k) {
            const double dt = D->times[k + 1] - D->times[k];
            bound += dt * nm.l2(u.loads[k] / D->cell_volume());
            CHECK(nm.l2(u.levels[k + 1]) <= bound * (1 + 1e-12));
        }
    }
}

TEST_CASE("dual solution matches the dense adjoint of the forward operator") {
    const auto D = grid(1.0, 0.2, 4, 0.8);
    REQUIRE(D->unknowns() == 81);
    const auto B = random_coefficient(2, 21, {.lambda = 0.5, .time_pieces = 4, .horizon = 0.8, .amplitude = 1.0});
    const auto f = random_forcing(2, 1, 1.0);
    const auto g = random_forcing(2, 2, 1.0);
    const auto u = solve_forward(*B, *f, D);
    const auto v = solve_dual(*B, *g, D);

    // Block bidiagonal forward operator L U = Δt F.
    const Assembler asmb(*D);
    const Eigen::Index n = 81, N = 4;
    const double vol = D->cell_volume();
    Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(n * N, n * N);
    Eigen::VectorXcd G(n * N);
    for (Eigen::Index k = 0; k < N; ++k) {
        const double dt = D->times[static_cast<std::size_t>(k) + 1] - D->times[static_cast<std::size_t>(k)];
        const double mid = 0.5 * (D->times[static_cast<std::size_t>(k) + 1] + D->times[static_cast<std::size_t>(k)]);
        L.block(k * n, k * n, n, n) = Eigen::MatrixXcd(asmb.stiffness(*B, mid)) * dt;
        L.block(k * n, k * n, n, n).diagonal().array() += vol;
        if (k > 0) L.block(k * n, (k - 1) * n, n, n) = -vol * Eigen::MatrixXcd::Identity(n, n);
        G.segment(k * n, n) = dt * v.g_loads[static_cast<std::size_t>(k)];
    }
    const Eigen::VectorXcd V = L.adjoint().partialPivLu().solve(G);
    double e = 0.0, s = 0.0;
    for (Eigen::Index k = 0; k < N; ++k) {
        e = std::max(e, (V.segment(k * n, n) - v.v.levels[static_cast<std::size_t>(k)]).norm());
        s = std::max(s, V.segment(k * n, n).norm());
    }
    CHECK(e < 1e-11 * s);
    CHECK(v.v.levels.back().norm() == 0.0);

    // Σ Δt Gᴴu = Σ Δt vᴴF.
    Complex lhs{}, rhs{};
    for (std::size_t k = 0; k < 4; ++k) {
        const double dt = D->times[k + 1] - D->times[k];
        lhs += dt * v.g_loads[k].dot(u.levels[k + 1]);
        rhs += dt * v.v.levels[k].dot(u.loads[k]);
    }
    CHECK(std::abs(lhs - rhs) < 1e-12 * std::abs(lhs));
    CHECK(v.reflected_times.front() == -0.8);
    CHECK(v.reflected_times.back() == 0.0);
}

TEST_CASE("reflection of a Hermitian time-independent coefficient is itself") {
    auto B = std::make_shared<LambdaMatrixField>(2, [](double, const Vec& x) {
        CMat b(2, 2);
        b << 2.0 + x[0] * x[0], Complex(0.3, 0.4), Complex(0.3, -0.4), 1.5;
        return b;
    }, LambdaMatrixField::DerivFn{}, true);
    const ReflectedAdjoint A(*B);
    Vec x(2);
    x << 0.3, -0.7;
    CHECK(A.value(-0.4, x) == B->value(0.4, x));
    CHECK(A.time_independent());
    // Dual of a time-symmetric problem reverses the forward one.
    const auto D = grid(1.0, 0.125, 8, 0.8);
    const auto f = std::make_shared<LambdaSpaceTimeField>(2, [](double, const Vec& x) { return Complex(std::exp(-x.squaredNorm())); });
    const auto u = solve_forward(*B, *f, D);
    const auto v = solve_dual(*B, *f, D);
    for (std::size_t k = 0; k <= 8; ++k) CHECK((v.v.levels[k] - u.levels[8 - k]).norm() <= 1e-12 * (1 + u.levels[8 - k].norm()));
    CHECK(u.stats.factorizations == 1);
}

TEST_CASE("discrete norms on sine eigenvectors") {
    const auto D = grid(1.0, 0.125, 1, 0.5);
    const DiscreteNorms nm(*D);
    const int n = D->n, P = n - 1;
    for (auto [p, q] : {std::pair{1, 1}, std::pair{2, 3}, std::pair{15, 7}}) {
        Eigen::VectorXcd phi(P * P);
        for (int i = 0; i < P; ++i)
            for (int j = 0; j < P; ++j) phi[i * P + j] = std::sin(p * kPi * (i + 1) / n) * std::sin(q * kPi * (j + 1) / n);
        const double kappa = 4 * std::pow(std::sin(p * kPi / (2.0 * n)), 2) + 4 * std::pow(std::sin(q * kPi / (2.0 * n)), 2);
        const double vol = D->cell_volume(), u2 = phi.squaredNorm();
        CHECK(nm.l2(phi) == doctest::Approx(std::sqrt(vol * u2)).epsilon(1e-13));
        CHECK(nm.grad_l2(phi) == doctest::Approx(std::sqrt(kappa * u2)).epsilon(1e-12));
        CHECK(nm.hminus1(phi) == doctest::Approx(std::sqrt(vol * vol * u2 / (kappa + vol))).epsilon(1e-12));
        // Dual-norm inequality |⟨g, v⟩| ≤ ‖g‖₋₁ ‖v‖₁ with equality at v = R⁻¹g.
        CHECK(std::abs(nm.pairing(phi, phi)) <= nm.hminus1(phi) * nm.h1(phi) * (1 + 1e-12));
    }
}

TEST_CASE("energy inequality on random coercive coefficients") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto B = random_coefficient(2, seed);
        const auto f = random_forcing(2, seed + 100, 1.0);
        const auto D = grid(1.0, 0.125, 24, 1.0 - 1.0 / 64.0);
        const auto u = solve_forward(*B, *f, D);
        CHECK(u.stats.min_coercivity >= 0.5);
        const auto r = energy_check(u, *B, *f, *D);
        CHECK(r.holds);
        CHECK(r.lhs <= r.pairing * (1 + 1e-10));
        CHECK(r.pairing <= r.rhs * (1 + 1e-10));
        CHECK(r.lambda == u.stats.min_coercivity);
    }
}

TEST_CASE("solves are reproducible across thread counts") {
    const auto D = grid(1.0, 0.125, 12, 0.9);
    const auto B = random_coefficient(2, 3);
    const auto f = random_forcing(2, 3, 1.0);
    SolverOptions one, four;
    four.threads = 4;
    const auto a = solve_forward(*B, *f, D, one);
    const auto b = solve_forward(*B, *f, D, four);
    const auto c = solve_forward(*B, *f, D, one);
    for (std::size_t k = 0; k < a.levels.size(); ++k) {
        CHECK(a.levels[k] == b.levels[k]);
        CHECK(a.levels[k] == c.levels[k]);
    }
}

TEST_CASE("iterative and direct paths agree") {
    const auto D = grid(1.0, 0.125, 6, 0.9);
    const auto B = random_coefficient(2, 5);
    const auto f = random_forcing(2, 5, 1.0);
    SolverOptions it;
    it.direct_limit = 0;
    const auto a = solve_forward(*B, *f, D);
    const auto b = solve_forward(*B, *f, D, it);
    CHECK((a.levels.back() - b.levels.back()).norm() < 1e-8 * a.levels.back().norm());
    CHECK(b.stats.max_iterations_used > 0);
}

TEST_CASE("ellipticity violations abort the solve") {
    auto B = std::make_shared<LambdaMatrixField>(2, [](double, const Vec& x) {
        CMat b = CMat::Identity(2, 2);
        if (x[0] > 0.5) b(1, 1) = -1.0;
        return b;
    });
    const auto D = grid(1.0, 0.125, 2, 0.5);
    CHECK_THROWS_AS((void) solve_forward(*B, *zero_field(2), D), RangeError);
}

TEST_CASE("checkpoint round trip is bit exact") {
    const auto D = grid(1.0, 0.25, 5, 0.7);
    const auto u = solve_forward(*random_coefficient(2, 9), *random_forcing(2, 9, 1.0), D);
    const auto path = std::filesystem::temp_directory_path() / "mrlab_checkpoint_test.bin";
    write_checkpoint(path, u);
    const auto r = read_checkpoint(path);
    CHECK(r.disc->n == D->n);
    CHECK(r.disc->lo == D->lo);
    CHECK(r.times == u.times);
    REQUIRE(r.levels.size() == u.levels.size());
    for (std::size_t k = 0; k < u.levels.size(); ++k) CHECK(r.levels[k] == u.levels[k]);
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3);
    CHECK_THROWS_AS((void) read_checkpoint(path), FormatError);
    std::filesystem::remove(path);
}
