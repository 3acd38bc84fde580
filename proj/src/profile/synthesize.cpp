#include "mrlab/profile.hpp"

#include "mrlab/samplers.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <vector>

namespace mrlab::profile {

std::string to_string(SynthesisMode m) {
    return m == SynthesisMode::RadialOde ? "radial-ode" : "annulus-pde";
}

SynthesisMode synthesis_mode_from_string(const std::string& s) {
    if (s == "radial-ode") return SynthesisMode::RadialOde;
    if (s == "annulus-pde") return SynthesisMode::AnnulusPde;
    throw RangeError("unknown synthesis mode '" + s + "'");
}

std::pair<Complex, Complex> radial_profile_rhs(int d, double mu, Complex alpha, double rho,
                                               Complex W, Complex dW) {
    const Complex d2W = (rho / (2.0 * alpha) - (d - 1.0) / rho) * dW +
                        Complex(mu, 1.0) / (2.0 * alpha) * W;
    return {dW, d2W};
}

namespace {

Complex outer_power(double rho, double mu) { return std::pow(Complex(rho, 0.0), -Complex(mu, 1.0)); }

void check_synthesis_range(int d, double mu, const SynthesisConfig& c) {
    if (d < 2 || d > kMaxDim) throw RangeError("synthesis dimension must be in [2, 4]");
    if (!(mu > 0.0) || !(mu < 0.5 * d)) throw RangeError("synthesis requires 0 < mu < d/2");
    if (!(c.rho_inner > 0.0) || !(c.rho_outer > c.rho_inner)) {
        throw RangeError("synthesis annulus requires 0 < rho_inner < rho_outer");
    }
}

ProfilePair radial_ode(int d, double mu, const SynthesisConfig& c) {
    if (!(c.alpha.real() > 0.0)) throw RangeError("radial-ode requires Re(alpha) > 0");
    if (c.radial_nodes < 4 || c.substeps < 1) throw RangeError("radial-ode needs >= 4 nodes and >= 1 substep");
    auto table = std::make_shared<RadialTable>();
    table->d = d;
    const int n = c.radial_nodes;
    table->rho.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        table->rho[static_cast<std::size_t>(i)] =
            c.rho_inner + (c.rho_outer - c.rho_inner) * static_cast<double>(i) / (n - 1);
    }
    table->rho.back() = c.rho_outer;
    table->W.resize(static_cast<std::size_t>(n));
    table->dW.resize(static_cast<std::size_t>(n));
    table->d2W.resize(static_cast<std::size_t>(n));
    table->A.assign(static_cast<std::size_t>(n), CMat(CMat::Identity(d, d) * c.alpha));

    auto rhs = [&](double r, Complex W, Complex dW) { return radial_profile_rhs(d, mu, c.alpha, r, W, dW); };
    Complex W = outer_power(c.rho_outer, mu);
    Complex dW = -Complex(mu, 1.0) * W / c.rho_outer;
    auto store = [&](int i) {
        const auto k = static_cast<std::size_t>(i);
        table->W[k] = W;
        table->dW[k] = dW;
        table->d2W[k] = rhs(table->rho[k], W, dW).second;
    };
    store(n - 1);
    for (int i = n - 1; i > 0; --i) {
        const double r0 = table->rho[static_cast<std::size_t>(i)];
        const double step = (table->rho[static_cast<std::size_t>(i - 1)] - r0) / c.substeps;
        double r = r0;
        for (int s = 0; s < c.substeps; ++s) {
            const auto k1 = rhs(r, W, dW);
            const auto k2 = rhs(r + 0.5 * step, W + 0.5 * step * k1.first, dW + 0.5 * step * k1.second);
            const auto k3 = rhs(r + 0.5 * step, W + 0.5 * step * k2.first, dW + 0.5 * step * k2.second);
            const auto k4 = rhs(r + step, W + step * k3.first, dW + step * k3.second);
            W += step / 6.0 * (k1.first + 2.0 * k2.first + 2.0 * k3.first + k4.first);
            dW += step / 6.0 * (k1.second + 2.0 * k2.second + 2.0 * k3.second + k4.second);
            r = r0 + (s + 1) * step;
        }
        store(i - 1);
    }
    for (const auto& v : table->W) {
        if (!std::isfinite(std::abs(v))) throw Error("radial-ode integration produced a non-finite value");
    }

    ProfilePair p;
    p.d = d;
    p.mu = mu;
    p.w = std::make_shared<RadialScalarField>(table);
    p.a = constant_matrix_field(CMat(CMat::Identity(d, d) * c.alpha));
    p.bounds = {c.alpha.real(), std::abs(c.alpha)};
    p.label = "radial-ode";
    return p;
}

struct GridIndex {
    int d;
    int n;       // nodes per axis
    double lo;
    double h;
    std::size_t count() const {
        std::size_t c = 1;
        for (int k = 0; k < d; ++k) c *= static_cast<std::size_t>(n);
        return c;
    }
    std::array<int, kMaxDim> multi(std::size_t idx) const {
        std::array<int, kMaxDim> m{};
        for (int k = d - 1; k >= 0; --k) {
            m[static_cast<std::size_t>(k)] = static_cast<int>(idx % static_cast<std::size_t>(n));
            idx /= static_cast<std::size_t>(n);
        }
        return m;
    }
    std::size_t flat(const std::array<int, kMaxDim>& m) const {
        std::size_t idx = 0;
        for (int k = 0; k < d; ++k) idx = idx * static_cast<std::size_t>(n) + static_cast<std::size_t>(m[static_cast<std::size_t>(k)]);
        return idx;
    }
    Vec point(const std::array<int, kMaxDim>& m) const {
        Vec y(d);
        for (int k = 0; k < d; ++k) y[k] = lo + h * m[static_cast<std::size_t>(k)];
        return y;
    }
};

ProfilePair annulus_pde(int d, double mu, const SynthesisConfig& c) {
    if (!c.a) throw RangeError("annulus-pde requires a coefficient field");
    if (c.a->dim() != d) throw RangeError("annulus-pde coefficient has the wrong dimension");
    if (!(c.grid_h > 0.0)) throw RangeError("annulus-pde requires grid_h > 0");
    const double h = c.grid_h;
    const int half = static_cast<int>(std::ceil((c.rho_outer + 2.0 * h) / h));
    const GridIndex g{d, 2 * half + 1, -half * h, h};
    const std::size_t total = g.count();
    if (total > 4'000'000) throw RangeError("annulus-pde grid too large");

    auto boundary = c.boundary ? c.boundary : [mu](const Vec& y) { return outer_power(y.norm(), mu); };
    auto data = [&](const Vec& y) {
        const double r = y.norm();
        const double floor_r = 0.5 * c.rho_inner;
        if (r >= floor_r) return boundary(y);
        Vec e = Vec::Zero(d);
        if (r > 0.0) e = y / r; else e[0] = 1.0;
        return boundary(e * floor_r);
    };

    std::vector<long> unknown(total, -1);
    long nu = 0;
    for (std::size_t i = 0; i < total; ++i) {
        const double r = g.point(g.multi(i)).norm();
        if (r >= c.rho_inner && r <= c.rho_outer) unknown[i] = nu++;
    }
    if (nu == 0) throw RangeError("annulus contains no grid nodes");

    using Sp = Eigen::SparseMatrix<Complex>;
    std::vector<Eigen::Triplet<Complex>> trip;
    trip.reserve(static_cast<std::size_t>(nu) * static_cast<std::size_t>(1 + 2 * d + 4 * d * (d - 1)));
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(nu);
    const Complex shift = 0.5 * Complex(mu, 1.0);

    for (std::size_t i = 0; i < total; ++i) {
        const long row = unknown[i];
        if (row < 0) continue;
        const auto m = g.multi(i);
        const Vec y = g.point(m);
        auto add = [&](std::array<int, kMaxDim> off, Complex coef) {
            std::array<int, kMaxDim> nb = m;
            for (int k = 0; k < d; ++k) nb[static_cast<std::size_t>(k)] += off[static_cast<std::size_t>(k)];
            const std::size_t j = g.flat(nb);
            if (unknown[j] >= 0) trip.emplace_back(row, unknown[j], coef);
            else rhs[row] -= coef * data(g.point(nb));
        };
        std::array<int, kMaxDim> zero{};
        add(zero, -shift);
        for (int k = 0; k < d; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            Vec yp = y, ym = y;
            yp[k] += 0.5 * h;
            ym[k] -= 0.5 * h;
            const Complex ap = c.a->value(yp)(k, k);
            const Complex am = c.a->value(ym)(k, k);
            std::array<int, kMaxDim> ep{}, em{};
            ep[kk] = 1;
            em[kk] = -1;
            add(ep, ap / (h * h) - 0.25 * y[k] / h);
            add(em, am / (h * h) + 0.25 * y[k] / h);
            add(zero, -(ap + am) / (h * h));
            for (int l = 0; l < d; ++l) {
                if (l == k) continue;
                const auto ll = static_cast<std::size_t>(l);
                Vec yk = y, ykm = y;
                yk[k] += h;
                ykm[k] -= h;
                const Complex akp = c.a->value(yk)(k, l);
                const Complex akm = c.a->value(ykm)(k, l);
                const double s = 1.0 / (4.0 * h * h);
                std::array<int, kMaxDim> o{};
                o[kk] = 1; o[ll] = 1;   add(o, s * akp);
                o[kk] = 1; o[ll] = -1;  add(o, -s * akp);
                o[kk] = -1; o[ll] = 1;  add(o, -s * akm);
                o[kk] = -1; o[ll] = -1; add(o, s * akm);
            }
        }
    }
    Sp A(nu, nu);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    Eigen::SparseLU<Sp> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw SolverError("annulus-pde factorization failed: " + lu.lastErrorMessage(), 0, 0.0);
    const Eigen::VectorXcd sol = lu.solve(rhs);
    const double res = (A * sol - rhs).norm() / std::max(rhs.norm(), 1e-300);
    if (lu.info() != Eigen::Success || !std::isfinite(res) || res > 1e-8) {
        throw SolverError("annulus-pde solve failed", 1, res);
    }

    auto table = std::make_shared<CartesianTable>();
    table->d = d;
    for (int k = 0; k < d; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        table->shape[kk] = g.n;
        table->lo[kk] = g.lo;
        table->h[kk] = h;
    }
    table->w.resize(total);
    table->a.resize(total);
    const bool store_da = c.a->has_derivative();
    if (store_da) table->grad_a.resize(total * static_cast<std::size_t>(d * d * d));
    for (std::size_t i = 0; i < total; ++i) {
        const Vec y = g.point(g.multi(i));
        table->w[i] = unknown[i] >= 0 ? sol[unknown[i]] : data(y);
        table->a[i] = c.a->value(y);
        if (store_da) {
            const MatrixGradient da = c.a->derivative(y);
            std::size_t o = i * static_cast<std::size_t>(d * d * d);
            for (int k = 0; k < d; ++k)
                for (int a = 0; a < d; ++a)
                    for (int b = 0; b < d; ++b) table->grad_a[o++] = da[static_cast<std::size_t>(k)](a, b);
        }
    }
    ProfilePair p = pair_from_table(table, mu);
    p.a = c.a;
    p.label = "annulus-pde";
    return p;
}

}  // namespace

std::pair<ProfilePair, ValidationReport> synthesize_candidate(int d, double mu, SynthesisMode mode,
                                                              const SynthesisConfig& config) {
    check_synthesis_range(d, mu, config);
    ProfilePair p = mode == SynthesisMode::RadialOde ? radial_ode(d, mu, config) : annulus_pde(d, mu, config);
    p.provenance = Provenance::Synthesized;
    p.local_only = true;
    p.support = Annulus{config.rho_inner, config.rho_outer};
    if (mode == SynthesisMode::AnnulusPde) {
        const auto ab = p.a;
        std::vector<CMat> mats;
        for (const auto& y : shell_samples(d, config.rho_inner, config.rho_outer, 16, d == 2 ? 16 : 6)) {
            mats.push_back(ab->value(y));
        }
        double lo = 1e300, hi = 0.0;
        for (const auto& m : mats) {
            lo = std::min(lo, coercivity(m).coercivity);
            hi = std::max(hi, operator_norm(m));
        }
        p.bounds = lo > 0.0 ? EllipticityBounds{lo, std::max(lo, hi)} : EllipticityBounds{1.0, std::max(1.0, hi)};
    }
    check_profile(p);
    const auto samples = shell_samples(d, config.rho_inner, config.rho_outer, config.validation_radial,
                                       config.validation_angular);
    p.decay = measure_decay_constants(p, samples, 1.05);
    ValidationReport rep = validate_profile(p, samples, config.tolerances);
    return {std::move(p), std::move(rep)};
}

}  // namespace mrlab::profile
