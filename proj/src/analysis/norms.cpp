#include "mrlab/analysis.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mrlab::analysis {

NormKind NormKind::Ls(double s, double radius) {
    if (!(s >= 1.0) || !std::isfinite(s)) throw RangeError("L^s norm needs 1 <= s < inf");
    NormKind k;
    k.tag = NormTag::Ls;
    k.s = s;
    k.radius = radius;
    return k;
}

NormKind NormKind::L2ball(double radius) {
    if (!(radius > 0.0)) throw RangeError("L2ball radius must be positive");
    NormKind k;
    k.tag = NormTag::L2ball;
    k.radius = radius;
    return k;
}

NormKind NormKind::H1() {
    NormKind k;
    k.tag = NormTag::H1;
    return k;
}

NormKind NormKind::GradL2() {
    NormKind k;
    k.tag = NormTag::GradL2;
    return k;
}

NormKind NormKind::Hminus1() {
    NormKind k;
    k.tag = NormTag::Hminus1;
    return k;
}

std::string NormKind::to_string() const {
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", v);
        return std::string(buf);
    };
    switch (tag) {
        case NormTag::Ls:
            return "Ls(" + num(s) + ")" + (std::isfinite(radius) ? "[B" + num(radius) + "]" : "");
        case NormTag::L2ball: return "L2ball(" + num(radius) + ")";
        case NormTag::H1: return "H1";
        case NormTag::GradL2: return "GradL2";
        case NormTag::Hminus1: return "Hminus1";
    }
    return "?";
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
    if (n < 1) throw RangeError("Gauss-Legendre needs at least one node");
    // Golub–Welsch: eigenvalues of the Jacobi matrix.
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = k / std::sqrt(4.0 * k * k - 1.0);
        J(k, k - 1) = J(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        x[static_cast<std::size_t>(k)] = es.eigenvalues()[k];
        const double v = es.eigenvectors()(0, k);
        w[static_cast<std::size_t>(k)] = 2.0 * v * v;
    }
    return {x, w};
}

namespace {

struct Node {
    double r;
    double w;
};

std::vector<Node> radial_nodes(double R, const QuadratureOptions& q) {
    const auto [gx, gw] = gauss_legendre(q.radial_order);
    std::vector<Node> out;
    auto panel = [&](double a, double b) {
        for (std::size_t i = 0; i < gx.size(); ++i) out.push_back({0.5 * (a + b) + 0.5 * (b - a) * gx[i], 0.5 * (b - a) * gw[i]});
    };
    std::vector<double> br;
    for (double b : q.breakpoints)
        if (b > 0.0 && b < R) br.push_back(b);
    std::sort(br.begin(), br.end());
    br.push_back(R);
    const double first = br.front();
    double lo = first * std::ldexp(1.0, -q.geometric_depth);
    panel(0.0, lo);
    for (int j = q.geometric_depth - 1; j >= 0; --j) {
        const double hi = first * std::ldexp(1.0, -j);
        panel(lo, hi);
        lo = hi;
    }
    for (std::size_t i = 1; i < br.size(); ++i) {
        const double a = br[i - 1], b = br[i];
        const int m = std::max(1, static_cast<int>(std::ceil((b - a) * q.panels_per_unit)));
        for (int k = 0; k < m; ++k) panel(a + (b - a) * k / m, a + (b - a) * (k + 1) / m);
    }
    return out;
}

struct Direction {
    Vec e;
    double w;
};

std::vector<Direction> sphere_rule(int d, int n) {
    constexpr double pi = std::numbers::pi;
    std::vector<Direction> out;
    auto circle = [&](int m, double scale, const std::function<void(double, double, double)>& emit) {
        for (int k = 0; k < m; ++k) {
            const double a = 2.0 * pi * (k + 0.5) / m;
            emit(std::cos(a), std::sin(a), scale * 2.0 * pi / m);
        }
    };
    if (d == 1) {
        Vec p(1), m(1);
        p << 1.0;
        m << -1.0;
        out.push_back({p, 1.0});
        out.push_back({m, 1.0});
    } else if (d == 2) {
        circle(n > 0 ? n : 32, 1.0, [&](double c, double s, double w) {
            Vec e(2);
            e << c, s;
            out.push_back({e, w});
        });
    } else if (d == 3) {
        const int m = n > 0 ? n : 12;
        const auto [x, w] = gauss_legendre(m);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double st = std::sqrt(1.0 - x[i] * x[i]);
            circle(2 * m, w[i], [&](double c, double s, double wc) {
                Vec e(3);
                e << st * c, st * s, x[i];
                out.push_back({e, wc});
            });
        }
    } else {
        // cos ψ with weight √(1−x²): Gauss–Chebyshev of the second kind, times an S² rule.
        const int m = n > 0 ? n : 8;
        const auto s2 = sphere_rule(3, m);
        for (int k = 1; k <= m; ++k) {
            const double a = k * pi / (m + 1);
            const double x = std::cos(a), sx = std::sin(a);
            const double wx = pi / (m + 1) * sx * sx;
            for (const auto& s : s2) {
                Vec e(4);
                e << sx * s.e[0], sx * s.e[1], sx * s.e[2], x;
                out.push_back({e, wx * s.w});
            }
        }
    }
    return out;
}

double integrand(const SpaceTimeField& f, double t, const Vec& x, const NormKind& k) {
    auto finite = [&](double v) {
        if (!std::isfinite(v)) throw Error("slice norm: non-finite sample at t=" + std::to_string(t));
        return v;
    };
    switch (k.tag) {
        case NormTag::Ls: return finite(std::pow(std::abs(f.value(t, x)), k.s));
        case NormTag::L2ball: return finite(std::norm(f.value(t, x)));
        case NormTag::GradL2: return finite(f.gradient(t, x).squaredNorm());
        case NormTag::H1: return finite(std::norm(f.value(t, x)) + f.gradient(t, x).squaredNorm());
        case NormTag::Hminus1: break;
    }
    throw RangeError("H^-1 slice norm of a sampled field needs a discretization");
}

double finish(double integral, const NormKind& k) {
    if (k.tag == NormTag::Ls) return std::pow(integral, 1.0 / k.s);
    return std::sqrt(integral);
}

}  // namespace

double slice_norm(const SpaceTimeField& f, double t, const NormKind& kind, const QuadratureOptions& q) {
    const int d = f.dim();
    if (kind.tag == NormTag::Hminus1) throw RangeError("H^-1 slice norm of a sampled field needs a discretization");
    if (kind.box) {
        const auto [lo, hi] = *kind.box;
        if (!(hi > lo)) throw RangeError("box region needs lo < hi");
        const auto [gx, gw] = gauss_legendre(q.radial_order);
        std::vector<Node> axis;
        const double hp = (hi - lo) / q.box_panels;
        for (int p = 0; p < q.box_panels; ++p)
            for (std::size_t i = 0; i < gx.size(); ++i) axis.push_back({lo + hp * (p + 0.5 + 0.5 * gx[i]), 0.5 * hp * gw[i]});
        std::size_t total = 1;
        for (int k = 0; k < d; ++k) total *= axis.size();
        const std::size_t slab = total / axis.size();
        std::vector<double> part(axis.size(), 0.0);
        parallel_for(axis.size(), q.threads, [&](std::size_t i0) {
            double s = 0.0;
            Vec x(d);
            for (std::size_t rest = 0; rest < slab; ++rest) {
                std::size_t idx = rest;
                double w = axis[i0].w;
                x[0] = axis[i0].r;
                for (int k = d - 1; k >= 1; --k) {
                    const Node& nd = axis[idx % axis.size()];
                    idx /= axis.size();
                    x[k] = nd.r;
                    w *= nd.w;
                }
                s += w * integrand(f, t, x, kind);
            }
            part[i0] = s;
        });
        double sum = 0.0;
        for (double v : part) sum += v;
        return finish(sum, kind);
    }
    const double R = std::isfinite(kind.radius) ? kind.radius : q.support_radius;
    if (!(R > 0.0)) throw RangeError("integration radius must be positive");
    const auto rn = radial_nodes(R, q);
    const auto dirs = sphere_rule(d, q.angular);
    std::vector<double> part(rn.size(), 0.0);
    parallel_for(rn.size(), q.threads, [&](std::size_t i) {
        double s = 0.0;
        for (const auto& e : dirs) s += e.w * integrand(f, t, e.e * rn[i].r, kind);
        part[i] = s * rn[i].w * std::pow(rn[i].r, d - 1);
    });
    double sum = 0.0;
    for (double v : part) sum += v;
    return finish(sum, kind);
}

double slice_norm(const SpaceTimeField& f, double t, const NormKind& kind, const pde::Discretization& disc) {
    return slice_norm(pde::nodal_values(disc, f, t), disc, kind);
}

double slice_norm(const pde::CVector& u, const pde::Discretization& disc, const NormKind& kind,
                  const pde::DiscreteNorms* norms) {
    if (static_cast<std::size_t>(u.size()) != disc.unknowns()) throw RangeError("nodal vector does not match the grid");
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (!std::isfinite(u[i].real()) || !std::isfinite(u[i].imag())) throw Error("slice norm: non-finite nodal value");
    }
    if (kind.tag == NormTag::Ls || kind.tag == NormTag::L2ball) {
        const double s = kind.tag == NormTag::Ls ? kind.s : 2.0;
        double sum = 0.0;
        for (std::size_t i = 0; i < disc.unknowns(); ++i) {
            const Vec x = disc.node(i);
            bool in;
            if (kind.box) {
                in = (x.array() >= kind.box->first).all() && (x.array() <= kind.box->second).all();
            } else {
                in = !std::isfinite(kind.radius) || x.norm() <= kind.radius;
            }
            if (in) sum += std::pow(std::abs(u[static_cast<Eigen::Index>(i)]), s);
        }
        return std::pow(disc.cell_volume() * sum, 1.0 / s);
    }
    std::unique_ptr<pde::DiscreteNorms> own;
    if (!norms) {
        own = std::make_unique<pde::DiscreteNorms>(disc);
        norms = own.get();
    }
    switch (kind.tag) {
        case NormTag::H1: return norms->h1(u);
        case NormTag::GradL2: return norms->grad_l2(u);
        case NormTag::Hminus1: return norms->hminus1(u);
        default: break;
    }
    throw RangeError("unsupported norm kind");
}

NormSeries norm_series(const SpaceTimeField& f, const std::vector<double>& times, const NormKind& kind,
                       const QuadratureOptions& q) {
    NormSeries s;
    s.kind = kind;
    s.times = times;
    s.values.assign(times.size(), 0.0);
    s.divergent.assign(times.size(), false);
    QuadratureOptions inner = q;
    inner.threads = 1;
    parallel_for(times.size(), q.threads, [&](std::size_t k) { s.values[k] = slice_norm(f, times[k], kind, inner); });
    return s;
}

NormSeries norm_series(const pde::DiscreteField& u, const NormKind& kind, int threads) {
    if (!u.disc) throw RangeError("norm_series needs the field's discretization");
    NormSeries s;
    s.kind = kind;
    s.times = u.times;
    s.values.assign(u.levels.size(), 0.0);
    s.divergent.assign(u.levels.size(), false);
    const pde::DiscreteNorms norms(*u.disc);
    parallel_for(u.levels.size(), threads, [&](std::size_t k) { s.values[k] = slice_norm(u.levels[k], *u.disc, kind, &norms); });
    return s;
}

}  // namespace mrlab::analysis
