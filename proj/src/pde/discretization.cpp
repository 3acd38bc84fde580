#include "mrlab/pde.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mrlab::pde {

std::size_t Discretization::unknowns() const {
    std::size_t c = 1;
    for (int k = 0; k < d; ++k) c *= static_cast<std::size_t>(n - 1);
    return c;
}

double Discretization::cell_volume() const { return std::pow(h, d); }

Vec Discretization::node(std::size_t index) const {
    Vec x(d);
    const auto p = static_cast<std::size_t>(n - 1);
    for (int k = d - 1; k >= 0; --k) {
        x[k] = lo + h * static_cast<double>(1 + index % p);
        index /= p;
    }
    return x;
}

std::vector<double> graded_time_mesh(double T_max, int M) {
    if (!(T_max > 0.0) || !(T_max < 1.0)) throw RangeError("graded mesh requires 0 < T_max < 1");
    if (M < 1) throw RangeError("graded mesh requires M >= 1");
    std::vector<double> t{0.0};
    for (int j = 0;; ++j) {
        const double a = 1.0 - std::ldexp(1.0, -j);
        if (!(a < T_max)) break;
        const double b = std::min(1.0 - std::ldexp(1.0, -j - 1), T_max);
        for (int m = 1; m <= M; ++m) t.push_back(m == M ? b : a + (b - a) * m / M);
        if (b == T_max) break;
    }
    return t;
}

Discretization build_discretization(const DiscretizationConfig& c) {
    if (c.d < 1 || c.d > kMaxDim) throw RangeError("dimension must be in [1, 4]");
    if (!(c.h > 0.0) || !std::isfinite(c.h)) throw RangeError("grid spacing h must be positive");
    if (!(c.T_max > 0.0)) throw RangeError("T_max must be positive");
    if (!(c.T_max < 1.0)) throw SingularTimeError("T_max must be < 1 (self-similar collapse at t = 1)");
    if (!(c.theta >= 0.5 && c.theta <= 1.0)) throw RangeError("theta must lie in [1/2, 1]");
    Discretization D;
    D.d = c.d;
    D.lo = c.lo.value_or(-c.L);
    D.hi = c.hi.value_or(c.L);
    if (!(D.hi > D.lo)) throw RangeError("box requires lo < hi (L > 0)");
    const double cells = (D.hi - D.lo) / c.h;
    D.n = static_cast<int>(std::lround(cells));
    if (D.n < 2 || std::abs(cells - D.n) > 1e-9 * cells) {
        throw RangeError("box length must be an integer multiple (>= 2) of h");
    }
    D.h = (D.hi - D.lo) / D.n;
    if (c.require_support && !(D.lo < -2.0 && D.hi > 2.0)) {
        throw RangeError("box must contain the closed ball of radius 2 strictly");
    }
    if (c.resolution_guard && 1.0 - c.T_max < D.h * D.h) {
        throw RangeError("resolution guard: 1 - T_max = " + std::to_string(1.0 - c.T_max) +
                         " is below h^2 = " + std::to_string(D.h * D.h));
    }
    D.theta = c.theta;
    D.mesh = c.mesh;
    if (c.mesh == TimeMeshKind::Graded) {
        D.M = c.M;
        D.times = graded_time_mesh(c.T_max, c.M);
    } else {
        const int N = c.uniform_steps > 0 ? c.uniform_steps
                                          : static_cast<int>(std::ceil(c.T_max / (D.h * D.h) - 1e-9));
        if (N < 1) throw RangeError("uniform mesh needs at least one step");
        D.times.resize(static_cast<std::size_t>(N) + 1);
        for (int k = 0; k <= N; ++k) D.times[static_cast<std::size_t>(k)] = c.T_max * k / N;
    }
    return D;
}

// ---------------------------------------------------------------------------

namespace {

int ipow(int b, int e) {
    int r = 1;
    while (e-- > 0) r *= b;
    return r;
}

}  // namespace

Assembler::Assembler(const Discretization& disc) : disc_(disc) {
    const int d = disc.d;
    const int P = disc.n - 1;
    const int corners = 1 << d;
    const std::size_t N = disc.unknowns();
    if (N == 0) throw RangeError("grid has no interior unknowns");

    // Element matrices of the Kuhn triangulation of one cube.
    E_.assign(static_cast<std::size_t>(d * d), std::vector<double>(static_cast<std::size_t>(corners * corners), 0.0));
    std::vector<int> perm(static_cast<std::size_t>(d));
    std::iota(perm.begin(), perm.end(), 0);
    double fact = 1.0;
    for (int k = 2; k <= d; ++k) fact *= k;
    const double scale = std::pow(disc.h, d - 2) / fact;
    do {
        std::vector<int> verts{0};
        for (int m = 0; m < d; ++m) verts.push_back(verts.back() | (1 << perm[static_cast<std::size_t>(m)]));
        Eigen::MatrixXd Pm(d, d);
        for (int m = 1; m <= d; ++m)
            for (int k = 0; k < d; ++k) Pm(k, m - 1) = ((verts[static_cast<std::size_t>(m)] >> k) & 1) - (verts[0] >> k & 1);
        const Eigen::MatrixXd inv = Pm.inverse();
        Eigen::MatrixXd G(d + 1, d);
        G.bottomRows(d) = inv;
        G.row(0) = -inv.colwise().sum();
        for (int k = 0; k < d; ++k)
            for (int l = 0; l < d; ++l)
                for (int a = 0; a <= d; ++a)
                    for (int b = 0; b <= d; ++b)
                        E_[static_cast<std::size_t>(k * d + l)]
                          [static_cast<std::size_t>(verts[static_cast<std::size_t>(a)] * corners + verts[static_cast<std::size_t>(b)])] +=
                            scale * G(a, k) * G(b, l);
    } while (std::next_permutation(perm.begin(), perm.end()));

    // Kuhn neighbours: offsets with all components in {0,1} or all in {0,−1}.
    const int codes = ipow(3, d);
    std::vector<std::vector<int>> offsets;
    for (int mask = 0; mask < corners; ++mask) {
        for (int sgn : {1, -1}) {
            if (mask == 0 && sgn == -1) continue;
            std::vector<int> off(static_cast<std::size_t>(d));
            for (int k = 0; k < d; ++k) off[static_cast<std::size_t>(k)] = ((mask >> k) & 1) * sgn;
            offsets.push_back(off);
        }
    }
    auto multi = [&](std::size_t idx) {
        std::array<int, kMaxDim> m{};
        for (int k = d - 1; k >= 0; --k) {
            m[static_cast<std::size_t>(k)] = static_cast<int>(idx % static_cast<std::size_t>(P));
            idx /= static_cast<std::size_t>(P);
        }
        return m;
    };
    auto flat = [&](const std::array<int, kMaxDim>& m) {
        std::size_t idx = 0;
        for (int k = 0; k < d; ++k) idx = idx * static_cast<std::size_t>(P) + static_cast<std::size_t>(m[static_cast<std::size_t>(k)]);
        return idx;
    };
    std::vector<Eigen::Triplet<Complex>> trip;
    trip.reserve(N * offsets.size());
    for (std::size_t i = 0; i < N; ++i) {
        const auto m = multi(i);
        for (const auto& off : offsets) {
            std::array<int, kMaxDim> q = m;
            bool inside = true;
            for (int k = 0; k < d; ++k) {
                q[static_cast<std::size_t>(k)] += off[static_cast<std::size_t>(k)];
                inside = inside && q[static_cast<std::size_t>(k)] >= 0 && q[static_cast<std::size_t>(k)] < P;
            }
            if (inside) trip.emplace_back(static_cast<int>(i), static_cast<int>(flat(q)), Complex{});
        }
    }
    pattern_.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    pattern_.setFromTriplets(trip.begin(), trip.end());
    pattern_.makeCompressed();

    slot_.assign(N * static_cast<std::size_t>(codes), -1);
    diag_.assign(N, -1);
    for (Eigen::Index j = 0; j < pattern_.outerSize(); ++j) {
        const auto mj = multi(static_cast<std::size_t>(j));
        for (int p = pattern_.outerIndexPtr()[j]; p < pattern_.outerIndexPtr()[j + 1]; ++p) {
            const auto i = static_cast<std::size_t>(pattern_.innerIndexPtr()[p]);
            const auto mi = multi(i);
            int code = 0;
            for (int k = d - 1; k >= 0; --k) code = code * 3 + (mj[static_cast<std::size_t>(k)] - mi[static_cast<std::size_t>(k)] + 1);
            slot_[i * static_cast<std::size_t>(codes) + static_cast<std::size_t>(code)] = p;
            if (static_cast<Eigen::Index>(i) == j) diag_[i] = p;
        }
    }
}

std::size_t Assembler::cells() const {
    std::size_t c = 1;
    for (int k = 0; k < disc_.d; ++k) c *= static_cast<std::size_t>(disc_.n);
    return c;
}

Vec Assembler::cell_centre(std::size_t cell) const {
    Vec x(disc_.d);
    const auto n = static_cast<std::size_t>(disc_.n);
    for (int k = disc_.d - 1; k >= 0; --k) {
        x[k] = disc_.lo + disc_.h * (static_cast<double>(cell % n) + 0.5);
        cell /= n;
    }
    return x;
}

std::vector<CMat> Assembler::sample(const SpaceTimeMatrixField& b, double t, int threads) const {
    if (b.dim() != disc_.d) throw RangeError("coefficient dimension does not match the grid");
    std::vector<CMat> out(cells());
    parallel_for(out.size(), threads, [&](std::size_t c) { out[c] = b.value(t, cell_centre(c)); });
    return out;
}

SpMat Assembler::stiffness(const std::vector<CMat>& coeff) const {
    const int d = disc_.d;
    const int n = disc_.n;
    const int P = n - 1;
    const int corners = 1 << d;
    const int codes = ipow(3, d);
    if (coeff.size() != cells()) throw RangeError("one coefficient matrix per cell required");
    SpMat K = pattern_;
    Complex* val = K.valuePtr();
    std::vector<Complex> local(static_cast<std::size_t>(corners * corners));
    std::vector<long> node(static_cast<std::size_t>(corners));
    std::array<int, kMaxDim> c{};
    for (std::size_t cell = 0; cell < coeff.size(); ++cell) {
        std::size_t rem = cell;
        for (int k = d - 1; k >= 0; --k) {
            c[static_cast<std::size_t>(k)] = static_cast<int>(rem % static_cast<std::size_t>(n));
            rem /= static_cast<std::size_t>(n);
        }
        bool any = false;
        for (int a = 0; a < corners; ++a) {
            long idx = 0;
            bool interior = true;
            for (int k = 0; k < d; ++k) {
                const int g = c[static_cast<std::size_t>(k)] + ((a >> k) & 1);
                interior = interior && g >= 1 && g <= P;
                idx = idx * P + (g - 1);
            }
            node[static_cast<std::size_t>(a)] = interior ? idx : -1;
            any = any || interior;
        }
        if (!any) continue;
        const CMat& B = coeff[cell];
        std::fill(local.begin(), local.end(), Complex{});
        for (int k = 0; k < d; ++k)
            for (int l = 0; l < d; ++l) {
                const Complex bkl = B(k, l);
                if (bkl == Complex{}) continue;
                const auto& E = E_[static_cast<std::size_t>(k * d + l)];
                for (std::size_t q = 0; q < local.size(); ++q) local[q] += bkl * E[q];
            }
        for (int a = 0; a < corners; ++a) {
            const long ia = node[static_cast<std::size_t>(a)];
            if (ia < 0) continue;
            for (int b = 0; b < corners; ++b) {
                const long ib = node[static_cast<std::size_t>(b)];
                if (ib < 0) continue;
                int code = 0;
                for (int k = d - 1; k >= 0; --k) code = code * 3 + (((b >> k) & 1) - ((a >> k) & 1) + 1);
                const int s = slot_[static_cast<std::size_t>(ia) * static_cast<std::size_t>(codes) + static_cast<std::size_t>(code)];
                if (s >= 0) val[s] += local[static_cast<std::size_t>(a * corners + b)];
            }
        }
    }
    return K;
}

SpMat Assembler::stiffness(const SpaceTimeMatrixField& b, double t, int threads) const {
    return stiffness(sample(b, t, threads));
}

SpMat Assembler::laplacian() const {
    return stiffness(std::vector<CMat>(cells(), CMat::Identity(disc_.d, disc_.d)));
}

}  // namespace mrlab::pde
