#include "mrlab/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace mrlab::profile {

namespace {

/// Weights of the 4-point Lagrange basis (value, first, second derivative) at x
/// for arbitrary distinct nodes.
struct Lagrange4 {
    std::array<double, 4> v{}, d1{}, d2{};
};

Lagrange4 lagrange4(const std::array<double, 4>& nodes, double x) {
    Lagrange4 L;
    for (int j = 0; j < 4; ++j) {
        double denom = 1.0;
        std::array<double, 3> r{};
        int m = 0;
        for (int k = 0; k < 4; ++k) {
            if (k == j) continue;
            denom *= nodes[j] - nodes[k];
            r[m++] = nodes[k];
        }
        const double a = x - r[0], b = x - r[1], c = x - r[2];
        L.v[j] = a * b * c / denom;
        L.d1[j] = (b * c + a * c + a * b) / denom;
        L.d2[j] = 2.0 * (a + b + c) / denom;
    }
    return L;
}

/// Uniform-grid variant: nodes 0..3 in local units, derivatives per unit.
Lagrange4 lagrange4_uniform(double x) { return lagrange4({0.0, 1.0, 2.0, 3.0}, x); }

/// Locates the interval [rho_i, rho_{i+1}] containing r; throws outside range.
std::size_t locate(const std::vector<double>& nodes, double r) {
    const double lo = nodes.front(), hi = nodes.back();
    const double slack = 1e-12 * std::max(1.0, std::abs(hi));
    if (r < lo - slack || r > hi + slack) {
        throw RangeError("radial sampler queried at rho=" + std::to_string(r) +
                         " outside tabulated range [" + std::to_string(lo) + ", " +
                         std::to_string(hi) + "]");
    }
    auto it = std::upper_bound(nodes.begin(), nodes.end(), r);
    std::size_t i = it == nodes.begin() ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
    return std::min(i, nodes.size() - 2);
}

template <class T>
std::array<T, 3> hermite_jet(const std::vector<double>& rho, const std::vector<T>& f,
                             const std::vector<T>& df, const std::vector<T>& d2f, double r,
                             T zero) {
    const std::size_t n = rho.size();
    const std::size_t i = locate(rho, r);
    if (df.empty()) {
        std::size_t base = i == 0 ? 0 : i - 1;
        base = std::min(base, n - 4);
        const std::array<double, 4> nodes{rho[base], rho[base + 1], rho[base + 2], rho[base + 3]};
        const auto L = lagrange4(nodes, r);
        std::array<T, 3> out{zero, zero, zero};
        for (int j = 0; j < 4; ++j) {
            out[0] += L.v[j] * f[base + j];
            out[1] += L.d1[j] * f[base + j];
            out[2] += L.d2[j] * f[base + j];
        }
        return out;
    }
    const double h = rho[i + 1] - rho[i];
    const double s = (r - rho[i]) / h;
    const double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
    if (d2f.empty()) {
        const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
        const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
        const double g00 = 6 * s2 - 6 * s, g10 = 3 * s2 - 4 * s + 1;
        const double g01 = -6 * s2 + 6 * s, g11 = 3 * s2 - 2 * s;
        const double k00 = 12 * s - 6, k10 = 6 * s - 4, k01 = -12 * s + 6, k11 = 6 * s - 2;
        const T& p0 = f[i]; const T& p1 = f[i + 1];
        const T m0 = df[i] * h; const T m1 = df[i + 1] * h;
        return {h00 * p0 + h10 * m0 + h01 * p1 + h11 * m1,
                (g00 * p0 + g10 * m0 + g01 * p1 + g11 * m1) / h,
                (k00 * p0 + k10 * m0 + k01 * p1 + k11 * m1) / (h * h)};
    }
    // Quintic Hermite on (f, f', f'') at both ends.
    const double H0 = 1 - 10 * s3 + 15 * s4 - 6 * s5;
    const double H1 = s - 6 * s3 + 8 * s4 - 3 * s5;
    const double H2 = 0.5 * (s2 - 3 * s3 + 3 * s4 - s5);
    const double H5 = 10 * s3 - 15 * s4 + 6 * s5;
    const double H4 = -4 * s3 + 7 * s4 - 3 * s5;
    const double H3 = 0.5 * (s3 - 2 * s4 + s5);
    const double D0 = -30 * s2 + 60 * s3 - 30 * s4;
    const double D1 = 1 - 18 * s2 + 32 * s3 - 15 * s4;
    const double D2 = 0.5 * (2 * s - 9 * s2 + 12 * s3 - 5 * s4);
    const double D5 = -D0;
    const double D4 = -12 * s2 + 28 * s3 - 15 * s4;
    const double D3 = 0.5 * (3 * s2 - 8 * s3 + 5 * s4);
    const double E0 = -60 * s + 180 * s2 - 120 * s3;
    const double E1 = -36 * s + 96 * s2 - 60 * s3;
    const double E2 = 0.5 * (2 - 18 * s + 36 * s2 - 20 * s3);
    const double E5 = -E0;
    const double E4 = -24 * s + 84 * s2 - 60 * s3;
    const double E3 = 0.5 * (6 * s - 24 * s2 + 20 * s3);
    const T& p0 = f[i]; const T& p1 = f[i + 1];
    const T m0 = df[i] * h; const T m1 = df[i + 1] * h;
    const T c0 = d2f[i] * (h * h); const T c1 = d2f[i + 1] * (h * h);
    return {H0 * p0 + H1 * m0 + H2 * c0 + H5 * p1 + H4 * m1 + H3 * c1,
            (D0 * p0 + D1 * m0 + D2 * c0 + D5 * p1 + D4 * m1 + D3 * c1) / h,
            (E0 * p0 + E1 * m0 + E2 * c0 + E5 * p1 + E4 * m1 + E3 * c1) / (h * h)};
}

/// Tensor-product cubic Lagrange stencil on a uniform grid.
struct TensorStencil {
    int d = 0;
    std::array<int, kMaxDim> base{};
    std::array<Lagrange4, kMaxDim> axis{};
};

TensorStencil make_stencil(const CartesianTable& t, const Vec& y) {
    TensorStencil st;
    st.d = t.d;
    for (int k = 0; k < t.d; ++k) {
        const double u = (y[k] - t.lo[k]) / t.h[k];
        const double top = t.shape[k] - 1;
        if (u < -1e-9 || u > top + 1e-9) {
            throw RangeError("cartesian sampler queried outside the grid on axis " +
                             std::to_string(k));
        }
        int cell = static_cast<int>(std::floor(u));
        int base = std::clamp(cell - 1, 0, t.shape[k] - 4);
        st.base[k] = base;
        auto L = lagrange4_uniform(u - base);
        for (int j = 0; j < 4; ++j) {
            L.d1[j] /= t.h[k];
            L.d2[j] /= t.h[k] * t.h[k];
        }
        st.axis[k] = L;
    }
    return st;
}

/// Visits the 4^d stencil nodes: fn(flat node index, per-axis offsets).
template <class Fn>
void for_each_stencil(const CartesianTable& t, const TensorStencil& st, Fn&& fn) {
    std::array<int, kMaxDim> off{};
    const int total = 1 << (2 * t.d);
    for (int m = 0; m < total; ++m) {
        int rem = m;
        std::size_t flat = 0;
        for (int k = 0; k < t.d; ++k) {
            off[k] = rem & 3;
            rem >>= 2;
        }
        for (int k = 0; k < t.d; ++k) {
            flat = flat * static_cast<std::size_t>(t.shape[k]) +
                   static_cast<std::size_t>(st.base[k] + off[k]);
        }
        fn(flat, off);
    }
}

/// Weight of a stencil node for ∂^(e) with e a multi-index of orders ≤ 2.
double stencil_weight(const TensorStencil& st, const std::array<int, kMaxDim>& off,
                      const std::array<int, kMaxDim>& order) {
    double w = 1.0;
    for (int k = 0; k < st.d; ++k) {
        const auto& L = st.axis[k];
        w *= order[k] == 0 ? L.v[off[k]] : order[k] == 1 ? L.d1[off[k]] : L.d2[off[k]];
    }
    return w;
}

std::array<int, kMaxDim> unit_order(int k) {
    std::array<int, kMaxDim> o{};
    o[k] = 1;
    return o;
}

CMat zero_matrix(int d) { return CMat::Zero(d, d); }

}  // namespace

// ---------------------------------------------------------------------------

void RadialTable::check() const {
    const std::size_t n = rho.size();
    if (d < 2 || d > kMaxDim) throw RangeError("radial table: dimension must be in [2, 4]");
    if (n < 4) throw RangeError("radial table needs at least 4 nodes");
    if (W.size() != n || A.size() != n) throw RangeError("radial table: column length mismatch");
    if (!dW.empty() && dW.size() != n) throw RangeError("radial table: dW length mismatch");
    if (!d2W.empty() && (d2W.size() != n || dW.empty())) {
        throw RangeError("radial table: d2W requires dW of matching length");
    }
    if (!dA.empty() && dA.size() != n) throw RangeError("radial table: dA length mismatch");
    if (rho.front() < 0.0) throw RangeError("radial table: negative radius");
    for (std::size_t i = 1; i < n; ++i) {
        if (!(rho[i] > rho[i - 1])) throw RangeError("radial table: radii not strictly increasing");
    }
}

std::size_t CartesianTable::node_count() const {
    std::size_t n = 1;
    for (int k = 0; k < d; ++k) n *= static_cast<std::size_t>(shape[k]);
    return n;
}

Vec CartesianTable::node(std::size_t index) const {
    Vec y(d);
    for (int k = d - 1; k >= 0; --k) {
        const auto nk = static_cast<std::size_t>(shape[k]);
        y[k] = lo[k] + h[k] * static_cast<double>(index % nk);
        index /= nk;
    }
    return y;
}

void CartesianTable::check() const {
    if (d < 2 || d > kMaxDim) throw RangeError("cartesian table: dimension must be in [2, 4]");
    for (int k = 0; k < d; ++k) {
        if (shape[k] < 4) throw RangeError("cartesian table needs at least 4 nodes per axis");
        if (!(h[k] > 0.0)) throw RangeError("cartesian table: spacing must be positive");
    }
    const std::size_t n = node_count();
    const auto dd = static_cast<std::size_t>(d);
    if (w.size() != n || a.size() != n) throw RangeError("cartesian table: column length mismatch");
    if (!grad_w.empty() && grad_w.size() != n * dd) {
        throw RangeError("cartesian table: gradient length mismatch");
    }
    if (!grad_a.empty() && grad_a.size() != n * dd * dd * dd) {
        throw RangeError("cartesian table: coefficient derivative length mismatch");
    }
}

// ---------------------------------------------------------------------------

RadialScalarField::RadialScalarField(std::shared_ptr<const RadialTable> table)
    : ScalarField(table->d), table_(std::move(table)) {
    table_->check();
}

std::array<Complex, 3> RadialScalarField::radial_jet(double rho) const {
    return hermite_jet(table_->rho, table_->W, table_->dW, table_->d2W, rho, Complex{});
}

Complex RadialScalarField::value(const Vec& y) const { return radial_jet(y.norm())[0]; }

CVec RadialScalarField::gradient(const Vec& y) const {
    const double r = y.norm();
    if (r == 0.0) return CVec::Zero(dim());
    const auto jet = radial_jet(r);
    return (y / r).cast<Complex>() * jet[1];
}

CMat RadialScalarField::hessian(const Vec& y) const {
    const int d = dim();
    const double r = y.norm();
    const auto jet = radial_jet(r);
    if (r == 0.0) return CMat::Identity(d, d) * jet[2];
    const Vec e = y / r;
    const RMat P = e * e.transpose();
    const RMat I = RMat::Identity(d, d);
    return P.cast<Complex>() * jet[2] + (I - P).cast<Complex>() * (jet[1] / r);
}

RadialMatrixField::RadialMatrixField(std::shared_ptr<const RadialTable> table)
    : MatrixField(table->d), table_(std::move(table)) {
    table_->check();
}

CMat RadialMatrixField::value(const Vec& y) const {
    const std::vector<CMat> none;
    return hermite_jet(table_->rho, table_->A, table_->dA, none, y.norm(),
                       zero_matrix(dim()))[0];
}

MatrixGradient RadialMatrixField::derivative(const Vec& y) const {
    const int d = dim();
    const double r = y.norm();
    MatrixGradient g;
    for (int k = 0; k < d; ++k) g[static_cast<std::size_t>(k)] = zero_matrix(d);
    if (r == 0.0) return g;
    const std::vector<CMat> none;
    const auto jet = hermite_jet(table_->rho, table_->A, table_->dA, none, r, zero_matrix(d));
    for (int k = 0; k < d; ++k) g[static_cast<std::size_t>(k)] = jet[1] * (y[k] / r);
    return g;
}

// ---------------------------------------------------------------------------

CartesianScalarField::CartesianScalarField(std::shared_ptr<const CartesianTable> table)
    : ScalarField(table->d), table_(std::move(table)) {
    table_->check();
}

Complex CartesianScalarField::value(const Vec& y) const {
    const auto st = make_stencil(*table_, y);
    Complex acc{};
    const std::array<int, kMaxDim> order{};
    for_each_stencil(*table_, st, [&](std::size_t flat, const auto& off) {
        acc += stencil_weight(st, off, order) * table_->w[flat];
    });
    return acc;
}

CVec CartesianScalarField::gradient(const Vec& y) const {
    const int d = dim();
    const auto st = make_stencil(*table_, y);
    CVec g = CVec::Zero(d);
    const bool stored = !table_->grad_w.empty();
    const std::array<int, kMaxDim> order0{};
    for_each_stencil(*table_, st, [&](std::size_t flat, const auto& off) {
        if (stored) {
            const double w0 = stencil_weight(st, off, order0);
            for (int k = 0; k < d; ++k) {
                g[k] += w0 * table_->grad_w[flat * static_cast<std::size_t>(d) +
                                            static_cast<std::size_t>(k)];
            }
        } else {
            for (int k = 0; k < d; ++k) {
                g[k] += stencil_weight(st, off, unit_order(k)) * table_->w[flat];
            }
        }
    });
    return g;
}

CMat CartesianScalarField::hessian(const Vec& y) const {
    const int d = dim();
    const auto st = make_stencil(*table_, y);
    CMat H = CMat::Zero(d, d);
    const bool stored = !table_->grad_w.empty();
    for_each_stencil(*table_, st, [&](std::size_t flat, const auto& off) {
        for (int k = 0; k < d; ++k) {
            for (int l = 0; l < d; ++l) {
                if (stored) {
                    // ∂_l of the interpolated ∂_k w.
                    H(k, l) += stencil_weight(st, off, unit_order(l)) *
                               table_->grad_w[flat * static_cast<std::size_t>(d) +
                                              static_cast<std::size_t>(k)];
                } else {
                    auto order = unit_order(k);
                    order[l] += 1;
                    H(k, l) += stencil_weight(st, off, order) * table_->w[flat];
                }
            }
        }
    });
    if (stored) H = (0.5 * (H + H.transpose())).eval();
    return H;
}

CartesianMatrixField::CartesianMatrixField(std::shared_ptr<const CartesianTable> table)
    : MatrixField(table->d), table_(std::move(table)) {
    table_->check();
}

CMat CartesianMatrixField::value(const Vec& y) const {
    const auto st = make_stencil(*table_, y);
    CMat acc = zero_matrix(dim());
    const std::array<int, kMaxDim> order{};
    for_each_stencil(*table_, st, [&](std::size_t flat, const auto& off) {
        acc += stencil_weight(st, off, order) * table_->a[flat];
    });
    return acc;
}

MatrixGradient CartesianMatrixField::derivative(const Vec& y) const {
    const int d = dim();
    const auto dd = static_cast<std::size_t>(d);
    const auto st = make_stencil(*table_, y);
    MatrixGradient g;
    for (int k = 0; k < d; ++k) g[static_cast<std::size_t>(k)] = zero_matrix(d);
    const bool stored = !table_->grad_a.empty();
    const std::array<int, kMaxDim> order0{};
    for_each_stencil(*table_, st, [&](std::size_t flat, const auto& off) {
        for (int k = 0; k < d; ++k) {
            auto& out = g[static_cast<std::size_t>(k)];
            if (stored) {
                const double w0 = stencil_weight(st, off, order0);
                const std::size_t base = (flat * dd + static_cast<std::size_t>(k)) * dd * dd;
                for (int i = 0; i < d; ++i) {
                    for (int j = 0; j < d; ++j) {
                        out(i, j) += w0 * table_->grad_a[base + static_cast<std::size_t>(i) * dd +
                                                         static_cast<std::size_t>(j)];
                    }
                }
            } else {
                out += stencil_weight(st, off, unit_order(k)) * table_->a[flat];
            }
        }
    });
    return g;
}

// ---------------------------------------------------------------------------
// Closed-form families

namespace {

class GaussianW final : public ScalarField {
public:
    explicit GaussianW(int d) : ScalarField(d) {}
    Complex value(const Vec& y) const override { return std::exp(-0.25 * y.squaredNorm()); }
    bool has_gradient() const override { return true; }
    bool has_hessian() const override { return true; }
    CVec gradient(const Vec& y) const override {
        return (-0.5 * y).cast<Complex>() * value(y);
    }
    CMat hessian(const Vec& y) const override {
        const int d = dim();
        const RMat m = -0.5 * RMat::Identity(d, d) + 0.25 * y * y.transpose();
        return m.cast<Complex>() * value(y);
    }
};

class DecayW final : public ScalarField {
public:
    DecayW(int d, double mu, Complex c) : ScalarField(d), mu_(mu), c_(c) {}
    Complex value(const Vec& y) const override {
        return c_ * std::pow(1.0 + y.squaredNorm(), -0.5 * mu_);
    }
    bool has_gradient() const override { return true; }
    bool has_hessian() const override { return true; }
    CVec gradient(const Vec& y) const override {
        const double q = 1.0 + y.squaredNorm();
        return (y * (-mu_ * std::pow(q, -0.5 * mu_ - 1.0))).cast<Complex>() * c_;
    }
    CMat hessian(const Vec& y) const override {
        const int d = dim();
        const double q = 1.0 + y.squaredNorm();
        const RMat m = -mu_ * std::pow(q, -0.5 * mu_ - 1.0) * RMat::Identity(d, d) +
                       mu_ * (mu_ + 2.0) * std::pow(q, -0.5 * mu_ - 2.0) * y * y.transpose();
        return m.cast<Complex>() * c_;
    }

private:
    double mu_;
    Complex c_;
};

class ZeroW final : public ScalarField {
public:
    explicit ZeroW(int d) : ScalarField(d) {}
    Complex value(const Vec&) const override { return {}; }
    bool has_gradient() const override { return true; }
    bool has_hessian() const override { return true; }
    CVec gradient(const Vec&) const override { return CVec::Zero(dim()); }
    CMat hessian(const Vec&) const override { return CMat::Zero(dim(), dim()); }
};

class ConstantA final : public MatrixField {
public:
    explicit ConstantA(CMat m) : MatrixField(static_cast<int>(m.rows())), m_(std::move(m)) {}
    CMat value(const Vec&) const override { return m_; }
    bool has_derivative() const override { return true; }
    MatrixGradient derivative(const Vec&) const override {
        MatrixGradient g;
        for (int k = 0; k < dim(); ++k) g[static_cast<std::size_t>(k)] = zero_matrix(dim());
        return g;
    }

private:
    CMat m_;
};

class BumpScalarA final : public MatrixField {
public:
    explicit BumpScalarA(int d) : MatrixField(d) {}
    CMat value(const Vec& y) const override {
        return CMat::Identity(dim(), dim()) * Complex(2.0 + 1.0 / (1.0 + y.squaredNorm()));
    }
    bool has_derivative() const override { return true; }
    MatrixGradient derivative(const Vec& y) const override {
        const double q = 1.0 + y.squaredNorm();
        MatrixGradient g;
        for (int k = 0; k < dim(); ++k) {
            g[static_cast<std::size_t>(k)] =
                CMat::Identity(dim(), dim()) * Complex(-2.0 * y[k] / (q * q));
        }
        return g;
    }
};

class RadialAnisotropicA final : public MatrixField {
public:
    RadialAnisotropicA(int d, double c) : MatrixField(d), c_(c) {}
    CMat value(const Vec& y) const override {
        const int d = dim();
        const RMat m = RMat::Identity(d, d) + c_ * y * y.transpose() / (1.0 + y.squaredNorm());
        return m.cast<Complex>();
    }
    bool has_derivative() const override { return true; }
    MatrixGradient derivative(const Vec& y) const override {
        const int d = dim();
        const double q = 1.0 + y.squaredNorm();
        MatrixGradient g;
        for (int k = 0; k < d; ++k) {
            RMat m = RMat::Zero(d, d);
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j) {
                    const double dyy = (i == k ? y[j] : 0.0) + (j == k ? y[i] : 0.0);
                    m(i, j) = c_ * (dyy / q - 2.0 * y[k] * y[i] * y[j] / (q * q));
                }
            }
            g[static_cast<std::size_t>(k)] = m.cast<Complex>();
        }
        return g;
    }

private:
    double c_;
};

DecayConstants analytic_decay(int d, const ProfilePair& p) {
    const auto samples = shell_samples(d, 1e-3, 64.0, 96, d == 2 ? 16 : 6);
    return measure_decay_constants(p, samples, 1.05);
}

}  // namespace

ProfilePair gaussian_test_profile(int d, double mu) {
    ProfilePair p;
    p.d = d;
    p.mu = mu;
    p.w = std::make_shared<GaussianW>(d);
    p.a = std::make_shared<ConstantA>(CMat::Identity(d, d));
    p.bounds = {1.0, 1.0};
    p.provenance = Provenance::AnalyticTest;
    p.label = "gaussian";
    check_profile(p);
    p.decay = analytic_decay(d, p);
    return p;
}

ProfilePair decay_test_profile(int d, double mu, Complex c) {
    ProfilePair p;
    p.d = d;
    p.mu = mu;
    p.w = std::make_shared<DecayW>(d, mu, c);
    p.a = std::make_shared<BumpScalarA>(d);
    p.bounds = {2.0, 3.0};
    p.provenance = Provenance::AnalyticTest;
    p.label = "decay";
    check_profile(p);
    p.decay = analytic_decay(d, p);
    return p;
}

ProfilePair zero_test_profile(int d, double mu) {
    ProfilePair p;
    p.d = d;
    p.mu = mu;
    p.w = std::make_shared<ZeroW>(d);
    p.a = std::make_shared<ConstantA>(CMat::Identity(d, d));
    p.bounds = {1.0, 1.0};
    p.provenance = Provenance::AnalyticTest;
    p.label = "zero";
    check_profile(p);
    return p;
}

ProfilePair custom_profile(int d, double mu, std::shared_ptr<const ScalarField> w,
                           std::shared_ptr<const MatrixField> a) {
    ProfilePair p;
    p.d = d;
    p.mu = mu;
    p.w = std::move(w);
    p.a = std::move(a);
    p.provenance = Provenance::AnalyticTest;
    p.label = "custom";
    const auto samples = shell_samples(d, 1e-3, 16.0, 32, d == 2 ? 16 : 6);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& y : samples) {
        const CMat m = p.a->value(y);
        lo = std::min(lo, coercivity(m).coercivity);
        hi = std::max(hi, operator_norm(m));
    }
    p.bounds = {lo > 0.0 ? lo : 1.0, std::max(hi, lo > 0.0 ? lo : 1.0)};
    check_profile(p);
    p.decay = analytic_decay(d, p);
    return p;
}

std::shared_ptr<MatrixField> constant_matrix_field(CMat m) {
    return std::make_shared<ConstantA>(std::move(m));
}
std::shared_ptr<MatrixField> bump_scalar_coefficient(int d) {
    return std::make_shared<BumpScalarA>(d);
}
std::shared_ptr<MatrixField> radial_anisotropic_coefficient(int d, double c) {
    return std::make_shared<RadialAnisotropicA>(d, c);
}

namespace {

EllipticityBounds measured_bounds(std::span<const CMat> mats) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& m : mats) {
        lo = std::min(lo, coercivity(m).coercivity);
        hi = std::max(hi, operator_norm(m));
    }
    if (!(lo > 0.0)) return {1.0, std::max(1.0, hi)};
    return {lo, std::max(lo, hi)};
}

}  // namespace

ProfilePair pair_from_table(std::shared_ptr<const RadialTable> table, double mu) {
    table->check();
    ProfilePair p;
    p.d = table->d;
    p.mu = mu;
    p.w = std::make_shared<RadialScalarField>(table);
    p.a = std::make_shared<RadialMatrixField>(table);
    p.bounds = measured_bounds(table->A);
    p.provenance = Provenance::Imported;
    p.support = Annulus{table->rho.front(), table->rho.back()};
    return p;
}

ProfilePair pair_from_table(std::shared_ptr<const CartesianTable> table, double mu) {
    table->check();
    ProfilePair p;
    p.d = table->d;
    p.mu = mu;
    p.w = std::make_shared<CartesianScalarField>(table);
    p.a = std::make_shared<CartesianMatrixField>(table);
    p.bounds = measured_bounds(table->a);
    p.provenance = Provenance::Imported;
    // Largest centred ball inside the box, if the box contains the origin.
    double outer = std::numeric_limits<double>::infinity();
    for (int k = 0; k < table->d; ++k) {
        const double hi = table->lo[k] + table->h[k] * (table->shape[k] - 1);
        outer = std::min({outer, -table->lo[k], hi});
    }
    p.support = Annulus{0.0, std::max(outer, 0.0)};
    return p;
}

}  // namespace mrlab::profile
