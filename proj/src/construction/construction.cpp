#include "mrlab/construction.hpp"

#include <cmath>

namespace mrlab::construction {

namespace {

double tau_of(double t) {
    if (!(t < 1.0)) throw SingularTimeError("evaluation at t=" + std::to_string(t) + " >= 1");
    return 1.0 - t;
}

Vec pull_back(const Vec& x, double tau) { return x / std::sqrt(tau); }

}  // namespace

CoefficientField::CoefficientField(ProfilePair p)
    : SpaceTimeMatrixField(p.d, kCoefficientFdStep), pair_(std::move(p)) {}

CMat CoefficientField::value(double t, const Vec& x) const {
    return pair_.a->value(pull_back(x, tau_of(t)));
}

MatrixGradient CoefficientField::derivative(double t, const Vec& x) const {
    const double tau = tau_of(t);
    const Vec y = pull_back(x, tau);
    MatrixGradient g = pair_.a->has_derivative() ? pair_.a->derivative(y)
                                                 : fd_derivative(*pair_.a, y, kCoefficientFdStep);
    const double s = 1.0 / std::sqrt(tau);
    for (int k = 0; k < pair_.d; ++k) g[static_cast<std::size_t>(k)] *= s;
    return g;
}

Cutoff::Cutoff(int d) : d_(d) {
    if (d < 1 || d > kMaxDim) throw RangeError("cutoff dimension must be in [1, 4]");
}

std::array<double, 3> Cutoff::radial(double r) const {
    if (r <= 1.0) return {1.0, 0.0, 0.0};
    if (r >= 2.0) return {0.0, 0.0, 0.0};
    const double a = r - 1.0, b = 2.0 - r;
    const double phi = -1.0 / a + 1.0 / b;
    const double dphi = 1.0 / (a * a) + 1.0 / (b * b);
    const double d2phi = -2.0 / (a * a * a) + 2.0 / (b * b * b);
    // η = 1/(1+e^φ); s(1−s) = e^{−|φ|}/(1+e^{−|φ|})² avoids overflow on either side.
    const double e = std::exp(-std::abs(phi));
    const double s = phi > 0.0 ? e / (1.0 + e) : 1.0 / (1.0 + e);
    const double ss = e / ((1.0 + e) * (1.0 + e));
    const double d1 = -ss * dphi;
    const double d2 = (1.0 - 2.0 * s) * ss * dphi * dphi - ss * d2phi;
    return {s, d1, d2};
}

double Cutoff::value(const Vec& x) const { return radial(x.norm())[0]; }

Vec Cutoff::gradient(const Vec& x) const {
    const double r = x.norm();
    if (r <= 1.0 || r >= 2.0) return Vec::Zero(x.size());
    return x * (radial(r)[1] / r);
}

RMat Cutoff::hessian(const Vec& x) const {
    const double r = x.norm();
    const auto n = x.size();
    if (r <= 1.0 || r >= 2.0) return RMat::Zero(n, n);
    const auto [s, d1, d2] = radial(r);
    (void) s;
    const RMat xx = x * x.transpose() / (r * r);
    return d2 * xx + (d1 / r) * (RMat::Identity(n, n) - xx);
}

ZetaField::ZetaField(ProfilePair p) : SpaceTimeField(p.d), pair_(std::move(p)) {}

Complex ZetaField::amplitude(double t) const {
    const double lt = std::log(tau_of(t));
    return std::exp(-0.5 * Complex(pair_.mu, 1.0) * lt);
}

Complex ZetaField::value(double t, const Vec& x) const {
    const double tau = tau_of(t);
    return amplitude(t) * pair_.w->value(pull_back(x, tau));
}

CVec ZetaField::gradient(double t, const Vec& x) const {
    const double tau = tau_of(t);
    return pair_.w->gradient(pull_back(x, tau)) * (amplitude(t) / std::sqrt(tau));
}

CMat ZetaField::hessian(double t, const Vec& x) const {
    const double tau = tau_of(t);
    return pair_.w->hessian(pull_back(x, tau)) * (amplitude(t) / tau);
}

Complex ZetaField::time_derivative(double t, const Vec& x) const {
    const double tau = tau_of(t);
    const Vec y = pull_back(x, tau);
    const Complex w = pair_.w->value(y);
    const CVec g = pair_.w->gradient(y);
    Complex yg{};
    for (int k = 0; k < pair_.d; ++k) yg += y[k] * g[k];
    return amplitude(t) / tau * (0.5 * Complex(pair_.mu, 1.0) * w + 0.5 * yg);
}

UField::UField(std::shared_ptr<const ZetaField> zeta, std::shared_ptr<const Cutoff> eta)
    : SpaceTimeField(zeta->dim()), zeta_(std::move(zeta)), eta_(std::move(eta)) {}

Complex UField::value(double t, const Vec& x) const {
    const double e = eta_->value(x);
    if (e == 0.0 || t == 0.0) {
        (void) tau_of(t);
        return 0.0;
    }
    return t * e * zeta_->value(t, x);
}

CVec UField::gradient(double t, const Vec& x) const {
    const auto [e, d1, d2] = eta_->radial(x.norm());
    (void) d1;
    (void) d2;
    if (e == 0.0) {
        (void) tau_of(t);
        return CVec::Zero(x.size());
    }
    const Vec ge = eta_->gradient(x);
    return t * (zeta_->gradient(t, x) * e + ge.cast<Complex>() * zeta_->value(t, x));
}

CMat UField::hessian(double t, const Vec& x) const {
    const double e = eta_->value(x);
    if (e == 0.0) {
        (void) tau_of(t);
        return CMat::Zero(x.size(), x.size());
    }
    const CVec gz = zeta_->gradient(t, x);
    const CVec ge = eta_->gradient(x).cast<Complex>();
    const CMat he = eta_->hessian(x).cast<Complex>();
    const CMat cross = gz * ge.transpose() + ge * gz.transpose();
    return t * (zeta_->hessian(t, x) * e + cross + he * zeta_->value(t, x));
}

Complex UField::time_derivative(double t, const Vec& x) const {
    const double e = eta_->value(x);
    if (e == 0.0) {
        (void) tau_of(t);
        return 0.0;
    }
    return e * (zeta_->value(t, x) + t * zeta_->time_derivative(t, x));
}

ForcingField::ForcingField(std::shared_ptr<const ZetaField> zeta, std::shared_ptr<const Cutoff> eta,
                           std::shared_ptr<const CoefficientField> b)
    : SpaceTimeField(zeta->dim()), zeta_(std::move(zeta)), eta_(std::move(eta)), b_(std::move(b)) {}

Complex ForcingField::value(double t, const Vec& x) const {
    const int d = dim();
    const double e = eta_->value(x);
    if (e == 0.0) {
        (void) tau_of(t);
        return 0.0;
    }
    const Complex z = zeta_->value(t, x);
    Complex out = e * z;
    const double r = x.norm();
    if (r <= 1.0 || t == 0.0) return out;
    const Vec ge = eta_->gradient(x);
    const RMat he = eta_->hessian(x);
    const CVec gz = zeta_->gradient(t, x);
    const CMat B = b_->value(t, x);
    const MatrixGradient dB = b_->derivative(t, x);
    Complex sym{}, div{};
    for (int k = 0; k < d; ++k) {
        for (int l = 0; l < d; ++l) {
            sym += (B(k, l) + B(l, k)) * gz[k] * ge[l];
            div += dB[static_cast<std::size_t>(k)](k, l) * ge[l] + B(k, l) * he(k, l);
        }
    }
    return out - t * sym - t * z * div;
}

ExactForcingField::ExactForcingField(std::shared_ptr<const ForcingField> f,
                                     std::shared_ptr<const ZetaField> zeta,
                                     std::shared_ptr<const Cutoff> eta)
    : SpaceTimeField(zeta->dim()), f_(std::move(f)), zeta_(std::move(zeta)), eta_(std::move(eta)) {}

Complex ExactForcingField::value(double t, const Vec& x) const {
    const Complex base = f_->value(t, x);
    const double e = eta_->value(x);
    if (e == 0.0 || t == 0.0) return base;
    const double tau = tau_of(t);
    const Vec y = pull_back(x, tau);
    const ProfilePair& p = zeta_->source();
    if (y.norm() == 0.0) return base;
    const Complex R = profile::profile_residual(p, y, profile::DerivativeMode::Auto, 1e-3);
    return base - t * e * zeta_->amplitude(t) / tau * R;
}

std::shared_ptr<CoefficientField> build_coefficients(const ProfilePair& p) {
    profile::check_profile(p);
    return std::make_shared<CoefficientField>(p);
}

std::shared_ptr<Cutoff> build_cutoff(int d) { return std::make_shared<Cutoff>(d); }

SolutionBundle build_bundle(const ProfilePair& p) {
    SolutionBundle b;
    b.source = p;
    b.coefficients = build_coefficients(p);
    b.cutoff = build_cutoff(p.d);
    b.zeta = std::make_shared<ZetaField>(p);
    b.u = std::make_shared<UField>(b.zeta, b.cutoff);
    b.f = std::make_shared<ForcingField>(b.zeta, b.cutoff, b.coefficients);
    b.f_exact = std::make_shared<ExactForcingField>(b.f, b.zeta, b.cutoff);
    return b;
}

ResidualStats pde_residual(const SpaceTimeField& u, const SpaceTimeMatrixField& b, const SpaceTimeField& f,
                           std::span<const SpaceTimePoint> samples, const ResidualOptions& opt) {
    if (!(opt.fd_step > 0.0)) throw RangeError("residual difference step must be positive");
    const int d = u.dim();
    for (const auto& s : samples) {
        if (!(s.t > 0.0 && s.t < 1.0)) throw RangeError("residual sample time must lie in (0, 1)");
        if (s.x.size() != d) throw RangeError("residual sample has wrong dimension");
        if (s.x.norm() == 0.0) throw RangeError("residual sample at the excluded point x = 0");
    }
    const bool fd = opt.mode == ResidualMode::FiniteDifference;
    std::vector<double> vals(samples.size());
    parallel_for(samples.size(), opt.threads, [&](std::size_t i) {
        const double t = samples[i].t;
        const Vec& x = samples[i].x;
        const Complex ut = fd || !u.has_time_derivative() ? fd_time_derivative(u, t, x, opt.fd_step)
                                                          : u.time_derivative(t, x);
        const CVec g = fd || !u.has_gradient() ? fd_gradient(u, t, x, opt.fd_step) : u.gradient(t, x);
        const CMat H = fd || !u.has_hessian() ? fd_hessian(u, t, x, opt.fd_step) : u.hessian(t, x);
        const CMat B = b.value(t, x);
        const MatrixGradient dB = fd || !b.has_derivative() ? fd_derivative(b, t, x, opt.fd_step)
                                                            : b.derivative(t, x);
        Complex div{};
        for (int k = 0; k < d; ++k)
            for (int l = 0; l < d; ++l) div += dB[static_cast<std::size_t>(k)](k, l) * g[l] + B(k, l) * H(k, l);
        vals[i] = std::abs(ut - div - f.value(t, x));
    });

    ResidualStats st;
    st.values = vals;
    double sum = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].x.norm() < opt.near_origin_radius) {
            st.near_origin_sup = std::max(st.near_origin_sup, vals[i]);
            ++st.near_origin_count;
            continue;
        }
        if (vals[i] > st.sup || st.count == 0) {
            st.sup = std::max(st.sup, vals[i]);
            st.argmax = samples[i];
        }
        sum += vals[i] * vals[i];
        ++st.count;
    }
    if (st.count) st.l2 = std::sqrt(sum / static_cast<double>(st.count));
    return st;
}

ResidualStats pde_residual(const SolutionBundle& bundle, std::span<const SpaceTimePoint> samples,
                           const ResidualOptions& opt) {
    return pde_residual(*bundle.u, *bundle.coefficients, *bundle.f, samples, opt);
}

}  // namespace mrlab::construction
