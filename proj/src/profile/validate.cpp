#include "mrlab/profile.hpp"

#include "mrlab/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace mrlab::profile {

void DecayConstants::check() const {
    for (double c : C) {
        if (!std::isfinite(c) || c < 0.0) throw RangeError("decay constants must be finite and >= 0");
    }
    if (!std::isfinite(lipschitz_at_zero) || lipschitz_at_zero < 0.0) {
        throw RangeError("lipschitz_at_zero must be finite and >= 0");
    }
}

std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::Imported: return "imported";
        case Provenance::Synthesized: return "synthesized";
        case Provenance::AnalyticTest: return "analytic-test";
    }
    return "unknown";
}

Provenance provenance_from_string(const std::string& s) {
    if (s == "imported") return Provenance::Imported;
    if (s == "synthesized") return Provenance::Synthesized;
    if (s == "analytic-test") return Provenance::AnalyticTest;
    throw RangeError("unknown provenance '" + s + "'");
}

void check_profile(const ProfilePair& p) {
    if (p.d < 2 || p.d > kMaxDim) {
        throw RangeError("profile dimension must satisfy 2 <= d <= " + std::to_string(kMaxDim));
    }
    if (!(p.mu > 0.0) || !(p.mu < 0.5 * p.d)) {
        std::ostringstream os;
        os << "profile exponent mu=" << p.mu << " outside (0, d/2) = (0, " << 0.5 * p.d << ")";
        throw RangeError(os.str());
    }
    if (!p.w || !p.a) throw RangeError("profile pair is missing a sampler");
    if (p.w->dim() != p.d || p.a->dim() != p.d) {
        throw RangeError("profile samplers do not match the declared dimension");
    }
    p.bounds.check();
    p.decay.check();
}

namespace {

class ScaledField final : public ScalarField {
public:
    ScaledField(std::shared_ptr<const ScalarField> base, Complex c)
        : ScalarField(base->dim(), base->fd_step()), base_(std::move(base)), c_(c) {}
    Complex value(const Vec& y) const override { return c_ * base_->value(y); }
    bool has_gradient() const override { return base_->has_gradient(); }
    bool has_hessian() const override { return base_->has_hessian(); }
    CVec gradient(const Vec& y) const override {
        return base_->has_gradient() ? CVec(base_->gradient(y) * c_) : ScalarField::gradient(y);
    }
    CMat hessian(const Vec& y) const override {
        return base_->has_hessian() ? CMat(base_->hessian(y) * c_) : ScalarField::hessian(y);
    }

private:
    std::shared_ptr<const ScalarField> base_;
    Complex c_;
};

double unit_ball_volume(int d) {
    return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

std::vector<Vec> directions(int d, int n_angular) {
    std::vector<Vec> dirs;
    if (d == 2) {
        for (int j = 0; j < n_angular; ++j) {
            const double phi = 2.0 * std::numbers::pi * (j + 0.5) / n_angular;
            Vec e(2);
            e << std::cos(phi), std::sin(phi);
            dirs.push_back(e);
        }
    } else if (d == 3) {
        for (int i = 0; i < n_angular; ++i) {
            const double c = -1.0 + 2.0 * (i + 0.5) / n_angular;
            const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
            for (int j = 0; j < n_angular; ++j) {
                const double phi = 2.0 * std::numbers::pi * (j + 0.5 * (i % 2)) / n_angular;
                Vec e(3);
                e << s * std::cos(phi), s * std::sin(phi), c;
                dirs.push_back(e);
            }
        }
    } else {
        for (int k = 0; k < d; ++k) {
            for (double sgn : {1.0, -1.0}) {
                Vec e = Vec::Zero(d);
                e[k] = sgn;
                dirs.push_back(e);
            }
        }
        for (int m = 0; m < (1 << d); ++m) {
            Vec e(d);
            for (int k = 0; k < d; ++k) e[k] = (m >> k) & 1 ? 1.0 : -1.0;
            dirs.push_back(e / std::sqrt(static_cast<double>(d)));
        }
    }
    return dirs;
}

struct SampleMeasure {
    Complex residual{};
    double w_abs = 0.0;
    double grad_abs = 0.0;
    double hess_abs = 0.0;
    double a_deriv_abs = 0.0;
    CoercivityProbe probe;
    double a_norm = 0.0;
};

CVec w_gradient(const ProfilePair& p, const Vec& y, DerivativeMode mode, double h) {
    if (mode == DerivativeMode::Auto && p.w->has_gradient()) return p.w->gradient(y);
    return fd_gradient(*p.w, y, h);
}

CMat w_hessian(const ProfilePair& p, const Vec& y, DerivativeMode mode, double h) {
    if (mode == DerivativeMode::Auto && p.w->has_hessian()) return p.w->hessian(y);
    return fd_hessian(*p.w, y, h);
}

MatrixGradient a_derivative(const ProfilePair& p, const Vec& y, DerivativeMode mode, double h) {
    if (mode == DerivativeMode::Auto && p.a->has_derivative()) return p.a->derivative(y);
    return fd_derivative(*p.a, y, h);
}

Complex residual_from(const ProfilePair& p, const Vec& y, Complex w, const CVec& g,
                      const CMat& H, const CMat& a, const MatrixGradient& da) {
    const int d = p.d;
    Complex div{};
    for (int k = 0; k < d; ++k) {
        const auto& dak = da[static_cast<std::size_t>(k)];
        for (int l = 0; l < d; ++l) div += dak(k, l) * g[l] + a(k, l) * H(k, l);
    }
    Complex advect{};
    for (int k = 0; k < d; ++k) advect += y[k] * g[k];
    return div - 0.5 * advect - 0.5 * Complex(p.mu, 1.0) * w;
}

}  // namespace

ProfilePair scaled(const ProfilePair& p, Complex c) {
    if (c == Complex{}) throw RangeError("profile scaling constant must be nonzero");
    ProfilePair q = p;
    q.w = std::make_shared<ScaledField>(p.w, c);
    const double s = std::abs(c);
    for (double& C : q.decay.C) C *= s;
    q.decay.lipschitz_at_zero *= s;
    // a's decay shares C1; keep the larger of the scaled and original bound.
    q.decay.C[1] = std::max(q.decay.C[1], p.decay.C[1]);
    return q;
}

std::vector<Vec> shell_samples(int d, double r_min, double r_max, int n_radial, int n_angular) {
    if (!(r_min > 0.0) || !(r_max >= r_min) || n_radial < 1 || n_angular < 1) {
        throw RangeError("shell_samples: require 0 < r_min <= r_max and positive counts");
    }
    const auto dirs = directions(d, n_angular);
    std::vector<Vec> out;
    out.reserve(dirs.size() * static_cast<std::size_t>(n_radial));
    for (int i = 0; i < n_radial; ++i) {
        const double r = n_radial == 1
                             ? r_min
                             : r_min * std::pow(r_max / r_min, static_cast<double>(i) / (n_radial - 1));
        for (const auto& e : dirs) out.push_back(e * r);
    }
    return out;
}

std::vector<Vec> default_sample_set(const ProfilePair& p, const ValidationTolerances& tol) {
    double lo = tol.r0, hi = 12.0;
    if (p.support) {
        lo = std::max(lo, p.support->inner);
        hi = std::min(hi, p.support->outer);
    }
    if (!(hi > lo)) throw RangeError("profile support leaves no room for validation samples");
    return shell_samples(p.d, lo, hi, 48, p.d == 2 ? 24 : 8);
}

Complex profile_residual(const ProfilePair& p, const Vec& y, DerivativeMode mode, double h) {
    return residual_from(p, y, p.w->value(y), w_gradient(p, y, mode, h), w_hessian(p, y, mode, h),
                         p.a->value(y), a_derivative(p, y, mode, h));
}

ValidationReport validate_profile(const ProfilePair& p, std::span<const Vec> samples,
                                  const ValidationTolerances& tol) {
    check_profile(p);
    if (!(tol.fd_step > 0.0) || !(tol.r0 > 0.0) || !(tol.residual_gate > 0.0)) {
        throw RangeError("validation tolerances must be positive");
    }
    if (samples.empty()) throw RangeError("validation sample set is empty");
    for (const auto& y : samples) {
        if (y.size() != p.d) throw RangeError("validation sample has wrong dimension");
        if (y.norm() < tol.r0) {
            throw RangeError("validation sample at |y|=" + std::to_string(y.norm()) +
                             " lies inside the excluded ball r0=" + std::to_string(tol.r0));
        }
    }

    std::vector<SampleMeasure> m(samples.size());
    parallel_for(samples.size(), tol.threads, [&](std::size_t i) {
        const Vec& y = samples[i];
        SampleMeasure& s = m[i];
        const Complex w = p.w->value(y);
        const CVec g = w_gradient(p, y, tol.mode, tol.fd_step);
        const CMat H = w_hessian(p, y, tol.mode, tol.fd_step);
        const CMat a = p.a->value(y);
        const MatrixGradient da = a_derivative(p, y, tol.mode, tol.fd_step);
        s.residual = residual_from(p, y, w, g, H, a, da);
        s.w_abs = std::abs(w);
        s.grad_abs = g.norm();
        s.hess_abs = H.norm();
        double dsum = 0.0;
        for (int k = 0; k < p.d; ++k) dsum += da[static_cast<std::size_t>(k)].squaredNorm();
        s.a_deriv_abs = std::sqrt(dsum);
        s.probe = coercivity(a);
        s.a_norm = operator_norm(a);
        if (!std::isfinite(std::abs(s.residual)) || !std::isfinite(s.a_norm)) {
            throw Error("sampler returned a non-finite value at |y|=" + std::to_string(y.norm()));
        }
    });

    ValidationReport rep;
    rep.samples = samples.size();
    rep.residual_argmax = samples[0];
    rep.ellipticity.y = samples[0];
    rep.ellipticity.coercivity = std::numeric_limits<double>::infinity();
    rep.measured_lambda = std::numeric_limits<double>::infinity();
    double sum_sq = 0.0, sup_b1 = 0.0;
    bool any_b1 = false;
    double worst_decay = -1.0;
    const double slack_l = tol.ellipticity_slack;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Vec& y = samples[i];
        const auto& s = m[i];
        const double r = std::abs(s.residual);
        sum_sq += r * r;
        if (r > rep.residual_sup) {
            rep.residual_sup = r;
            rep.residual_argmax = y;
        }
        rep.w_sup = std::max(rep.w_sup, s.w_abs);
        if (s.probe.coercivity < rep.measured_lambda) {
            rep.measured_lambda = s.probe.coercivity;
            rep.ellipticity.y = y;
            rep.ellipticity.xi = s.probe.xi;
            rep.ellipticity.coercivity = s.probe.coercivity;
            rep.ellipticity.bound = s.a_norm;
        }
        rep.measured_Lambda = std::max(rep.measured_Lambda, s.a_norm);

        const double ry = y.norm();
        if (ry <= 1.0) {
            any_b1 = true;
            sup_b1 = std::max(sup_b1, s.w_abs + s.grad_abs);
        }
        if (ry >= 1.0) {
            ++rep.decay_samples;
            const std::array<double, 4> ratio{s.w_abs * std::pow(ry, p.mu),
                                              s.grad_abs * std::pow(ry, 1.0 + p.mu),
                                              s.hess_abs * std::pow(ry, 2.0 + p.mu),
                                              s.a_deriv_abs * ry};
            rep.measured_C_w[0] = std::max(rep.measured_C_w[0], ratio[0]);
            rep.measured_C_w[1] = std::max(rep.measured_C_w[1], ratio[1]);
            rep.measured_C_w[2] = std::max(rep.measured_C_w[2], ratio[2]);
            rep.measured_C_a1 = std::max(rep.measured_C_a1, ratio[3]);
            // Gated orders: w (0, 1) and a (1). Rank by excess over the declared bound.
            const std::array<std::pair<int, double>, 3> gated{
                std::pair{0, p.decay.C[0]}, std::pair{1, p.decay.C[1]}, std::pair{3, p.decay.C[1]}};
            for (const auto& [order, declared] : gated) {
                const double value = ratio[static_cast<std::size_t>(order == 3 ? 3 : order)];
                const double excess = declared > 0.0 ? value / declared
                                                     : (value > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
                if (excess > worst_decay) {
                    worst_decay = excess;
                    rep.decay = {y, order, value, declared};
                }
            }
        }
    }
    rep.residual_l2 = std::sqrt(sum_sq / static_cast<double>(samples.size()));
    rep.degenerate = rep.w_sup == 0.0;
    rep.ellipticity_ok = rep.measured_lambda >= p.bounds.lambda * (1.0 - slack_l) - slack_l &&
                         rep.measured_Lambda <= p.bounds.Lambda * (1.0 + slack_l) + slack_l;
    const double slack_d = 1.0 + tol.decay_slack;
    rep.decay_ok = rep.w_sup <= p.decay.C[0] * slack_d &&
                   rep.measured_C_w[0] <= p.decay.C[0] * slack_d &&
                   rep.measured_C_w[1] <= p.decay.C[1] * slack_d &&
                   rep.measured_C_a1 <= p.decay.C[1] * slack_d;
    if (any_b1) rep.C_dw = std::sqrt(unit_ball_volume(p.d)) * sup_b1;

    std::ostringstream notes;
    if (rep.degenerate) notes << "degenerate: w vanishes on the sample set; ";
    if (!any_b1) notes << "no samples in the unit ball, C_dw not measured; ";
    if (rep.decay_samples == 0) notes << "no samples with |y| >= 1, decay unchecked; ";

    // Lipschitz-at-zero: difference quotients on the sphere |y| = r0 and radially to 2r0.
    const bool near_zero_available = !p.support || p.support->inner <= tol.r0;
    if (near_zero_available) {
        const auto ring = shell_samples(p.d, tol.r0, tol.r0, 1, p.d == 2 ? 16 : 4);
        double lip = 0.0;
        std::vector<Complex> vals(ring.size());
        for (std::size_t i = 0; i < ring.size(); ++i) vals[i] = p.w->value(ring[i]);
        for (std::size_t i = 0; i < ring.size(); ++i) {
            for (std::size_t j = i + 1; j < ring.size(); ++j) {
                lip = std::max(lip, std::abs(vals[i] - vals[j]) / (ring[i] - ring[j]).norm());
            }
            lip = std::max(lip, std::abs(p.w->value(ring[i] * 2.0) - vals[i]) / tol.r0);
        }
        rep.lipschitz_estimate = lip;
    } else {
        notes << "support excludes the origin, Lipschitz-at-zero not estimated; ";
    }
    if (p.local_only) notes << "local-only pair (valid on its support annulus only); ";

    const bool residual_ok = rep.residual_sup <= tol.residual_gate * rep.w_sup;
    rep.validated = !rep.degenerate && residual_ok && rep.ellipticity_ok && rep.decay_ok;
    if (!residual_ok && !rep.degenerate) notes << "residual above gate; ";
    rep.notes = notes.str();
    if (!rep.notes.empty()) rep.notes.resize(rep.notes.size() - 2);
    return rep;
}

DecayConstants measure_decay_constants(const ProfilePair& p, std::span<const Vec> samples,
                                       double safety) {
    DecayConstants c;
    double lip = 0.0;
    for (const auto& y : samples) {
        const double r = y.norm();
        const double wa = std::abs(p.w->value(y));
        c.C[0] = std::max(c.C[0], wa);
        if (r < 1.0) {
            lip = std::max(lip, p.w->gradient(y).norm());
            continue;
        }
        const CVec g = p.w->gradient(y);
        const CMat H = p.w->hessian(y);
        const MatrixGradient da = p.a->derivative(y);
        double dsum = 0.0;
        for (int k = 0; k < p.d; ++k) dsum += da[static_cast<std::size_t>(k)].squaredNorm();
        c.C[0] = std::max(c.C[0], wa * std::pow(r, p.mu));
        c.C[1] = std::max({c.C[1], g.norm() * std::pow(r, 1.0 + p.mu), std::sqrt(dsum) * r});
        c.C[2] = std::max(c.C[2], H.norm() * std::pow(r, 2.0 + p.mu));
    }
    for (double& v : c.C) v *= safety;
    c.lipschitz_at_zero = lip * safety;
    return c;
}

}  // namespace mrlab::profile
