#include "mrlab/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace mrlab::analysis {

namespace {

// ∫ over [x, y] ⊂ [t_k, t_{k+1}] of the interpolant g(t) = g_k (τ/τ_k)^γ, τ = 1 − t.
double piece_integral(double tk, double tk1, double gk, double gk1, double x, double y) {
    if (!(y > x)) return 0.0;
    const double tau_k = 1.0 - tk, tau_k1 = 1.0 - tk1;
    if (gk > 0.0 && gk1 > 0.0 && tau_k1 > 0.0) {
        const double gamma = std::log(gk1 / gk) / std::log(tau_k1 / tau_k);
        const double a = 1.0 - x, b = 1.0 - y;   // a > b
        if (std::abs(gamma + 1.0) < 1e-12) return gk * tau_k * std::log(a / b);
        const double e = gamma + 1.0;
        return gk / std::pow(tau_k, gamma) * (std::pow(a, e) - std::pow(b, e)) / e;
    }
    // Linear interpolation where the power form does not apply.
    const double s = (gk1 - gk) / (tk1 - tk);
    const double gx = gk + s * (x - tk), gy = gk + s * (y - tk);
    return 0.5 * (gx + gy) * (y - x);
}

}  // namespace

BochnerResult bochner_norm(const NormSeries& series, double r, double a, double b) {
    if (!(r > 0.0) || !std::isfinite(r)) throw RangeError("Bochner exponent r must be positive and finite");
    if (!(b > a) || a < 0.0 || b > 1.0) throw RangeError("Bochner interval must satisfy 0 <= a < b <= 1");
    const auto& t = series.times;
    const auto& v = series.values;
    if (t.size() != v.size() || t.size() < 2) throw RangeError("series needs at least two samples");
    for (std::size_t k = 0; k + 1 < t.size(); ++k)
        if (!(t[k + 1] > t[k])) throw RangeError("series times must be strictly increasing");
    if (t.front() > a + 1e-12 || (b < 1.0 && t.back() < b - 1e-12)) throw RangeError("series does not cover the interval");

    BochnerResult out;
    for (std::size_t k = 0; k < t.size(); ++k) {
        const bool flagged = k < series.divergent.size() && series.divergent[k];
        if (flagged || !std::isfinite(v[k])) {
            out.divergent = true;
            out.value = std::numeric_limits<double>::infinity();
            out.notes = "series entry at t=" + std::to_string(t[k]) + " is divergent";
            return out;
        }
        if (v[k] < 0.0) throw RangeError("series values must be nonnegative");
    }
    const double end = std::min(b, t.back());
    auto block_of = [](double x) {
        // Index j with x ∈ [1 − 2^{−j}, 1 − 2^{−j−1}).
        return static_cast<int>(std::floor(-std::log2(1.0 - x)));
    };
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < t.size(); ++k) {
        const double x0 = std::max(a, t[k]), x1 = std::min(end, t[k + 1]);
        if (!(x1 > x0)) continue;
        const double gk = std::pow(v[k], r), gk1 = std::pow(v[k + 1], r);
        // Split at dyadic block boundaries.
        double x = x0;
        while (x < x1) {
            const int j = block_of(x);
            const double edge = std::min(x1, 1.0 - std::ldexp(1.0, -j - 1));
            const double c = piece_integral(t[k], t[k + 1], gk, gk1, x, edge);
            if (out.block_sums.size() <= static_cast<std::size_t>(j)) out.block_sums.resize(static_cast<std::size_t>(j) + 1, 0.0);
            out.block_sums[static_cast<std::size_t>(j)] += c;
            total += c;
            x = edge;
        }
    }

    if (b < 1.0) {
        out.converged = true;
        out.value = std::pow(total, 1.0 / r);
        return out;
    }
    // Complete blocks only: the last one must end at or before the final sample.
    std::size_t complete = 0;
    for (std::size_t j = 0; j < out.block_sums.size(); ++j)
        if (1.0 - std::ldexp(1.0, -static_cast<int>(j) - 1) <= t.back() * (1 + 1e-15)) complete = j + 1;
    std::vector<double> partial(complete);
    double run = 0.0;
    for (std::size_t j = 0; j < complete; ++j) partial[j] = run += out.block_sums[j];
    if (complete >= 4 && run > 0.0) {
        bool all = true;
        for (std::size_t j = complete - 3; j < complete; ++j) all = all && out.block_sums[j] > 0.1 * partial[j];
        out.last_block_fraction = out.block_sums[complete - 1] / partial[complete - 1];
        out.divergent = all;
        out.converged = out.last_block_fraction < 0.01;
    } else if (run == 0.0) {
        out.converged = true;
    } else {
        out.notes = "fewer than four complete dyadic blocks; Cauchy test not applied";
    }

    // Tail beyond the last sample from a power fit over the last complete block.
    if (!out.divergent && run > 0.0) {
        const double lo = complete ? 1.0 - std::ldexp(1.0, -static_cast<int>(complete) + 1) : t.front();
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int n = 0;
        for (std::size_t k = 0; k < t.size(); ++k) {
            if (t[k] < lo || v[k] <= 0.0) continue;
            const double X = std::log(1.0 - t[k]), Y = r * std::log(v[k]);
            sx += X;
            sy += Y;
            sxx += X * X;
            sxy += X * Y;
            ++n;
        }
        if (n >= 2) {
            const double gamma = (n * sxy - sx * sy) / (n * sxx - sx * sx);
            const double tauN = 1.0 - t.back();
            if (gamma <= -1.0) {
                out.divergent = true;
                out.converged = false;
                out.notes = "terminal power exponent " + std::to_string(gamma) + " <= -1 is not integrable";
            } else {
                out.tail = std::pow(v.back(), r) * tauN / (gamma + 1.0);
            }
        }
    }
    if (out.divergent) {
        out.value = std::numeric_limits<double>::infinity();
        if (out.notes.empty()) out.notes = "dyadic blocks fail the Cauchy test";
        return out;
    }
    if (!out.converged && out.notes.empty()) out.notes = "inconclusive: last block contributes " + std::to_string(out.last_block_fraction);
    out.value = std::pow(total + out.tail, 1.0 / r);
    return out;
}

// ---------------------------------------------------------------------------

namespace {

double gagliardo_squared(const std::vector<double>& t, const std::vector<const pde::CVector*>& u, double weight,
                         double nu, int threads) {
    const std::size_t n = t.size();
    std::vector<double> w(n, 0.0);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double h = t[k + 1] - t[k];
        w[k] += 0.5 * h;
        w[k + 1] += 0.5 * h;
    }
    std::vector<double> row(n, 0.0);
    parallel_for(n, threads, [&](std::size_t i) {
        double s = w[i] * weight * u[i]->squaredNorm();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double dist = std::abs(t[i] - t[j]);
            s += w[i] * w[j] * weight * (*u[i] - *u[j]).squaredNorm() / std::pow(dist, 1.0 + 2.0 * nu);
        }
        row[i] = s;
    });
    double total = 0.0;
    for (double v : row) total += v;
    return total;
}

}  // namespace

FractionalNormResult fractional_time_norm(const std::vector<double>& times, const std::vector<pde::CVector>& levels,
                                          double weight, double nu, int threads) {
    if (!(nu > 0.0 && nu < 1.0)) throw RangeError("fractional order nu must lie in (0, 1)");
    if (times.size() != levels.size() || times.size() < 9) throw RangeError("fractional norm needs at least 9 levels");
    for (const auto& l : levels)
        for (Eigen::Index i = 0; i < l.size(); ++i)
            if (!std::isfinite(l[i].real()) || !std::isfinite(l[i].imag())) throw Error("fractional norm: non-finite level");
    FractionalNormResult out;
    const std::size_t N = times.size() - 1;
    for (int level = 0; level < 3; ++level) {
        const std::size_t stride = std::size_t{1} << (2 - level);
        std::vector<double> t;
        std::vector<const pde::CVector*> u;
        for (std::size_t k = 0; k <= N; k += stride) {
            t.push_back(times[k]);
            u.push_back(&levels[k]);
        }
        if (t.back() != times.back()) {
            t.push_back(times.back());
            u.push_back(&levels.back());
        }
        out.refinements[static_cast<std::size_t>(level)] = gagliardo_squared(t, u, weight, nu, threads);
    }
    const double d1 = out.refinements[1] - out.refinements[0];
    const double d2 = out.refinements[2] - out.refinements[1];
    const double scale = std::max(out.refinements[2], 1e-300);
    out.squared = out.refinements[2];
    out.value = std::sqrt(out.squared);
    if (d2 > 1e-12 * scale && d2 > 0.95 * d1) {
        out.divergent = true;
        out.notes = "increment under refinement does not contract (" + std::to_string(d1) + " -> " + std::to_string(d2) + ")";
    }
    return out;
}

FractionalNormResult fractional_time_norm(const pde::DiscreteField& u, double nu, int threads) {
    if (!u.disc) throw RangeError("fractional norm needs the field's discretization");
    return fractional_time_norm(u.times, u.levels, u.disc->cell_volume(), nu, threads);
}

// ---------------------------------------------------------------------------

FitWindow default_fit_window(double h, double T_max) {
    return {std::max(4.0 * h * h, 1.0 - T_max), 1e-1};
}

RateFit fit_exponent(const NormSeries& series, const FitWindow& window) {
    if (!(window.lo > 0.0 && window.hi < 1.0 && window.lo < window.hi)) throw RangeError("fit window must lie in (0, 1)");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::vector<std::pair<double, double>> pts;
    const double slack = 1e-12;
    for (std::size_t k = 0; k < series.times.size(); ++k) {
        const double tau = 1.0 - series.times[k];
        if (tau < window.lo * (1 - slack) || tau > window.hi * (1 + slack)) continue;
        if (k < series.divergent.size() && series.divergent[k]) throw RangeError("fit window contains divergent entries");
        if (!(series.values[k] > 0.0) || !std::isfinite(series.values[k])) throw RangeError("fit needs positive finite values");
        pts.emplace_back(std::log(tau), std::log(series.values[k]));
    }
    if (pts.size() < 5) throw RangeError("fit needs at least 5 points in the window, got " + std::to_string(pts.size()));
    const double n = static_cast<double>(pts.size());
    for (const auto& [x, y] : pts) {
        sx += x;
        sy += y;
    }
    const double mx = sx / n, my = sy / n;
    for (const auto& [x, y] : pts) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    RateFit f;
    f.beta = sxy / sxx;
    f.intercept = my - f.beta * mx;
    double sse = 0.0;
    for (const auto& [x, y] : pts) sse += std::pow(y - f.intercept - f.beta * x, 2);
    f.stderr_beta = pts.size() > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
    f.window_lo = window.lo;
    f.window_hi = window.hi;
    f.points = pts.size();
    return f;
}

PredictedExponents predicted_exponents(int d, double mu, double s) {
    if (d < 1) throw RangeError("dimension must be positive");
    if (!(mu > 0.0 && mu < 0.5 * d)) throw RangeError("predicted exponents need 0 < mu < d/2");
    if (!(s > 1.0) || !std::isfinite(s)) throw RangeError("predicted exponents need 1 < s < inf");
    return {-0.5 * mu + d / (2.0 * s), -0.5 * (mu + 1.0) + d / 4.0, -0.5 * mu + d / 4.0};
}

// ---------------------------------------------------------------------------

namespace {

struct LevelNorms {
    std::vector<double> dt, t_end, u_h1, f_hm1;
};

LevelNorms level_norms(const pde::DiscreteField& u, const SpaceTimeField& f, const pde::Discretization& disc,
                       int threads) {
    const std::size_t N = disc.steps();
    if (u.times != disc.times || u.levels.size() != N + 1) throw RangeError("field levels do not match the time mesh");
    const std::vector<pde::CVector> loads = u.loads.size() == N ? u.loads : pde::compute_loads(disc, f, threads);
    const pde::DiscreteNorms norms(disc);
    LevelNorms L;
    L.dt.resize(N);
    L.t_end.resize(N);
    L.u_h1.resize(N);
    L.f_hm1.resize(N);
    parallel_for(N, threads, [&](std::size_t k) {
        L.dt[k] = disc.times[k + 1] - disc.times[k];
        L.t_end[k] = disc.times[k + 1];
        L.u_h1[k] = norms.h1(u.levels[k + 1]);
        L.f_hm1[k] = norms.hminus1_load(loads[k]);
    });
    return L;
}

MaxRegReport ratio_from(const LevelNorms& L, double p, double T) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw RangeError("max-reg exponent p must satisfy 1 <= p < inf");
    MaxRegReport r;
    r.p = p;
    r.T = T;
    double su = 0.0, sf = 0.0;
    for (std::size_t k = 0; k < L.dt.size(); ++k) {
        if (L.t_end[k] > T * (1 + 1e-14)) break;
        su += L.dt[k] * std::pow(L.u_h1[k], p);
        sf += L.dt[k] * std::pow(L.f_hm1[k], p);
        ++r.steps;
    }
    r.u_norm = std::pow(su, 1.0 / p);
    r.f_norm = std::pow(sf, 1.0 / p);
    if (!(r.f_norm > 0.0)) throw RangeError("undefined max-reg ratio: forcing norm is zero on [0, T]");
    r.ratio = r.u_norm / r.f_norm;
    return r;
}

}  // namespace

MaxRegReport maxreg_ratio(const pde::DiscreteField& u, const SpaceTimeField& f, double p,
                          const pde::Discretization& disc, std::optional<double> T) {
    return ratio_from(level_norms(u, f, disc, 1), p, T.value_or(disc.times.back()));
}

std::vector<MaxRegReport> maxreg_ratios(const pde::DiscreteField& u, const SpaceTimeField& f, const std::vector<double>& ps,
                                        const std::vector<double>& truncations, const pde::Discretization& disc,
                                        int threads) {
    const LevelNorms L = level_norms(u, f, disc, threads);
    std::vector<MaxRegReport> out;
    for (double p : ps)
        for (double T : truncations) out.push_back(ratio_from(L, p, T));
    return out;
}

double growth_trend(const std::vector<MaxRegReport>& s) {
    if (s.size() < 2) throw RangeError("growth trend needs at least two truncations");
    double sx = 0, sy = 0;
    const double n = static_cast<double>(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) {
        sx += static_cast<double>(j);
        sy += std::log(s[j].ratio);
    }
    double sxx = 0, sxy = 0;
    for (std::size_t j = 0; j < s.size(); ++j) {
        const double x = static_cast<double>(j) - sx / n;
        sxx += x * x;
        sxy += x * (std::log(s[j].ratio) - sy / n);
    }
    return sxy / sxx;
}

// ---------------------------------------------------------------------------

DualityReport duality_check(const pde::DiscreteField& u, const SpaceTimeField& f, const pde::DualBundle& v,
                            const SpaceTimeField& g, const pde::Discretization& disc, double p, double eps) {
    if (!(p > 1.0) || !std::isfinite(p)) throw RangeError("Hölder exponent p must satisfy 1 < p < inf");
    const std::size_t N = disc.steps();
    if (u.times != disc.times || v.v.times != disc.times || u.levels.size() != N + 1 || v.v.levels.size() != N + 1) {
        throw RangeError("duality check: forward and dual fields are on different meshes");
    }
    if (f.dim() != disc.d || g.dim() != disc.d) throw RangeError("duality check: data dimension does not match the grid");
    const std::vector<pde::CVector> F = u.loads.size() == N ? u.loads : pde::compute_loads(disc, f);
    const std::vector<pde::CVector> G = v.g_loads.size() == N ? v.g_loads : pde::compute_loads(disc, g);
    const pde::DiscreteNorms norms(disc);
    DualityReport r;
    r.p = p;
    const double q = p / (p - 1.0);
    double sv = 0.0, sf = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
        const double dt = disc.times[k + 1] - disc.times[k];
        r.forward_pairing += dt * G[k].dot(u.levels[k + 1]);
        r.dual_pairing += dt * v.v.levels[k].dot(F[k]);
        sv += dt * std::pow(norms.h1(v.v.levels[k]), p);
        sf += dt * std::pow(norms.hminus1_load(F[k]), q);
    }
    r.difference = std::abs(r.forward_pairing - r.dual_pairing);
    r.relative = r.difference / std::max(std::abs(r.forward_pairing), eps);
    r.holder_bound = std::pow(sv, 1.0 / p) * std::pow(sf, 1.0 / q);
    r.holder_holds = std::abs(r.forward_pairing) <= r.holder_bound * (1 + 1e-9) + 1e-300;
    return r;
}

}  // namespace mrlab::analysis
