#include "mrlab/pde.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mrlab::pde {

namespace {

// Portable uniform draws: the std distributions are implementation-defined.
class Draw {
public:
    explicit Draw(std::uint64_t seed) : rng_(seed) {}
    double uniform(double a, double b) { return a + (b - a) * (static_cast<double>(rng_() >> 11) * 0x1.0p-53); }
    Complex complex(double s) { return {uniform(-s, s), uniform(-s, s)}; }
    CMat matrix(int d, double s) {
        CMat m(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) m(i, j) = complex(s);
        return m;
    }
    Vec vector(int d, double s) {
        Vec v(d);
        for (int i = 0; i < d; ++i) v[i] = uniform(-s, s);
        return v;
    }

private:
    std::mt19937_64 rng_;
};

struct Piece {
    CMat R0, R1, S0, S1;
    Vec kr, ks;
    double pr = 0.0, ps = 0.0;
};

}  // namespace

std::shared_ptr<SpaceTimeMatrixField> random_coefficient(int d, std::uint64_t seed, const RandomCoefficientOptions& o) {
    if (d < 1 || d > kMaxDim) throw RangeError("random_coefficient: dimension must be in [1, 4]");
    if (!(o.lambda > 0.0) || o.time_pieces < 1 || !(o.horizon > 0.0)) {
        throw RangeError("random_coefficient: need lambda > 0, at least one piece and a positive horizon");
    }
    Draw rng(seed);
    const double s = o.amplitude / std::sqrt(static_cast<double>(d));
    std::vector<Piece> pieces(static_cast<std::size_t>(o.time_pieces));
    for (auto& p : pieces) {
        p.R0 = rng.matrix(d, s);
        p.R1 = rng.matrix(d, 0.5 * s);
        p.S0 = rng.matrix(d, s);
        p.S1 = rng.matrix(d, 0.5 * s);
        p.kr = rng.vector(d, 2.0);
        p.ks = rng.vector(d, 2.0);
        p.pr = rng.uniform(0.0, 6.283185307179586);
        p.ps = rng.uniform(0.0, 6.283185307179586);
    }
    const double lambda = o.lambda, horizon = o.horizon;
    const int P = o.time_pieces;
    auto value = [pieces, lambda, horizon, P, d](double t, const Vec& x) {
        const int j = std::clamp(static_cast<int>(std::floor(t / horizon * P)), 0, P - 1);
        const Piece& p = pieces[static_cast<std::size_t>(j)];
        const CMat R = p.R0 + p.R1 * std::sin(p.kr.dot(x) + p.pr);
        const CMat S = p.S0 + p.S1 * std::cos(p.ks.dot(x) + p.ps);
        CMat B = R * R.adjoint() + S - S.adjoint();
        B.diagonal().array() += lambda;
        return B;
    };
    return std::make_shared<LambdaMatrixField>(d, value, LambdaMatrixField::DerivFn{}, P == 1);
}

std::shared_ptr<SpaceTimeField> random_forcing(int d, std::uint64_t seed, double L) {
    if (d < 1 || d > kMaxDim) throw RangeError("random_forcing: dimension must be in [1, 4]");
    if (!(L > 0.0)) throw RangeError("random_forcing: box half-width must be positive");
    Draw rng(seed);
    struct Bump {
        Vec c;
        double width, omega;
        Complex a, b;
    };
    std::vector<Bump> bumps(4);
    for (auto& b : bumps) {
        b.c = rng.vector(d, 0.5 * L);
        b.width = rng.uniform(0.3, 0.8) * L / 3.0;
        b.omega = rng.uniform(0.0, 12.0);
        b.a = rng.complex(1.0);
        b.b = rng.complex(1.0);
    }
    return std::make_shared<LambdaSpaceTimeField>(d, [bumps](double t, const Vec& x) {
        Complex s{};
        for (const auto& b : bumps) {
            s += (b.a + b.b * std::cos(b.omega * t)) * std::exp(-(x - b.c).squaredNorm() / (b.width * b.width));
        }
        return s;
    });
}

}  // namespace mrlab::pde
