#include "mrlab/harness.hpp"

#include <cctype>
#include <limits>

namespace mrlab::harness {

namespace {

long long checked_mul(long long a, long long b) {
    long long r;
    if (__builtin_mul_overflow(a, b, &r)) throw ConfigError("rational literal overflows 64-bit integers");
    return r;
}

long long parse_integer(const std::string& s) {
    if (s.empty()) throw ConfigError("empty number");
    std::size_t pos = 0;
    long long v;
    try {
        v = std::stoll(s, &pos);
    } catch (const std::exception&) {
        throw ConfigError("not an integer: '" + s + "'");
    }
    if (pos != s.size()) throw ConfigError("not an integer: '" + s + "'");
    return v;
}

}  // namespace

Rational parse_rational(const std::string& raw) {
    std::string text;
    for (char c : raw)
        if (!std::isspace(static_cast<unsigned char>(c))) text += c;
    if (text.empty()) throw ConfigError("empty number");
    if (const auto slash = text.find('/'); slash != std::string::npos) {
        const long long n = parse_integer(text.substr(0, slash));
        const long long d = parse_integer(text.substr(slash + 1));
        if (d == 0) throw ConfigError("zero denominator in '" + raw + "'");
        return {n, d};
    }
    // Decimal literal: sign, digits, optional fraction, optional exponent.
    std::size_t i = 0;
    bool neg = false;
    if (text[i] == '+' || text[i] == '-') neg = text[i++] == '-';
    long long mant = 0;
    int scale = 0;
    bool digits = false, dot = false;
    for (; i < text.size(); ++i) {
        const char c = text[i];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            mant = checked_mul(mant, 10) + (c - '0');
            if (dot) ++scale;
            digits = true;
        } else if (c == '.' && !dot) {
            dot = true;
        } else {
            break;
        }
    }
    if (!digits) throw ConfigError("not a number: '" + raw + "'");
    long long ex = 0;
    if (i < text.size()) {
        if (text[i] != 'e' && text[i] != 'E') throw ConfigError("not a number: '" + raw + "'");
        ex = parse_integer(text.substr(i + 1));
    }
    const long long e = ex - scale;
    if (e > 18 || e < -18) throw ConfigError("exponent out of range in '" + raw + "'");
    long long p = 1;
    for (long long k = 0; k < (e < 0 ? -e : e); ++k) p = checked_mul(p, 10);
    Rational q = e >= 0 ? Rational(checked_mul(mant, p), 1) : Rational(mant, p);
    return neg ? -q : q;
}

std::string to_string(const Rational& q) {
    if (q.denominator() == 1) return std::to_string(q.numerator());
    return std::to_string(q.numerator()) + "/" + std::to_string(q.denominator());
}

double to_double(const Rational& q) { return boost::rational_cast<double>(q); }

std::optional<MuInterval> admissible_mu(int d, const Rational& r, const Rational& s) {
    if (d < 2) throw RangeError("admissible_mu needs d >= 2");
    if (!(r > 1) || !(s > 1)) throw RangeError("admissible_mu needs r, s in (1, inf)");
    const Rational lo = Rational(2) / r + Rational(d) / s;
    const Rational hi = Rational(d, 2);
    if (lo < hi) return MuInterval{lo, hi};
    return std::nullopt;
}

ExponentPair sobolev_pairing(const Rational& p, int d) {
    if (!(p > 2)) throw RangeError("sobolev_pairing needs p > 2");
    if (d < 2) throw RangeError("sobolev_pairing needs d >= 2");
    ExponentPair out{p, d >= 3 ? Rational(2 * d, d - 2) : Rational(2) * p / (p - 2) + 1};
    if (!admissible_mu(d, out.r, out.s)) throw Error("internal: Sobolev pairing left the admissible region");
    return out;
}

InterpolationResult interpolation_parameters(const Rational& nu, const Rational& theta, int d) {
    if (d < 2) throw RangeError("interpolation_parameters needs d >= 2");
    if (!(nu > Rational(1, 2)) || nu > 1) throw RangeError("interpolation_parameters needs nu in (1/2, 1]");
    if (!(theta > 0) || !(theta < Rational(1) / (2 * nu))) {
        throw RangeError("theta = " + to_string(theta) + " must lie in (0, 1/(2 nu)) = (0, " + to_string(Rational(1) / (2 * nu)) + ")");
    }
    InterpolationResult out;
    const Rational inv_r = Rational(1, 2) - nu * theta;
    const Rational inv_s = Rational(1, 2) - (1 - theta) / Rational(d);
    out.r = 1 / inv_r;
    out.s = 1 / inv_s;
    out.lhs = 2 * inv_r + d * inv_s;
    out.rhs = Rational(d, 2);
    out.admissible = out.lhs < out.rhs;
    return out;
}

Rational default_theta(const Rational& nu) {
    if (!(nu > 0)) throw RangeError("default_theta needs nu > 0");
    return Rational(4, 5) / (2 * nu);
}

void ScenarioParams::derive() {
    if (!r || !s) {
        if (p) {
            const auto rs = sobolev_pairing(p->value, d);
            if (!r) r = Param{rs.r, Origin::Derived};
            if (!s) s = Param{rs.s, Origin::Derived};
        } else if (nu) {
            if (!theta) theta = Param{default_theta(nu->value), Origin::Derived};
            const auto rs = interpolation_parameters(nu->value, theta->value, d);
            if (!r) r = Param{rs.r, Origin::Derived};
            if (!s) s = Param{rs.s, Origin::Derived};
        }
    }
    check();
}

void ScenarioParams::check() const {
    if (d < 1 || d > kMaxDim) throw ConfigError("d must be in [1, 4]");
    if (mu && !(mu->value > 0)) throw ConfigError("mu must be positive");
    if (mu && r && s) {
        const Rational lo = Rational(2) / r->value + Rational(d) / s->value;
        if (!(lo < mu->value && mu->value < Rational(d, 2))) {
            throw ConfigError("parameters violate 2/r + d/s < mu < d/2: 2/r + d/s = " + to_string(lo) + ", mu = " +
                              to_string(mu->value) + ", d/2 = " + to_string(Rational(d, 2)));
        }
    }
    if (theta && nu && !(theta->value > 0 && theta->value < Rational(1) / (2 * nu->value))) {
        throw ConfigError("theta must lie in (0, 1/(2 nu))");
    }
}

}  // namespace mrlab::harness
