#include "mrlab/profile_io.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mrlab::profile {

using nlohmann::ordered_json;

namespace {

struct Layout {
    bool radial = true;
    int d = 2;
    int w_derivs = 0;          // radial: 0, 1 (W'), 2 (W', W'')
    bool w_gradient = false;   // cartesian
    bool a_derivative = false;
    std::size_t records = 0;

    [[nodiscard]] std::size_t coords() const { return radial ? 1 : static_cast<std::size_t>(d); }
    [[nodiscard]] std::size_t width() const {
        const auto dd = static_cast<std::size_t>(d);
        std::size_t n = coords() + 2;
        if (radial) n += 2 * static_cast<std::size_t>(w_derivs);
        else if (w_gradient) n += 2 * dd;
        n += 2 * dd * dd;
        if (a_derivative) n += radial ? 2 * dd * dd : 2 * dd * dd * dd;
        return n;
    }
};

Layout layout_of(const ProfileFile& f) {
    Layout l;
    if (const auto* r = std::get_if<std::shared_ptr<const RadialTable>>(&f.grid)) {
        const RadialTable& t = **r;
        l.radial = true;
        l.d = t.d;
        l.w_derivs = t.d2W.empty() ? (t.dW.empty() ? 0 : 1) : 2;
        l.a_derivative = !t.dA.empty();
        l.records = t.rho.size();
    } else {
        const CartesianTable& t = *std::get<std::shared_ptr<const CartesianTable>>(f.grid);
        l.radial = false;
        l.d = t.d;
        l.w_gradient = !t.grad_w.empty();
        l.a_derivative = !t.grad_a.empty();
        l.records = t.node_count();
    }
    return l;
}

void push_c(std::vector<double>& v, Complex z) {
    v.push_back(z.real());
    v.push_back(z.imag());
}

void push_m(std::vector<double>& v, const CMat& m, int d) {
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) push_c(v, m(i, j));
}

std::vector<double> record_values(const ProfileFile& f, const Layout& l, std::size_t i) {
    std::vector<double> v;
    v.reserve(l.width());
    const int d = l.d;
    if (l.radial) {
        const RadialTable& t = *std::get<std::shared_ptr<const RadialTable>>(f.grid);
        v.push_back(t.rho[i]);
        push_c(v, t.W[i]);
        if (l.w_derivs >= 1) push_c(v, t.dW[i]);
        if (l.w_derivs >= 2) push_c(v, t.d2W[i]);
        push_m(v, t.A[i], d);
        if (l.a_derivative) push_m(v, t.dA[i], d);
    } else {
        const CartesianTable& t = *std::get<std::shared_ptr<const CartesianTable>>(f.grid);
        const Vec y = t.node(i);
        for (int k = 0; k < d; ++k) v.push_back(y[k]);
        push_c(v, t.w[i]);
        const auto dd = static_cast<std::size_t>(d);
        if (l.w_gradient) {
            for (std::size_t k = 0; k < dd; ++k) push_c(v, t.grad_w[i * dd + k]);
        }
        push_m(v, t.a[i], d);
        if (l.a_derivative) {
            for (std::size_t k = 0; k < dd * dd * dd; ++k) push_c(v, t.grad_a[i * dd * dd * dd + k]);
        }
    }
    return v;
}

ordered_json header_json(const ProfileFile& f, const Layout& l, PayloadKind kind) {
    const ProfileHeader& h = f.header;
    ordered_json j;
    j["format_version"] = h.format_version;
    j["d"] = h.d;
    j["mu"] = h.mu;
    j["lambda"] = h.bounds.lambda;
    j["Lambda"] = h.bounds.Lambda;
    j["C0"] = h.decay.C[0];
    j["C1"] = h.decay.C[1];
    j["C2"] = h.decay.C[2];
    j["lipschitz_at_zero"] = h.decay.lipschitz_at_zero;
    j["grid_kind"] = l.radial ? "radial" : "cartesian";
    if (l.radial) {
        j["grid_shape"] = {l.records};
    } else {
        const CartesianTable& t = *std::get<std::shared_ptr<const CartesianTable>>(f.grid);
        ordered_json shape = ordered_json::array(), lo = ordered_json::array(), hh = ordered_json::array();
        for (int k = 0; k < l.d; ++k) {
            shape.push_back(t.shape[static_cast<std::size_t>(k)]);
            lo.push_back(t.lo[static_cast<std::size_t>(k)]);
            hh.push_back(t.h[static_cast<std::size_t>(k)]);
        }
        j["grid_shape"] = shape;
        j["grid_lo"] = lo;
        j["grid_h"] = hh;
    }
    j["provenance"] = to_string(h.provenance);
    j["payload"] = kind == PayloadKind::Binary ? "f64le" : "text";
    j["record_count"] = l.records;
    if (l.radial) j["w_derivs"] = l.w_derivs;
    else j["has_w_gradient"] = l.w_gradient;
    j["has_a_derivative"] = l.a_derivative;
    if (!h.label.empty()) j["label"] = h.label;
    j["local_only"] = h.local_only;
    if (h.support) j["support"] = {h.support->inner, h.support->outer};
    return j;
}

std::uint64_t to_le(std::uint64_t x) {
    if constexpr (std::endian::native == std::endian::big) {
        std::uint64_t r = 0;
        for (int i = 0; i < 8; ++i) r |= ((x >> (8 * i)) & 0xffu) << (8 * (7 - i));
        return r;
    }
    return x;
}

template <class T>
T field(const ordered_json& j, const char* key, long long offset) {
    if (!j.contains(key)) throw FormatError(std::string("header is missing '") + key + "'", offset);
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw FormatError(std::string("header field '") + key + "' has the wrong type", offset);
    }
}

}  // namespace

void write_profile(std::ostream& os, const ProfileFile& file, PayloadKind kind) {
    const Layout l = layout_of(file);
    os << kProfileMagic << '\n' << header_json(file, l, kind).dump(2) << "\nEND_HEADER\n";
    for (std::size_t i = 0; i < l.records; ++i) {
        const auto v = record_values(file, l, i);
        if (kind == PayloadKind::Binary) {
            for (double x : v) {
                const std::uint64_t bits = to_le(std::bit_cast<std::uint64_t>(x));
                char buf[8];
                std::memcpy(buf, &bits, 8);
                os.write(buf, 8);
            }
        } else {
            char buf[32];
            for (std::size_t k = 0; k < v.size(); ++k) {
                std::snprintf(buf, sizeof buf, "%.17g", v[k]);
                if (k) os << ' ';
                os << buf;
            }
            os << '\n';
        }
    }
    if (!os) throw Error("failed to write profile payload");
}

ProfileFile read_profile(std::istream& is) {
    std::ostringstream ss;
    ss << is.rdbuf();
    const std::string data = ss.str();

    std::size_t pos = data.find('\n');
    if (pos == std::string::npos || data.compare(0, pos, kProfileMagic) != 0) {
        throw FormatError("missing '" + std::string(kProfileMagic) + "' magic line", 0);
    }
    const std::size_t header_begin = pos + 1;
    const std::string end_marker = "\nEND_HEADER\n";
    const std::size_t end = data.find(end_marker, header_begin - 1);
    if (end == std::string::npos) throw FormatError("missing END_HEADER line", static_cast<long long>(header_begin));
    const std::size_t payload_begin = end + end_marker.size();
    const auto hoff = static_cast<long long>(header_begin);

    ordered_json j;
    try {
        j = ordered_json::parse(data.substr(header_begin, end - header_begin + 1));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("malformed header: ") + e.what(), hoff + static_cast<long long>(e.byte));
    }
    if (!j.is_object()) throw FormatError("header is not a JSON object", hoff);

    ProfileFile f;
    ProfileHeader& h = f.header;
    h.format_version = field<int>(j, "format_version", hoff);
    if (h.format_version != 1) throw FormatError("unsupported format_version " + std::to_string(h.format_version), hoff);
    h.d = field<int>(j, "d", hoff);
    h.mu = field<double>(j, "mu", hoff);
    h.bounds = {field<double>(j, "lambda", hoff), field<double>(j, "Lambda", hoff)};
    h.decay.C = {field<double>(j, "C0", hoff), field<double>(j, "C1", hoff), field<double>(j, "C2", hoff)};
    h.decay.lipschitz_at_zero = field<double>(j, "lipschitz_at_zero", hoff);
    try {
        h.provenance = provenance_from_string(field<std::string>(j, "provenance", hoff));
    } catch (const RangeError& e) {
        throw FormatError(e.what(), hoff);
    }
    if (j.contains("label")) h.label = field<std::string>(j, "label", hoff);
    if (j.contains("local_only")) h.local_only = field<bool>(j, "local_only", hoff);
    if (j.contains("support")) {
        const auto s = field<std::vector<double>>(j, "support", hoff);
        if (s.size() != 2) throw FormatError("support must have two entries", hoff);
        h.support = Annulus{s[0], s[1]};
    }
    if (h.d < 2 || h.d > kMaxDim) throw RangeError("profile dimension must satisfy 2 <= d <= 4");
    if (!(h.mu > 0.0) || !(h.mu < 0.5 * h.d)) {
        throw RangeError("header mu=" + std::to_string(h.mu) + " outside (0, d/2)");
    }
    h.bounds.check();
    h.decay.check();

    Layout l;
    l.d = h.d;
    const auto kind = field<std::string>(j, "grid_kind", hoff);
    if (kind != "radial" && kind != "cartesian") throw FormatError("unknown grid_kind '" + kind + "'", hoff);
    l.radial = kind == "radial";
    const auto shape = field<std::vector<long long>>(j, "grid_shape", hoff);
    l.records = field<std::size_t>(j, "record_count", hoff);
    l.a_derivative = field<bool>(j, "has_a_derivative", hoff);
    std::array<double, kMaxDim> lo{}, hh{};
    if (l.radial) {
        l.w_derivs = field<int>(j, "w_derivs", hoff);
        if (l.w_derivs < 0 || l.w_derivs > 2) throw FormatError("w_derivs must be 0, 1 or 2", hoff);
        if (shape.size() != 1 || shape[0] < 0 || static_cast<std::size_t>(shape[0]) != l.records) {
            throw FormatError("grid/metadata mismatch: radial grid_shape disagrees with record_count", hoff);
        }
    } else {
        l.w_gradient = field<bool>(j, "has_w_gradient", hoff);
        const auto jlo = field<std::vector<double>>(j, "grid_lo", hoff);
        const auto jh = field<std::vector<double>>(j, "grid_h", hoff);
        const auto dd = static_cast<std::size_t>(h.d);
        if (shape.size() != dd || jlo.size() != dd || jh.size() != dd) {
            throw FormatError("grid/metadata mismatch: cartesian grid arrays must have d entries", hoff);
        }
        std::size_t n = 1;
        for (std::size_t k = 0; k < dd; ++k) {
            if (shape[k] < 4) throw FormatError("grid/metadata mismatch: cartesian axis shorter than 4 nodes", hoff);
            n *= static_cast<std::size_t>(shape[k]);
            lo[k] = jlo[k];
            hh[k] = jh[k];
        }
        if (n != l.records) throw FormatError("grid/metadata mismatch: grid_shape product disagrees with record_count", hoff);
    }
    const std::string payload = field<std::string>(j, "payload", hoff);
    if (payload != "f64le" && payload != "text") throw FormatError("unknown payload '" + payload + "'", hoff);

    const std::size_t width = l.width();
    std::vector<double> values(width * l.records);
    // Offsets for error reports: byte offsets (binary) or 1-based line numbers (text).
    std::vector<long long> record_pos(l.records);
    if (payload == "f64le") {
        const std::size_t need = values.size() * 8;
        if (data.size() - payload_begin != need) {
            throw FormatError("payload size " + std::to_string(data.size() - payload_begin) +
                                  " bytes, expected " + std::to_string(need),
                              static_cast<long long>(data.size()));
        }
        for (std::size_t k = 0; k < values.size(); ++k) {
            std::uint64_t bits;
            std::memcpy(&bits, data.data() + payload_begin + 8 * k, 8);
            values[k] = std::bit_cast<double>(to_le(bits));
        }
        for (std::size_t r = 0; r < l.records; ++r) {
            record_pos[r] = static_cast<long long>(payload_begin + 8 * width * r);
        }
    } else {
        long long line = 1;
        for (std::size_t i = 0; i < payload_begin; ++i) line += data[i] == '\n';
        std::size_t p = payload_begin;
        for (std::size_t r = 0; r < l.records; ++r, ++line) {
            if (p >= data.size()) throw FormatError("payload ends after " + std::to_string(r) + " records", line);
            std::size_t eol = data.find('\n', p);
            if (eol == std::string::npos) eol = data.size();
            const std::string text = data.substr(p, eol - p);
            record_pos[r] = line;
            const char* c = text.c_str();
            for (std::size_t k = 0; k < width; ++k) {
                char* next = nullptr;
                const double x = std::strtod(c, &next);
                if (next == c) {
                    throw FormatError("record " + std::to_string(r) + " has " + std::to_string(k) +
                                          " values, expected " + std::to_string(width),
                                      line);
                }
                values[r * width + k] = x;
                c = next;
            }
            while (*c == ' ' || *c == '\t' || *c == '\r') ++c;
            if (*c != '\0') throw FormatError("record " + std::to_string(r) + " has trailing data", line);
            p = eol + 1;
        }
        while (p < data.size() && std::isspace(static_cast<unsigned char>(data[p]))) ++p;
        if (p < data.size()) throw FormatError("unexpected data after the last record", line);
    }
    for (std::size_t r = 0; r < l.records; ++r) {
        for (std::size_t k = 0; k < width; ++k) {
            if (!std::isfinite(values[r * width + k])) {
                const long long off = payload == "f64le" ? record_pos[r] + static_cast<long long>(8 * k) : record_pos[r];
                throw FormatError("non-finite sample in record " + std::to_string(r) + ", column " +
                                      std::to_string(k),
                                  off);
            }
        }
    }

    const int d = h.d;
    auto cval = [&](std::size_t r, std::size_t& k) {
        const Complex z(values[r * width + k], values[r * width + k + 1]);
        k += 2;
        return z;
    };
    auto mval = [&](std::size_t r, std::size_t& k) {
        CMat m(d, d);
        for (int i = 0; i < d; ++i)
            for (int jj = 0; jj < d; ++jj) m(i, jj) = cval(r, k);
        return m;
    };
    if (l.radial) {
        auto t = std::make_shared<RadialTable>();
        t->d = d;
        for (std::size_t r = 0; r < l.records; ++r) {
            std::size_t k = 0;
            t->rho.push_back(values[r * width + k++]);
            t->W.push_back(cval(r, k));
            if (l.w_derivs >= 1) t->dW.push_back(cval(r, k));
            if (l.w_derivs >= 2) t->d2W.push_back(cval(r, k));
            t->A.push_back(mval(r, k));
            if (l.a_derivative) t->dA.push_back(mval(r, k));
        }
        try {
            t->check();
        } catch (const RangeError& e) {
            throw FormatError(std::string("grid/metadata mismatch: ") + e.what(), static_cast<long long>(payload_begin));
        }
        f.grid = std::shared_ptr<const RadialTable>(t);
    } else {
        auto t = std::make_shared<CartesianTable>();
        t->d = d;
        for (int k = 0; k < d; ++k) t->shape[static_cast<std::size_t>(k)] = static_cast<int>(shape[static_cast<std::size_t>(k)]);
        t->lo = lo;
        t->h = hh;
        const auto dd = static_cast<std::size_t>(d);
        for (std::size_t r = 0; r < l.records; ++r) {
            std::size_t k = 0;
            const Vec expect = t->node(r);
            for (int c = 0; c < d; ++c) {
                const double y = values[r * width + k++];
                const double scale = std::abs(expect[c]) + hh[static_cast<std::size_t>(c)];
                if (std::abs(y - expect[c]) > 1e-9 * scale) {
                    throw FormatError("grid/metadata mismatch: record " + std::to_string(r) +
                                          " coordinates do not match the declared grid",
                                      record_pos[r]);
                }
            }
            t->w.push_back(cval(r, k));
            if (l.w_gradient) {
                for (std::size_t c = 0; c < dd; ++c) t->grad_w.push_back(cval(r, k));
            }
            t->a.push_back(mval(r, k));
            if (l.a_derivative) {
                for (std::size_t c = 0; c < dd * dd * dd; ++c) t->grad_a.push_back(cval(r, k));
            }
        }
        try {
            t->check();
        } catch (const RangeError& e) {
            throw FormatError(std::string("grid/metadata mismatch: ") + e.what(), static_cast<long long>(payload_begin));
        }
        f.grid = std::shared_ptr<const CartesianTable>(t);
    }
    return f;
}

void save_profile(const std::filesystem::path& path, const ProfileFile& file, PayloadKind kind) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open '" + path.string() + "' for writing");
    write_profile(os, file, kind);
}

ProfileFile load_profile_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open profile '" + path.string() + "'");
    return read_profile(is);
}

ProfilePair load_profile(const std::filesystem::path& path) { return to_pair(load_profile_file(path)); }

ProfilePair to_pair(const ProfileFile& file) {
    ProfilePair p = std::visit([&](const auto& t) { return pair_from_table(t, file.header.mu); }, file.grid);
    const ProfileHeader& h = file.header;
    p.bounds = h.bounds;
    p.decay = h.decay;
    p.provenance = h.provenance;
    p.label = h.label;
    p.local_only = h.local_only;
    if (h.support) p.support = h.support;
    check_profile(p);
    return p;
}

namespace {

ProfileHeader header_of(const ProfilePair& p) {
    ProfileHeader h;
    h.d = p.d;
    h.mu = p.mu;
    h.bounds = p.bounds;
    h.decay = p.decay;
    h.provenance = p.provenance;
    h.label = p.label;
    h.local_only = p.local_only;
    h.support = p.support;
    return h;
}

}  // namespace

std::optional<ProfileFile> profile_file_of(const ProfilePair& p) {
    if (const auto* w = dynamic_cast<const RadialScalarField*>(p.w.get())) {
        const auto* a = dynamic_cast<const RadialMatrixField*>(p.a.get());
        if (!a || a->table_ptr() != w->table_ptr()) return std::nullopt;
        return ProfileFile{header_of(p), w->table_ptr()};
    }
    if (const auto* w = dynamic_cast<const CartesianScalarField*>(p.w.get())) {
        const auto* a = dynamic_cast<const CartesianMatrixField*>(p.a.get());
        if (!a || a->table_ptr() != w->table_ptr()) return std::nullopt;
        return ProfileFile{header_of(p), w->table_ptr()};
    }
    return std::nullopt;
}

ProfileFile sample_radial(const ProfilePair& p, std::span<const double> rho) {
    auto t = std::make_shared<RadialTable>();
    t->d = p.d;
    for (double r : rho) {
        Vec y = Vec::Zero(p.d);
        y[0] = r;
        const CVec g = p.w->gradient(y);
        const CMat H = p.w->hessian(y);
        const MatrixGradient da = p.a->derivative(y);
        t->rho.push_back(r);
        t->W.push_back(p.w->value(y));
        t->dW.push_back(g[0]);
        t->d2W.push_back(H(0, 0));
        t->A.push_back(p.a->value(y));
        t->dA.push_back(da[0]);
    }
    t->check();
    return ProfileFile{header_of(p), std::shared_ptr<const RadialTable>(t)};
}

ProfileFile sample_cartesian(const ProfilePair& p, std::array<int, kMaxDim> shape,
                             std::array<double, kMaxDim> lo, std::array<double, kMaxDim> h) {
    auto t = std::make_shared<CartesianTable>();
    t->d = p.d;
    t->shape = shape;
    t->lo = lo;
    t->h = h;
    const std::size_t n = t->node_count();
    const int d = p.d;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec y = t->node(i);
        t->w.push_back(p.w->value(y));
        const CVec g = p.w->gradient(y);
        for (int k = 0; k < d; ++k) t->grad_w.push_back(g[k]);
        t->a.push_back(p.a->value(y));
        const MatrixGradient da = p.a->derivative(y);
        for (int k = 0; k < d; ++k)
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) t->grad_a.push_back(da[static_cast<std::size_t>(k)](a, b));
    }
    t->check();
    auto f = ProfileFile{header_of(p), std::shared_ptr<const CartesianTable>(t)};
    return f;
}

}  // namespace mrlab::profile
