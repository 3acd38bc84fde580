#include "mrlab/harness.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace mrlab::harness {

namespace pt = boost::property_tree;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt(Complex z) { return fmt(z.real()) + "," + fmt(z.imag()); }

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double number(const std::string& key, const std::string& v) {
    try {
        return to_double(parse_rational(v));
    } catch (const ConfigError& e) {
        throw ConfigError(key + ": " + e.what());
    }
}

int integer(const std::string& key, const std::string& v) {
    const Rational q = parse_rational(v);
    if (q.denominator() != 1) throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return static_cast<int>(q.numerator());
}

bool boolean(const std::string& key, const std::string& v) {
    if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
    if (v == "false" || v == "no" || v == "0" || v == "off") return false;
    throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

Complex complex_value(const std::string& key, const std::string& v) {
    const auto parts = split(v, ',');
    if (parts.size() == 1) return {number(key, parts[0]), 0.0};
    if (parts.size() == 2) return {number(key, parts[0]), number(key, parts[1])};
    throw ConfigError(key + ": expected 're' or 're,im', got '" + v + "'");
}

std::vector<int> int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    for (const auto& item : split(v, ',')) {
        if (const auto dots = item.find(".."); dots != std::string::npos) {
            const int a = integer(key, item.substr(0, dots)), b = integer(key, item.substr(dots + 2));
            if (b < a) throw ConfigError(key + ": empty range '" + item + "'");
            for (int k = a; k <= b; ++k) out.push_back(k);
        } else {
            out.push_back(integer(key, item));
        }
    }
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

std::vector<double> number_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& item : split(v, ',')) out.push_back(number(key, item));
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

}  // namespace

ScenarioConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    pt::ptree tree;
    std::istringstream is(text);
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
    }
    ScenarioConfig c;
    c.base_dir = base_dir;
    const std::set<std::string> sections{"profile", "mesh", "scenario", "tolerances"};
    for (const auto& [name, sub] : tree) {
        if (!sections.count(name)) throw ConfigError("unknown config section [" + name + "]");
        if (sub.data().size() && sub.empty()) throw ConfigError("key '" + name + "' outside a section");
    }
    auto section = [&](const std::string& name) -> const pt::ptree* {
        const auto it = tree.find(name);
        return it == tree.not_found() ? nullptr : &it->second;
    };

    std::optional<int> d;
    std::optional<double> L, lo, hi;
    if (const auto* s = section("scenario")) {
        for (const auto& [k, node] : *s) {
            const std::string v = trim(node.data());
            const std::string key = "scenario." + k;
            auto param = [&](std::optional<Param>& dst) { dst = Param{parse_rational(v), Origin::User}; };
            if (k == "d") d = integer(key, v);
            else if (k == "mu") param(c.params.mu);
            else if (k == "r") param(c.params.r);
            else if (k == "s") param(c.params.s);
            else if (k == "p") param(c.params.p);
            else if (k == "nu") param(c.params.nu);
            else if (k == "interp_theta") param(c.params.theta);
            else if (k == "mode") {
                if (v == "analysis-only") c.mode = ScenarioMode::AnalysisOnly;
                else if (v == "solve") c.mode = ScenarioMode::Solve;
                else throw ConfigError(key + ": expected analysis-only or solve");
            } else if (k == "norm_s") c.norm_s = number(key, v);
            else if (k == "fit_window") {
                const auto w = number_list(key, v);
                if (w.size() != 2) throw ConfigError(key + ": expected 'lo, hi'");
                c.fit_window = analysis::FitWindow{w[0], w[1]};
            } else if (k == "truncations") c.truncations = int_list(key, v);
            else if (k == "p_list") c.p_list = number_list(key, v);
            else if (k == "seed") c.seed = static_cast<std::uint64_t>(integer(key, v));
            else if (k == "dual") c.dual = boolean(key, v);
            else if (k == "fractional_nu") c.fractional_nu = number(key, v);
            else if (k == "compare_until") c.compare_until = number(key, v);
            else if (k == "angular") c.quadrature_angular = integer(key, v);
            else throw ConfigError("unknown key " + key);
        }
    }
    if (!d) throw ConfigError("scenario.d is required");
    if (!c.params.mu) throw ConfigError("scenario.mu is required");
    c.params.d = *d;
    c.mesh.d = *d;

    if (const auto* s = section("profile")) {
        for (const auto& [k, node] : *s) {
            const std::string v = trim(node.data());
            const std::string key = "profile." + k;
            if (k == "source") c.source = v;
            else if (k == "coefficient") c.coefficient = v;
            else if (k == "anisotropy") c.anisotropy = number(key, v);
            else if (k == "scale") c.scale = complex_value(key, v);
            else if (k == "file") c.file = v;
            else if (k == "mode") c.synth_mode = v;
            else if (k == "alpha") c.alpha = complex_value(key, v);
            else if (k == "rho_inner") c.rho_inner = number(key, v);
            else if (k == "rho_outer") c.rho_outer = number(key, v);
            else throw ConfigError("unknown key " + key);
        }
    }
    const std::set<std::string> sources{"decay-test", "gaussian-test", "file", "synthesize"};
    if (!sources.count(c.source)) throw ConfigError("profile.source must be one of decay-test, gaussian-test, file, synthesize");
    const std::set<std::string> coefs{"bump", "anisotropic", "identity"};
    if (!coefs.count(c.coefficient)) throw ConfigError("profile.coefficient must be one of bump, anisotropic, identity");
    if (c.source == "file" && c.file.empty()) throw ConfigError("profile.file is required for source = file");
    if (c.source == "synthesize") (void) profile::synthesis_mode_from_string(c.synth_mode);

    if (const auto* s = section("mesh")) {
        for (const auto& [k, node] : *s) {
            const std::string v = trim(node.data());
            const std::string key = "mesh." + k;
            if (k == "L") L = number(key, v);
            else if (k == "lo") lo = number(key, v);
            else if (k == "hi") hi = number(key, v);
            else if (k == "h") c.mesh.h = number(key, v);
            else if (k == "time_mesh") {
                if (v == "graded") c.mesh.mesh = pde::TimeMeshKind::Graded;
                else if (v == "uniform") c.mesh.mesh = pde::TimeMeshKind::Uniform;
                else throw ConfigError(key + ": expected graded or uniform");
            } else if (k == "M") c.mesh.M = integer(key, v);
            else if (k == "T_max") c.mesh.T_max = number(key, v);
            else if (k == "uniform_steps") c.mesh.uniform_steps = integer(key, v);
            else if (k == "theta") c.mesh.theta = number(key, v);
            else if (k == "require_support") c.mesh.require_support = boolean(key, v);
            else throw ConfigError("unknown key " + key);
        }
    }
    if (L) c.mesh.L = *L;
    if (lo.has_value() != hi.has_value()) throw ConfigError("mesh.lo and mesh.hi must be given together");
    c.mesh.lo = lo;
    c.mesh.hi = hi;
    c.mesh.resolution_guard = true;

    if (const auto* s = section("tolerances")) {
        for (const auto& [k, node] : *s) {
            const std::string v = trim(node.data());
            const std::string key = "tolerances." + k;
            if (k == "residual_gate") c.residual_gate = number(key, v);
            else if (k == "fd_step") c.fd_step = number(key, v);
            else if (k == "r0") c.r0 = number(key, v);
            else if (k == "comparison") c.comparison = number(key, v);
            else if (k == "exponent") c.exponent = number(key, v);
            else if (k == "threads") c.threads = integer(key, v);
            else throw ConfigError("unknown key " + key);
        }
    }
    if (c.threads < 1) throw ConfigError("tolerances.threads must be >= 1");

    try {
        c.params.derive();
    } catch (const RangeError& e) {
        throw ConfigError(e.what());
    }
    if (c.params.s && !(section("scenario") && section("scenario")->count("norm_s"))) c.norm_s = to_double(c.params.s->value);
    if (c.params.nu && !(section("scenario") && section("scenario")->count("fractional_nu"))) {
        c.fractional_nu = to_double(c.params.nu->value);
    }
    return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config '" + path.string() + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

std::vector<std::tuple<std::string, std::string, std::string>> ScenarioConfig::echo() const {
    std::vector<std::tuple<std::string, std::string, std::string>> e;
    auto add = [&](const char* s, const char* k, const std::string& v) { e.emplace_back(s, k, v); };
    add("profile", "source", source);
    add("profile", "coefficient", coefficient);
    add("profile", "anisotropy", fmt(anisotropy));
    add("profile", "scale", fmt(scale));
    add("profile", "file", file);
    add("profile", "mode", synth_mode);
    add("profile", "alpha", fmt(alpha));
    add("profile", "rho_inner", fmt(rho_inner));
    add("profile", "rho_outer", fmt(rho_outer));
    add("mesh", "L", fmt(mesh.L));
    add("mesh", "lo", mesh.lo ? fmt(*mesh.lo) : "");
    add("mesh", "hi", mesh.hi ? fmt(*mesh.hi) : "");
    add("mesh", "h", fmt(mesh.h));
    add("mesh", "time_mesh", mesh.mesh == pde::TimeMeshKind::Graded ? "graded" : "uniform");
    add("mesh", "M", std::to_string(mesh.M));
    add("mesh", "T_max", fmt(mesh.T_max));
    add("mesh", "uniform_steps", std::to_string(mesh.uniform_steps));
    add("mesh", "theta", fmt(mesh.theta));
    add("mesh", "require_support", mesh.require_support ? "true" : "false");
    auto param = [&](const char* k, const std::optional<Param>& p) {
        add("scenario", k, p ? to_string(p->value) + (p->origin == Origin::Derived ? " (derived)" : " (user)") : "");
    };
    add("scenario", "d", std::to_string(params.d));
    param("mu", params.mu);
    param("r", params.r);
    param("s", params.s);
    param("p", params.p);
    param("nu", params.nu);
    param("interp_theta", params.theta);
    add("scenario", "mode", mode == ScenarioMode::Solve ? "solve" : "analysis-only");
    add("scenario", "norm_s", fmt(norm_s));
    add("scenario", "fit_window", fit_window ? fmt(fit_window->lo) + "," + fmt(fit_window->hi) : "default");
    std::string tl, pl;
    for (int t : truncations) tl += (tl.empty() ? "" : ",") + std::to_string(t);
    for (double p : p_list) pl += (pl.empty() ? "" : ",") + fmt(p);
    add("scenario", "truncations", tl);
    add("scenario", "p_list", pl);
    add("scenario", "seed", std::to_string(seed));
    add("scenario", "dual", dual ? "true" : "false");
    add("scenario", "fractional_nu", fmt(fractional_nu));
    add("scenario", "compare_until", fmt(compare_until));
    add("scenario", "angular", std::to_string(quadrature_angular));
    add("tolerances", "residual_gate", fmt(residual_gate));
    add("tolerances", "fd_step", fmt(fd_step));
    add("tolerances", "r0", fmt(r0));
    add("tolerances", "comparison", fmt(comparison));
    add("tolerances", "exponent", fmt(exponent));
    add("tolerances", "threads", std::to_string(threads));
    return e;
}

}  // namespace mrlab::harness
