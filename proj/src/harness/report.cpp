#include "mrlab/harness.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mrlab::harness {

using json = nlohmann::ordered_json;

namespace {

// JSON has no infinities or NaNs; those become null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json opt_number(const std::optional<double>& v) { return v ? number(*v) : json(nullptr); }

json complex_json(Complex z) { return json{{"re", number(z.real())}, {"im", number(z.imag())}}; }

std::string g17(double v) {
    if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

json params_json(const ScenarioParams& p) {
    json j;
    j["d"] = p.d;
    auto one = [&](const char* k, const std::optional<Param>& v) {
        if (!v) {
            j[k] = nullptr;
            return;
        }
        j[k] = json{{"value", to_string(v->value)},
                    {"decimal", to_double(v->value)},
                    {"provenance", v->origin == Origin::User ? "user" : "derived"}};
    };
    one("mu", p.mu);
    one("r", p.r);
    one("s", p.s);
    one("p", p.p);
    one("nu", p.nu);
    one("theta", p.theta);
    if (p.mu && p.r && p.s && p.d >= 2 && p.r->value > 1 && p.s->value > 1) {
        const auto iv = admissible_mu(p.d, p.r->value, p.s->value);
        j["admissible_mu"] = iv ? json{{"lo", to_string(iv->lo)}, {"hi", to_string(iv->hi)}, {"provenance", "harness.admissible_mu"}}
                                : json("empty");
    }
    return j;
}

json validation_json(const profile::ValidationReport& v) {
    auto vec = [](const Vec& x) {
        json a = json::array();
        for (Eigen::Index i = 0; i < x.size(); ++i) a.push_back(number(x[i]));
        return a;
    };
    return json{{"provenance", "profile.validate_profile"},
                {"validated", v.validated},
                {"residual_sup", number(v.residual_sup)},
                {"residual_l2", number(v.residual_l2)},
                {"residual_argmax", vec(v.residual_argmax)},
                {"w_sup", number(v.w_sup)},
                {"degenerate", v.degenerate},
                {"ellipticity_ok", v.ellipticity_ok},
                {"measured_lambda", number(v.measured_lambda)},
                {"measured_Lambda", number(v.measured_Lambda)},
                {"decay_ok", v.decay_ok},
                {"measured_C_w", {number(v.measured_C_w[0]), number(v.measured_C_w[1]), number(v.measured_C_w[2])}},
                {"measured_C_a1", number(v.measured_C_a1)},
                {"C_dw", number(v.C_dw)},
                {"lipschitz_estimate", number(v.lipschitz_estimate)},
                {"samples", v.samples},
                {"decay_samples", v.decay_samples},
                {"notes", v.notes}};
}

json fit_json(const analysis::RateFit& f) {
    return json{{"provenance", "analysis.fit_exponent"},
                {"beta", number(f.beta)},
                {"stderr", number(f.stderr_beta)},
                {"intercept", number(f.intercept)},
                {"window_lo", number(f.window_lo)},
                {"window_hi", number(f.window_hi)},
                {"points", f.points}};
}

json build(const RunReport& r) {
    json j;
    j["command"] = r.command;
    j["claims"] = r.claims;
    j["gates_passed"] = r.gates_passed();
    j["failed_stage"] = r.failed_stage.empty() ? json(nullptr) : json(r.failed_stage);
    j["error"] = r.error.empty() ? json(nullptr) : json(r.error);
    json cfg = json::object();
    for (const auto& [sec, key, val] : r.config) cfg[sec][key] = val;
    j["config"] = cfg;
    j["params"] = params_json(r.params);
    j["validation"] = r.validation ? validation_json(*r.validation) : json(nullptr);

    json gates = json::array();
    for (const auto& g : r.gates) gates.push_back({{"name", g.name}, {"passed", g.passed}, {"detail", g.detail}});
    j["gates"] = gates;

    json ex = json::array();
    for (const auto& e : r.exponents) {
        ex.push_back({{"quantity", e.quantity},
                      {"predicted", number(e.predicted)},
                      {"measured", opt_number(e.measured)},
                      {"stderr", opt_number(e.stderr_beta)},
                      {"window_lo", number(e.window_lo)},
                      {"window_hi", number(e.window_hi)},
                      {"status", e.status},
                      {"provenance", e.provenance}});
    }
    j["exponents"] = ex;

    json ms = json::array();
    for (const auto& m : r.memberships) {
        ms.push_back({{"name", m.name}, {"status", m.status}, {"value", opt_number(m.value)}, {"provenance", m.provenance},
                      {"notes", m.notes}});
    }
    j["memberships"] = ms;

    json series = json::array();
    for (const auto& s : r.series) {
        json t = json::array(), v = json::array(), dv = json::array();
        for (double x : s.series.times) t.push_back(number(x));
        for (double x : s.series.values) v.push_back(number(x));
        for (bool b : s.series.divergent) dv.push_back(b);
        series.push_back({{"label", s.series.label},
                          {"kind", s.series.kind.to_string()},
                          {"provenance", s.provenance},
                          {"times", t},
                          {"values", v},
                          {"divergent", dv},
                          {"fit", s.fit ? fit_json(*s.fit) : json(nullptr)},
                          {"predicted", opt_number(s.predicted)}});
    }
    j["series"] = series;

    json mr = json::array();
    for (const auto& m : r.maxreg) {
        mr.push_back({{"p", number(m.p)},
                      {"T", number(m.T)},
                      {"ratio", number(m.ratio)},
                      {"u_norm", number(m.u_norm)},
                      {"f_norm", number(m.f_norm)},
                      {"steps", m.steps},
                      {"provenance", "analysis.maxreg_ratios"}});
    }
    j["maxreg"] = mr;
    json gr = json::array();
    for (const auto& [p, g] : r.growth) gr.push_back({{"p", number(p)}, {"trend", number(g)}, {"provenance", "analysis.growth_trend"}});
    j["growth"] = gr;

    if (r.duality) {
        const auto& d = *r.duality;
        j["duality"] = {{"provenance", "pde.solve_dual -> analysis.duality_check"},
                        {"forward_pairing", complex_json(d.forward_pairing)},
                        {"dual_pairing", complex_json(d.dual_pairing)},
                        {"difference", number(d.difference)},
                        {"relative", number(d.relative)},
                        {"p", number(d.p)},
                        {"holder_bound", number(d.holder_bound)},
                        {"holder_holds", d.holder_holds}};
    } else {
        j["duality"] = nullptr;
    }
    j["comparison"] = r.comparison_error
                          ? json{{"relative_l2_error", number(*r.comparison_error)},
                                 {"provenance", "pde.solve_forward vs pde.nodal_values of construction.UField"}}
                          : json(nullptr);
    if (r.mesh) {
        const auto& m = *r.mesh;
        j["mesh"] = {{"provenance", "pde.build_discretization / pde.solve_forward"},
                     {"unknowns", m.unknowns},
                     {"steps", m.steps},
                     {"factorizations", m.factorizations},
                     {"h", number(m.h)},
                     {"T_max", number(m.T_max)},
                     {"max_residual", number(m.max_residual)},
                     {"min_coercivity", number(m.min_coercivity)}};
    } else {
        j["mesh"] = nullptr;
    }
    json extras = json::object();
    for (const auto& [k, v] : r.extras) extras[k] = number(v);
    j["extras"] = extras;
    return j;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw Error("cannot write '" + p.string() + "'");
    os << content;
    if (!os) throw Error("write failed for '" + p.string() + "'");
}

std::string series_csv(const RunReport& r) {
    std::ostringstream os;
    os << "series,kind,t,one_minus_t,value,divergent\n";
    for (const auto& s : r.series) {
        for (std::size_t k = 0; k < s.series.times.size(); ++k) {
            const double t = s.series.times[k];
            os << csv_field(s.series.label) << ',' << csv_field(s.series.kind.to_string()) << ',' << g17(t) << ','
               << g17(1.0 - t) << ',' << g17(s.series.values[k]) << ','
               << (k < s.series.divergent.size() && s.series.divergent[k] ? 1 : 0) << '\n';
        }
    }
    return os.str();
}

std::string exponents_csv(const RunReport& r) {
    std::ostringstream os;
    os << "quantity,predicted,measured,stderr,window_lo,window_hi\n";
    for (const auto& e : r.exponents) {
        os << csv_field(e.quantity) << ',' << g17(e.predicted) << ',' << (e.measured ? g17(*e.measured) : "") << ','
           << (e.stderr_beta ? g17(*e.stderr_beta) : "") << ',' << g17(e.window_lo) << ',' << g17(e.window_hi) << '\n';
    }
    return os.str();
}

std::string maxreg_csv(const RunReport& r) {
    std::ostringstream os;
    os << "p,T,ratio,u_norm,f_norm,steps\n";
    for (const auto& m : r.maxreg) {
        os << g17(m.p) << ',' << g17(m.T) << ',' << g17(m.ratio) << ',' << g17(m.u_norm) << ',' << g17(m.f_norm) << ','
           << m.steps << '\n';
    }
    return os.str();
}

// Log-log plot of value against 1 − t with the fitted and predicted slopes.
std::string svg_plot(const SeriesEntry& s) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t k = 0; k < s.series.times.size(); ++k) {
        const double tau = 1.0 - s.series.times[k], v = s.series.values[k];
        if (tau > 0.0 && v > 0.0 && std::isfinite(v)) pts.emplace_back(std::log10(tau), std::log10(v));
    }
    if (pts.empty()) return "";
    double x0 = pts[0].first, x1 = x0, y0 = pts[0].second, y1 = y0;
    for (auto [x, y] : pts) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
    }
    if (x1 - x0 < 1e-9) x1 = x0 + 1.0;
    if (y1 - y0 < 1e-9) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    const double W = 640, H = 420, ml = 70, mr = 20, mt = 40, mb = 50;
    auto X = [&](double x) { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); };
    auto Y = [&](double y) { return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb); };
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
       << ' ' << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
       << s.series.label << " (" << s.series.kind.to_string() << ")</text>\n";
    os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr << "\" height=\"" << H - mt - mb
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int e = static_cast<int>(std::ceil(x0)); e <= static_cast<int>(std::floor(x1)); ++e) {
        os << "<text x=\"" << X(e) << "\" y=\"" << H - mb + 18
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">1e" << e << "</text>\n";
    }
    os.precision(3);
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 10
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">1 - t</text>\n";
    os << "<text x=\"8\" y=\"" << mt - 8 << "\" font-family=\"sans-serif\" font-size=\"11\">log10 range [" << y0 << ", "
       << y1 << "]</text>\n";
    os.precision(2);
    os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (auto [x, y] : pts) os << X(x) << ',' << Y(y) << ' ';
    os << "\"/>\n";
    auto line = [&](double slope, double icpt, const char* colour, const char* dash, double lo, double hi) {
        const double a = std::max(x0, std::log10(lo)), b = std::min(x1, std::log10(hi));
        if (!(b > a)) return;
        auto yv = [&](double x) { return std::clamp(icpt + slope * x, y0, y1); };
        os << "<line x1=\"" << X(a) << "\" y1=\"" << Y(yv(a)) << "\" x2=\"" << X(b) << "\" y2=\"" << Y(yv(b))
           << "\" stroke=\"" << colour << "\" stroke-width=\"1.5\"" << dash << "/>\n";
    };
    if (s.fit) {
        const double ic = s.fit->intercept / std::log(10.0);
        line(s.fit->beta, ic, "#d62728", "", s.fit->window_lo, s.fit->window_hi);
        if (s.predicted) {
            // Reference slope anchored at the centre of the fit window.
            const double xm = 0.5 * (std::log10(s.fit->window_lo) + std::log10(s.fit->window_hi));
            const double ym = ic + s.fit->beta * xm;
            line(*s.predicted, ym - *s.predicted * xm, "#2ca02c", " stroke-dasharray=\"6,4\"", std::pow(10.0, x0),
                 std::pow(10.0, x1));
        }
        os.precision(4);
        os << "<text x=\"" << ml + 8 << "\" y=\"" << mt + 16 << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#d62728\">fit slope "
           << s.fit->beta << "</text>\n";
        if (s.predicted) {
            os << "<text x=\"" << ml + 8 << "\" y=\"" << mt + 30
               << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#2ca02c\">predicted slope " << *s.predicted
               << "</text>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace

std::string report_json(const RunReport& report) { return build(report).dump(2) + "\n"; }

int parse_formats(const std::string& list) {
    int f = 0;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
        if (item == "json") f |= static_cast<int>(Format::Json);
        else if (item == "csv") f |= static_cast<int>(Format::Csv);
        else if (item == "svg") f |= static_cast<int>(Format::Svg);
        else if (!item.empty()) throw ConfigError("unknown output format '" + item + "' (json, csv, svg)");
    }
    if (!f) throw ConfigError("no output format selected");
    return f;
}

std::vector<std::filesystem::path> emit_report(const RunReport& r, const std::filesystem::path& dir, int formats) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
    std::vector<std::filesystem::path> out;
    auto put = [&](const std::string& name, const std::string& content) {
        out.push_back(dir / name);
        write_file(out.back(), content);
    };
    if (formats & static_cast<int>(Format::Json)) {
        put("report.json", report_json(r));
        json t = json::object();
        for (const auto& [k, v] : r.timing) t[k] = number(v);
        put("timing.json", t.dump(2) + "\n");
    }
    if (formats & static_cast<int>(Format::Csv)) {
        put("series.csv", series_csv(r));
        put("exponents.csv", exponents_csv(r));
        if (!r.maxreg.empty()) put("maxreg.csv", maxreg_csv(r));
    }
    if (formats & static_cast<int>(Format::Svg)) {
        for (std::size_t k = 0; k < r.series.size(); ++k) {
            const std::string svg = svg_plot(r.series[k]);
            if (!svg.empty()) put("plot_" + std::to_string(k) + ".svg", svg);
        }
    }
    if (r.solution) {
        out.push_back(dir / "solution.ckpt");
        pde::write_checkpoint(out.back(), *r.solution);
    }
    if (r.profile_artifact) {
        out.push_back(dir / "profile.mrp");
        profile::save_profile(out.back(), *r.profile_artifact, profile::PayloadKind::Text);
    }
    return out;
}

int exit_code(const RunReport& report) {
    if (!report.failed_stage.empty()) return 1;
    return report.gates_passed() ? 0 : 2;
}

}  // namespace mrlab::harness
