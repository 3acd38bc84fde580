// Command-line front end: validate, synthesize, run, sweep-p, mms-convergence, dual-check.

#include "mrlab/harness.hpp"
#include "mrlab/profile_io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace mrlab;
using namespace mrlab::harness;

namespace {

struct Common {
    std::string out = "mrlab-out";
    std::string format = "json,csv,svg";
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--out", c.out, "Output directory")->capture_default_str();
    app->add_option("--format", c.format, "Comma-separated output formats: json, csv, svg")->capture_default_str();
    app->add_option("--seed", c.seed, "Seed for random fields (overrides the config)");
    app->add_option("--threads", c.threads, "Worker threads (overrides the config)")->check(CLI::PositiveNumber);
}

ScenarioConfig load(const std::string& path, const Common& c) {
    auto cfg = load_config(path);
    if (c.seed) cfg.seed = *c.seed;
    if (c.threads) cfg.threads = *c.threads;
    return cfg;
}

void summary(const RunReport& r) {
    std::printf("%s: claims %s\n", r.command.c_str(), r.claims.c_str());
    for (const auto& e : r.exponents) {
        if (e.measured) {
            std::printf("  exponent %-12s measured %+.4f  predicted %+.4f  (%s)\n", e.quantity.c_str(), *e.measured,
                        e.predicted, e.status.c_str());
        } else {
            std::printf("  exponent %-12s %s\n", e.quantity.c_str(), e.status.c_str());
        }
    }
    for (const auto& m : r.memberships) std::printf("  %s: %s\n", m.name.c_str(), m.status.c_str());
    for (const auto& [p, g] : r.growth) std::printf("  growth trend p=%g: %+.4f\n", p, g);
    if (r.comparison_error) std::printf("  numeric vs analytic relative L2 error: %.4g\n", *r.comparison_error);
    if (r.duality) std::printf("  duality relative difference: %.3g\n", r.duality->relative);
    for (const auto& [k, v] : r.extras) std::printf("  %s = %.6g\n", k.c_str(), v);
    for (const auto& g : r.gates) std::printf("  [%s] %s: %s\n", g.passed ? "pass" : "FAIL", g.name.c_str(), g.detail.c_str());
    if (!r.failed_stage.empty()) std::printf("  stage '%s' failed: %s\n", r.failed_stage.c_str(), r.error.c_str());
}

int finish(const RunReport& r, const Common& c) {
    summary(r);
    for (const auto& p : emit_report(r, c.out, parse_formats(c.format))) std::printf("  wrote %s\n", p.string().c_str());
    return exit_code(r);
}

std::vector<double> doubles(const std::vector<std::string>& items) {
    std::vector<double> out;
    for (const auto& s : items) out.push_back(to_double(parse_rational(s)));
    return out;
}

std::vector<int> ints(const std::vector<std::string>& items) {
    std::vector<int> out;
    for (const auto& s : items) {
        if (const auto dots = s.find(".."); dots != std::string::npos) {
            const int a = std::stoi(s.substr(0, dots)), b = std::stoi(s.substr(dots + 2));
            for (int k = a; k <= b; ++k) out.push_back(k);
        } else {
            out.push_back(std::stoi(s));
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Maximal-regularity counterexample laboratory"};
    app.require_subcommand(1);

    Common common;

    std::string profile_path;
    double r0 = 1e-3, fd_step = 1e-3, gate = 1e-4;
    auto* validate = app.add_subcommand("validate-profile", "Validate a stored profile pair against the profile equation");
    validate->add_option("file", profile_path, "Profile file")->required()->check(CLI::ExistingFile);
    validate->add_option("--r0", r0, "Excluded ball radius around y = 0")->capture_default_str();
    validate->add_option("--fd-step", fd_step, "Finite-difference step")->capture_default_str();
    validate->add_option("--gate", gate, "Residual gate relative to sup|w|")->capture_default_str();
    add_common(validate, common);

    int d = 2;
    double mu = 0.9, rho_inner = 1.0, rho_outer = 8.0;
    std::string mode = "radial-ode", profile_out = "profile.mrp";
    std::vector<double> alpha{1.0, 0.0};
    bool binary = false;
    auto* synth = app.add_subcommand("synthesize", "Best-effort numerical profile candidate");
    synth->add_option("--d", d, "Dimension")->required();
    synth->add_option("--mu", mu, "Profile exponent")->required();
    synth->add_option("--mode", mode, "radial-ode or annulus-pde")->required();
    synth->add_option("--alpha", alpha, "Coefficient a = alpha I as 're im'")->expected(1, 2);
    synth->add_option("--rho-inner", rho_inner, "Inner radius")->capture_default_str();
    synth->add_option("--rho-outer", rho_outer, "Outer radius")->capture_default_str();
    synth->add_option("--profile-out", profile_out, "Profile file to write")->capture_default_str();
    synth->add_flag("--binary", binary, "Write a binary payload instead of text");
    add_common(synth, common);

    std::string config;
    auto* run = app.add_subcommand("run", "Run a scenario end to end");
    run->add_option("config", config, "Scenario config")->required()->check(CLI::ExistingFile);
    add_common(run, common);

    std::vector<std::string> ps{"2", "4"}, truncs{"3..10"};
    auto* sweep = app.add_subcommand("sweep-p", "Max-reg ratios over p and dyadic truncations");
    sweep->add_option("config", config, "Scenario config")->required()->check(CLI::ExistingFile);
    sweep->add_option("--p", ps, "Exponents p")->delimiter(',');
    sweep->add_option("--truncations", truncs, "Truncation indices j (T_j = 1 - 2^-j), e.g. 3..10")->delimiter(',');
    add_common(sweep, common);

    auto* mms = app.add_subcommand("mms-convergence", "Manufactured-solution convergence suite");
    mms->add_option("config", config, "Scenario config (threads are taken from it)")->required()->check(CLI::ExistingFile);
    add_common(mms, common);

    auto* dual = app.add_subcommand("dual-check", "Duality identity and Hoelder bound on random instances");
    dual->add_option("config", config, "Scenario config (d, seed and p_list are taken from it)")->required()->check(CLI::ExistingFile);
    add_common(dual, common);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) {
            RunReport r;
            r.command = "validate-profile";
            const auto pair = profile::load_profile(profile_path);
            profile::ValidationTolerances tol;
            tol.r0 = r0;
            tol.fd_step = fd_step;
            tol.residual_gate = gate;
            tol.threads = common.threads.value_or(1);
            const auto samples = profile::default_sample_set(pair, tol);
            r.validation = profile::validate_profile(pair, samples, tol);
            r.claims = r.validation->validated ? "validated" : "not validated";
            r.gates.push_back({"profile validated", r.validation->validated,
                               "residual_sup=" + std::to_string(r.validation->residual_sup)});
            r.config = {{"profile", "file", profile_path}, {"tolerances", "r0", std::to_string(r0)},
                        {"tolerances", "fd_step", std::to_string(fd_step)},
                        {"tolerances", "residual_gate", std::to_string(gate)}};
            return finish(r, common);
        }
        if (*synth) {
            profile::SynthesisConfig sc;
            sc.alpha = Complex(alpha.at(0), alpha.size() > 1 ? alpha[1] : 0.0);
            sc.rho_inner = rho_inner;
            sc.rho_outer = rho_outer;
            sc.tolerances.threads = common.threads.value_or(1);
            const auto m = profile::synthesis_mode_from_string(mode);
            if (m == profile::SynthesisMode::AnnulusPde) {
                CMat id = CMat::Identity(d, d);
                sc.a = profile::constant_matrix_field(sc.alpha * id);
            }
            auto [pair, rep] = profile::synthesize_candidate(d, mu, m, sc);
            RunReport r;
            r.command = "synthesize";
            r.validation = rep;
            r.claims = rep.validated ? "validated (local only)" : "not validated";
            r.gates.push_back({"profile validated", rep.validated, "residual_sup=" + std::to_string(rep.residual_sup)});
            r.config = {{"profile", "mode", mode}, {"scenario", "d", std::to_string(d)}, {"scenario", "mu", std::to_string(mu)}};
            auto file = profile::profile_file_of(pair);
            if (!file) {
                if (const auto* rw = dynamic_cast<const profile::RadialScalarField*>(pair.w.get())) {
                    file = profile::sample_radial(pair, rw->table().rho);
                }
            }
            if (file) {
                profile::save_profile(profile_out, *file, binary ? profile::PayloadKind::Binary : profile::PayloadKind::Text);
                std::printf("  wrote %s\n", profile_out.c_str());
            }
            return finish(r, common);
        }
        if (*run) return finish(run_scenario(load(config, common)), common);
        if (*sweep) return finish(sweep_p(load(config, common), doubles(ps), ints(truncs)), common);
        if (*mms) return finish(mms_report(load(config, common)), common);
        if (*dual) return finish(dual_check_report(load(config, common)), common);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
