// gsched: gain-scheduled turboshaft control, simulation and stability certification.
//
// Exit codes: 0 ok/valid, 1 config error, 2 invalid certificate or unstable scan,
// 3 feasibility unknown, 4 numerical blow-up.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gsched/closed_loop.hpp"
#include "gsched/error.hpp"
#include "gsched/io.hpp"
#include "gsched/lyapunov_cert.hpp"
#include "gsched/summary.hpp"

#ifndef GSCHED_DEFAULT_MODEL
#define GSCHED_DEFAULT_MODEL "data/turboshaft_model.json"
#endif

namespace fs = std::filesystem;
using gsched::io::Json;

namespace {

enum Exit : int { kOk = 0, kConfig = 1, kInvalid = 2, kUnknown = 3, kBlowUp = 4 };

struct RunConfig {
    std::string model_path{GSCHED_DEFAULT_MODEL};
    std::string out_dir;
    std::string norm{"spectral"};
    std::uint64_t seed{1};

    // controller overrides (NaN / empty = keep model value)
    std::optional<double> eps_c, eta_c, ifb, dt;
    std::vector<double> v_min, v_max;

    // simulate
    std::string scenario_path;
    std::string preset{"idle-cruise-idle"};
    std::string hold_point{"idle"};
    std::optional<double> t_final;
    std::optional<double> r_rate_max;
    bool allow_fast_ref{false};
    std::string certificate_path;

    // certify / verify
    double delta{1e-3};
    std::size_t max_iter{5000};
    std::size_t eq_samples{5};
    std::size_t transient{10};
    std::size_t random_vertices{0};
    std::vector<std::string> extra_vertices;
    std::string verify_path;
    bool symmetrize{false};
    std::string vertex_set{"equilibrium"};

    // analyze
    std::size_t grid{100};
    std::optional<double> alpha_min, alpha_max;
    bool no_hurwitz_check{false};
};

gsched::MatrixNorm parse_norm(const std::string& s) {
    if (s == "spectral") {
        return gsched::MatrixNorm::Spectral;
    }
    if (s == "frobenius") {
        return gsched::MatrixNorm::Frobenius;
    }
    throw gsched::ConfigError("unknown norm '" + s + "' (spectral | frobenius)");
}

fs::path output_dir(const RunConfig& rc) {
    fs::path dir = ".";
    if (const char* env = std::getenv("GSCHED_OUTPUT_DIR"); env != nullptr && *env != '\0') {
        dir = env;
    }
    if (!rc.out_dir.empty()) {
        dir = rc.out_dir;
    }
    fs::create_directories(dir);
    return dir;
}

gsched::io::Model load_model(const RunConfig& rc, bool require_hurwitz = true) {
    if (!fs::exists(rc.model_path)) {
        throw gsched::ConfigError("model file '" + rc.model_path + "' does not exist");
    }
    auto model = gsched::io::load_model(rc.model_path, require_hurwitz);
    auto& c = model.controller;
    if (rc.eps_c) c.eps_c = *rc.eps_c;
    if (rc.eta_c) c.eta_c = *rc.eta_c;
    if (rc.ifb) c.ifb_gain = *rc.ifb;
    if (rc.dt) c.dt = *rc.dt;
    if (!rc.v_min.empty()) c.v_min = gsched::Vec2(rc.v_min[0], rc.v_min[1]);
    if (!rc.v_max.empty()) c.v_max = gsched::Vec2(rc.v_max[0], rc.v_max[1]);
    try {
        c.validate();
    } catch (const gsched::InvalidInput& e) {
        throw gsched::ConfigError(e.what());
    }
    return model;
}

gsched::Scenario default_scenario(const gsched::io::Model& m) {
    const auto idle = m.knot_index("idle", 0);
    const auto cruise = m.knot_index("cruise", m.family.size() / 2);
    return gsched::idle_cruise_idle_scenario(m.family, idle, cruise);
}

gsched::Scenario resolve_scenario(const RunConfig& rc, const gsched::io::Model& m) {
    gsched::Scenario sc;
    if (!rc.scenario_path.empty()) {
        sc = gsched::io::load_scenario(rc.scenario_path);
    } else if (rc.preset == "idle-cruise-idle") {
        sc = default_scenario(m);
    } else if (rc.preset == "hold") {
        sc = gsched::hold_scenario(m.family, m.knot_index(rc.hold_point, m.family.size()));
        if (m.knot_index(rc.hold_point, m.family.size()) == m.family.size()) {
            throw gsched::ConfigError("hold point '" + rc.hold_point + "' is not a model point label");
        }
    } else if (rc.preset == "step") {
        sc = gsched::step_scenario(m.family, m.knot_index("idle", 0), m.knot_index("cruise", m.family.size() / 2));
    } else {
        throw gsched::ConfigError("unknown preset '" + rc.preset + "' (idle-cruise-idle | step | hold)");
    }
    if (rc.t_final) sc.t_final = *rc.t_final;
    if (rc.r_rate_max) sc.r_rate_max = *rc.r_rate_max;
    if (rc.allow_fast_ref) sc.allow_fast_ref = true;
    return sc;
}

Json manifest(const std::string& command, const RunConfig& rc, const gsched::io::Model& m) {
    Json j;
    j["command"] = command;
    j["model_path"] = rc.model_path;
    j["model_name"] = m.name;
    j["controller"] = gsched::io::controller_to_json(m.controller);
    j["norm"] = rc.norm;
    j["seed"] = rc.seed;
    return j;
}

Json hold_json(const gsched::HoldResult& h) {
    Json j;
    j["t_start"] = h.t_start;
    j["t_end"] = h.t_end;
    j["target"] = {h.target(0), h.target(1)};
    j["steady_state_error"] = {h.steady_state_error(0), h.steady_state_error(1)};
    j["overshoot_pct"] = h.overshoot_pct;
    j["settle_time"] = h.settle_time ? Json(*h.settle_time) : Json();
    return j;
}

int cmd_simulate(const RunConfig& rc) {
    const auto model = load_model(rc);
    const auto sc = resolve_scenario(rc, model);
    gsched::SimOptions opts;
    opts.norm = parse_norm(rc.norm);
    if (!rc.certificate_path.empty()) {
        const auto cert = gsched::io::load_certificate(rc.certificate_path);
        if (cert.P.rows() != 6) {
            throw gsched::ConfigError("certificate P must be 6x6 to attach to a trace");
        }
        opts.lyapunov_p = gsched::Mat6(cert.P);
    }

    gsched::SimTrace trace;
    try {
        trace = gsched::simulate(model.family, model.controller, sc, opts);
    } catch (const gsched::InvalidInput& e) {
        throw gsched::ConfigError(e.what());
    }
    const auto sum = gsched::summarize(trace, sc);
    const fs::path dir = output_dir(rc);

    std::ofstream csv(dir / "trace.csv");
    gsched::io::write_trace_csv(csv, trace);

    Json js;
    js["scenario"] = sc.name;
    js["steps"] = trace.samples.size();
    js["final_error"] = {sum.final_error(0), sum.final_error(1)};
    js["final_thrust"] = sum.final_thrust;
    Json holds = Json::array();
    for (const auto& h : sum.holds) {
        holds.push_back(hold_json(h));
    }
    js["holds"] = std::move(holds);
    js["saturation_duty"] = sum.saturation_duty;
    js["fuel_clamp_steps"] = sum.fuel_clamp_steps;
    js["min_fuel"] = sum.min_fuel;
    js["max_abs_v_sat"] = sum.max_abs_v_sat;
    js["sup_ydot"] = sum.monitors.sup_ydot;
    js["sup_rdot"] = sum.monitors.sup_rdot;
    js["k_A_measured"] = sum.monitors.sup_acl;
    js["L_A_measured"] = sum.monitors.lipschitz_acl;
    js["max_frozen_abscissa"] = sum.monitors.max_abscissa;
    gsched::io::write_json(dir / "summary.json", js);

    auto man = manifest("simulate", rc, model);
    man["scenario"] = gsched::io::scenario_to_json(sc);
    man["certificate_path"] = rc.certificate_path;
    man["outputs"] = {"trace.csv", "summary.json"};
    gsched::io::write_json(dir / "manifest.json", man);

    std::cout << "scenario " << sc.name << ", " << trace.samples.size() << " samples, dt " << trace.dt << "\n"
              << "final |y - r|        " << sum.final_error.transpose() << "\n"
              << "final thrust [N]     " << sum.final_thrust << "\n";
    for (const auto& h : sum.holds) {
        std::cout << "hold t=[" << h.t_start << ", " << h.t_end << "] ss error " << h.steady_state_error.transpose()
                  << ", overshoot " << h.overshoot_pct << " %, settle "
                  << (h.settle_time ? std::to_string(*h.settle_time) + " s" : std::string("not settled")) << "\n";
    }
    std::cout << "saturation duty      " << sum.saturation_duty << "\n"
              << "sup ||y'||           " << sum.monitors.sup_ydot << "\n"
              << "sup ||A_cl|| (k_A)   " << sum.monitors.sup_acl << "\n"
              << "Lipschitz A_cl (L_A) " << sum.monitors.lipschitz_acl << "\n"
              << "wrote " << (dir / "trace.csv").string() << "\n";
    return kOk;
}

gsched::VertexSet vertex_set(const RunConfig& rc, const gsched::io::Model& m, bool with_samples) {
    std::vector<double> alphas;
    for (const auto& p : m.family.points()) {
        alphas.push_back(p.alpha_star);
    }
    std::vector<gsched::OffState> off;
    if (with_samples) {
        const double lo = m.family.alpha_min();
        const double hi = m.family.alpha_max();
        for (std::size_t j = 0; j < rc.eq_samples; ++j) {
            alphas.push_back(lo + (hi - lo) * (static_cast<double>(j) + 0.5) / static_cast<double>(rc.eq_samples));
        }
        if (rc.transient > 0 || rc.random_vertices > 0) {
            const auto trace = gsched::simulate(m.family, m.controller, default_scenario(m));
            off = gsched::sample_offstates(trace, rc.transient);
            std::mt19937_64 rng(rc.seed);
            std::uniform_int_distribution<std::size_t> pick(0, trace.samples.size() - 1);
            std::normal_distribution<double> noise(0.0, 0.01);
            for (std::size_t j = 0; j < rc.random_vertices; ++j) {
                const auto& s = trace.samples[pick(rng)];
                gsched::OffState o;
                o.x = s.x + gsched::Vec2(noise(rng), noise(rng));
                o.u = s.u + gsched::Vec2(noise(rng), noise(rng));
                o.x_c = s.x_c + gsched::Vec2(noise(rng), noise(rng));
                o.r = s.r;
                o.label = "random " + std::to_string(j) + " near t=" + gsched::io::format_double(s.t);
                off.push_back(o);
            }
        }
    }
    auto vs = gsched::build_vertices(m.family, m.controller, alphas, off);
    for (const auto& path : rc.extra_vertices) {
        const Json j = gsched::io::read_json(path);
        vs.add(gsched::io::matrix_from_json(j.at("A"), path), j.value("label", path), gsched::VertexKind::External);
    }
    return vs;
}

void print_margins(const gsched::VertexSet& vs, const std::vector<double>& margins) {
    std::cout << std::left << std::setw(5) << "#" << std::setw(40) << "vertex" << std::setw(17) << "kind"
              << "lambda_max(A^T P + P A)\n";
    for (std::size_t i = 0; i < vs.size(); ++i) {
        std::cout << std::setw(5) << i << std::setw(40) << vs[i].label << std::setw(17) << to_string(vs[i].kind)
                  << std::setprecision(10) << margins[i] << "\n";
    }
}

int run_verify(const RunConfig& rc, const gsched::io::Model& model, const gsched::VertexSet& vs,
               const std::string& path, const std::string& command) {
    const auto file = gsched::io::load_certificate(path);
    gsched::VerifyResult vr;
    try {
        vr = gsched::verify_certificate(file.P, vs, rc.symmetrize);
    } catch (const gsched::InvalidInput& e) {
        throw gsched::ConfigError(e.what());
    }
    const fs::path dir = output_dir(rc);
    std::ofstream csv(dir / "margins.csv");
    gsched::io::write_margin_csv(csv, vs, vr.margins);

    Json j;
    j["certificate_path"] = path;
    j["valid"] = vr.valid;
    j["symmetrized"] = vr.symmetrized;
    j["asymmetry"] = vr.asymmetry;
    j["lambda_min_P"] = vr.lambda_min_P;
    j["lambda_max_P"] = vr.lambda_max_P;
    j["margins"] = vr.margins;
    gsched::io::write_json(dir / "verify.json", j);

    auto man = manifest(command, rc, model);
    man["certificate_path"] = path;
    man["symmetrize"] = rc.symmetrize;
    man["vertex_set"] = rc.vertex_set;
    man["outputs"] = {"margins.csv", "verify.json"};
    gsched::io::write_json(dir / "manifest.json", man);

    if (vr.symmetrized) {
        std::cout << "P was not symmetric (||P - P^T||_F = " << vr.asymmetry << "); checked (P + P^T)/2\n";
    }
    print_margins(vs, vr.margins);
    std::cout << "lambda_min(P) = " << vr.lambda_min_P << "\n"
              << (vr.valid ? "VALID" : "INVALID") << " certificate for " << vs.size() << " vertices\n";
    return vr.valid ? kOk : kInvalid;
}

int cmd_certify(const RunConfig& rc) {
    const auto model = load_model(rc);
    const auto vs = vertex_set(rc, model, true);
    if (!rc.verify_path.empty()) {
        return run_verify(rc, model, vs, rc.verify_path, "certify --verify");
    }
    gsched::SolverOptions so;
    so.delta = rc.delta;
    so.max_iter = rc.max_iter;
    const auto res = gsched::find_common_p(vs, so);
    std::cout << res.message << "\n";
    if (res.status == gsched::Feasibility::Infeasible) {
        std::cout << "offending vertex: #" << *res.offending_vertex << " '" << vs[*res.offending_vertex].label
                  << "'\n";
        return kInvalid;
    }
    const fs::path dir = output_dir(rc);
    gsched::io::write_json(dir / "certificate.json",
                           gsched::io::certificate_to_json(res.certificate, vs, res.status, model.controller));
    std::ofstream csv(dir / "margins.csv");
    gsched::io::write_margin_csv(csv, vs, res.certificate.per_vertex_margin);

    auto man = manifest("certify", rc, model);
    man["delta"] = rc.delta;
    man["max_iter"] = rc.max_iter;
    man["eq_samples"] = rc.eq_samples;
    man["transient"] = rc.transient;
    man["random_vertices"] = rc.random_vertices;
    man["extra_vertices"] = rc.extra_vertices;
    man["outputs"] = {"certificate.json", "margins.csv"};
    gsched::io::write_json(dir / "manifest.json", man);

    print_margins(vs, res.certificate.per_vertex_margin);
    std::cout << "lambda_min(P) = " << res.certificate.lambda_min_P
              << ", lambda_max(P) = " << res.certificate.lambda_max_P << "\n";
    return res.status == gsched::Feasibility::Feasible ? kOk : kUnknown;
}

int cmd_verify(const RunConfig& rc) {
    if (rc.certificate_path.empty()) {
        throw gsched::ConfigError("verify needs --certificate");
    }
    const auto model = load_model(rc);
    if (rc.vertex_set != "equilibrium" && rc.vertex_set != "all") {
        throw gsched::ConfigError("unknown vertex set '" + rc.vertex_set + "' (equilibrium | all)");
    }
    const auto vs = vertex_set(rc, model, rc.vertex_set == "all");
    return run_verify(rc, model, vs, rc.certificate_path, "verify");
}

int cmd_analyze(const RunConfig& rc) {
    const auto model = load_model(rc, !rc.no_hurwitz_check);
    const double lo = rc.alpha_min.value_or(model.family.alpha_min());
    const double hi = rc.alpha_max.value_or(model.family.alpha_max());
    gsched::HurwitzScan scan;
    try {
        scan = gsched::hurwitz_scan(model.family, model.controller, lo, hi, rc.grid, parse_norm(rc.norm));
    } catch (const gsched::InvalidInput& e) {
        throw gsched::ConfigError(e.what());
    }
    const fs::path dir = output_dir(rc);
    std::ofstream csv(dir / "scan.csv");
    gsched::io::write_scan_csv(csv, scan);

    auto man = manifest("analyze", rc, model);
    man["grid"] = rc.grid;
    man["alpha_min"] = lo;
    man["alpha_max"] = hi;
    man["no_hurwitz_check"] = rc.no_hurwitz_check;
    man["outputs"] = {"scan.csv"};
    gsched::io::write_json(dir / "manifest.json", man);

    const bool stable = scan.max_abscissa < 0.0;
    std::cout << "grid " << scan.rows.size() << " points on [" << lo << ", " << hi << "]\n"
              << "max Re(lambda(A_cl)) = " << std::setprecision(10) << scan.max_abscissa << " at alpha "
              << scan.alpha_at_max << (stable ? "" : "  <-- UNSTABLE") << "\n";
    if (scan.rows.size() == 1) {
        std::cout << "eigenvalues:";
        for (const auto& e : scan.rows.front().eig) {
            std::cout << " " << e;
        }
        std::cout << "\n";
    }
    return stable ? kOk : kInvalid;
}

void add_common(CLI::App* sub, RunConfig& rc) {
    sub->add_option("--model", rc.model_path, "Model file (JSON)");
    sub->add_option("--out", rc.out_dir, "Output directory (default: $GSCHED_OUTPUT_DIR or .)");
    sub->add_option("--norm", rc.norm, "Matrix norm for ||A_cl||: spectral | frobenius");
    sub->add_option("--seed", rc.seed, "Seed for randomized vertex sampling");
    sub->add_option("--eps-c", rc.eps_c, "Integrator leak eps_c [1/s]");
    sub->add_option("--eta-c", rc.eta_c, "Input augmentation rate eta_c [1/s]");
    sub->add_option("--ifb", rc.ifb, "Anti-windup integral feedback gain");
    sub->add_option("--dt", rc.dt, "Step size [s]");
    sub->add_option("--v-min", rc.v_min, "Lower saturation bounds on v")->expected(2);
    sub->add_option("--v-max", rc.v_max, "Upper saturation bounds on v")->expected(2);
}

void add_vertex_options(CLI::App* sub, RunConfig& rc) {
    sub->add_option("--eq-samples", rc.eq_samples, "Extra equilibrium vertices between the knots");
    sub->add_option("--transient", rc.transient, "Transient vertices sampled from the default scenario");
    sub->add_option("--random-vertices", rc.random_vertices, "Randomly perturbed transient vertices");
    sub->add_option("--extra-vertex", rc.extra_vertices, "JSON file {label, A} adding a vertex");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gain-scheduled turboshaft control: simulation and common-Lyapunov certification"};
    app.set_config("--config", "", "Run configuration file (TOML/INI); command-line flags win");
    app.require_subcommand(1);
    RunConfig rc;

    auto* sim = app.add_subcommand("simulate", "Closed-loop simulation, writes trace.csv and summary.json");
    add_common(sim, rc);
    sim->add_option("--scenario", rc.scenario_path, "Scenario file (JSON breakpoints)");
    sim->add_option("--preset", rc.preset, "idle-cruise-idle | step | hold");
    sim->add_option("--hold-point", rc.hold_point, "Point label for the hold preset");
    sim->add_option("--t-final", rc.t_final, "Override the scenario horizon [s]");
    sim->add_option("--r-rate-max", rc.r_rate_max, "Bound on ||r'||");
    sim->add_flag("--allow-fast-ref", rc.allow_fast_ref, "Accept references faster than the bound");
    sim->add_option("--certificate", rc.certificate_path, "Attach V = dX^T P dX from a certificate file");

    auto* cert = app.add_subcommand("certify", "Find a common Lyapunov matrix over the closed-loop vertex set");
    add_common(cert, rc);
    add_vertex_options(cert, rc);
    cert->add_option("--delta", rc.delta, "Required uniform negativity margin");
    cert->add_option("--max-iter", rc.max_iter, "Subgradient iteration limit");
    cert->add_option("--verify", rc.verify_path, "Verify this certificate instead of solving");
    cert->add_flag("--symmetrize", rc.symmetrize, "Accept an asymmetric P as (P + P^T)/2");

    auto* ver = app.add_subcommand("verify", "Check a certificate file against the vertex set");
    add_common(ver, rc);
    add_vertex_options(ver, rc);
    ver->add_option("--certificate", rc.certificate_path, "Certificate file")->required();
    ver->add_option("--vertices", rc.vertex_set, "equilibrium (knots only) | all");
    ver->add_flag("--symmetrize", rc.symmetrize, "Accept an asymmetric P as (P + P^T)/2");

    auto* ana = app.add_subcommand("analyze", "Closed-loop eigenvalues and norms over an alpha grid");
    add_common(ana, rc);
    ana->add_option("--grid", rc.grid, "Number of grid points");
    ana->add_option("--alpha-min", rc.alpha_min, "Grid start (default: lowest knot)");
    ana->add_option("--alpha-max", rc.alpha_max, "Grid end (default: highest knot)");
    ana->add_flag("--no-hurwitz-check", rc.no_hurwitz_check, "Load models with non-Hurwitz plant matrices");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*sim) return cmd_simulate(rc);
        if (*cert) return cmd_certify(rc);
        if (*ver) return cmd_verify(rc);
        if (*ana) return cmd_analyze(rc);
    } catch (const gsched::SimulationBlowUp& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBlowUp;
    } catch (const gsched::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const gsched::InvalidInput& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfig;
    }
    return kConfig;
}
