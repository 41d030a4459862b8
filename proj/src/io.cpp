#include "gsched/io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

#include "gsched/error.hpp"
#include "gsched/linalg.hpp"

namespace gsched::io {

namespace {

Vec2 vec2_from_json(const Json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 2) {
        throw ConfigError(what + ": expected an array of 2 numbers");
    }
    Vec2 v;
    for (int i = 0; i < 2; ++i) {
        if (!j[static_cast<std::size_t>(i)].is_number()) {
            throw ConfigError(what + ": expected numbers");
        }
        v(i) = j[static_cast<std::size_t>(i)].get<double>();
    }
    return v;
}

Mat2 mat2_from_json(const Json& j, const std::string& what) {
    const MatX m = matrix_from_json(j, what);
    if (m.rows() != 2 || m.cols() != 2) {
        throw ConfigError(what + ": expected a 2x2 matrix");
    }
    return m;
}

Json vec_to_json(const Vec2& v) {
    return Json::array({v(0), v(1)});
}

double number(const Json& j, const char* key, const std::string& what) {
    if (!j.contains(key) || !j.at(key).is_number()) {
        throw ConfigError(what + ": missing numeric field '" + key + "'");
    }
    return j.at(key).get<double>();
}

template <typename T>
T value_or(const Json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

void put(std::ostream& os, double v) {
    os << format_double(v);
}

} // namespace

std::size_t Model::knot_index(const std::string& label, std::size_t fallback) const {
    for (std::size_t i = 0; i < family.size(); ++i) {
        if (family.point(i).label == label) {
            return i;
        }
    }
    return fallback;
}

MatX matrix_from_json(const Json& j, const std::string& what) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) {
        throw ConfigError(what + ": expected a matrix as an array of rows");
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    MatX m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw ConfigError(what + ": ragged matrix rows");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& e = row[static_cast<std::size_t>(c)];
            if (!e.is_number()) {
                throw ConfigError(what + ": non-numeric matrix entry");
            }
            m(r, c) = e.get<double>();
        }
    }
    return m;
}

Json matrix_to_json(const MatX& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(m(r, c));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open '" + path.string() + "'");
    }
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("'" + path.string() + "': " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const Json& j) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write '" + path.string() + "'");
    }
    out << j.dump(2) << '\n';
}

Model model_from_json(const Json& j, bool require_hurwitz) {
    try {
        if (!j.contains("points") || !j.at("points").is_array()) {
            throw ConfigError("model: missing 'points' list");
        }
        const auto& pts = j.at("points");
        if (pts.size() < 2) {
            throw ConfigError("model: at least two operating points are required");
        }
        std::vector<OperatingPoint> points;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const auto& pj = pts[i];
            OperatingPoint p;
            p.label = value_or<std::string>(pj, "label", "point" + std::to_string(i));
            const std::string name = "model point '" + p.label + "' (index " + std::to_string(i) + ")";
            p.alpha_star = number(pj, "alpha_star", name);
            p.thrust = number(pj, "thrust", name);
            p.x_e = vec2_from_json(pj.value("x_e", Json()), name + " x_e");
            p.u_e = vec2_from_json(pj.value("u_e", Json()), name + " u_e");
            p.A = mat2_from_json(pj.value("A", Json()), name + " A");
            p.B = mat2_from_json(pj.value("B", Json()), name + " B");
            p.Ki = mat2_from_json(pj.value("Ki", Json()), name + " Ki");
            p.Kp = mat2_from_json(pj.value("Kp", Json()), name + " Kp");
            if (i > 0 && !(p.alpha_star > points.back().alpha_star)) {
                throw ConfigError(name + ": points must be sorted by strictly increasing alpha_star");
            }
            if (require_hurwitz && !is_hurwitz(p.A)) {
                throw ConfigError(name + ": plant matrix A is not Hurwitz");
            }
            points.push_back(std::move(p));
        }

        ControllerConfig cfg;
        if (j.contains("controller")) {
            const auto& c = j.at("controller");
            cfg.eps_c = value_or(c, "eps_c", cfg.eps_c);
            cfg.eta_c = value_or(c, "eta_c", cfg.eta_c);
            cfg.ifb_gain = value_or(c, "ifb_gain", cfg.ifb_gain);
            cfg.dt = value_or(c, "dt", cfg.dt);
            if (c.contains("v_min")) {
                cfg.v_min = vec2_from_json(c.at("v_min"), "controller v_min");
            }
            if (c.contains("v_max")) {
                cfg.v_max = vec2_from_json(c.at("v_max"), "controller v_max");
            }
        }
        cfg.validate();

        std::optional<MatX> q;
        if (j.contains("Q")) {
            q = matrix_from_json(j.at("Q"), "model Q");
        }
        return Model{value_or<std::string>(j, "name", "model"), LinearFamily(std::move(points)), cfg, q};
    } catch (const InvalidInput& e) {
        throw ConfigError(std::string("model: ") + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
}

Model load_model(const std::filesystem::path& path, bool require_hurwitz) {
    return model_from_json(read_json(path), require_hurwitz);
}

Json controller_to_json(const ControllerConfig& c) {
    Json j;
    j["eps_c"] = c.eps_c;
    j["eta_c"] = c.eta_c;
    j["ifb_gain"] = c.ifb_gain;
    j["v_min"] = vec_to_json(c.v_min);
    j["v_max"] = vec_to_json(c.v_max);
    j["dt"] = c.dt;
    return j;
}

Json model_to_json(const Model& m) {
    Json j;
    j["name"] = m.name;
    Json pts = Json::array();
    for (const auto& p : m.family.points()) {
        Json pj;
        pj["label"] = p.label;
        pj["alpha_star"] = p.alpha_star;
        pj["x_e"] = vec_to_json(p.x_e);
        pj["u_e"] = vec_to_json(p.u_e);
        pj["thrust"] = p.thrust;
        pj["A"] = matrix_to_json(p.A);
        pj["B"] = matrix_to_json(p.B);
        pj["Ki"] = matrix_to_json(p.Ki);
        pj["Kp"] = matrix_to_json(p.Kp);
        pts.push_back(std::move(pj));
    }
    j["points"] = std::move(pts);
    j["controller"] = controller_to_json(m.controller);
    if (m.q_weight) {
        j["Q"] = matrix_to_json(*m.q_weight);
    }
    return j;
}

Scenario scenario_from_json(const Json& j) {
    try {
        Scenario s;
        s.name = value_or<std::string>(j, "name", "custom");
        if (!j.contains("breakpoints") || !j.at("breakpoints").is_array()) {
            throw ConfigError("scenario: missing 'breakpoints' list of [t, r1, r2]");
        }
        for (const auto& b : j.at("breakpoints")) {
            if (!b.is_array() || b.size() != 3) {
                throw ConfigError("scenario: each breakpoint must be [t, r1, r2]");
            }
            s.breakpoints.push_back({b[0].get<double>(), Vec2(b[1].get<double>(), b[2].get<double>())});
        }
        s.t_final = value_or(j, "t_final", s.breakpoints.empty() ? 0.0 : s.breakpoints.back().t);
        if (j.contains("x0")) {
            s.x0 = vec2_from_json(j.at("x0"), "scenario x0");
        }
        if (j.contains("du0")) {
            s.du0 = vec2_from_json(j.at("du0"), "scenario du0");
        }
        if (j.contains("xc0")) {
            s.xc0 = vec2_from_json(j.at("xc0"), "scenario xc0");
        }
        if (j.contains("open_loop_input")) {
            s.open_loop_input = vec2_from_json(j.at("open_loop_input"), "scenario open_loop_input");
        }
        s.r_rate_max = value_or(j, "r_rate_max", s.r_rate_max);
        s.allow_fast_ref = value_or(j, "allow_fast_ref", s.allow_fast_ref);
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
}

Scenario load_scenario(const std::filesystem::path& path) {
    return scenario_from_json(read_json(path));
}

Json scenario_to_json(const Scenario& s) {
    Json j;
    j["name"] = s.name;
    j["t_final"] = s.t_final;
    Json bps = Json::array();
    for (const auto& b : s.breakpoints) {
        bps.push_back(Json::array({b.t, b.r(0), b.r(1)}));
    }
    j["breakpoints"] = std::move(bps);
    if (s.x0) {
        j["x0"] = vec_to_json(*s.x0);
    }
    j["du0"] = vec_to_json(s.du0);
    j["xc0"] = vec_to_json(s.xc0);
    if (s.open_loop_input) {
        j["open_loop_input"] = vec_to_json(*s.open_loop_input);
    }
    j["r_rate_max"] = s.r_rate_max;
    j["allow_fast_ref"] = s.allow_fast_ref;
    return j;
}

Json certificate_to_json(const LyapunovCertificate& c, const VertexSet& vertices, Feasibility status,
                         const ControllerConfig& cfg) {
    Json j;
    j["format"] = "gsched-certificate/1";
    j["P"] = matrix_to_json(c.P);
    j["delta"] = c.delta;
    j["achieved_margin"] = c.achieved_margin();
    j["lambda_min_P"] = c.lambda_min_P;
    j["lambda_max_P"] = c.lambda_max_P;
    Json vs = Json::array();
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        Json v;
        v["label"] = vertices[i].label;
        v["kind"] = to_string(vertices[i].kind);
        v["margin"] = i < c.per_vertex_margin.size() ? Json(c.per_vertex_margin[i]) : Json();
        vs.push_back(std::move(v));
    }
    j["vertices"] = std::move(vs);
    j["solver"] = {{"method", "projected-subgradient"},
                   {"status", to_string(status)},
                   {"iterations", c.iterations},
                   {"converged", c.converged}};
    j["controller"] = {{"eps_c", cfg.eps_c}, {"eta_c", cfg.eta_c}};
    return j;
}

CertificateFile certificate_from_json(const Json& j) {
    try {
        CertificateFile f;
        if (!j.contains("P")) {
            throw ConfigError("certificate: missing 'P'");
        }
        f.P = matrix_from_json(j.at("P"), "certificate P");
        if (f.P.rows() != f.P.cols()) {
            throw ConfigError("certificate: P must be square");
        }
        if (j.contains("solver")) {
            f.status = j.at("solver").value("status", "");
        }
        if (j.contains("vertices") && j.contains("delta")) {
            LyapunovCertificate c;
            c.P = f.P;
            c.delta = j.at("delta").get<double>();
            c.lambda_min_P = j.value("lambda_min_P", 0.0);
            c.lambda_max_P = j.value("lambda_max_P", 0.0);
            for (const auto& v : j.at("vertices")) {
                c.labels.push_back(v.value("label", ""));
                if (v.contains("margin") && v.at("margin").is_number()) {
                    c.per_vertex_margin.push_back(v.at("margin").get<double>());
                }
            }
            if (j.contains("solver")) {
                c.iterations = j.at("solver").value("iterations", std::size_t{0});
                c.converged = j.at("solver").value("converged", false);
            }
            f.certificate = std::move(c);
        }
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("certificate: ") + e.what());
    }
}

CertificateFile load_certificate(const std::filesystem::path& path) {
    return certificate_from_json(read_json(path));
}

std::string format_double(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_trace_csv(std::ostream& os, const SimTrace& trace) {
    os << "t,x1,x2,u1,u2,du1,du2,xc1,xc2,v_unsat1,v_unsat2,v_sat1,v_sat2,y1,y2,r1,r2,"
          "alpha,alpha_dot,ydot_norm,rdot_norm,thrust,acl_norm,acl_dot_norm";
    for (int i = 1; i <= 6; ++i) {
        os << ",eig" << i << "_re,eig" << i << "_im";
    }
    os << ",dev_norm";
    if (trace.has_lyapunov) {
        os << ",V,V_dot";
    }
    os << ",sat1,sat2,fuel_clamped\n";
    for (const auto& s : trace.samples) {
        const auto pair = [&os](const Vec2& v) {
            os << ',';
            put(os, v(0));
            os << ',';
            put(os, v(1));
        };
        put(os, s.t);
        pair(s.x);
        pair(s.u);
        pair(s.du);
        pair(s.x_c);
        pair(s.v_unsat);
        pair(s.v_sat);
        pair(s.y);
        pair(s.r);
        for (double v : {s.alpha, s.alpha_dot, s.ydot_norm, s.rdot_norm, s.thrust, s.acl_norm, s.acl_dot_norm}) {
            os << ',';
            put(os, v);
        }
        for (const auto& e : s.eig) {
            os << ',';
            put(os, e.real());
            os << ',';
            put(os, e.imag());
        }
        os << ',';
        put(os, s.dev_norm);
        if (trace.has_lyapunov) {
            os << ',';
            put(os, s.V);
            os << ',';
            put(os, s.V_dot);
        }
        os << ',' << int(s.saturated[0]) << ',' << int(s.saturated[1]) << ',' << int(s.fuel_clamped) << '\n';
    }
}

void write_scan_csv(std::ostream& os, const HurwitzScan& scan) {
    std::size_t n = scan.rows.empty() ? 0 : scan.rows.front().eig.size();
    os << "alpha,abscissa,acl_norm";
    for (std::size_t i = 1; i <= n; ++i) {
        os << ",eig" << i << "_re,eig" << i << "_im";
    }
    os << '\n';
    for (const auto& row : scan.rows) {
        put(os, row.alpha);
        os << ',';
        put(os, row.eig.front().real());
        os << ',';
        put(os, row.acl_norm);
        for (const auto& e : row.eig) {
            os << ',';
            put(os, e.real());
            os << ',';
            put(os, e.imag());
        }
        os << '\n';
    }
}

void write_margin_csv(std::ostream& os, const VertexSet& vertices, const std::vector<double>& margins) {
    os << "index,label,kind,margin\n";
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        std::string label;
        for (const char ch : vertices[i].label) {
            label += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        }
        os << i << ",\"" << label << "\"," << to_string(vertices[i].kind) << ',';
        put(os, i < margins.size() ? margins[i] : std::numeric_limits<double>::quiet_NaN());
        os << '\n';
    }
}

} // namespace gsched::io
