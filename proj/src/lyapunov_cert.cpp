#include "gsched/lyapunov_cert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "gsched/error.hpp"
#include "gsched/linalg.hpp"

namespace gsched {

namespace {

std::string fmt_alpha(double a) {
    std::ostringstream os;
    os.precision(6);
    os << a;
    return os.str();
}

MatX symmetric_part(const MatX& m) {
    return 0.5 * (m + m.transpose());
}

// Lyapunov operator M = A^T P + P A.
MatX lyap(const MatX& a, const MatX& p) {
    return a.transpose() * p + p * a;
}

// Clamp eigenvalues of a symmetric matrix at 1 from below.
MatX project_normalized(const MatX& p) {
    Eigen::SelfAdjointEigenSolver<MatX> es(symmetric_part(p));
    const VecX w = es.eigenvalues().cwiseMax(1.0);
    return symmetric_part(es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose());
}

struct Active {
    double phi{-std::numeric_limits<double>::infinity()};
    std::size_t vertex{0};
    VecX eigvec;
};

Active evaluate(const MatX& p, const VertexSet& vs) {
    Active best;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        Eigen::SelfAdjointEigenSolver<MatX> es(lyap(vs[i].A, p));
        const Eigen::Index top = es.eigenvalues().size() - 1;
        if (es.eigenvalues()(top) > best.phi) {
            best.phi = es.eigenvalues()(top);
            best.vertex = i;
            best.eigvec = es.eigenvectors().col(top);
        }
    }
    return best;
}

} // namespace

const char* to_string(VertexKind kind) {
    switch (kind) {
    case VertexKind::Equilibrium:
        return "equilibrium";
    case VertexKind::NonEquilibrium:
        return "non-equilibrium";
    case VertexKind::External:
        return "external";
    }
    return "?";
}

const char* to_string(Feasibility f) {
    switch (f) {
    case Feasibility::Feasible:
        return "feasible";
    case Feasibility::Infeasible:
        return "infeasible";
    case Feasibility::Unknown:
        return "unknown";
    }
    return "?";
}

void VertexSet::add(MatX a, std::string label, VertexKind kind) {
    if (a.rows() == 0 || a.rows() != a.cols()) {
        throw InvalidInput("vertex '" + label + "' is not a non-empty square matrix");
    }
    if (!empty() && a.rows() != dimension()) {
        throw InvalidInput("vertex '" + label + "' has a different dimension from the rest of the set");
    }
    if (!a.allFinite()) {
        throw InvalidInput("vertex '" + label + "' has non-finite entries");
    }
    vertices_.push_back({std::move(a), std::move(label), kind});
}

VertexSet build_vertices(const LinearFamily& family, const ControllerConfig& cfg, std::span<const double> alphas,
                         std::span<const OffState> offstates, double h) {
    cfg.validate();
    VertexSet vs;
    for (const double a : alphas) {
        if (!(a >= family.alpha_min() && a <= family.alpha_max())) {
            throw InvalidInput("build_vertices: alpha " + fmt_alpha(a) + " outside manifold range");
        }
        const auto cl = assemble_closed_loop(family.interpolate(ScheduleValue(a)), cfg);
        vs.add(cl.A_cl, "equilibrium alpha=" + fmt_alpha(a), VertexKind::Equilibrium);
    }
    for (std::size_t i = 0; i < offstates.size(); ++i) {
        const auto& os = offstates[i];
        const std::string name = os.label.empty() ? "offstate " + std::to_string(i) : os.label;
        if (!(os.x.allFinite() && os.u.allFinite() && os.x_c.allFinite() && os.r.allFinite())) {
            throw InvalidInput("build_vertices: non-finite " + name);
        }
        const ScheduleValue a = family.schedule_coordinate(os.x.norm());
        Vec6 state;
        state << os.x, os.u - family.interpolate(a).u_e, os.x_c;
        const Mat6 j = linearize_closed_loop_numeric(family, cfg, state, os.r, h);
        if (!j.allFinite()) {
            throw InvalidInput("build_vertices: non-finite Jacobian at " + name);
        }
        vs.add(j, name, VertexKind::NonEquilibrium);
    }
    return vs;
}

std::vector<OffState> sample_offstates(const SimTrace& trace, std::size_t count) {
    std::vector<OffState> out;
    const auto& s = trace.samples;
    if (count == 0 || s.empty()) {
        return out;
    }
    for (std::size_t j = 0; j < count; ++j) {
        const std::size_t k = count == 1 ? s.size() - 1 : j * (s.size() - 1) / (count - 1);
        const auto& smp = s[k];
        std::ostringstream label;
        label << "transient t=" << smp.t;
        out.push_back({smp.x, smp.u, smp.x_c, smp.r, label.str()});
    }
    return out;
}

MatX solve_lyapunov_equation(const MatX& a, const MatX& q) {
    const Eigen::Index n = a.rows();
    if (n == 0 || a.cols() != n || q.rows() != n || q.cols() != n) {
        throw InvalidInput("solve_lyapunov_equation: A and Q must be square of equal size");
    }
    if (!a.allFinite() || !q.allFinite()) {
        throw InvalidInput("solve_lyapunov_equation: non-finite input");
    }
    if ((q - q.transpose()).norm() > 1e-12 * q.norm()) {
        throw InvalidInput("solve_lyapunov_equation: Q must be symmetric");
    }
    if (!is_hurwitz(a)) {
        throw SingularSystem("solve_lyapunov_equation: A is not Hurwitz");
    }

    // Unknowns p_kl for k <= l, packed row by row of the upper triangle.
    auto idx = [n](Eigen::Index k, Eigen::Index l) {
        if (k > l) {
            std::swap(k, l);
        }
        return k * n - k * (k - 1) / 2 + (l - k);
    };
    const Eigen::Index m = n * (n + 1) / 2;
    MatX sys = MatX::Zero(m, m);
    VecX rhs(m);
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index l = k; l < n; ++l) {
            const Eigen::Index row = idx(k, l);
            // (A^T P + P A)_kl = sum_j a_jk p_jl + p_kj a_jl
            for (Eigen::Index j = 0; j < n; ++j) {
                sys(row, idx(j, l)) += a(j, k);
                sys(row, idx(k, j)) += a(j, l);
            }
            rhs(row) = -q(k, l);
        }
    }
    const Eigen::PartialPivLU<MatX> lu(sys);
    VecX sol = lu.solve(rhs);
    sol += lu.solve(rhs - sys * sol); // one step of iterative refinement

    MatX p(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index l = k; l < n; ++l) {
            p(k, l) = p(l, k) = sol(idx(k, l));
        }
    }
    if (!p.allFinite()) {
        throw SingularSystem("solve_lyapunov_equation: singular vectorized system");
    }
    return p;
}

double LyapunovCertificate::achieved_margin() const {
    if (per_vertex_margin.empty()) {
        return 0.0;
    }
    return -*std::max_element(per_vertex_margin.begin(), per_vertex_margin.end());
}

SolveResult find_common_p(const VertexSet& vertices, const SolverOptions& opts) {
    if (vertices.empty()) {
        throw InvalidInput("find_common_p: empty vertex set");
    }
    if (!(opts.delta > 0.0) || opts.max_iter == 0) {
        throw InvalidInput("find_common_p: delta must be > 0 and max_iter >= 1");
    }
    SolveResult res;
    const Eigen::Index n = vertices.dimension();
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const double abscissa = spectral_abscissa(vertices[i].A);
        if (!(abscissa < 0.0)) {
            std::ostringstream os;
            os << "vertex " << i << " '" << vertices[i].label << "' is not Hurwitz (spectral abscissa "
               << abscissa << "); no common Lyapunov matrix exists";
            res.status = Feasibility::Infeasible;
            res.offending_vertex = i;
            res.message = os.str();
            res.certificate.P = MatX::Identity(n, n);
            res.certificate.delta = opts.delta;
            return res;
        }
    }

    MatX p = MatX::Zero(n, n);
    for (const auto& v : vertices.vertices()) {
        p += solve_lyapunov_equation(v.A, MatX::Identity(n, n));
    }
    p = symmetric_part(p / static_cast<double>(vertices.size()));
    p /= sym_lambda_min(p);
    p = project_normalized(p);

    const double scale = p.norm();
    MatX best_p = p;
    Active cur = evaluate(p, vertices);
    double best_phi = cur.phi;
    res.best_history.push_back(best_phi);

    std::size_t k = 0;
    while (best_phi > -opts.delta && k < opts.max_iter) {
        ++k;
        const double step = opts.step_scale * scale / std::sqrt(static_cast<double>(k));
        if (step < opts.tol * scale) {
            break;
        }
        const MatX& a = vertices[cur.vertex].A;
        const MatX g = symmetric_part(a * cur.eigvec * cur.eigvec.transpose());
        const double gn = g.norm();
        if (gn == 0.0) {
            break;
        }
        p = project_normalized(p - (step / gn) * g);
        cur = evaluate(p, vertices);
        if (cur.phi < best_phi) {
            best_phi = cur.phi;
            best_p = p;
        }
        res.best_history.push_back(best_phi);
    }

    const VerifyResult check = verify_certificate(best_p, vertices);
    auto& cert = res.certificate;
    cert.P = best_p;
    cert.delta = opts.delta;
    cert.per_vertex_margin = check.margins;
    cert.lambda_min_P = check.lambda_min_P;
    cert.lambda_max_P = check.lambda_max_P;
    cert.iterations = k;
    for (const auto& v : vertices.vertices()) {
        cert.labels.push_back(v.label);
    }
    cert.converged = check.valid && cert.achieved_margin() >= opts.delta;
    res.status = cert.converged ? Feasibility::Feasible : Feasibility::Unknown;
    std::ostringstream os;
    if (cert.converged) {
        os << "common Lyapunov matrix found after " << k << " iterations, uniform margin " << cert.achieved_margin();
    } else {
        os << "no certificate after " << k << " iterations (best phi " << best_phi << " > -" << opts.delta
           << "); feasibility unknown";
    }
    res.message = os.str();
    return res;
}

VerifyResult verify_certificate(const MatX& p, const VertexSet& vertices, bool symmetrize) {
    if (p.rows() != p.cols() || p.rows() != vertices.dimension() || vertices.empty()) {
        throw InvalidInput("verify_certificate: P must be square and match the vertex dimension");
    }
    if (!p.allFinite()) {
        throw InvalidInput("verify_certificate: P has non-finite entries");
    }
    VerifyResult out;
    out.asymmetry = (p - p.transpose()).norm();
    out.P = p;
    if (out.asymmetry > 1e-12 * p.norm()) {
        if (!symmetrize) {
            std::ostringstream os;
            os << "verify_certificate: P is not symmetric (||P - P^T|| = " << out.asymmetry
               << "); symmetrize explicitly to accept (P + P^T)/2";
            throw InvalidInput(os.str());
        }
        out.P = symmetric_part(p);
        out.symmetrized = true;
    }
    Eigen::SelfAdjointEigenSolver<MatX> es(out.P, Eigen::EigenvaluesOnly);
    out.lambda_min_P = es.eigenvalues()(0);
    out.lambda_max_P = es.eigenvalues()(es.eigenvalues().size() - 1);
    bool all_negative = true;
    for (const auto& v : vertices.vertices()) {
        const double m = sym_lambda_max(lyap(v.A, out.P));
        out.margins.push_back(m);
        all_negative = all_negative && m < 0.0;
    }
    out.valid = out.lambda_min_P > 0.0 && all_negative;
    return out;
}

HurwitzScan hurwitz_scan(const LinearFamily& family, const ControllerConfig& cfg, std::size_t grid_size,
                         MatrixNorm norm) {
    if (grid_size < 2) {
        throw InvalidInput("hurwitz_scan: grid_size must be >= 2");
    }
    return hurwitz_scan(family, cfg, family.alpha_min(), family.alpha_max(), grid_size, norm);
}

HurwitzScan hurwitz_scan(const LinearFamily& family, const ControllerConfig& cfg, double alpha_lo, double alpha_hi,
                         std::size_t grid_size, MatrixNorm norm) {
    if (grid_size == 0 || !(alpha_lo <= alpha_hi)) {
        throw InvalidInput("hurwitz_scan: need grid_size >= 1 and alpha_lo <= alpha_hi");
    }
    HurwitzScan scan;
    scan.max_abscissa = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < grid_size; ++j) {
        const double a = grid_size == 1 ? alpha_lo
                                        : alpha_lo + (alpha_hi - alpha_lo) * static_cast<double>(j) /
                                                         static_cast<double>(grid_size - 1);
        const auto cl = assemble_closed_loop(family.interpolate(ScheduleValue(a)), cfg);
        HurwitzScanRow row{a, eigenvalues(cl.A_cl), matrix_norm(cl.A_cl, norm)};
        if (row.eig.front().real() > scan.max_abscissa) {
            scan.max_abscissa = row.eig.front().real();
            scan.alpha_at_max = a;
        }
        scan.rows.push_back(std::move(row));
    }
    return scan;
}

SlowVariationReport slow_variation_report(const SimTrace& trace, const LyapunovCertificate* certificate) {
    SlowVariationReport rep;
    const auto& s = trace.samples;
    rep.max_abscissa = -std::numeric_limits<double>::infinity();
    for (const auto& smp : s) {
        rep.sup_ydot = std::max(rep.sup_ydot, smp.ydot_norm);
        rep.sup_rdot = std::max(rep.sup_rdot, smp.rdot_norm);
        rep.sup_acl = std::max(rep.sup_acl, smp.acl_norm);
        rep.lipschitz_acl = std::max(rep.lipschitz_acl, smp.acl_dot_norm);
        rep.max_abscissa = std::max(rep.max_abscissa, smp.eig[0].real());
    }

    if (trace.unforced && !s.empty() && s.front().dev_norm > 0.0) {
        const double d0 = s.front().dev_norm;
        // Least-squares decay rate of log(||x(t)|| / ||x0||), then the smallest
        // m making m e^{-lambda t} an upper envelope.
        double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0, cnt = 0.0;
        for (const auto& smp : s) {
            const double ratio = smp.dev_norm / d0;
            if (ratio > 1e-12) {
                const double yv = std::log(ratio);
                st += smp.t;
                sy += yv;
                stt += smp.t * smp.t;
                sty += smp.t * yv;
                cnt += 1.0;
            }
        }
        const double den = cnt * stt - st * st;
        const double lam = den > 0.0 ? -(cnt * sty - st * sy) / den : 0.0;
        double m = 0.0;
        for (const auto& smp : s) {
            m = std::max(m, smp.dev_norm / d0 * std::exp(lam * smp.t));
        }
        rep.fitted_lambda = lam;
        rep.fitted_m = m;
    }

    if (certificate != nullptr && certificate->lambda_min_P > 0.0) {
        const double lmax = certificate->lambda_max_P;
        rep.m_P = std::sqrt(lmax / certificate->lambda_min_P);
        rep.lambda_P = certificate->delta / (2.0 * lmax);
        rep.lambda_P_achieved = certificate->achieved_margin() / (2.0 * lmax);
        if (trace.unforced && !s.empty()) {
            const double d0 = s.front().dev_norm;
            auto envelope = [&](double lam) {
                return std::all_of(s.begin(), s.end(), [&](const TraceSample& smp) {
                    return smp.dev_norm <= *rep.m_P * std::exp(-lam * smp.t) * d0 * (1.0 + 1e-12);
                });
            };
            rep.envelope_holds = envelope(*rep.lambda_P);
            rep.envelope_holds_achieved = envelope(*rep.lambda_P_achieved);
        }
        if (trace.has_lyapunov && trace.unforced) {
            bool mono = true;
            for (std::size_t k = 1; k < s.size(); ++k) {
                mono = mono && s[k].V <= s[k - 1].V;
            }
            rep.V_nonincreasing = mono;
        }
    }
    return rep;
}

} // namespace gsched
