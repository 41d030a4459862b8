#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gsched/closed_loop.hpp"
#include "gsched/io.hpp"

#ifndef GSCHED_DATA_DIR
#error "GSCHED_DATA_DIR must be defined"
#endif

namespace testsupport {

inline std::string data_path(const std::string& rel) { return std::string(GSCHED_DATA_DIR) + "/" + rel; }

inline const gsched::io::Model& model() {
    static const gsched::io::Model m = gsched::io::load_model(data_path("turboshaft_model.json"));
    return m;
}

// Published points in table order (full thrust first, idle last), for readability
// of expectations. Index 1..5 as in the published tables.
inline const gsched::OperatingPoint& published(int k) {
    return model().family.point(static_cast<std::size_t>(5 - k));
}

// Cyclic Jacobi eigenvalue iteration for symmetric matrices; deliberately
// independent of the library's eigensolvers.
inline std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd a) {
    const Eigen::Index n = a.rows();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i + 1; j < n; ++j) {
                off += a(i, j) * a(i, j);
            }
        }
        if (off < 1e-30 * std::max(1.0, a.squaredNorm())) {
            break;
        }
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (a(p, q) == 0.0) {
                    continue;
                }
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        ev[static_cast<std::size_t>(i)] = a(i, i);
    }
    std::sort(ev.begin(), ev.end());
    return ev;
}

inline double oracle_lambda_max(const Eigen::MatrixXd& s) { return jacobi_eigenvalues(0.5 * (s + s.transpose())).back(); }
inline double oracle_lambda_min(const Eigen::MatrixXd& s) { return jacobi_eigenvalues(0.5 * (s + s.transpose())).front(); }

// Lyapunov equation A^T P + P A = -Q through the full n^2 Kronecker system.
inline Eigen::MatrixXd kronecker_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q) {
    const Eigen::Index n = a.rows();
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n * n, n * n);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    // vec(A^T P) = (I kron A^T) vec P, vec(P A) = (A^T kron I) vec P
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            k.block(i * n, j * n, n, n) += id(i, j) * a.transpose() + a(j, i) * id;
        }
    }
    const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(q.data(), n * n);
    const Eigen::VectorXd p = k.fullPivLu().solve(rhs);
    return Eigen::Map<const Eigen::MatrixXd>(p.data(), n, n);
}

// Random n x n matrix with spectrum known by construction: block-diagonal real
// Schur-like core (real poles and complex pairs) under a random similarity.
struct KnownSpectrum {
    Eigen::MatrixXd A;
    std::vector<std::complex<double>> eig;
};

inline KnownSpectrum random_known_spectrum(std::mt19937_64& rng, int n, double max_re) {
    std::uniform_real_distribution<double> re(-3.0, max_re);
    std::uniform_real_distribution<double> im(0.2, 2.0);
    std::uniform_real_distribution<double> entry(-1.0, 1.0);
    Eigen::MatrixXd core = Eigen::MatrixXd::Zero(n, n);
    KnownSpectrum out;
    int i = 0;
    while (i < n) {
        if (i + 1 < n && entry(rng) > 0.0) {
            const double a = re(rng);
            const double b = im(rng);
            core(i, i) = a;
            core(i + 1, i + 1) = a;
            core(i, i + 1) = b;
            core(i + 1, i) = -b;
            out.eig.emplace_back(a, b);
            out.eig.emplace_back(a, -b);
            i += 2;
        } else {
            const double a = re(rng);
            core(i, i) = a;
            out.eig.emplace_back(a, 0.0);
            i += 1;
        }
    }
    Eigen::MatrixXd t(n, n);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            t(r, c) = entry(rng);
        }
    }
    t += 3.0 * Eigen::MatrixXd::Identity(n, n); // keep well conditioned
    out.A = t * core * t.inverse();
    return out;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// Open-loop run inside one interpolation segment (smooth right-hand side);
// returns the final plant state for step dt.
inline gsched::Vec2 open_loop_final_state(double dt) {
    const auto& fam = model().family;
    const double mid = 0.5 * (fam.point(2).alpha_star + fam.point(3).alpha_star);
    const auto q = fam.interpolate(gsched::ScheduleValue(mid));
    gsched::Scenario sc;
    sc.name = "open-loop";
    sc.breakpoints = {{0.0, q.x_e}};
    sc.t_final = 2.0;
    sc.x0 = q.x_e + gsched::Vec2(0.01, 0.005);
    sc.open_loop_input = q.u_e;
    auto cfg = model().controller;
    cfg.dt = dt;
    return gsched::simulate(fam, cfg, sc).samples.back().x;
}

// ||x(dt) - x(dt/2)|| / ||x(dt/2) - x(dt/4)||; 16 for a fourth-order method.
inline double rk4_refinement_ratio(double dt) {
    const auto a = open_loop_final_state(dt);
    const auto b = open_loop_final_state(dt / 2.0);
    const auto c = open_loop_final_state(dt / 4.0);
    return (a - b).norm() / (b - c).norm();
}

} // namespace testsupport
