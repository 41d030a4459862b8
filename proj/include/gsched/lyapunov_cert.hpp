#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gsched/closed_loop.hpp"
#include "gsched/controller.hpp"
#include "gsched/lpv_core.hpp"
#include "gsched/types.hpp"

namespace gsched {

enum class VertexKind { Equilibrium, NonEquilibrium, External };

[[nodiscard]] const char* to_string(VertexKind kind);

struct Vertex {
    MatX A;
    std::string label;
    VertexKind kind{VertexKind::External};
};

// Vertices of the closed-loop polytope. All square, same size, finite.
class VertexSet {
public:
    void add(MatX a, std::string label, VertexKind kind);

    [[nodiscard]] std::size_t size() const noexcept { return vertices_.size(); }
    [[nodiscard]] bool empty() const noexcept { return vertices_.empty(); }
    [[nodiscard]] Eigen::Index dimension() const noexcept { return vertices_.empty() ? 0 : vertices_[0].A.rows(); }
    [[nodiscard]] const Vertex& operator[](std::size_t i) const { return vertices_.at(i); }
    [[nodiscard]] const std::vector<Vertex>& vertices() const noexcept { return vertices_; }

private:
    std::vector<Vertex> vertices_;
};

// Closed-loop state away from the manifold; u is the absolute input.
struct OffState {
    Vec2 x{Vec2::Zero()};
    Vec2 u{Vec2::Zero()};
    Vec2 x_c{Vec2::Zero()};
    Vec2 r{Vec2::Zero()};
    std::string label;
};

// Frozen-schedule vertices at each alpha, then numeric Jacobians of the full
// (unsaturated) closed-loop composition at each off-state.
[[nodiscard]] VertexSet build_vertices(const LinearFamily& family, const ControllerConfig& cfg,
                                       std::span<const double> alphas, std::span<const OffState> offstates,
                                       double h = 1e-6);

// Off-states sampled at `count` evenly spaced times of a trace (end points included).
[[nodiscard]] std::vector<OffState> sample_offstates(const SimTrace& trace, std::size_t count);

// Unique symmetric P with A^T P + P A = -Q. Throws SingularSystem when A is not Hurwitz.
[[nodiscard]] MatX solve_lyapunov_equation(const MatX& a, const MatX& q);

struct LyapunovCertificate {
    MatX P;
    double delta{0.0};
    std::vector<std::string> labels;
    std::vector<double> per_vertex_margin; // lambda_max(A_i^T P + P A_i)
    double lambda_min_P{0.0};
    double lambda_max_P{0.0};
    std::size_t iterations{0};
    bool converged{false};

    // -max_i margin; >= delta for a converged certificate.
    [[nodiscard]] double achieved_margin() const;
};

enum class Feasibility { Feasible, Infeasible, Unknown };

[[nodiscard]] const char* to_string(Feasibility f);

struct SolverOptions {
    double delta{1e-3};
    std::size_t max_iter{5000};
    // Stop (unknown) once the step length falls below tol * ||P0||_F.
    double tol{1e-12};
    // Initial step length relative to ||P0||_F; decays as 1/sqrt(k).
    double step_scale{0.05};
};

struct SolveResult {
    Feasibility status{Feasibility::Unknown};
    LyapunovCertificate certificate;
    std::optional<std::size_t> offending_vertex;
    std::string message;
    std::vector<double> best_history; // best phi after each iteration, index 0 = initial point
};

/// Projected subgradient descent on phi(P) = max_i lambda_max(A_i^T P + P A_i)
/// over {P = P^T, lambda_min(P) >= 1}, started from the normalized mean of the
/// per-vertex Lyapunov solutions. Success means phi(P) <= -delta; exhausting
/// max_iter only yields Unknown since no dual certificate is produced. A
/// non-Hurwitz vertex is reported as Infeasible before iterating.
[[nodiscard]] SolveResult find_common_p(const VertexSet& vertices, const SolverOptions& opts = {});

struct VerifyResult {
    std::vector<double> margins;
    double lambda_min_P{0.0};
    double lambda_max_P{0.0};
    bool valid{false};
    bool symmetrized{false};
    double asymmetry{0.0}; // ||P - P^T||_F before any symmetrization
    MatX P;                // the matrix actually checked
};

// Throws InvalidInput for ||P - P^T|| > 1e-12 ||P|| unless `symmetrize`.
[[nodiscard]] VerifyResult verify_certificate(const MatX& p, const VertexSet& vertices, bool symmetrize = false);

struct HurwitzScanRow {
    double alpha{0.0};
    std::vector<std::complex<double>> eig;
    double acl_norm{0.0};
};

struct HurwitzScan {
    double max_abscissa{0.0};
    double alpha_at_max{0.0};
    std::vector<HurwitzScanRow> rows;
};

[[nodiscard]] HurwitzScan hurwitz_scan(const LinearFamily& family, const ControllerConfig& cfg,
                                       std::size_t grid_size, MatrixNorm norm = MatrixNorm::Spectral);
[[nodiscard]] HurwitzScan hurwitz_scan(const LinearFamily& family, const ControllerConfig& cfg, double alpha_lo,
                                       double alpha_hi, std::size_t grid_size,
                                       MatrixNorm norm = MatrixNorm::Spectral);

struct SlowVariationReport {
    double sup_ydot{0.0};
    double sup_rdot{0.0};
    double sup_acl{0.0};        // measured k_A
    double lipschitz_acl{0.0};  // measured L_A
    double max_abscissa{0.0};   // over traced frozen spectra
    // Exponential envelope fitted to an unforced run.
    std::optional<double> fitted_m;
    std::optional<double> fitted_lambda;
    // Quadratic-Lyapunov envelope when a certificate is attached.
    std::optional<double> m_P;
    std::optional<double> lambda_P;          // delta / (2 lambda_max(P))
    std::optional<double> lambda_P_achieved; // achieved margin / (2 lambda_max(P))
    std::optional<bool> envelope_holds;          // pointwise, with lambda_P
    std::optional<bool> envelope_holds_achieved; // pointwise, with lambda_P_achieved
    std::optional<bool> V_nonincreasing;
};

[[nodiscard]] SlowVariationReport slow_variation_report(const SimTrace& trace,
                                                        const LyapunovCertificate* certificate = nullptr);

} // namespace gsched
