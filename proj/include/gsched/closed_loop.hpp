#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gsched/controller.hpp"
#include "gsched/lpv_core.hpp"
#include "gsched/types.hpp"

namespace gsched {

// Linearized closed loop in the coordinates (dx^p, du, x_c), C = I, D = 0:
//   A_cl = [ A       B      0     ]     B_cl = [ 0      ]
//          [ -eta Kp -eta I -eta Ki ]            [ eta Kp ]
//          [ I       0      -eps I ]            [ -I     ]
struct ClosedLoopMatrices {
    Mat6 A_cl;
    Mat62 B_cl;
    ScheduleValue alpha;
};

[[nodiscard]] ClosedLoopMatrices assemble_closed_loop(const OperatingPoint& point, const ControllerConfig& cfg);

// Quasi-LPV surrogate of the engine:
//   x' = A(a)(x - x_e(a)) + B(a)(u - u_e(a)),  a = family.schedule_coordinate(||x||)
[[nodiscard]] Vec2 plant_rhs(const Vec2& x, const Vec2& u, const LinearFamily& family);

struct PlantJacobian {
    Mat2 A;
    Mat2 B;
};

// Jacobian of plant_rhs including the chain term through the schedule:
//   A(a) + [A'(x - x_e) + B'(u - u_e) - A x_e' - B u_e'] x^T/||x||
// with primes taken with respect to ||x||.
[[nodiscard]] PlantJacobian plant_jacobian(const LinearFamily& family, const Vec2& x, const Vec2& u);

// Jacobians with the schedule frozen: exactly the interpolated A(a), B(a).
[[nodiscard]] PlantJacobian linearize_frozen(const LinearFamily& family, ScheduleValue alpha);

// Central differences of plant_rhs with step h.
[[nodiscard]] PlantJacobian linearize_numeric(const LinearFamily& family, const Vec2& x, const Vec2& u,
                                              double h = 1e-6);

// Closed-loop state (x^p, du, x_c) of the unsaturated nonlinear composition.
[[nodiscard]] Vec6 closed_loop_rhs(const LinearFamily& family, const ControllerConfig& cfg, const Vec6& state,
                                   const Vec2& r);

[[nodiscard]] Mat6 linearize_closed_loop_numeric(const LinearFamily& family, const ControllerConfig& cfg,
                                                 const Vec6& state, const Vec2& r, double h = 1e-6);

struct RefBreakpoint {
    double t;
    Vec2 r;
};

// Piecewise-linear reference through breakpoints (two breakpoints at the same
// time form a step), held constant after the last one.
struct Scenario {
    std::string name{"custom"};
    std::vector<RefBreakpoint> breakpoints;
    double t_final{100.0};
    std::optional<Vec2> x0;   // default: trim of the lowest knot
    Vec2 du0{Vec2::Zero()};
    Vec2 xc0{Vec2::Zero()};
    double r_rate_max{0.15};
    bool allow_fast_ref{false};
    // When set the controller is bypassed and u is held at this value.
    std::optional<Vec2> open_loop_input;

    [[nodiscard]] Vec2 reference(double t) const;
    // Largest ||r'|| over the profile; +inf if it contains a step.
    [[nodiscard]] double max_reference_rate() const;
    void validate() const;
};

struct SimOptions {
    MatrixNorm norm{MatrixNorm::Spectral};
    // Attach V = dX^T P dX and its rate along the frozen closed loop.
    std::optional<Mat6> lyapunov_p;
    double blowup_norm{1e6};
};

struct TraceSample {
    double t{0.0};
    Vec2 x{Vec2::Zero()};
    Vec2 u{Vec2::Zero()};
    Vec2 du{Vec2::Zero()};
    Vec2 x_c{Vec2::Zero()};
    Vec2 v_unsat{Vec2::Zero()};
    Vec2 v_sat{Vec2::Zero()};
    Vec2 y{Vec2::Zero()};
    Vec2 r{Vec2::Zero()};
    double alpha{0.0};
    double alpha_dot{0.0};
    double ydot_norm{0.0};
    double rdot_norm{0.0};
    double thrust{0.0};
    double acl_norm{0.0};
    double acl_dot_norm{0.0};
    std::array<std::complex<double>, 6> eig{};
    double dev_norm{0.0}; // ||(y - r, du, x_c)||
    double V{std::numeric_limits<double>::quiet_NaN()};
    double V_dot{std::numeric_limits<double>::quiet_NaN()};
    std::array<bool, 2> saturated{false, false};
    bool fuel_clamped{false};
};

struct SimTrace {
    std::string scenario;
    double dt{0.0};
    MatrixNorm norm{MatrixNorm::Spectral};
    bool has_lyapunov{false};
    bool unforced{false};
    std::vector<TraceSample> samples;
};

[[nodiscard]] SimTrace simulate(const LinearFamily& family, const ControllerConfig& cfg, const Scenario& scenario,
                                const SimOptions& opts = {});

// Linear time-varying unforced closed loop dX' = A_cl(a(t)) dX about the trim
// at alpha_r, with a(t) scheduled on ||x_e(alpha_r) + dx^p||.
[[nodiscard]] SimTrace unforced_simulate(const LinearFamily& family, const ControllerConfig& cfg,
                                         ScheduleValue alpha_r, const Vec6& x0_offset, double t_final,
                                         const SimOptions& opts = {});

// Named presets. `idle` and `cruise` are knot indices. The step preset sets
// allow_fast_ref since its reference is discontinuous by construction.
[[nodiscard]] Scenario idle_cruise_idle_scenario(const LinearFamily& family, std::size_t idle, std::size_t cruise,
                                                 double ramp = 20.0, double hold = 20.0);
[[nodiscard]] Scenario hold_scenario(const LinearFamily& family, std::size_t knot, double t_final = 20.0);
[[nodiscard]] Scenario step_scenario(const LinearFamily& family, std::size_t from, std::size_t to,
                                     double t_step = 5.0, double t_final = 40.0);

} // namespace gsched
