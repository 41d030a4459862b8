#include "gsched/closed_loop.hpp"

#include <cmath>
#include <sstream>

#include "gsched/error.hpp"
#include "gsched/linalg.hpp"

namespace gsched {

namespace {

struct Scheduled {
    double norm;
    ScheduleValue alpha;
    OperatingPoint point;
};

Scheduled schedule(const LinearFamily& family, const Vec2& x) {
    const double s = schedule_from_state(x).value();
    const ScheduleValue a = family.schedule_coordinate(s);
    return {s, a, family.interpolate(a)};
}

Vec6 pack(const Vec2& a, const Vec2& b, const Vec2& c) {
    Vec6 v;
    v << a, b, c;
    return v;
}

void check_step(double h, double at) {
    if (!(std::isfinite(h) && h > 0.0) || at + h == at || at - h == at) {
        std::ostringstream os;
        os << "finite-difference step " << h << " underflows at coordinate value " << at;
        throw InvalidInput(os.str());
    }
}

// Fills the frozen-model columns of a sample from its closed-loop matrix.
void fill_frozen(TraceSample& s, const Mat6& a_cl, const Vec6& dev, const SimOptions& opts) {
    s.acl_norm = matrix_norm(a_cl, opts.norm);
    const auto ev = eigenvalues(a_cl);
    std::copy(ev.begin(), ev.end(), s.eig.begin());
    s.dev_norm = dev.norm();
    if (opts.lyapunov_p) {
        const Mat6& p = *opts.lyapunov_p;
        s.V = dev.dot(p * dev);
        s.V_dot = dev.dot((p * a_cl + a_cl.transpose() * p) * dev);
    }
}

void finish_rate_column(SimTrace& trace, const std::vector<Mat6>& a_hist) {
    auto& s = trace.samples;
    for (std::size_t k = 1; k < s.size(); ++k) {
        s[k].acl_dot_norm = matrix_norm(a_hist[k] - a_hist[k - 1], trace.norm) / trace.dt;
    }
    if (s.size() > 1) {
        s[0].acl_dot_norm = s[1].acl_dot_norm;
    }
}

template <typename F>
Vec2 rk4(const Vec2& x, double dt, F&& f) {
    const Vec2 k1 = f(x);
    const Vec2 k2 = f(x + 0.5 * dt * k1);
    const Vec2 k3 = f(x + 0.5 * dt * k2);
    const Vec2 k4 = f(x + dt * k3);
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

std::size_t step_count(double t_final, double dt) {
    return static_cast<std::size_t>(std::llround(t_final / dt));
}

} // namespace

ClosedLoopMatrices assemble_closed_loop(const OperatingPoint& point, const ControllerConfig& cfg) {
    const Mat2 I = Mat2::Identity();
    const Mat2 Z = Mat2::Zero();
    ClosedLoopMatrices m{Mat6::Zero(), Mat62::Zero(), ScheduleValue(point.alpha_star)};
    m.A_cl << point.A, point.B, Z,
              -cfg.eta_c * point.Kp, -cfg.eta_c * I, -cfg.eta_c * point.Ki,
              I, Z, -cfg.eps_c * I;
    m.B_cl << Z, cfg.eta_c * point.Kp, -I;
    return m;
}

Vec2 plant_rhs(const Vec2& x, const Vec2& u, const LinearFamily& family) {
    if (!u.allFinite()) {
        throw InvalidInput("plant_rhs: non-finite input");
    }
    const auto sch = schedule(family, x);
    const auto& q = sch.point;
    return q.A * (x - q.x_e) + q.B * (u - q.u_e);
}

PlantJacobian plant_jacobian(const LinearFamily& family, const Vec2& x, const Vec2& u) {
    const auto sch = schedule(family, x);
    const auto& q = sch.point;
    PlantJacobian j{q.A, q.B};
    if (sch.norm == 0.0) {
        return j;
    }
    const FamilySlope d = family.slope_in_norm(sch.norm);
    const Vec2 chain = d.A * (x - q.x_e) + d.B * (u - q.u_e) - q.A * d.x_e - q.B * d.u_e;
    j.A += chain * (x / sch.norm).transpose();
    return j;
}

PlantJacobian linearize_frozen(const LinearFamily& family, ScheduleValue alpha) {
    if (alpha.value() < family.alpha_min() || alpha.value() > family.alpha_max()) {
        std::ostringstream os;
        os << "linearize_frozen: alpha " << alpha.value() << " outside manifold range [" << family.alpha_min()
           << ", " << family.alpha_max() << "]";
        throw InvalidInput(os.str());
    }
    const auto q = family.interpolate(alpha);
    return {q.A, q.B};
}

PlantJacobian linearize_numeric(const LinearFamily& family, const Vec2& x, const Vec2& u, double h) {
    PlantJacobian j{Mat2::Zero(), Mat2::Zero()};
    for (int c = 0; c < 2; ++c) {
        check_step(h, x(c));
        Vec2 e = Vec2::Zero();
        e(c) = h;
        j.A.col(c) = (plant_rhs(x + e, u, family) - plant_rhs(x - e, u, family)) / (2.0 * h);
    }
    for (int c = 0; c < 2; ++c) {
        check_step(h, u(c));
        Vec2 e = Vec2::Zero();
        e(c) = h;
        j.B.col(c) = (plant_rhs(x, u + e, family) - plant_rhs(x, u - e, family)) / (2.0 * h);
    }
    return j;
}

Vec6 closed_loop_rhs(const LinearFamily& family, const ControllerConfig& cfg, const Vec6& state, const Vec2& r) {
    const Vec2 x = state.segment<2>(0);
    const Vec2 du = state.segment<2>(2);
    const Vec2 xc = state.segment<2>(4);
    const auto sch = schedule(family, x);
    const auto& q = sch.point;
    const Vec2 e = x - r;
    const Vec2 v = -q.Ki * xc - q.Kp * e;
    return pack(q.A * (x - q.x_e) + q.B * du, cfg.eta_c * (v - du), -cfg.eps_c * xc + e);
}

Mat6 linearize_closed_loop_numeric(const LinearFamily& family, const ControllerConfig& cfg, const Vec6& state,
                                   const Vec2& r, double h) {
    Mat6 j;
    for (int c = 0; c < 6; ++c) {
        check_step(h, state(c));
        Vec6 e = Vec6::Zero();
        e(c) = h;
        j.col(c) = (closed_loop_rhs(family, cfg, state + e, r) - closed_loop_rhs(family, cfg, state - e, r)) /
                   (2.0 * h);
    }
    return j;
}

Vec2 Scenario::reference(double t) const {
    if (breakpoints.empty()) {
        throw InvalidInput("scenario has no reference breakpoints");
    }
    if (t < breakpoints.front().t) {
        return breakpoints.front().r;
    }
    // Last breakpoint at or before t; a step resolves to its later value.
    std::size_t j = 0;
    while (j + 1 < breakpoints.size() && breakpoints[j + 1].t <= t) {
        ++j;
    }
    if (j + 1 == breakpoints.size()) {
        return breakpoints.back().r;
    }
    const auto& a = breakpoints[j];
    const auto& b = breakpoints[j + 1];
    const double w = (t - a.t) / (b.t - a.t);
    return a.r + w * (b.r - a.r);
}

double Scenario::max_reference_rate() const {
    double rate = 0.0;
    for (std::size_t j = 0; j + 1 < breakpoints.size(); ++j) {
        const double span = breakpoints[j + 1].t - breakpoints[j].t;
        const double jump = (breakpoints[j + 1].r - breakpoints[j].r).norm();
        if (span == 0.0) {
            if (jump > 0.0) {
                return std::numeric_limits<double>::infinity();
            }
            continue;
        }
        rate = std::max(rate, jump / span);
    }
    return rate;
}

void Scenario::validate() const {
    if (breakpoints.empty()) {
        throw InvalidInput("scenario '" + name + "': no reference breakpoints");
    }
    for (std::size_t j = 0; j < breakpoints.size(); ++j) {
        const auto& b = breakpoints[j];
        if (!std::isfinite(b.t) || !b.r.allFinite()) {
            throw InvalidInput("scenario '" + name + "': non-finite breakpoint " + std::to_string(j));
        }
        if (j > 0 && b.t < breakpoints[j - 1].t) {
            throw InvalidInput("scenario '" + name + "': breakpoint times must be non-decreasing");
        }
    }
    if (!(std::isfinite(t_final) && t_final > 0.0)) {
        throw InvalidInput("scenario '" + name + "': t_final must be > 0");
    }
    if (!(std::isfinite(r_rate_max) && r_rate_max > 0.0)) {
        throw InvalidInput("scenario '" + name + "': r_rate_max must be > 0");
    }
    if ((x0 && !x0->allFinite()) || !du0.allFinite() || !xc0.allFinite() ||
        (open_loop_input && !open_loop_input->allFinite())) {
        throw InvalidInput("scenario '" + name + "': non-finite initial condition");
    }
    if (!allow_fast_ref) {
        const double rate = max_reference_rate();
        if (!(rate < r_rate_max)) {
            std::ostringstream os;
            os << "scenario '" << name << "': reference rate " << rate << " is not below the bound " << r_rate_max
               << " (allow-fast-ref overrides)";
            throw InvalidInput(os.str());
        }
    }
}

SimTrace simulate(const LinearFamily& family, const ControllerConfig& cfg, const Scenario& scenario,
                  const SimOptions& opts) {
    cfg.validate();
    scenario.validate();

    const double dt = cfg.dt;
    const std::size_t n = step_count(scenario.t_final, dt);

    SimTrace trace;
    trace.scenario = scenario.name;
    trace.dt = dt;
    trace.norm = opts.norm;
    trace.has_lyapunov = opts.lyapunov_p.has_value();
    trace.samples.reserve(n + 1);
    std::vector<Mat6> a_hist;
    a_hist.reserve(n + 1);

    Vec2 x = scenario.x0.value_or(family.point(0).x_e);
    ControllerState st;
    st.du = scenario.du0;
    st.x_c = scenario.xc0;

    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * dt;
        const auto sch = schedule(family, x);
        const auto& q = sch.point;
        const Vec2 y = x;
        const Vec2 r = scenario.reference(t);

        TraceSample s;
        s.t = t;
        s.x = x;
        s.y = y;
        s.r = r;
        s.alpha = sch.alpha.value();

        Vec2 u;
        if (scenario.open_loop_input) {
            u = *scenario.open_loop_input;
            st.du = u - q.u_e;
        } else {
            s.v_unsat = control_law(st, y, r, q);
            s.v_sat = saturate(s.v_unsat, cfg);
            u = q.u_e + st.du;
            if (u(0) < 0.0) {
                u(0) = 0.0;
                s.fuel_clamped = true;
            }
        }
        st.u = u;
        st.last_v_unsat = s.v_unsat;
        st.last_v_sat = s.v_sat;
        s.u = u;
        s.du = st.du;
        s.x_c = st.x_c;
        s.saturated = {s.v_unsat(0) != s.v_sat(0), s.v_unsat(1) != s.v_sat(1)};

        const Vec2 xdot = q.A * (x - q.x_e) + q.B * (u - q.u_e);
        s.ydot_norm = xdot.norm();
        s.alpha_dot = sch.norm > 0.0 ? x.dot(xdot) / sch.norm : 0.0;
        s.rdot_norm = (scenario.reference(t + dt) - r).norm() / dt;
        s.thrust = q.thrust;

        const auto cl = assemble_closed_loop(q, cfg);
        fill_frozen(s, cl.A_cl, pack(y - r, st.du, st.x_c), opts);
        a_hist.push_back(cl.A_cl);
        trace.samples.push_back(s);

        if (k == n) {
            break;
        }

        if (!scenario.open_loop_input) {
            const Vec2 xc_next = integrator_step(st, y, r, cfg, s.v_unsat, s.v_sat);
            const auto aug = input_augmentation_step(st, s.v_sat, q.u_e, cfg);
            st.x_c = xc_next;
            st.du = aug.du;
            trace.samples.back().fuel_clamped = s.fuel_clamped || aug.fuel_clamped;
        }
        x = rk4(x, dt, [&](const Vec2& xs) { return plant_rhs(xs, u, family); });

        const Vec6 all = pack(x, st.du, st.x_c);
        if (!all.allFinite() || all.norm() > opts.blowup_norm) {
            throw SimulationBlowUp(k + 1, "state left the finite/bounded region");
        }
    }
    finish_rate_column(trace, a_hist);
    return trace;
}

SimTrace unforced_simulate(const LinearFamily& family, const ControllerConfig& cfg, ScheduleValue alpha_r,
                           const Vec6& x0_offset, double t_final, const SimOptions& opts) {
    cfg.validate();
    if (!x0_offset.allFinite()) {
        throw InvalidInput("unforced_simulate: non-finite initial offset");
    }
    if (!(std::isfinite(t_final) && t_final > 0.0)) {
        throw InvalidInput("unforced_simulate: t_final must be > 0");
    }
    const double dt = cfg.dt;
    const std::size_t n = step_count(t_final, dt);
    const OperatingPoint trim = family.interpolate(alpha_r);
    const Vec2 r = trim.x_e;

    auto frozen = [&](const Vec6& dx) {
        return assemble_closed_loop(schedule(family, r + dx.segment<2>(0)).point, cfg).A_cl;
    };

    SimTrace trace;
    trace.scenario = "unforced";
    trace.dt = dt;
    trace.norm = opts.norm;
    trace.has_lyapunov = opts.lyapunov_p.has_value();
    trace.unforced = true;
    trace.samples.reserve(n + 1);
    std::vector<Mat6> a_hist;
    a_hist.reserve(n + 1);

    Vec6 d = x0_offset;
    for (std::size_t k = 0;; ++k) {
        const Vec2 x = r + d.segment<2>(0);
        const auto sch = schedule(family, x);
        const auto& q = sch.point;
        const Mat6 a_cl = assemble_closed_loop(q, cfg).A_cl;
        const Vec6 ddot = a_cl * d;

        TraceSample s;
        s.t = static_cast<double>(k) * dt;
        s.x = x;
        s.y = x;
        s.r = r;
        s.du = d.segment<2>(2);
        s.x_c = d.segment<2>(4);
        s.u = q.u_e + s.du;
        s.v_unsat = -q.Ki * s.x_c - q.Kp * d.segment<2>(0);
        s.v_sat = s.v_unsat;
        s.alpha = sch.alpha.value();
        s.ydot_norm = ddot.segment<2>(0).norm();
        s.alpha_dot = sch.norm > 0.0 ? x.dot(ddot.segment<2>(0)) / sch.norm : 0.0;
        s.thrust = q.thrust;
        fill_frozen(s, a_cl, d, opts);
        a_hist.push_back(a_cl);
        trace.samples.push_back(s);

        if (k == n) {
            break;
        }
        const Vec6 k1 = ddot;
        const Vec6 k2 = frozen(d + 0.5 * dt * k1) * (d + 0.5 * dt * k1);
        const Vec6 k3 = frozen(d + 0.5 * dt * k2) * (d + 0.5 * dt * k2);
        const Vec6 k4 = frozen(d + dt * k3) * (d + dt * k3);
        d += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!d.allFinite() || d.norm() > opts.blowup_norm) {
            throw SimulationBlowUp(k + 1, "unforced state left the finite/bounded region");
        }
    }
    finish_rate_column(trace, a_hist);
    return trace;
}

Scenario idle_cruise_idle_scenario(const LinearFamily& family, std::size_t idle, std::size_t cruise, double ramp,
                                   double hold) {
    const Vec2 lo = family.point(idle).x_e;
    const Vec2 hi = family.point(cruise).x_e;
    Scenario sc;
    sc.name = "idle-cruise-idle";
    double t = 0.0;
    sc.breakpoints.push_back({t, lo});
    t += hold;
    sc.breakpoints.push_back({t, lo});
    t += ramp;
    sc.breakpoints.push_back({t, hi});
    t += hold;
    sc.breakpoints.push_back({t, hi});
    t += ramp;
    sc.breakpoints.push_back({t, lo});
    t += hold;
    sc.breakpoints.push_back({t, lo});
    sc.t_final = t;
    sc.x0 = lo;
    return sc;
}

Scenario hold_scenario(const LinearFamily& family, std::size_t knot, double t_final) {
    const Vec2 trim = family.point(knot).x_e;
    Scenario sc;
    sc.name = "hold";
    sc.breakpoints = {{0.0, trim}, {t_final, trim}};
    sc.t_final = t_final;
    sc.x0 = trim;
    return sc;
}

Scenario step_scenario(const LinearFamily& family, std::size_t from, std::size_t to, double t_step,
                       double t_final) {
    const Vec2 a = family.point(from).x_e;
    const Vec2 b = family.point(to).x_e;
    Scenario sc;
    sc.name = "step";
    sc.breakpoints = {{0.0, a}, {t_step, a}, {t_step, b}, {t_final, b}};
    sc.t_final = t_final;
    sc.x0 = a;
    sc.allow_fast_ref = true; // a step is the point of this preset
    return sc;
}

} // namespace gsched
