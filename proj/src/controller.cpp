#include "gsched/controller.hpp"

#include <cmath>

#include "gsched/error.hpp"

namespace gsched {

void ControllerConfig::validate() const {
    if (!(std::isfinite(eps_c) && eps_c > 0.0)) {
        throw InvalidInput("controller: eps_c must be > 0");
    }
    if (!(std::isfinite(eta_c) && eta_c > 0.0)) {
        throw InvalidInput("controller: eta_c must be > 0");
    }
    if (!(std::isfinite(ifb_gain) && ifb_gain >= 0.0)) {
        throw InvalidInput("controller: ifb_gain must be >= 0");
    }
    if (!(v_min.allFinite() && v_max.allFinite() && (v_min.array() < v_max.array()).all())) {
        throw InvalidInput("controller: v_min must be element-wise below v_max");
    }
    if (!(std::isfinite(dt) && dt > 0.0)) {
        throw InvalidInput("controller: dt must be > 0");
    }
}

Vec2 control_law(const ControllerState& state, const Vec2& y, const Vec2& r, const OperatingPoint& gains) {
    return -gains.Ki * state.x_c - gains.Kp * (y - r);
}

Vec2 saturate(const Vec2& v, const ControllerConfig& cfg) {
    return v.cwiseMax(cfg.v_min).cwiseMin(cfg.v_max);
}

Vec2 integrator_step(const ControllerState& state, const Vec2& y, const Vec2& r, const ControllerConfig& cfg,
                     const Vec2& v_unsat, const Vec2& v_sat) {
    // v decreases as x_c grows (v = -Ki x_c - ...), so the excess is added: a
    // command above its limit pushes x_c back toward the unsaturated region.
    const Vec2 windup = cfg.ifb_gain * (v_unsat - v_sat);
    return state.x_c + cfg.dt * (-cfg.eps_c * state.x_c + (y - r) + windup);
}

AugmentationStep input_augmentation_step(const ControllerState& state, const Vec2& v_sat, const Vec2& u_e,
                                         const ControllerConfig& cfg) {
    AugmentationStep out;
    out.du = state.du + cfg.dt * cfg.eta_c * (v_sat - state.du);
    out.u = u_e + out.du;
    if (out.u(0) < 0.0) {
        out.u(0) = 0.0;
        out.du(0) = -u_e(0);
        out.fuel_clamped = true;
    }
    return out;
}

} // namespace gsched
