#pragma once

#include "gsched/lpv_core.hpp"
#include "gsched/types.hpp"

namespace gsched {

// Parameters of the integrator-augmented PI law. Throws InvalidInput from
// validate() when a field is out of range.
struct ControllerConfig {
    double eps_c{1.0};     // integrator leak [1/s]
    double eta_c{3.0};     // input augmentation rate [1/s]
    double ifb_gain{2.0};  // integral feedback (anti-windup) gain
    Vec2 v_min{Vec2::Constant(-0.18)};
    Vec2 v_max{Vec2::Constant(0.18)};
    double dt{0.01};       // [s]

    void validate() const;
};

struct ControllerState {
    Vec2 x_c{Vec2::Zero()};         // leaky integrator states
    Vec2 u{Vec2::Zero()};           // physical input applied to the plant
    Vec2 du{Vec2::Zero()};          // u - u_e(alpha), state of the augmentation
    Vec2 last_v_unsat{Vec2::Zero()};
    Vec2 last_v_sat{Vec2::Zero()};
};

// v = -Ki x_c - Kp (y - r)
[[nodiscard]] Vec2 control_law(const ControllerState& state, const Vec2& y, const Vec2& r,
                               const OperatingPoint& gains);

[[nodiscard]] Vec2 saturate(const Vec2& v, const ControllerConfig& cfg);

// One explicit Euler step of x_c' = -eps_c x_c + (y - r) + ifb (v_unsat - v_sat).
[[nodiscard]] Vec2 integrator_step(const ControllerState& state, const Vec2& y, const Vec2& r,
                                   const ControllerConfig& cfg, const Vec2& v_unsat, const Vec2& v_sat);

struct AugmentationStep {
    Vec2 du;
    Vec2 u;
    bool fuel_clamped{false};
};

// One explicit Euler step of du' = eta_c (v - du), then u = u_e + du with the
// fuel component floored at zero (du is adjusted to match when the floor hits).
[[nodiscard]] AugmentationStep input_augmentation_step(const ControllerState& state, const Vec2& v_sat,
                                                       const Vec2& u_e, const ControllerConfig& cfg);

} // namespace gsched
