#pragma once

#include <optional>
#include <vector>

#include "gsched/closed_loop.hpp"
#include "gsched/lyapunov_cert.hpp"

namespace gsched {

// One constant-reference interval that follows a reference change.
struct HoldResult {
    double t_start{0.0};
    double t_end{0.0};
    Vec2 target{Vec2::Zero()};
    Vec2 steady_state_error{Vec2::Zero()}; // |y - r| at the end of the hold
    double overshoot_pct{0.0};
    std::optional<double> settle_time;      // 2% band, measured from t_start
};

struct RunSummary {
    Vec2 final_error{Vec2::Zero()};
    double final_thrust{0.0};
    std::vector<HoldResult> holds;
    double saturation_duty{0.0};
    std::size_t fuel_clamp_steps{0};
    double min_fuel{0.0};
    double max_abs_v_sat{0.0};
    SlowVariationReport monitors;
};

[[nodiscard]] RunSummary summarize(const SimTrace& trace, const Scenario& scenario);

} // namespace gsched
