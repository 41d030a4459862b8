#include "gsched/summary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gsched {

RunSummary summarize(const SimTrace& trace, const Scenario& scenario) {
    RunSummary out;
    const auto& s = trace.samples;
    if (s.empty()) {
        return out;
    }
    out.final_error = (s.back().y - s.back().r).cwiseAbs();
    out.final_thrust = s.back().thrust;
    out.min_fuel = std::numeric_limits<double>::infinity();
    std::size_t saturated = 0;
    for (const auto& smp : s) {
        saturated += (smp.saturated[0] || smp.saturated[1]) ? 1 : 0;
        out.fuel_clamp_steps += smp.fuel_clamped ? 1 : 0;
        out.min_fuel = std::min(out.min_fuel, smp.u(0));
        out.max_abs_v_sat = std::max(out.max_abs_v_sat, smp.v_sat.cwiseAbs().maxCoeff());
    }
    out.saturation_duty = static_cast<double>(saturated) / static_cast<double>(s.size());
    out.monitors = slow_variation_report(trace);

    const auto& bp = scenario.breakpoints;
    const double t_last = s.back().t;
    for (std::size_t j = 1; j < bp.size(); ++j) {
        // Hold = [bp[j].t, next breakpoint or t_final] with r constant and a change before it.
        const double t0 = bp[j].t;
        const double t1 = j + 1 < bp.size() ? bp[j + 1].t : scenario.t_final;
        const bool constant = j + 1 >= bp.size() || bp[j + 1].r == bp[j].r;
        if (!constant || !(t1 > t0) || t0 > t_last || bp[j - 1].r == bp[j].r) {
            continue;
        }
        // Start of the change that leads into this hold.
        std::size_t c = j - 1;
        while (c > 0 && bp[c - 1].r != bp[c].r) {
            --c;
        }
        const Vec2 before = bp[c].r;
        const Vec2 target = bp[j].r;
        const Vec2 delta = target - before;

        HoldResult h;
        h.t_start = t0;
        h.t_end = std::min(t1, t_last);
        h.target = target;
        const double eps_t = 1e-9 * std::max(1.0, t_last);
        const TraceSample* end_sample = &s.front();
        std::optional<double> last_outside;
        for (const auto& smp : s) {
            if (smp.t < bp[c].t - eps_t || smp.t > h.t_end + eps_t) {
                continue;
            }
            end_sample = &smp;
            for (int k = 0; k < 2; ++k) {
                const double span = std::abs(delta(k));
                if (span <= 1e-12) {
                    continue;
                }
                const double sign = delta(k) > 0 ? 1.0 : -1.0;
                h.overshoot_pct = std::max(h.overshoot_pct, 100.0 * sign * (smp.y(k) - target(k)) / span);
                if (smp.t >= t0 - eps_t && std::abs(smp.y(k) - smp.r(k)) > 0.02 * span) {
                    last_outside = smp.t;
                }
            }
        }
        h.steady_state_error = (end_sample->y - end_sample->r).cwiseAbs();
        if (!last_outside) {
            h.settle_time = 0.0;
        } else if (*last_outside < h.t_end - eps_t) {
            h.settle_time = *last_outside + trace.dt - t0;
        }
        out.holds.push_back(h);
    }
    return out;
}

} // namespace gsched
