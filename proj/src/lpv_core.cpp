#include "gsched/lpv_core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gsched/error.hpp"

namespace gsched {

namespace {

template <typename M>
M lerp_entries(const M& a, const M& b, double t) {
    M out;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        out(i) = std::lerp(a(i), b(i), t);
    }
    return out;
}

OperatingPoint blend(const OperatingPoint& lo, const OperatingPoint& hi, double alpha, double t) {
    OperatingPoint p;
    p.label = lo.label + "~" + hi.label;
    p.alpha_star = alpha;
    p.x_e = lerp_entries(lo.x_e, hi.x_e, t);
    p.u_e = lerp_entries(lo.u_e, hi.u_e, t);
    p.thrust = std::lerp(lo.thrust, hi.thrust, t);
    p.A = lerp_entries(lo.A, hi.A, t);
    p.B = lerp_entries(lo.B, hi.B, t);
    p.Ki = lerp_entries(lo.Ki, hi.Ki, t);
    p.Kp = lerp_entries(lo.Kp, hi.Kp, t);
    return p;
}

FamilySlope segment_slope(const OperatingPoint& lo, const OperatingPoint& hi, double width) {
    FamilySlope s;
    s.x_e = (hi.x_e - lo.x_e) / width;
    s.u_e = (hi.u_e - lo.u_e) / width;
    s.thrust = (hi.thrust - lo.thrust) / width;
    s.A = (hi.A - lo.A) / width;
    s.B = (hi.B - lo.B) / width;
    s.Ki = (hi.Ki - lo.Ki) / width;
    s.Kp = (hi.Kp - lo.Kp) / width;
    return s;
}

FamilySlope mean(const FamilySlope& a, const FamilySlope& b) {
    FamilySlope s;
    s.x_e = 0.5 * (a.x_e + b.x_e);
    s.u_e = 0.5 * (a.u_e + b.u_e);
    s.thrust = 0.5 * (a.thrust + b.thrust);
    s.A = 0.5 * (a.A + b.A);
    s.B = 0.5 * (a.B + b.B);
    s.Ki = 0.5 * (a.Ki + b.Ki);
    s.Kp = 0.5 * (a.Kp + b.Kp);
    return s;
}

bool finite_point(const OperatingPoint& p) {
    return std::isfinite(p.alpha_star) && std::isfinite(p.thrust) && p.x_e.allFinite() &&
           p.u_e.allFinite() && p.A.allFinite() && p.B.allFinite() && p.Ki.allFinite() &&
           p.Kp.allFinite();
}

// Piecewise-linear slope over `knots`, shared by the alpha and norm coordinates.
FamilySlope slope_over(const std::vector<OperatingPoint>& pts, const std::vector<double>& knots,
                       double c) {
    const std::size_t n = pts.size();
    if (n < 2 || c < knots.front() || c > knots.back()) {
        return {};
    }
    auto seg = [&](std::size_t i) {
        return segment_slope(pts[i], pts[i + 1], knots[i + 1] - knots[i]);
    };
    const auto it = std::lower_bound(knots.begin(), knots.end(), c);
    const auto i = static_cast<std::size_t>(it - knots.begin());
    if (*it == c) {
        const FamilySlope left = i > 0 ? seg(i - 1) : FamilySlope{};
        const FamilySlope right = i + 1 < n ? seg(i) : FamilySlope{};
        return mean(left, right);
    }
    return seg(i - 1);
}

} // namespace

ScheduleValue::ScheduleValue(double alpha) : alpha_(alpha) {
    if (!std::isfinite(alpha) || alpha < 0.0) {
        std::ostringstream os;
        os << "schedule value must be finite and non-negative, got " << alpha;
        throw InvalidInput(os.str());
    }
}

LinearFamily::LinearFamily(std::vector<OperatingPoint> points) : points_(std::move(points)) {
    if (points_.empty()) {
        throw InvalidInput("linear family needs at least one operating point");
    }
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const auto& p = points_[i];
        const std::string name = "operating point " + std::to_string(i) +
                                 (p.label.empty() ? std::string{} : " (" + p.label + ")");
        if (!finite_point(p)) {
            throw InvalidInput(name + " has non-finite entries");
        }
        if (p.alpha_star < 0.0) {
            throw InvalidInput(name + " has negative alpha_star");
        }
        const double norm = p.x_e.norm();
        if (std::abs(norm - p.alpha_star) > kAlphaNormTolerance) {
            std::ostringstream os;
            os << name << ": alpha_star " << p.alpha_star << " differs from ||x_e|| = " << norm
               << " by more than " << kAlphaNormTolerance;
            throw InvalidInput(os.str());
        }
        if (i > 0 && !(p.alpha_star > points_[i - 1].alpha_star)) {
            throw InvalidInput(name + ": alpha_star must be strictly increasing");
        }
        if (i > 0 && !(norm > knot_norms_.back())) {
            throw InvalidInput(name + ": ||x_e|| must be strictly increasing along the family");
        }
        knot_norms_.push_back(norm);
    }
}

OperatingPoint LinearFamily::interpolate(ScheduleValue alpha) const {
    const double a = alpha.value();
    if (a <= alpha_min()) {
        return points_.front();
    }
    if (a >= alpha_max()) {
        return points_.back();
    }
    const auto it = std::lower_bound(points_.begin(), points_.end(), a,
                                     [](const OperatingPoint& p, double v) { return p.alpha_star < v; });
    if (it->alpha_star == a) {
        return *it;
    }
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double t = (a - lo.alpha_star) / (hi.alpha_star - lo.alpha_star);
    return blend(lo, hi, a, t);
}

FamilySlope LinearFamily::slope(ScheduleValue alpha) const {
    std::vector<double> knots;
    knots.reserve(points_.size());
    for (const auto& p : points_) {
        knots.push_back(p.alpha_star);
    }
    return slope_over(points_, knots, alpha.value());
}

ScheduleValue LinearFamily::schedule_coordinate(double state_norm) const {
    if (!std::isfinite(state_norm) || state_norm < 0.0) {
        throw InvalidInput("state norm must be finite and non-negative");
    }
    const double s = state_norm;
    const double s_lo = knot_norms_.front();
    const double s_hi = knot_norms_.back();
    if (s <= s_lo) {
        return ScheduleValue(s == s_lo ? alpha_min() : std::max(0.0, alpha_min() + (s - s_lo)));
    }
    if (s >= s_hi) {
        return ScheduleValue(s == s_hi ? alpha_max() : alpha_max() + (s - s_hi));
    }
    const auto it = std::lower_bound(knot_norms_.begin(), knot_norms_.end(), s);
    const auto i = static_cast<std::size_t>(it - knot_norms_.begin());
    if (*it == s) {
        return ScheduleValue(points_[i].alpha_star);
    }
    const double t = (s - knot_norms_[i - 1]) / (knot_norms_[i] - knot_norms_[i - 1]);
    return ScheduleValue(std::lerp(points_[i - 1].alpha_star, points_[i].alpha_star, t));
}

FamilySlope LinearFamily::slope_in_norm(double state_norm) const {
    return slope_over(points_, knot_norms_, state_norm);
}

ScheduleValue schedule_from_state(const Vec2& x) {
    if (!x.allFinite()) {
        throw InvalidInput("schedule_from_state: non-finite state");
    }
    return ScheduleValue(x.norm());
}

OperatingPoint interpolate(const LinearFamily& family, ScheduleValue alpha) {
    return family.interpolate(alpha);
}

Vec2 equilibrium_input(const LinearFamily& family, ScheduleValue alpha) {
    return family.interpolate(alpha).u_e;
}

} // namespace gsched
