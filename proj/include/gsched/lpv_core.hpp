#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gsched/types.hpp"

namespace gsched {

// Scheduling value. Always finite and non-negative (it is a vector norm).
class ScheduleValue {
public:
    explicit ScheduleValue(double alpha);

    [[nodiscard]] double value() const noexcept { return alpha_; }

private:
    double alpha_;
};

// One trim condition of the engine together with its local linear model and
// the PI gains designed for it. C = I and D = 0 for every point.
struct OperatingPoint {
    std::string label;
    double alpha_star{0.0};
    Vec2 x_e{Vec2::Zero()}; // spool speeds (core, fan), non-dimensional
    Vec2 u_e{Vec2::Zero()}; // fuel command, prop pitch angle [deg]
    double thrust{0.0};     // [N]
    Mat2 A{Mat2::Zero()};
    Mat2 B{Mat2::Zero()};
    Mat2 Ki{Mat2::Zero()};
    Mat2 Kp{Mat2::Zero()};
};

// Derivative of every interpolated field with respect to one scalar coordinate.
struct FamilySlope {
    Vec2 x_e{Vec2::Zero()};
    Vec2 u_e{Vec2::Zero()};
    double thrust{0.0};
    Mat2 A{Mat2::Zero()};
    Mat2 B{Mat2::Zero()};
    Mat2 Ki{Mat2::Zero()};
    Mat2 Kp{Mat2::Zero()};
};

/// Equilibrium manifold plus linearization family, piecewise-linear in the
/// scheduling value and clamped outside the knot range.
///
/// The knot coordinate is the published alpha*. Plant and controller see the
/// state norm s = ||x||, which differs from alpha* at a knot by rounding of the
/// published data; `schedule_coordinate` maps s onto the knot coordinate with
/// the monotone piecewise-linear map through (||x_e,i||, alpha*_i), so that
/// every published trim is an exact fixed point of the scheduled plant.
class LinearFamily {
public:
    static constexpr double kAlphaNormTolerance = 1e-3;

    explicit LinearFamily(std::vector<OperatingPoint> points);

    [[nodiscard]] const std::vector<OperatingPoint>& points() const noexcept { return points_; }
    [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
    [[nodiscard]] const OperatingPoint& point(std::size_t i) const { return points_.at(i); }
    [[nodiscard]] double alpha_min() const noexcept { return points_.front().alpha_star; }
    [[nodiscard]] double alpha_max() const noexcept { return points_.back().alpha_star; }

    [[nodiscard]] OperatingPoint interpolate(ScheduleValue alpha) const;

    // d/d(alpha) of the interpolated fields. Zero in the clamped region; at a
    // knot the mean of the left and right one-sided slopes.
    [[nodiscard]] FamilySlope slope(ScheduleValue alpha) const;

    // Knot coordinate for a state norm.
    [[nodiscard]] ScheduleValue schedule_coordinate(double state_norm) const;

    // d/ds of interpolate(schedule_coordinate(s)), same knot convention as slope().
    [[nodiscard]] FamilySlope slope_in_norm(double state_norm) const;

    [[nodiscard]] const std::vector<double>& knot_norms() const noexcept { return knot_norms_; }

private:
    std::vector<OperatingPoint> points_;
    std::vector<double> knot_norms_;
};

[[nodiscard]] ScheduleValue schedule_from_state(const Vec2& x);

[[nodiscard]] OperatingPoint interpolate(const LinearFamily& family, ScheduleValue alpha);

[[nodiscard]] Vec2 equilibrium_input(const LinearFamily& family, ScheduleValue alpha);

} // namespace gsched
