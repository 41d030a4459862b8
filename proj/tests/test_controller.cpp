#include <doctest.h>

#include <random>

#include "gsched/closed_loop.hpp"
#include "gsched/controller.hpp"
#include "gsched/error.hpp"
#include "support.hpp"

using namespace gsched;
using testsupport::published;

namespace {
bool near(const Vec2& a, const Vec2& b, double tol = 1e-12) { return (a - b).cwiseAbs().maxCoeff() <= tol; }
} // namespace

TEST_CASE("control law") {
    ControllerState st;
    CHECK(control_law(st, Vec2(0.3, 0.2), Vec2(0.3, 0.2), published(1)) == Vec2::Zero());
    st.x_c = Vec2(1.0, 0.0);
    CHECK(near(control_law(st, Vec2(0.5, 0.5), Vec2(0.5, 0.5), published(1)), Vec2(-0.7, -0.7)));
    st.x_c = Vec2::Zero();
    CHECK(near(control_law(st, Vec2(0.1, 0.0), Vec2::Zero(), published(3)), Vec2(-0.1, -0.1)));
}

TEST_CASE("saturate") {
    const ControllerConfig cfg;
    CHECK(saturate(Vec2(0.5, -0.5), cfg) == Vec2(0.18, -0.18));
    CHECK(saturate(Vec2(0.1, -0.1), cfg) == Vec2(0.1, -0.1));
    CHECK(saturate(Vec2(0.18, 0.18), cfg) == Vec2(0.18, 0.18));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const Vec2 v(d(rng), d(rng));
        const Vec2 s = saturate(v, cfg);
        CHECK(saturate(s, cfg) == s);
        CHECK(s.cwiseAbs().maxCoeff() <= 0.18);
    }
}

TEST_CASE("integrator step") {
    const ControllerConfig cfg;
    ControllerState st;
    const Vec2 v = Vec2(0.05, 0.05);
    CHECK(near(integrator_step(st, Vec2(0.1, 0.0), Vec2::Zero(), cfg, v, v), Vec2(0.001, 0.0)));
    CHECK(integrator_step(st, Vec2(0.4, 0.4), Vec2(0.4, 0.4), cfg, v, v) == Vec2::Zero());
    // excess (0.1, 0), ifb 2: x_c moves so that v = -Ki x_c falls back toward the limit
    CHECK(near(integrator_step(st, Vec2::Zero(), Vec2::Zero(), cfg, Vec2(0.28, 0.0), Vec2(0.18, 0.0)),
               Vec2(0.002, 0.0)));
    const Vec2 xc = integrator_step(st, Vec2::Zero(), Vec2::Zero(), cfg, Vec2(0.28, 0.28), Vec2(0.18, 0.18));
    st.x_c = xc;
    CHECK((control_law(st, Vec2::Zero(), Vec2::Zero(), published(3)).array() < 0.0).all());
}

TEST_CASE("input augmentation step") {
    const ControllerConfig cfg;
    const Vec2 ue(0.4685, 16.0);
    ControllerState st;
    SUBCASE("equilibrium") {
        const auto s = input_augmentation_step(st, Vec2::Zero(), ue, cfg);
        CHECK(s.du == Vec2::Zero());
        CHECK(s.u == ue);
        CHECK_FALSE(s.fuel_clamped);
    }
    SUBCASE("one step toward saturated command") {
        const auto s = input_augmentation_step(st, Vec2(0.18, 0.0), ue, cfg);
        CHECK(near(s.du, Vec2(0.0054, 0.0)));
    }
    SUBCASE("decay") {
        st.du = Vec2(0.1, 0.0);
        const auto s = input_augmentation_step(st, Vec2::Zero(), ue, cfg);
        CHECK(near(s.du, Vec2(0.097, 0.0)));
    }
    SUBCASE("fuel floor") {
        st.du = Vec2(-0.2, 0.0);
        const auto s = input_augmentation_step(st, Vec2(-0.18, 0.0), Vec2(0.145, 16.0), cfg);
        CHECK(s.fuel_clamped);
        CHECK(s.u(0) == 0.0);
        CHECK(s.du(0) == -0.145);
    }
}

TEST_CASE("controller config validation") {
    ControllerConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    auto bad = cfg;
    bad.eps_c = 0.0;
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
    bad = cfg;
    bad.eta_c = -1.0;
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
    bad = cfg;
    bad.ifb_gain = -0.5;
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
    bad = cfg;
    bad.v_min = Vec2(0.2, -0.18);
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
    bad = cfg;
    bad.dt = 0.0;
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("anti-windup is inert when the command never saturates") {
    const auto& fam = testsupport::model().family;
    const auto sc = idle_cruise_idle_scenario(fam, 0, 2);
    ControllerConfig with = testsupport::model().controller;
    ControllerConfig without = with;
    without.ifb_gain = 0.0;
    const auto a = simulate(fam, with, sc);
    const auto b = simulate(fam, without, sc);
    REQUIRE(a.samples.size() == b.samples.size());
    bool any_sat = false;
    bool identical = true;
    for (std::size_t k = 0; k < a.samples.size(); ++k) {
        any_sat = any_sat || a.samples[k].saturated[0] || a.samples[k].saturated[1];
        identical = identical && a.samples[k].x == b.samples[k].x && a.samples[k].x_c == b.samples[k].x_c;
    }
    REQUIRE_FALSE(any_sat);
    CHECK(identical);
}

TEST_CASE("integrator leak bound with zero tracking error") {
    // Hold at a trim with a non-zero initial integrator state: y stays at r only
    // if the plant does, so check the pure integrator recursion directly.
    const ControllerConfig cfg;
    ControllerState st;
    st.x_c = Vec2(0.3, -0.2);
    const double x0 = st.x_c.norm();
    for (int k = 1; k <= 500; ++k) {
        st.x_c = integrator_step(st, Vec2::Zero(), Vec2::Zero(), cfg, Vec2::Zero(), Vec2::Zero());
        CHECK(st.x_c.norm() <= x0 * std::exp(-cfg.eps_c * k * cfg.dt) + 1e-3);
    }
}
