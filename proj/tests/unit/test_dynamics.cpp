#include "uavrisk/dynamics.hpp"

#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace uavrisk;
using fixtures::wp;

namespace {

SimResult fly(const TrajectoryPlan& plan, const Vec3& wind = Vec3::Zero(), double dt = 0.1,
              const DynamicsNoise& noise = {}, std::uint64_t seed = 1) {
    SimConfig sim;
    sim.dt = dt;
    Rng rng(seed);
    return simulate_flight(
        plan, ControllerConfig{}, noise, sim, [&](const Vec3&) { return wind; }, [] { return Vec3::Zero(); }, rng);
}

std::vector<TrajectoryPlan> liveness_plans() {
    std::vector<TrajectoryPlan> plans;
    auto make = [&](std::vector<Waypoint> w) {
        TrajectoryPlan p;
        p.name = "plan" + std::to_string(plans.size());
        p.waypoints = std::move(w);
        plans.push_back(std::move(p));
    };
    make({wp(0, 0, 30, 5), wp(100, 0, 30, 5)});
    make({wp(0, 0, 0, 3), wp(0, 0, 40, 3)});
    make({wp(0, 0, 40, 3), wp(0, 0, 2, 3)});
    make({wp(0, 0, 20, 5), wp(50, 50, 20, 5), wp(100, 0, 20, 5)});
    make({wp(0, 0, 30, 8), wp(-80, 30, 35, 8), wp(-80, 120, 30, 6), wp(0, 0, 30, 4)});
    make({wp(0, 0, 10, 2), wp(10, 0, 10, 2), wp(10, 10, 10, 2), wp(0, 10, 10, 2), wp(0, 0, 10, 2)});
    make({wp(0, 0, 30, 5), wp(200, 0, 30, 5), wp(200, 5, 30, 5), wp(0, 5, 30, 5)});
    make({wp(0, 0, 0, 3), wp(0, 0, 30, 3), wp(200, 0, 30, 5), wp(200, 150, 30, 5), wp(0, 150, 30, 5), wp(0, 0, 30, 5),
          wp(0, 0, 0, 3)});
    make({wp(5, 5, 15, 10), wp(300, -40, 60, 10)});
    make({wp(0, 0, 25, 4), wp(30, 0, 25, 4), wp(30, 0, 45, 2), wp(60, 20, 45, 6)});
    return plans;
}

}  // namespace

TEST(PlanTimeEstimate, SingleSegment) { EXPECT_DOUBLE_EQ(plan_time_estimate(fixtures::straight_plan(100, 5)), 20.0); }

TEST(PlanTimeEstimate, DestinationSpeedPerSegment) {
    TrajectoryPlan p;
    p.waypoints = {wp(0, 0, 0, 1), wp(100, 0, 0, 5), wp(150, 0, 0, 10)};
    EXPECT_DOUBLE_EQ(plan_time_estimate(p), 25.0);
}

TEST(SimulateFlight, StraightPlanMonotoneAndCapturedInTime) {
    const auto plan = fixtures::straight_plan(100, 5);
    const auto r = fly(plan);
    ASSERT_TRUE(r.complete);
    ASSERT_GE(r.states.size(), 2u);
    for (std::size_t k = 1; k < r.states.size(); ++k)
        EXPECT_GE(r.states[k].position.x(), r.states[k - 1].position.x()) << k;
    EXPECT_LE(r.states.back().time, 100.0 / 5.0 * 1.5);
    EXPECT_LE((r.states.back().position - plan.waypoints.back().position).norm(), ControllerConfig{}.capture_radius);
}

TEST(SimulateFlight, HeadwindAtAuthorityMarginSlowsFlight) {
    const auto plan = fixtures::straight_plan(100, 5);
    const ControllerConfig c;
    const double margin = c.max_horizontal_accel / SimConfig{}.drag_coefficient_per_mass - 5.0;
    const auto calm = fly(plan);
    const auto windy = fly(plan, Vec3(-margin, 0, 0));
    ASSERT_TRUE(calm.complete);
    EXPECT_GT(windy.states.back().time, calm.states.back().time);
}

TEST(SimulateFlight, NoNoiseMeansSeedIsUnused) {
    const auto plan = fixtures::loop_plan();
    const auto a = fly(plan, Vec3(1, 0.5, 0), 0.1, {}, 1);
    const auto b = fly(plan, Vec3(1, 0.5, 0), 0.1, {}, 999);
    ASSERT_EQ(a.states.size(), b.states.size());
    for (std::size_t k = 0; k < a.states.size(); ++k) {
        ASSERT_EQ(a.states[k].position, b.states[k].position);
        ASSERT_EQ(a.states[k].velocity, b.states[k].velocity);
    }
}

TEST(SimulateFlight, NoiseChangesHistoryAndIsSeedDeterministic) {
    const auto plan = fixtures::straight_plan(100, 5);
    DynamicsNoise n;
    n.accel_std = Vec3(0.3, 0.3, 0.1);
    const auto a = fly(plan, Vec3::Zero(), 0.1, n, 4);
    const auto b = fly(plan, Vec3::Zero(), 0.1, n, 4);
    const auto c = fly(plan, Vec3::Zero(), 0.1, n, 5);
    ASSERT_EQ(a.states.size(), b.states.size());
    for (std::size_t k = 0; k < a.states.size(); ++k) ASSERT_EQ(a.states[k].position, b.states[k].position);
    EXPECT_NE(a.states[5].position, c.states[5].position);
}

TEST(SimulateFlight, PositionsReintegrateExactly) {
    DynamicsNoise n;
    n.accel_std = Vec3(0.5, 0.5, 0.2);
    const auto r = fly(fixtures::loop_plan(), Vec3(2, -1, 0), 0.1, n, 8);
    for (std::size_t k = 0; k + 1 < r.states.size(); ++k) {
        const Vec3 expect = r.states[k].position + r.states[k + 1].velocity * 0.1;
        ASSERT_EQ(r.states[k + 1].position, expect) << k;
        ASSERT_EQ(r.states[k].time, static_cast<double>(k) * 0.1);
    }
}

TEST(SimulateFlight, ReachesEveryWaypointOnFixturePlans) {
    const double capture = ControllerConfig{}.capture_radius;
    for (const auto& plan : liveness_plans()) {
        const auto r = fly(plan);
        ASSERT_TRUE(r.complete) << plan.name;
        for (std::size_t w = 1; w < plan.waypoints.size(); ++w) {
            double best = INFINITY;
            for (const auto& s : r.states) best = std::min(best, (s.position - plan.waypoints[w].position).norm());
            EXPECT_LE(best, capture + 1e-9) << plan.name << " waypoint " << w;
        }
    }
}

TEST(SimulateFlight, HalvingStepChangesFlightTimeLessThanTwoPercent) {
    for (const auto& plan : liveness_plans()) {
        const double t1 = fly(plan, Vec3::Zero(), 0.1).states.back().time;
        const double t2 = fly(plan, Vec3::Zero(), 0.05).states.back().time;
        EXPECT_LT(std::abs(t1 - t2) / t1, 0.02) << plan.name << " " << t1 << " vs " << t2;
    }
}

TEST(SimulateFlight, TimeoutFlagsIncomplete) {
    SimConfig sim;
    sim.max_sim_time = 5.0;
    Rng rng(1);
    const auto r = simulate_flight(
        fixtures::straight_plan(100, 5), ControllerConfig{}, DynamicsNoise{}, sim,
        [](const Vec3&) { return Vec3::Zero(); }, [] { return Vec3::Zero(); }, rng);
    EXPECT_FALSE(r.complete);
    EXPECT_GE(r.states.size(), 2u);
    EXPECT_NEAR(r.states.back().time, 5.0, 1e-9);
}

TEST(SimulateFlight, PitchTiltsIntoForwardAcceleration) {
    const auto r = fly(fixtures::straight_plan(100, 5));
    EXPECT_LT(r.states[0].pitch, 0.0);
    EXPECT_NEAR(std::abs(r.states[0].pitch), std::atan(5.0 / kGravity), 1e-12);
}

TEST(SimulateFlight, YawFollowsPathTangent) {
    TrajectoryPlan p;
    p.waypoints = {wp(0, 0, 20, 5), wp(0, 100, 20, 5)};
    const auto r = fly(p);
    EXPECT_NEAR(r.states[r.states.size() / 2].yaw, std::numbers::pi / 2, 1e-9);
}
