#include "uavrisk/flight_core.hpp"
#include "uavrisk/flight_csv.hpp"

#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace uavrisk;

namespace {

FeatureFrame one_frame(const Vec3& velocity, const Vec3& wind, double yaw) {
    VehicleState s;
    s.velocity = velocity;
    s.yaw = yaw;
    const std::vector<VehicleState> states{s};
    const std::vector<Vec3> winds{wind};
    return derive_features(states, winds).front();
}

ProcessedFlight uniform_flight(std::size_t n, double dt = 0.1) {
    ProcessedFlight f;
    f.id = "f";
    f.sample_period = dt;
    f.frames.resize(n);
    f.measured_power.assign(n, 150.0);
    f.yaw_series.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) f.times.push_back(static_cast<double>(i) * dt);
    return f;
}

}  // namespace

TEST(DeriveFeatures, ZeroWindIdentityRotation) {
    const auto f = one_frame({3, 0, 0}, {0, 0, 0}, 0.0);
    EXPECT_DOUBLE_EQ(f.airspeed, 3.0);
    EXPECT_DOUBLE_EQ(f.airspeed_body_x, 3.0);
    EXPECT_DOUBLE_EQ(f.airspeed_body_y, 0.0);
}

TEST(DeriveFeatures, WindCancelsGroundSpeed) {
    for (double yaw : {0.0, 1.0, -2.5}) {
        const auto f = one_frame({3, 0, 0}, {3, 0, 0}, yaw);
        EXPECT_EQ(f.airspeed, 0.0);
        EXPECT_EQ(f.airspeed_body_x, 0.0);
        EXPECT_EQ(f.airspeed_body_y, 0.0);
    }
}

TEST(DeriveFeatures, DiagonalFlightAlignedWithYaw) {
    const auto f = one_frame({1, 1, 0}, {0, 0, 0}, std::numbers::pi / 4);
    EXPECT_NEAR(f.airspeed_body_x, std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(f.airspeed_body_y, 0.0, 1e-12);
    EXPECT_NEAR(f.airspeed, std::sqrt(2.0), 1e-12);
}

TEST(DeriveFeatures, BodyYIsRightOfNose) {
    // Nose along +x, air moving toward -y (the vehicle's right when z is up).
    const auto f = one_frame({0, -2, 0}, {0, 0, 0}, 0.0);
    EXPECT_NEAR(f.airspeed_body_y, 2.0, 1e-12);
}

TEST(DeriveFeatures, VerticalSpeedAndPitch) {
    VehicleState s;
    s.velocity = Vec3(0, 0, 1.5);
    s.pitch = -0.2;
    const std::vector<VehicleState> states{s};
    const std::vector<Vec3> winds{Vec3(0, 0, 0.5)};
    const auto f = derive_features(states, winds).front();
    EXPECT_DOUBLE_EQ(f.vertical_speed, 1.5);
    EXPECT_DOUBLE_EQ(f.angle_of_attack, -0.2);
}

TEST(DeriveFeatures, LengthMismatchThrows) {
    const std::vector<VehicleState> states(2);
    const std::vector<Vec3> winds(1, Vec3::Zero());
    EXPECT_THROW(derive_features(states, winds), InputError);
}

TEST(ValidateFlight, UniformPositiveFlightIsClean) { EXPECT_TRUE(validate_flight(uniform_flight(20)).empty()); }

TEST(ValidateFlight, ZeroPowerReported) {
    auto f = uniform_flight(20);
    f.measured_power[5] = 0.0;
    const auto r = validate_flight(f);
    ASSERT_FALSE(r.empty());
    EXPECT_NE(std::find(r.begin(), r.end(), "measured_power positive"), r.end());
}

TEST(ValidateFlight, JitteredTimestampsReported) {
    auto f = uniform_flight(4);
    f.times = {0.0, 0.1, 0.21, 0.31};
    const auto r = validate_flight(f);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_NE(r.front().find("uniform sampling"), std::string::npos);
}

TEST(FlightCsv, RoundTripIsLossless) {
    ProcessedFlight f;
    f.id = "rt";
    f.sample_period = 0.1;
    f.context = {1.19, 0.25};
    for (int i = 0; i < 2; ++i) {
        FeatureFrame fr;
        fr.airspeed = 4.1 + i * 0.3333333333333333;
        fr.airspeed_body_x = 3.9 - i;
        fr.airspeed_body_y = -0.1 * i;
        fr.vertical_speed = 0.05;
        fr.angle_of_attack = -0.0871;
        f.frames.push_back(fr);
        f.measured_power.push_back(201.25 + i / 3.0);
        f.yaw_series.push_back(0.1 * i);
        f.times.push_back(0.1 * i);
    }
    const auto back = parse_flight_csv(format_flight_csv(f), "rt");
    ASSERT_EQ(back.frames.size(), 2u);
    EXPECT_EQ(back.context.air_density, 1.19);
    EXPECT_EQ(back.context.payload_mass, 0.25);
    EXPECT_EQ(back.sample_period, 0.1);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t k = 0; k < FeatureFrame::kCount; ++k) EXPECT_EQ(back.frames[i][k], f.frames[i][k]);
        EXPECT_EQ(back.measured_power[i], f.measured_power[i]);
        EXPECT_EQ(back.yaw_series[i], f.yaw_series[i]);
        EXPECT_EQ(back.times[i], f.times[i]);
    }
}

TEST(FlightCsv, MissingPreambleRejected) {
    EXPECT_THROW(parse_flight_csv("time_s,v,vx,vy,vz,alpha,power_w,yaw\n0,1,1,0,0,0,100,0\n"), LoadError);
}

TEST(FlightCsv, WrongHeaderRejected) {
    EXPECT_THROW(parse_flight_csv("# rho=1.2 payload_kg=0 dt=0.1\nt,v\n"), LoadError);
}

TEST(Angles, WrapAngleRange) {
    EXPECT_NEAR(wrap_angle(3 * std::numbers::pi), std::numbers::pi, 1e-12);
    EXPECT_NEAR(wrap_angle(-0.5), -0.5, 1e-15);
    EXPECT_NEAR(wrap_angle(2 * std::numbers::pi + 0.25), 0.25, 1e-12);
}

TEST(TrajectoryPlan, RejectsDegeneratePlans) {
    TrajectoryPlan p;
    p.waypoints = {fixtures::wp(0, 0, 0, 5)};
    EXPECT_THROW(p.validate(), InputError);
    p.waypoints.push_back(fixtures::wp(0, 0, 0, 5));
    EXPECT_THROW(p.validate(), InputError);
    p.waypoints.back() = fixtures::wp(10, 0, 0, 0);
    EXPECT_THROW(p.validate(), InputError);
}
