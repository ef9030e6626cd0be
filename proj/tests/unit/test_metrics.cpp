#include "uavrisk/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace uavrisk;

namespace {

ProcessedFlight flight_with(std::vector<double> power, std::vector<double> yaw, double dt) {
    ProcessedFlight f;
    f.sample_period = dt;
    f.frames.resize(power.size());
    f.measured_power = std::move(power);
    f.yaw_series = std::move(yaw);
    return f;
}

}  // namespace

TEST(Mape, PerfectPredictionIsZero) {
    const std::vector<double> y{100, 200, 300};
    EXPECT_EQ(mape(y, y), 0.0);
}

TEST(Mape, HandCase) {
    const std::vector<double> y{100, 200}, p{110, 180};
    EXPECT_NEAR(mape(y, p), 10.0, 1e-12);
}

TEST(Mape, ScaledPrediction) {
    const std::vector<double> y{120, 250, 333, 90}, p{132, 275, 366.3, 99};
    EXPECT_NEAR(mape(y, p), 10.0, 1e-12);
}

TEST(Mape, RejectsBadInput) {
    const std::vector<double> y{100, 0}, p{1, 1};
    EXPECT_THROW(mape(y, p), InputError);
    EXPECT_THROW(mape(std::vector<double>{1.0}, p), InputError);
}

TEST(SegmentByYaw, ConstantYawOneSection) {
    const std::vector<double> yaw(100, 0.3);
    const auto s = segment_by_yaw(yaw, 0.1);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].begin, 0u);
    EXPECT_EQ(s[0].end, 100u);
}

TEST(SegmentByYaw, StepSplitsAtTheStep) {
    std::vector<double> yaw(60, 0.0);
    for (std::size_t i = 30; i < 60; ++i) yaw[i] = std::numbers::pi / 2;
    const auto s = segment_by_yaw(yaw, 0.1);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0].end, 30u);
    EXPECT_EQ(s[1].begin, 30u);
    EXPECT_EQ(s[1].end, 60u);
}

TEST(SegmentByYaw, TriangularLegsWithTurnTransients) {
    // Three 10 s legs at 0, 120 and 240 degrees joined by 0.6 s ramps, plus
    // small heading jitter and a brief excursion that returns.
    const double dt = 0.1;
    std::vector<double> yaw;
    const double legs[3] = {0.0, 120.0, 240.0};
    for (int l = 0; l < 3; ++l) {
        for (int i = 0; i < 100; ++i) yaw.push_back(deg_to_rad(legs[l] + 2.0 * std::sin(0.7 * i)));
        if (l < 2)
            for (int i = 1; i <= 6; ++i) yaw.push_back(deg_to_rad(legs[l] + 120.0 * i / 7.0));
    }
    yaw[50] = deg_to_rad(30.0);
    const auto s = segment_by_yaw(yaw, dt);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s.front().begin, 0u);
    EXPECT_EQ(s.back().end, yaw.size());
    for (std::size_t k = 1; k < s.size(); ++k) EXPECT_EQ(s[k].begin, s[k - 1].end);
}

TEST(SegmentByYaw, WrapsAcrossPi) {
    std::vector<double> yaw;
    for (int i = 0; i < 50; ++i) yaw.push_back(i % 2 ? std::numbers::pi - 0.01 : -std::numbers::pi + 0.01);
    EXPECT_EQ(segment_by_yaw(yaw, 0.1).size(), 1u);
}

TEST(AdjustedRe, PerfectPredictionIsZero) {
    const auto f = flight_with(std::vector<double>(20, 150.0), std::vector<double>(20, 0.0), 0.1);
    const auto ev = adjusted_re(f, f.measured_power);
    EXPECT_EQ(ev.re_percent, 0.0);
    EXPECT_EQ(ev.mape_percent, 0.0);
}

TEST(AdjustedRe, ErrorsDoNotCancelAcrossSections) {
    std::vector<double> yaw(20, 0.0), pred(20, 110.0);
    for (std::size_t i = 10; i < 20; ++i) {
        yaw[i] = std::numbers::pi / 2;
        pred[i] = 90.0;
    }
    const auto f = flight_with(std::vector<double>(20, 100.0), yaw, 0.5);
    const auto ev = adjusted_re(f, pred);
    ASSERT_EQ(ev.section_count, 2);
    EXPECT_NEAR(ev.re_percent, 10.0, 1e-12);
    double et = 0.0, ep = 0.0;
    for (const auto& s : ev.sections) et += s.true_j, ep += s.predicted_j;
    EXPECT_EQ(et, ep);
}

TEST(AdjustedRe, SingleSectionEqualsWholeFlightError) {
    const std::vector<double> y{100, 120, 140, 90}, p{90, 130, 150, 95};
    const auto f = flight_with(y, std::vector<double>(4, 1.0), 0.1);
    const auto ev = adjusted_re(f, p);
    ASSERT_EQ(ev.section_count, 1);
    EXPECT_NEAR(ev.re_percent, 100.0 * std::abs(450.0 - 465.0) / 450.0, 1e-12);
}
