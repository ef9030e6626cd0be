#pragma once

// Shared builders for the test suites.

#include "uavrisk/flight_core.hpp"
#include "uavrisk/montecarlo.hpp"
#include "uavrisk/power_model.hpp"
#include "uavrisk/risk.hpp"
#include "uavrisk/rng.hpp"
#include "uavrisk/wind.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace fixtures {

using namespace uavrisk;

inline CausalConv1d random_conv(Rng& rng, int in, int out, int kernel, int dilation, double scale) {
    CausalConv1d c;
    c.kernel_size = kernel;
    c.dilation = dilation;
    c.in_channels = in;
    c.out_channels = out;
    for (int n = 0; n < out * in * kernel; ++n) c.weights.push_back(rng.normal(0.0, scale));
    for (int n = 0; n < out; ++n) c.bias.push_back(rng.normal(0.0, 0.1));
    return c;
}

// `layers` residual blocks per stack with dilations 1, 2, 4, ...
inline TcnWeights random_tcn(Rng& rng, int filters, int layers, int kernel, int stacks = 1) {
    TcnWeights w;
    for (int f = 0; f < 5; ++f) {
        w.normalization.feature_means[static_cast<std::size_t>(f)] = rng.normal(0.0, 1.0);
        w.normalization.feature_stds[static_cast<std::size_t>(f)] = rng.uniform(0.5, 2.0);
    }
    w.normalization.context_means = {1.2, 0.5};
    w.normalization.context_stds = {0.05, 0.3};
    w.normalization.target_mean = 200.0;
    w.normalization.target_std = 40.0;
    int in = 5;
    for (int s = 0; s < stacks; ++s)
        for (int l = 0; l < layers; ++l) {
            ResidualBlock b;
            const int d = 1 << l;
            const double scale = 1.0 / std::sqrt(static_cast<double>(in * kernel));
            b.conv1 = random_conv(rng, in, filters, kernel, d, scale);
            b.conv2 = random_conv(rng, filters, filters, kernel, d, 1.0 / std::sqrt(static_cast<double>(filters * kernel)));
            if (in != filters) {
                ResidualProjection p;
                p.in_channels = in;
                p.out_channels = filters;
                for (int n = 0; n < in * filters; ++n) p.weights.push_back(rng.normal(0.0, scale));
                for (int n = 0; n < filters; ++n) p.bias.push_back(rng.normal(0.0, 0.1));
                b.projection = p;
            }
            w.blocks.push_back(std::move(b));
            in = filters;
        }
    for (int n = 0; n < in + 2; ++n) w.head.weights.push_back(rng.normal(0.0, 1.0 / std::sqrt(in + 2.0)));
    w.head.bias = rng.normal(0.0, 0.1);
    w.clamp_floor_w = -1e300;  // keep the raw head output visible to comparisons
    return w;
}

inline std::vector<FeatureFrame> random_frames(Rng& rng, std::size_t n) {
    std::vector<FeatureFrame> out(n);
    for (auto& f : out) {
        f.airspeed_body_x = rng.uniform(-10.0, 10.0);
        f.airspeed_body_y = rng.uniform(-5.0, 5.0);
        f.vertical_speed = rng.uniform(-3.0, 3.0);
        f.airspeed = std::hypot(f.airspeed_body_x, f.airspeed_body_y, f.vertical_speed);
        f.angle_of_attack = rng.uniform(-0.4, 0.4);
    }
    return out;
}

inline WindFieldSet uniform_windset(double angle_deg, double speed, const InletDistribution& inlet) {
    WindFieldSet set;
    const double a = deg_to_rad(angle_deg);
    set.grids.push_back(WindGrid::uniform(Vec3(speed * std::cos(a), speed * std::sin(a), 0.0), angle_deg, speed,
                                          Vec3(-1000, -1000, -10), 100.0, {21, 21, 3}));
    set.inlet = inlet;
    return set;
}

inline WindFieldSet calm_windset() {
    WindFieldSet set;
    set.grids.push_back(WindGrid::uniform(Vec3::Zero(), 0.0, 1.0, Vec3(-1000, -1000, -10), 100.0, {21, 21, 3}));
    return set;
}

inline Waypoint wp(double x, double y, double z, double speed, double yaw = 0.0) {
    Waypoint w;
    w.position = Vec3(x, y, z);
    w.yaw = yaw;
    w.target_speed = speed;
    return w;
}

inline TrajectoryPlan straight_plan(double length, double speed, double z = 30.0) {
    TrajectoryPlan p;
    p.name = "straight";
    p.waypoints = {wp(0, 0, z, speed), wp(length, 0, z, speed)};
    return p;
}

// Rectangle loop at altitude with climb-out and descent.
inline TrajectoryPlan loop_plan() {
    TrajectoryPlan p;
    p.name = "loop";
    p.waypoints = {wp(0, 0, 0, 3), wp(0, 0, 30, 3), wp(200, 0, 30, 5), wp(200, 150, 30, 5), wp(0, 150, 30, 5),
                   wp(0, 0, 30, 5), wp(0, 0, 0, 3)};
    return p;
}

inline AnalyticalCoefficients sample_coefficients() {
    AnalyticalCoefficients c;
    c.beta = {180.0, -4.0, 0.6, 15.0, 3.0, 40.0, -5.0};
    return c;
}

inline InletDistribution reference_inlet() { return {-2.53, 3.14, 28.47, 1.55}; }

inline RiskProfile reference_profile() { return {64000.0, 92340.0, 369360.0}; }

inline std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("uavrisk_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << text;
}

}  // namespace fixtures
