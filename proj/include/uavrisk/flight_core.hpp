#pragma once

// Shared domain types: vehicle state, nominal trajectories, power-model
// features and recorded flights.
//
// Frames: inertial x/y horizontal, z up; yaw measured from inertial x,
// counter-clockwise positive. Body frame: x forward along yaw, y right,
// z down. Pitch is nose-up positive.

#include "uavrisk/errors.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace uavrisk {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

inline constexpr double kGravity = 9.80665;
inline constexpr const char* kFrameConvention = "xfwd-yright-zdown/yaw-ccw-from-x/v1";

// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double w = std::remainder(a, two_pi);
    if (w <= -std::numbers::pi) w += two_pi;
    return w;
}

inline double deg_to_rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad_to_deg(double r) { return r * 180.0 / std::numbers::pi; }

struct VehicleState {
    double time = 0.0;
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    double yaw = 0.0;
    double pitch = 0.0;
};

struct Waypoint {
    Vec3 position = Vec3::Zero();
    double yaw = 0.0;
    double target_speed = 1.0;
};

struct TrajectoryPlan {
    std::string name;
    std::vector<Waypoint> waypoints;
    std::optional<double> final_time_hint;

    // Throws InputError naming the first violated invariant.
    void validate() const {
        if (waypoints.size() < 2) throw InputError("trajectory needs at least 2 waypoints");
        for (std::size_t i = 0; i < waypoints.size(); ++i) {
            const auto& w = waypoints[i];
            if (!w.position.allFinite() || !std::isfinite(w.yaw))
                throw InputError("waypoint " + std::to_string(i) + " is not finite");
            if (!(w.target_speed > 0.0) || !std::isfinite(w.target_speed))
                throw InputError("waypoint " + std::to_string(i) + ": target_speed must be positive");
            if (i > 0 && (w.position - waypoints[i - 1].position).norm() <= 1e-9)
                throw InputError("waypoints " + std::to_string(i - 1) + " and " + std::to_string(i) +
                                 " coincide");
        }
    }
};

// Time-varying power-model inputs for one timestep.
struct FeatureFrame {
    double airspeed = 0.0;
    double airspeed_body_x = 0.0;
    double airspeed_body_y = 0.0;
    double vertical_speed = 0.0;
    double angle_of_attack = 0.0;

    static constexpr std::size_t kCount = 5;

    double operator[](std::size_t i) const {
        switch (i) {
            case 0: return airspeed;
            case 1: return airspeed_body_x;
            case 2: return airspeed_body_y;
            case 3: return vertical_speed;
            default: return angle_of_attack;
        }
    }
};

// Time-invariant context.
struct ContextFeatures {
    double air_density = 1.225;
    double payload_mass = 0.0;

    static constexpr std::size_t kCount = 2;

    double operator[](std::size_t i) const { return i == 0 ? air_density : payload_mass; }

    void validate() const {
        if (!(air_density >= 0.5 && air_density <= 1.5))
            throw InputError("air_density must be within [0.5, 1.5] kg/m^3");
        if (!(payload_mass >= 0.0 && payload_mass < 20.0))
            throw InputError("payload_mass must be within [0, 20) kg");
    }
};

struct ProcessedFlight {
    std::string id;
    double sample_period = 0.1;
    std::vector<FeatureFrame> frames;
    ContextFeatures context;
    std::vector<double> measured_power;
    std::vector<double> yaw_series;
    // Optional absolute timestamps as read from file; empty means k * sample_period.
    std::vector<double> times;
};

// Air-relative features from ground-truth state and the wind seen by the vehicle.
inline std::vector<FeatureFrame> derive_features(std::span<const VehicleState> states,
                                                 std::span<const Vec3> wind_at_vehicle) {
    if (states.size() != wind_at_vehicle.size())
        throw InputError("derive_features: state and wind lists differ in length");
    if (states.empty()) throw InputError("derive_features: empty state history");

    std::vector<FeatureFrame> frames;
    frames.reserve(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
        const auto& s = states[i];
        const Vec3 air = s.velocity - wind_at_vehicle[i];
        const double c = std::cos(s.yaw);
        const double sn = std::sin(s.yaw);
        FeatureFrame f;
        f.airspeed = air.norm();
        f.airspeed_body_x = c * air.x() + sn * air.y();
        f.airspeed_body_y = sn * air.x() - c * air.y();
        f.vertical_speed = s.velocity.z();
        f.angle_of_attack = s.pitch;
        frames.push_back(f);
    }
    return frames;
}

// Returns the violated invariants; empty means valid.
inline std::vector<std::string> validate_flight(const ProcessedFlight& flight) {
    std::vector<std::string> report;
    const std::size_t n = flight.frames.size();
    if (!(flight.sample_period > 0.0) || !std::isfinite(flight.sample_period))
        report.emplace_back("sample_period positive");
    if (n == 0) report.emplace_back("frames non-empty");
    if (flight.measured_power.size() != n) report.emplace_back("measured_power length matches frames");
    if (flight.yaw_series.size() != n) report.emplace_back("yaw_series length matches frames");
    for (double p : flight.measured_power) {
        if (!(p > 0.0)) {
            report.emplace_back("measured_power positive");
            break;
        }
    }
    if (!flight.times.empty()) {
        if (flight.times.size() != n) {
            report.emplace_back("timestamps length matches frames");
        } else {
            for (std::size_t i = 1; i < n; ++i) {
                const double gap = flight.times[i] - flight.times[i - 1];
                if (std::abs(gap - flight.sample_period) > 1e-9) {
                    report.emplace_back("uniform sampling (gap at index " + std::to_string(i) + ")");
                    break;
                }
            }
        }
    }
    for (const auto& f : flight.frames) {
        const double horiz = f.airspeed_body_x * f.airspeed_body_x + f.airspeed_body_y * f.airspeed_body_y;
        const double full = f.airspeed * f.airspeed;
        if (!(f.airspeed >= 0.0) || full < horiz * (1.0 - 1e-6) - 1e-12) {
            report.emplace_back("airspeed covers body components");
            break;
        }
    }
    const auto& ctx = flight.context;
    if (!(ctx.air_density >= 0.5 && ctx.air_density <= 1.5)) report.emplace_back("air_density in [0.5, 1.5]");
    if (!(ctx.payload_mass >= 0.0 && ctx.payload_mass < 20.0)) report.emplace_back("payload_mass in [0, 20)");
    return report;
}

}  // namespace uavrisk
