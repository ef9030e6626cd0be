#pragma once

// Closed-loop point-mass flight: a saturated PD waypoint tracker driving
//   x'' = a_cmd - c_d (v - wind) + d,   d ~ N(0, diag(accel_std^2)),
// integrated with semi-implicit Euler. Yaw slews toward the path tangent;
// pitch is the thrust tilt implied by the horizontal command.

#include "uavrisk/errors.hpp"
#include "uavrisk/flight_core.hpp"
#include "uavrisk/rng.hpp"
#include "uavrisk/wind.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace uavrisk {

struct ControllerConfig {
    double position_gain = 1.0;          // 1/s^2, cross-track
    double velocity_gain = 2.0;          // 1/s
    double max_horizontal_accel = 5.0;   // m/s^2
    double max_vertical_speed = 3.0;     // m/s
    double capture_radius = 1.0;         // m
    double arrival_speed = 0.5;          // m/s, final waypoint counts as reached below this speed
    double yaw_rate_limit = 1.5;         // rad/s

    void validate() const {
        for (double v : {position_gain, velocity_gain, max_horizontal_accel, max_vertical_speed, capture_radius,
                         arrival_speed, yaw_rate_limit})
            if (!(v > 0.0) || !std::isfinite(v)) throw InputError("controller parameters must all be positive");
    }
};

struct DynamicsNoise {
    Vec3 accel_std = Vec3::Zero();

    void validate() const {
        if (!(accel_std.array() >= 0.0).all() || !accel_std.allFinite())
            throw InputError("dynamics noise std must be non-negative");
    }
};

struct SimConfig {
    double dt = 0.1;
    double max_sim_time = 0.0;            // <= 0: 3x the plan time estimate
    double drag_coefficient_per_mass = 0.1;  // linear drag, 1/s

    void validate() const {
        if (!(dt > 0.0) || dt > 0.5) throw InputError("sim dt must be in (0, 0.5]");
        if (!(drag_coefficient_per_mass >= 0.0)) throw InputError("drag coefficient must be >= 0");
        if (!std::isfinite(max_sim_time)) throw InputError("max_sim_time must be finite");
    }
};

struct SimResult {
    std::vector<VehicleState> states;
    std::vector<Vec3> winds;  // total wind (constant + turbulence) seen at each state
    bool complete = false;
};

// Sum of segment length / destination-waypoint speed.
inline double plan_time_estimate(const TrajectoryPlan& plan) {
    double t = 0.0;
    for (std::size_t i = 1; i < plan.waypoints.size(); ++i) {
        const auto& a = plan.waypoints[i - 1];
        const auto& b = plan.waypoints[i];
        t += (b.position - a.position).norm() / b.target_speed;
    }
    return t;
}

inline double plan_length(const TrajectoryPlan& plan) {
    double l = 0.0;
    for (std::size_t i = 1; i < plan.waypoints.size(); ++i)
        l += (plan.waypoints[i].position - plan.waypoints[i - 1].position).norm();
    return l;
}

namespace detail {

inline double slew_yaw(double yaw, double target, double max_step) {
    const double diff = wrap_angle(target - yaw);
    return wrap_angle(yaw + std::clamp(diff, -max_step, max_step));
}

}  // namespace detail

// wind_lookup: Vec3(const Vec3& position), constant wind in the inertial frame.
// turbulence:  Vec3(), next body-axis gust sample (u fwd, v right, w down).
template <typename WindLookup, typename Turbulence>
SimResult simulate_flight(const TrajectoryPlan& plan, const ControllerConfig& ctrl, const DynamicsNoise& noise,
                          const SimConfig& sim, WindLookup&& wind_lookup, Turbulence&& turbulence, Rng& rng) {
    plan.validate();
    ctrl.validate();
    noise.validate();
    sim.validate();

    const auto& wps = plan.waypoints;
    const std::size_t n = wps.size();
    const double max_time = sim.max_sim_time > 0.0 ? sim.max_sim_time : 3.0 * plan_time_estimate(plan);
    const double c_d = sim.drag_coefficient_per_mass;

    SimResult out;
    const auto reserve = static_cast<std::size_t>(max_time / sim.dt) + 2;
    out.states.reserve(reserve);
    out.winds.reserve(reserve);

    VehicleState s;
    s.position = wps.front().position;
    s.yaw = wrap_angle(wps.front().yaw);
    std::size_t active = 1;

    for (std::size_t k = 0;; ++k) {
        s.time = static_cast<double>(k) * sim.dt;
        const Vec3 wind = wind_lookup(s.position) + body_to_inertial(turbulence(), s.yaw);

        if (k > 0) {
            while (active < n && (wps[active].position - s.position).norm() <= ctrl.capture_radius) {
                if (active == n - 1) {
                    out.complete = s.velocity.norm() <= ctrl.arrival_speed;
                    break;
                }
                ++active;
            }
        }

        // Command toward the active waypoint.
        const Vec3& seg_start = wps[active - 1].position;
        const Vec3& seg_end = wps[active].position;
        const Vec3 seg_dir = (seg_end - seg_start).normalized();
        const Vec3 rel = s.position - seg_start;
        const Vec3 cross_track = rel - rel.dot(seg_dir) * seg_dir;
        const Vec3 to_end = seg_end - s.position;
        const double dist = to_end.norm();

        double speed_cmd = wps[active].target_speed;
        const bool stop_at_end =
            active == n - 1 || (wps[active + 1].position - seg_end).normalized().dot(seg_dir) < 0.0;
        if (stop_at_end) speed_cmd = std::min(speed_cmd, std::sqrt(ctrl.max_horizontal_accel * dist));
        Vec3 v_des = dist > 1e-12 ? Vec3(to_end * (speed_cmd / dist)) : Vec3(Vec3::Zero());
        v_des.z() = std::clamp(v_des.z(), -ctrl.max_vertical_speed, ctrl.max_vertical_speed);

        Vec3 a_cmd = ctrl.velocity_gain * (v_des - s.velocity) - ctrl.position_gain * cross_track +
                     c_d * (s.velocity - wind);
        const double a_h = std::hypot(a_cmd.x(), a_cmd.y());
        if (a_h > ctrl.max_horizontal_accel) {
            a_cmd.x() *= ctrl.max_horizontal_accel / a_h;
            a_cmd.y() *= ctrl.max_horizontal_accel / a_h;
        }
        a_cmd.z() = std::clamp(a_cmd.z(), -ctrl.max_horizontal_accel, ctrl.max_horizontal_accel);

        const double tilt = std::atan(std::hypot(a_cmd.x(), a_cmd.y()) / kGravity);
        const double forward = a_cmd.x() * std::cos(s.yaw) + a_cmd.y() * std::sin(s.yaw);
        s.pitch = forward >= 0.0 ? -tilt : tilt;

        out.states.push_back(s);
        out.winds.push_back(wind);
        if (out.complete || s.time >= max_time) break;

        Vec3 accel = a_cmd - c_d * (s.velocity - wind);
        for (int a = 0; a < 3; ++a)
            if (noise.accel_std[a] > 0.0) accel[a] += noise.accel_std[a] * rng.normal();

        s.velocity += accel * sim.dt;
        s.position += s.velocity * sim.dt;

        const Vec3 h_dir(seg_dir.x(), seg_dir.y(), 0.0);
        const double target_yaw = h_dir.norm() > 1e-9 ? std::atan2(h_dir.y(), h_dir.x()) : wps[active].yaw;
        s.yaw = detail::slew_yaw(s.yaw, target_yaw, ctrl.yaw_rate_limit * sim.dt);
    }
    return out;
}

}  // namespace uavrisk
