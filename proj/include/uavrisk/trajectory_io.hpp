#pragma once

// Trajectory CSV:
//   # name=<plan name>
//   x,y,z,yaw_deg,speed
//   0,0,30,0,5

#include "uavrisk/csv.hpp"
#include "uavrisk/flight_core.hpp"

#include <filesystem>
#include <fstream>
#include <string>

namespace uavrisk {

inline TrajectoryPlan parse_trajectory_csv(const std::string& text, const std::string& source = "trajectory") {
    TrajectoryPlan plan;
    std::size_t line_no = 0;
    for (const auto& raw : csv::lines(text)) {
        ++line_no;
        const auto line = csv::trim(raw);
        if (line.empty()) continue;
        if (line.front() == '#') {
            const auto kv = csv::parse_preamble(line);
            if (kv.count("name")) plan.name = kv.at("name");
            if (kv.count("final_time_hint")) plan.final_time_hint = csv::parse_double(kv.at("final_time_hint"), "final_time_hint");
            continue;
        }
        if (line.front() == 'x') continue;
        const auto cells = csv::split(line);
        if (cells.size() != 5)
            throw LoadError(source + ": line " + std::to_string(line_no) + " needs 5 fields (x,y,z,yaw_deg,speed)");
        Waypoint w;
        w.position = Vec3(csv::parse_double(cells[0], "x"), csv::parse_double(cells[1], "y"),
                          csv::parse_double(cells[2], "z"));
        w.yaw = wrap_angle(deg_to_rad(csv::parse_double(cells[3], "yaw_deg")));
        w.target_speed = csv::parse_double(cells[4], "speed");
        plan.waypoints.push_back(w);
    }
    try {
        plan.validate();
    } catch (const InputError& e) {
        throw LoadError(source + ": " + e.what());
    }
    return plan;
}

inline TrajectoryPlan load_trajectory(const std::filesystem::path& path) {
    return parse_trajectory_csv(csv::read_file(path.string()), path.string());
}

inline std::string format_trajectory_csv(const TrajectoryPlan& plan) {
    std::string out = "# name=" + (plan.name.empty() ? std::string("unnamed") : plan.name) + "\n";
    out += "x,y,z,yaw_deg,speed\n";
    for (const auto& w : plan.waypoints)
        out += csv::format_double(w.position.x()) + "," + csv::format_double(w.position.y()) + "," +
               csv::format_double(w.position.z()) + "," + csv::format_double(rad_to_deg(w.yaw)) + "," +
               csv::format_double(w.target_speed) + "\n";
    return out;
}

inline void save_trajectory(const TrajectoryPlan& plan, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError("cannot write " + path.string());
    out << format_trajectory_csv(plan);
}

}  // namespace uavrisk
