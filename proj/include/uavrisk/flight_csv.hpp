#pragma once

// Canonical ProcessedFlight CSV:
//
//   # rho=<float> payload_kg=<float> dt=<float>
//   time_s,v,vx,vy,vz,alpha,power_w,yaw
//   ...
//
// Extra '#' lines are allowed before the header (e.g. '# id=flight_012').

#include "uavrisk/csv.hpp"
#include "uavrisk/flight_core.hpp"

#include <filesystem>
#include <fstream>
#include <string>

namespace uavrisk {

inline constexpr const char* kFlightCsvHeader = "time_s,v,vx,vy,vz,alpha,power_w,yaw";

inline ProcessedFlight parse_flight_csv(const std::string& text, const std::string& id = {}) {
    ProcessedFlight flight;
    flight.id = id;
    bool have_rho = false, have_payload = false, have_dt = false, have_header = false;
    std::size_t line_no = 0;
    for (const auto& raw : csv::lines(text)) {
        ++line_no;
        const auto line = csv::trim(raw);
        if (line.empty()) continue;
        if (line.front() == '#') {
            for (const auto& [k, v] : csv::parse_preamble(line)) {
                if (k == "rho") {
                    flight.context.air_density = csv::parse_double(v, "rho");
                    have_rho = true;
                } else if (k == "payload_kg") {
                    flight.context.payload_mass = csv::parse_double(v, "payload_kg");
                    have_payload = true;
                } else if (k == "dt") {
                    flight.sample_period = csv::parse_double(v, "dt");
                    have_dt = true;
                } else if (k == "id" && flight.id.empty()) {
                    flight.id = v;
                }
            }
            continue;
        }
        if (!have_header) {
            if (line != kFlightCsvHeader)
                throw LoadError("flight csv: expected header '" + std::string(kFlightCsvHeader) + "' at line " +
                                std::to_string(line_no));
            have_header = true;
            continue;
        }
        const auto cells = csv::split(line);
        if (cells.size() != 8)
            throw LoadError("flight csv: line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                            " fields, expected 8");
        FeatureFrame f;
        flight.times.push_back(csv::parse_double(cells[0], "time_s"));
        f.airspeed = csv::parse_double(cells[1], "v");
        f.airspeed_body_x = csv::parse_double(cells[2], "vx");
        f.airspeed_body_y = csv::parse_double(cells[3], "vy");
        f.vertical_speed = csv::parse_double(cells[4], "vz");
        f.angle_of_attack = csv::parse_double(cells[5], "alpha");
        flight.frames.push_back(f);
        flight.measured_power.push_back(csv::parse_double(cells[6], "power_w"));
        flight.yaw_series.push_back(csv::parse_double(cells[7], "yaw"));
    }
    if (!have_rho || !have_payload || !have_dt)
        throw LoadError("flight csv: preamble must define rho, payload_kg and dt");
    if (!have_header) throw LoadError("flight csv: missing header line");
    return flight;
}

inline ProcessedFlight load_flight_csv(const std::filesystem::path& path) {
    return parse_flight_csv(csv::read_file(path.string()), path.stem().string());
}

inline std::string format_flight_csv(const ProcessedFlight& flight) {
    std::string out;
    out += "# rho=" + csv::format_double(flight.context.air_density) +
           " payload_kg=" + csv::format_double(flight.context.payload_mass) +
           " dt=" + csv::format_double(flight.sample_period) + "\n";
    if (!flight.id.empty()) out += "# id=" + flight.id + "\n";
    out += kFlightCsvHeader;
    out += '\n';
    for (std::size_t i = 0; i < flight.frames.size(); ++i) {
        const auto& f = flight.frames[i];
        const double t = flight.times.size() == flight.frames.size() ? flight.times[i]
                                                                      : static_cast<double>(i) * flight.sample_period;
        out += csv::format_double(t) + ',' + csv::format_double(f.airspeed) + ',' +
               csv::format_double(f.airspeed_body_x) + ',' + csv::format_double(f.airspeed_body_y) + ',' +
               csv::format_double(f.vertical_speed) + ',' + csv::format_double(f.angle_of_attack) + ',' +
               csv::format_double(flight.measured_power.at(i)) + ',' + csv::format_double(flight.yaw_series.at(i)) +
               '\n';
    }
    return out;
}

inline void save_flight_csv(const ProcessedFlight& flight, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError("cannot write " + path.string());
    out << format_flight_csv(flight);
}

}  // namespace uavrisk
