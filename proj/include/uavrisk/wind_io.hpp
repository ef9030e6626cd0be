#pragma once

// Wind grid CSV:
//   # origin=<x,y,z> cell=<c> dims=<nx,ny,nz> ref_angle_deg=<a> ref_speed=<s>
//   i,j,k,u,v,w            (optional column header)
//   0,0,0,1.5,0.2,0
//   ...                    (row-major, k fastest)

#include "uavrisk/csv.hpp"
#include "uavrisk/wind.hpp"

#include <filesystem>
#include <fstream>
#include <string>

namespace uavrisk {

inline WindGrid parse_wind_grid_csv(const std::string& text, const std::string& source = "wind grid") {
    WindGrid g;
    bool have_header = false;
    std::vector<char> seen;
    std::size_t line_no = 0, rows = 0;
    for (const auto& raw : csv::lines(text)) {
        ++line_no;
        const auto line = csv::trim(raw);
        if (line.empty()) continue;
        if (line.front() == '#') {
            const auto kv = csv::parse_preamble(line);
            if (!kv.count("origin")) continue;
            for (const char* key : {"origin", "cell", "dims", "ref_angle_deg", "ref_speed"})
                if (!kv.count(key)) throw LoadError(source + ": header missing '" + key + "'");
            const auto o = csv::split(kv.at("origin"));
            const auto d = csv::split(kv.at("dims"));
            if (o.size() != 3 || d.size() != 3) throw LoadError(source + ": origin and dims need 3 components");
            for (int a = 0; a < 3; ++a) {
                g.origin[a] = csv::parse_double(o[static_cast<std::size_t>(a)], "origin");
                g.dims[static_cast<std::size_t>(a)] = static_cast<int>(csv::parse_int(d[static_cast<std::size_t>(a)], "dims"));
                if (g.dims[static_cast<std::size_t>(a)] < 2) throw LoadError(source + ": dims must be >= 2 per axis");
            }
            g.cell_size = csv::parse_double(kv.at("cell"), "cell");
            g.ref_angle_deg = csv::parse_double(kv.at("ref_angle_deg"), "ref_angle_deg");
            g.ref_speed = csv::parse_double(kv.at("ref_speed"), "ref_speed");
            const std::size_t n = static_cast<std::size_t>(g.dims[0]) * g.dims[1] * g.dims[2];
            g.vectors.assign(n, Vec3::Zero());
            seen.assign(n, 0);
            have_header = true;
            continue;
        }
        if (!have_header) throw LoadError(source + ": data before '# origin=...' header");
        if (line.substr(0, 1) == "i") continue;
        const auto cells = csv::split(line);
        if (cells.size() != 6)
            throw LoadError(source + ": line " + std::to_string(line_no) + " needs 6 fields (i,j,k,u,v,w)");
        const auto i = csv::parse_int(cells[0], "i"), j = csv::parse_int(cells[1], "j"), k = csv::parse_int(cells[2], "k");
        if (i < 0 || j < 0 || k < 0 || i >= g.dims[0] || j >= g.dims[1] || k >= g.dims[2])
            throw LoadError(source + ": line " + std::to_string(line_no) + " index out of range");
        const auto idx = g.index(static_cast<int>(i), static_cast<int>(j), static_cast<int>(k));
        if (seen[idx]) throw LoadError(source + ": duplicate cell at line " + std::to_string(line_no));
        seen[idx] = 1;
        g.vectors[idx] = Vec3(csv::parse_double(cells[3], "u"), csv::parse_double(cells[4], "v"),
                              csv::parse_double(cells[5], "w"));
        ++rows;
    }
    if (!have_header) throw LoadError(source + ": missing '# origin=...' header");
    if (rows != g.vectors.size())
        throw LoadError(source + ": expected " + std::to_string(g.vectors.size()) + " rows, got " + std::to_string(rows));
    try {
        g.validate();
    } catch (const InputError& e) {
        throw LoadError(source + ": " + e.what());
    }
    return g;
}

inline WindGrid load_wind_grid(const std::filesystem::path& path) {
    return parse_wind_grid_csv(csv::read_file(path.string()), path.string());
}

inline std::string format_wind_grid_csv(const WindGrid& g) {
    std::string out = "# origin=" + csv::format_double(g.origin.x()) + "," + csv::format_double(g.origin.y()) + "," +
                      csv::format_double(g.origin.z()) + " cell=" + csv::format_double(g.cell_size) +
                      " dims=" + std::to_string(g.dims[0]) + "," + std::to_string(g.dims[1]) + "," +
                      std::to_string(g.dims[2]) + " ref_angle_deg=" + csv::format_double(g.ref_angle_deg) +
                      " ref_speed=" + csv::format_double(g.ref_speed) + "\n";
    out += "i,j,k,u,v,w\n";
    for (int i = 0; i < g.dims[0]; ++i)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int k = 0; k < g.dims[2]; ++k) {
                const auto& v = g.at(i, j, k);
                out += std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(k) + "," +
                       csv::format_double(v.x()) + "," + csv::format_double(v.y()) + "," + csv::format_double(v.z()) +
                       "\n";
            }
    return out;
}

inline void save_wind_grid(const WindGrid& g, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError("cannot write " + path.string());
    out << format_wind_grid_csv(g);
}

}  // namespace uavrisk
