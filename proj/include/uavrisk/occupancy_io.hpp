#pragma once

// Occupancy maps: grayscale PGM (P5 or P2; 0 = free, 255 = occupied, >= 128
// counts as occupied) plus a JSON georeferencing sidecar:
//   { "origin": [x, y], "cell_size": c,
//     "height_pgm": "heights.pgm", "height_scale_m": 0.2 }   (last two optional)
// Image row 0 is the northern (max y) edge.

#include "uavrisk/coverage.hpp"
#include "uavrisk/csv.hpp"

#include <json.hpp>

#include <cctype>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace uavrisk {

struct GrayImage {
    int width = 0;
    int height = 0;
    int max_value = 255;
    std::vector<int> pixels;  // row-major, row 0 at top
};

inline GrayImage parse_pgm(const std::string& data, const std::string& source = "pgm") {
    std::size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < data.size()) {
            if (data[pos] == '#') {
                while (pos < data.size() && data[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto token = [&] {
        skip_ws();
        const std::size_t start = pos;
        while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
        if (start == pos) throw LoadError(source + ": truncated PGM header");
        return data.substr(start, pos - start);
    };
    const std::string magic = token();
    if (magic != "P5" && magic != "P2") throw LoadError(source + ": not a PGM file (magic " + magic + ")");
    GrayImage img;
    img.width = static_cast<int>(csv::parse_int(token(), "width"));
    img.height = static_cast<int>(csv::parse_int(token(), "height"));
    img.max_value = static_cast<int>(csv::parse_int(token(), "maxval"));
    if (img.width < 1 || img.height < 1 || img.max_value < 1 || img.max_value > 65535)
        throw LoadError(source + ": invalid PGM dimensions");
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    img.pixels.resize(n);
    if (magic == "P2") {
        for (std::size_t i = 0; i < n; ++i) img.pixels[i] = static_cast<int>(csv::parse_int(token(), "pixel"));
    } else {
        ++pos;  // single whitespace after maxval
        const std::size_t bytes = img.max_value > 255 ? 2 : 1;
        if (data.size() < pos + n * bytes) throw LoadError(source + ": truncated PGM raster");
        for (std::size_t i = 0; i < n; ++i) {
            const auto* p = reinterpret_cast<const unsigned char*>(data.data() + pos + i * bytes);
            img.pixels[i] = bytes == 2 ? (p[0] << 8 | p[1]) : p[0];
        }
    }
    return img;
}

inline std::string format_pgm(const GrayImage& img) {
    std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    for (int v : img.pixels) out.push_back(static_cast<char>(std::clamp(v, 0, 255)));
    return out;
}

inline OccupancyMap load_occupancy_map(const std::filesystem::path& pgm_path) {
    const auto img = parse_pgm(csv::read_file(pgm_path.string()), pgm_path.string());
    auto sidecar = pgm_path;
    sidecar.replace_extension(".json");
    const auto meta = nlohmann::json::parse(csv::read_file(sidecar.string()), nullptr, false);
    if (meta.is_discarded() || !meta.contains("origin") || !meta.contains("cell_size"))
        throw LoadError(sidecar.string() + ": sidecar needs 'origin' and 'cell_size'");

    OccupancyMap m = OccupancyMap::empty(img.width, img.height, meta.at("cell_size").get<double>(),
                                         Vec2(meta.at("origin").at(0).get<double>(), meta.at("origin").at(1).get<double>()));
    const int threshold = (img.max_value + 1) / 2;
    for (int row = 0; row < img.height; ++row)
        for (int x = 0; x < img.width; ++x)
            m.set_occupied({x, img.height - 1 - row},
                           img.pixels[static_cast<std::size_t>(row) * img.width + x] >= threshold);
    if (meta.contains("height_pgm")) {
        const auto hp = pgm_path.parent_path() / meta.at("height_pgm").get<std::string>();
        const auto himg = parse_pgm(csv::read_file(hp.string()), hp.string());
        if (himg.width != img.width || himg.height != img.height)
            throw LoadError(hp.string() + ": height layer dims differ from occupancy map");
        const double scale = meta.value("height_scale_m", 1.0);
        m.building_height.resize(m.occupied.size());
        for (int row = 0; row < img.height; ++row)
            for (int x = 0; x < img.width; ++x)
                m.building_height[m.index({x, img.height - 1 - row})] =
                    scale * himg.pixels[static_cast<std::size_t>(row) * img.width + x];
    }
    try {
        m.validate();
    } catch (const InputError& e) {
        throw LoadError(pgm_path.string() + ": " + e.what());
    }
    return m;
}

inline void save_occupancy_map(const OccupancyMap& m, const std::filesystem::path& pgm_path) {
    GrayImage img;
    img.width = m.width;
    img.height = m.height;
    img.pixels.resize(m.occupied.size());
    for (int row = 0; row < m.height; ++row)
        for (int x = 0; x < m.width; ++x)
            img.pixels[static_cast<std::size_t>(row) * m.width + x] = m.free({x, m.height - 1 - row}) ? 0 : 255;
    {
        std::ofstream out(pgm_path, std::ios::binary);
        if (!out) throw LoadError("cannot write " + pgm_path.string());
        out << format_pgm(img);
    }
    auto sidecar = pgm_path;
    sidecar.replace_extension(".json");
    std::ofstream meta(sidecar, std::ios::binary);
    meta << nlohmann::json{{"origin", {m.origin.x(), m.origin.y()}}, {"cell_size", m.cell_size}}.dump(2) << '\n';
}

}  // namespace uavrisk
