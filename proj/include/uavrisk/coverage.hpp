#pragma once

// Coverage evaluation from a fixed base: sample goals in a disc, plan
// obstacle-avoiding out-and-back paths on an occupancy grid (8-connected A*
// with line-of-sight shortcutting), run the Monte Carlo risk pipeline per
// path and blend the per-goal CVaR values into a raster for contouring.

#include "uavrisk/errors.hpp"
#include "uavrisk/flight_core.hpp"
#include "uavrisk/montecarlo.hpp"
#include "uavrisk/risk.hpp"
#include "uavrisk/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <vector>

namespace uavrisk {

struct Cell {
    int x = 0;
    int y = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
};

struct OccupancyMap {
    Vec2 origin = Vec2::Zero();  // world position of cell (0,0)'s lower-left corner
    double cell_size = 1.0;
    int width = 0;               // cells along x
    int height = 0;              // cells along y
    std::vector<std::uint8_t> occupied;  // row-major, y outer
    std::vector<double> building_height;  // optional, same layout

    static OccupancyMap empty(int w, int h, double cell_size = 1.0, Vec2 origin = Vec2::Zero()) {
        OccupancyMap m;
        m.origin = origin;
        m.cell_size = cell_size;
        m.width = w;
        m.height = h;
        m.occupied.assign(static_cast<std::size_t>(w) * h, 0);
        return m;
    }

    void validate() const {
        if (width < 2 || height < 2) throw InputError("occupancy map dims must be >= 2 per axis");
        if (!(cell_size > 0.0)) throw InputError("occupancy map cell_size must be positive");
        if (occupied.size() != static_cast<std::size_t>(width) * height)
            throw InputError("occupancy map cell count does not match dims");
        if (!building_height.empty() && building_height.size() != occupied.size())
            throw InputError("building height layer does not match dims");
    }

    std::size_t index(Cell c) const { return static_cast<std::size_t>(c.y) * width + c.x; }
    bool inside(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
    bool free(Cell c) const { return inside(c) && occupied[index(c)] == 0; }
    void set_occupied(Cell c, bool v = true) { occupied[index(c)] = v ? 1 : 0; }
    double height_at(Cell c) const { return building_height.empty() ? 0.0 : building_height[index(c)]; }

    Cell cell_of(const Vec2& p) const {
        return {static_cast<int>(std::floor((p.x() - origin.x()) / cell_size)),
                static_cast<int>(std::floor((p.y() - origin.y()) / cell_size))};
    }
    Vec2 center(Cell c) const {
        return origin + Vec2((c.x + 0.5) * cell_size, (c.y + 0.5) * cell_size);
    }
    bool free_at(const Vec2& p) const { return free(cell_of(p)); }
};

// Uniform over the disc, rejecting points outside the map or in occupied cells.
inline std::vector<Vec2> sample_goals(const Vec2& center, double radius, int count, const OccupancyMap& map, Rng& rng) {
    if (!(radius > 0.0)) throw InputError("sample_goals: radius must be positive");
    if (count < 1) throw InputError("sample_goals: count must be >= 1");
    std::vector<Vec2> goals;
    goals.reserve(static_cast<std::size_t>(count));
    const long budget = 100L * count;
    for (long attempt = 0; attempt < budget && static_cast<int>(goals.size()) < count; ++attempt) {
        const double r = radius * std::sqrt(rng.uniform());
        const double th = 2.0 * std::numbers::pi * rng.uniform();
        const Vec2 p = center + Vec2(r * std::cos(th), r * std::sin(th));
        if (map.free_at(p)) goals.push_back(p);
    }
    if (static_cast<int>(goals.size()) < count)
        throw SamplingError("sample_goals: only " + std::to_string(goals.size()) + " of " + std::to_string(count) +
                            " goals found in " + std::to_string(budget) + " attempts; feasible area too small");
    return goals;
}

// Integer move costs keep A* and reference searches exactly comparable.
inline constexpr std::int64_t kStraightCost = 1'000'000;
inline constexpr std::int64_t kDiagonalCost = 1'414'214;

inline std::int64_t octile_heuristic(Cell a, Cell b) {
    const std::int64_t dx = std::abs(a.x - b.x), dy = std::abs(a.y - b.y);
    const std::int64_t lo = std::min(dx, dy), hi = std::max(dx, dy);
    return kDiagonalCost * lo + kStraightCost * (hi - lo);
}

// 8-connected moves; a diagonal needs both adjacent orthogonal cells free.
template <typename Fn>
void for_each_move(const OccupancyMap& map, Cell c, Fn&& fn) {
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const Cell nb{c.x + dx, c.y + dy};
            if (!map.free(nb)) continue;
            if (dx != 0 && dy != 0 && (!map.free({c.x + dx, c.y}) || !map.free({c.x, c.y + dy}))) continue;
            fn(nb, (dx != 0 && dy != 0) ? kDiagonalCost : kStraightCost);
        }
}

struct GridPath {
    std::vector<Cell> cells;
    std::int64_t cost = 0;  // units of kStraightCost per cell
};

inline std::optional<GridPath> astar(const OccupancyMap& map, Cell start, Cell goal) {
    if (!map.free(start) || !map.free(goal)) return std::nullopt;
    const std::size_t n = map.occupied.size();
    constexpr auto kInf = std::numeric_limits<std::int64_t>::max();
    std::vector<std::int64_t> g(n, kInf);
    std::vector<std::int64_t> parent(n, -1);
    std::vector<std::uint8_t> closed(n, 0);
    using Entry = std::pair<std::int64_t, std::int64_t>;  // f, index; ties on smaller index
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    const auto si = static_cast<std::int64_t>(map.index(start));
    g[static_cast<std::size_t>(si)] = 0;
    open.push({octile_heuristic(start, goal), si});
    const auto gi = map.index(goal);
    while (!open.empty()) {
        const auto [f, idx] = open.top();
        open.pop();
        const auto u = static_cast<std::size_t>(idx);
        if (closed[u]) continue;
        closed[u] = 1;
        if (u == gi) break;
        const Cell c{static_cast<int>(u % static_cast<std::size_t>(map.width)),
                     static_cast<int>(u / static_cast<std::size_t>(map.width))};
        for_each_move(map, c, [&](Cell nb, std::int64_t w) {
            const auto v = map.index(nb);
            if (closed[v]) return;
            const auto cand = g[u] + w;
            if (cand < g[v]) {
                g[v] = cand;
                parent[v] = static_cast<std::int64_t>(u);
                open.push({cand + octile_heuristic(nb, goal), static_cast<std::int64_t>(v)});
            }
        });
    }
    if (g[gi] == kInf) return std::nullopt;
    GridPath path;
    path.cost = g[gi];
    for (auto v = static_cast<std::int64_t>(gi); v != -1; v = parent[static_cast<std::size_t>(v)])
        path.cells.push_back({static_cast<int>(v % map.width), static_cast<int>(v / map.width)});
    std::reverse(path.cells.begin(), path.cells.end());
    return path;
}

// Cells crossed by the segment a->b (supercover: both neighbours on exact corner hits).
inline std::vector<Cell> cells_on_segment(const OccupancyMap& map, const Vec2& a, const Vec2& b) {
    std::vector<Cell> out;
    const Vec2 pa = (a - map.origin) / map.cell_size;
    const Vec2 pb = (b - map.origin) / map.cell_size;
    Cell c{static_cast<int>(std::floor(pa.x())), static_cast<int>(std::floor(pa.y()))};
    const Cell end{static_cast<int>(std::floor(pb.x())), static_cast<int>(std::floor(pb.y()))};
    const Vec2 d = pb - pa;
    const int sx = d.x() > 0 ? 1 : (d.x() < 0 ? -1 : 0);
    const int sy = d.y() > 0 ? 1 : (d.y() < 0 ? -1 : 0);
    constexpr double inf = std::numeric_limits<double>::infinity();
    const double tdx = sx != 0 ? 1.0 / std::abs(d.x()) : inf;
    const double tdy = sy != 0 ? 1.0 / std::abs(d.y()) : inf;
    double tx = sx > 0 ? (c.x + 1 - pa.x()) * tdx : (sx < 0 ? (pa.x() - c.x) * tdx : inf);
    double ty = sy > 0 ? (c.y + 1 - pa.y()) * tdy : (sy < 0 ? (pa.y() - c.y) * tdy : inf);
    out.push_back(c);
    const int max_steps = std::abs(end.x - c.x) + std::abs(end.y - c.y) + 2;
    for (int step = 0; step < max_steps && !(c == end); ++step) {
        if (std::min(tx, ty) > 1.0 + 1e-12) break;
        if (std::abs(tx - ty) <= 1e-12) {
            out.push_back({c.x + sx, c.y});
            out.push_back({c.x, c.y + sy});
            c.x += sx;
            c.y += sy;
            tx += tdx;
            ty += tdy;
        } else if (tx < ty) {
            c.x += sx;
            tx += tdx;
        } else {
            c.y += sy;
            ty += tdy;
        }
        out.push_back(c);
    }
    return out;
}

inline bool line_of_sight(const OccupancyMap& map, const Vec2& a, const Vec2& b) {
    for (const auto& c : cells_on_segment(map, a, b))
        if (!map.free(c)) return false;
    return true;
}

struct PlannedPath {
    TrajectoryPlan plan;
    GridPath grid;
    std::vector<Vec2> points;  // smoothed 2D polyline
    double altitude = 0.0;
};

inline PlannedPath plan_grid_path(const OccupancyMap& map, const Vec2& start, const Vec2& goal, double cruise_altitude,
                                  double speed) {
    map.validate();
    if (!map.free_at(start)) throw PlanningError("plan_path: start is not in a free cell");
    if (!map.free_at(goal)) throw PlanningError("plan_path: goal is not in a free cell");
    auto grid = astar(map, map.cell_of(start), map.cell_of(goal));
    if (!grid) throw PlanningError("plan_path: no path between start and goal");

    // Polyline: exact start, interior cell centers, exact goal; then greedy shortcutting.
    std::vector<Vec2> raw{start};
    for (std::size_t i = 1; i + 1 < grid->cells.size(); ++i) raw.push_back(map.center(grid->cells[i]));
    raw.push_back(goal);
    std::vector<Vec2> pts{raw.front()};
    std::size_t i = 0;
    while (i + 1 < raw.size()) {
        std::size_t j = raw.size() - 1;
        while (j > i + 1 && !line_of_sight(map, raw[i], raw[j])) --j;
        pts.push_back(raw[j]);
        i = j;
    }
    if (pts.size() == 2 && (pts[1] - pts[0]).norm() < 1e-9)
        throw PlanningError("plan_path: start and goal coincide");

    double tallest = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k)
        for (const auto& c : cells_on_segment(map, pts[k], pts[k + 1]))
            if (map.inside(c)) tallest = std::max(tallest, map.height_at(c));

    PlannedPath out;
    out.grid = std::move(*grid);
    out.points = pts;
    out.altitude = cruise_altitude + tallest;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const Vec2 dir = k + 1 < pts.size() ? Vec2(pts[k + 1] - pts[k]) : Vec2(pts[k] - pts[k - 1]);
        Waypoint w;
        w.position = Vec3(pts[k].x(), pts[k].y(), out.altitude);
        w.yaw = std::atan2(dir.y(), dir.x());
        w.target_speed = speed;
        out.plan.waypoints.push_back(w);
    }
    out.plan.name = "grid-astar";
    return out;
}

inline TrajectoryPlan plan_path(const OccupancyMap& map, const Vec2& start, const Vec2& goal, double cruise_altitude,
                                double speed) {
    return plan_grid_path(map, start, goal, cruise_altitude, speed).plan;
}

// Outbound path followed by the same path reversed back to the start.
inline TrajectoryPlan out_and_back(const TrajectoryPlan& outbound) {
    TrajectoryPlan p = outbound;
    p.name = outbound.name + "-out-and-back";
    const auto& w = outbound.waypoints;
    for (std::size_t k = w.size() - 1; k-- > 0;) {
        Waypoint back = w[k];
        const Vec3 dir = w[k].position - w[k + 1].position;
        back.yaw = std::atan2(dir.y(), dir.x());
        p.waypoints.push_back(back);
    }
    return p;
}

struct CoverageConfig {
    Vec2 base = Vec2::Zero();
    double radius = 100.0;
    int goal_count = 20;
    double cruise_altitude = 30.0;
    double speed = 5.0;
    bool out_and_back = true;
    double nu = 0.95;
    std::uint64_t goal_seed = 7;
    int raster_cells = 50;  // per axis
    int workers = 1;
};

struct RasterGrid {
    Vec2 origin = Vec2::Zero();
    double cell = 1.0;
    int nx = 0, ny = 0;
    std::vector<double> values;  // NaN outside the disc
};

struct CoverageResult {
    std::vector<Vec2> goals;
    std::vector<double> cvar_values;
    std::vector<double> path_lengths;
    std::vector<double> altitudes;
    std::vector<Vec2> failed_goals;
    int failed_plans = 0;
    RasterGrid grid;
};

// Inverse-distance blend of the k nearest goals (exact hits take the goal value).
inline double idw_blend(const Vec2& p, const std::vector<Vec2>& pts, const std::vector<double>& vals, int k = 4) {
    std::vector<std::pair<double, std::size_t>> d;
    d.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) d.push_back({(pts[i] - p).squaredNorm(), i});
    const auto kk = std::min<std::size_t>(static_cast<std::size_t>(k), d.size());
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(kk), d.end());
    if (d.front().first == 0.0) return vals[d.front().second];
    double wsum = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < kk; ++i) {
        const double w = 1.0 / d[i].first;
        wsum += w;
        acc += w * vals[d[i].second];
    }
    return acc / wsum;
}

inline RasterGrid build_raster(const Vec2& base, double radius, int cells, const std::vector<Vec2>& goals,
                               const std::vector<double>& values) {
    RasterGrid r;
    r.nx = r.ny = std::max(cells, 2);
    r.cell = 2.0 * radius / r.nx;
    r.origin = base - Vec2(radius, radius);
    r.values.assign(static_cast<std::size_t>(r.nx) * r.ny, std::numeric_limits<double>::quiet_NaN());
    if (goals.empty()) return r;
    for (int y = 0; y < r.ny; ++y)
        for (int x = 0; x < r.nx; ++x) {
            const Vec2 p = r.origin + Vec2((x + 0.5) * r.cell, (y + 0.5) * r.cell);
            if ((p - base).norm() > radius) continue;
            r.values[static_cast<std::size_t>(y) * r.nx + x] = idw_blend(p, goals, values);
        }
    return r;
}

// `mission` supplies controller, noise, sim and context; its plan is replaced per goal.
inline CoverageResult coverage_map(const OccupancyMap& map, const CoverageConfig& cfg, const MissionModel& mission,
                                   const WindFieldSet& windset, const PowerModel& model, const RiskProfile& profile,
                                   const McConfig& mc) {
    map.validate();
    profile.validate();
    mc.validate();
    if (!(cfg.nu > 0.0 && cfg.nu < 1.0)) throw InputError("coverage: nu must lie in (0, 1)");
    Rng goal_rng(cfg.goal_seed);
    const auto goals = sample_goals(cfg.base, cfg.radius, cfg.goal_count, map, goal_rng);

    struct GoalOutcome {
        bool planned = false;
        double cvar = 0.0, length = 0.0, altitude = 0.0;
    };
    std::vector<GoalOutcome> outcomes(goals.size());
    const int outer = std::min<int>(std::max(cfg.workers, 1), static_cast<int>(goals.size()));
    McConfig inner = mc;
    inner.workers = std::max(1, std::max(cfg.workers, 1) / outer);

    parallel_for(static_cast<int>(goals.size()), outer, [&](int g) {
        auto& o = outcomes[static_cast<std::size_t>(g)];
        PlannedPath path;
        try {
            path = plan_grid_path(map, cfg.base, goals[static_cast<std::size_t>(g)], cfg.cruise_altitude, cfg.speed);
        } catch (const PlanningError&) {
            return;
        }
        MissionModel m = mission;
        m.plan = cfg.out_and_back ? out_and_back(path.plan) : path.plan;
        McConfig goal_mc = inner;
        goal_mc.master_seed = mix_key(mc.master_seed, static_cast<std::uint64_t>(g));
        const auto energies = run_mc(m, windset, model, goal_mc);
        o.cvar = cvar(risk_transform(energies, profile), cfg.nu);
        o.length = plan_length(m.plan);
        o.altitude = path.altitude;
        o.planned = true;
    });

    CoverageResult res;
    for (std::size_t g = 0; g < goals.size(); ++g) {
        if (!outcomes[g].planned) {
            ++res.failed_plans;
            res.failed_goals.push_back(goals[g]);
            continue;
        }
        res.goals.push_back(goals[g]);
        res.cvar_values.push_back(outcomes[g].cvar);
        res.path_lengths.push_back(outcomes[g].length);
        res.altitudes.push_back(outcomes[g].altitude);
    }
    res.grid = build_raster(cfg.base, cfg.radius, cfg.raster_cells, res.goals, res.cvar_values);
    return res;
}

}  // namespace uavrisk
