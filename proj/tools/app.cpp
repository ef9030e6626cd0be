#include "app.hpp"

#include "uavrisk/csv.hpp"
#include "uavrisk/flight_csv.hpp"
#include "uavrisk/occupancy_io.hpp"
#include "uavrisk/trajectory_io.hpp"
#include "uavrisk/weights_io.hpp"
#include "uavrisk/wind_io.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

namespace uavrisk::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kCommonNotes = {
    "wind: constant field taken from the grid whose reference inlet angle is nearest the sampled angle, scaled "
    "linearly by sampled/reference speed (finite grid library, not a per-sample CFD solve)",
    "turbulence: Dryden low-altitude forming filters; the sampled inlet speed is used as the W20 intensity surrogate",
    "risk: VaR is the lower empirical quantile at index ceil(nu*N)-1 (no interpolation); CVaR is the "
    "Rockafellar-Uryasev sample estimator computed from raw samples, not from the histogram",
    "risk histogram: both the raw (M/N)*count values and the bin-width-normalized density are emitted",
    "risk profile energies (lambda, battery capacity) are in joules",
    "yaw tracks the path tangent; angle of attack is approximated by pitch",
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError("cannot write " + path.string());
    out << text;
}

void write_run_info(const fs::path& dir, const std::string& command, const RunContext& ctx) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::ostringstream ts;
    ts << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
    write_text(dir / "run_info.json",
               json{{"command", command}, {"timestamp_utc", ts.str()}, {"workers", ctx.workers}}.dump(2) + "\n");
}

fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) return {};
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

void require_file(const fs::path& p, const std::string& what) {
    if (p.empty()) throw ConfigError(what + " path is not set in the config");
    if (!fs::is_regular_file(p)) throw LoadError(what + " file not found: " + p.string());
}

std::string file_hash(const fs::path& p) { return sha256_hex(csv::read_file(p.string())); }

const char* type_name(const json& j) {
    if (j.is_boolean()) return "boolean";
    if (j.is_number_integer()) return "integer";
    if (j.is_number()) return "number";
    if (j.is_string()) return "string";
    if (j.is_array()) return "array";
    if (j.is_object()) return "object";
    return "null";
}

bool compatible(const json& def, const json& val) {
    if (def.is_boolean()) return val.is_boolean();
    if (def.is_number_integer()) return val.is_number_integer();
    if (def.is_number()) return val.is_number();
    if (def.is_string()) return val.is_string();
    if (def.is_array()) return val.is_array();
    if (def.is_object()) return val.is_object();
    return true;
}

void merge_into(json& target, const json& user, const std::string& prefix) {
    for (const auto& [key, val] : user.items()) {
        const std::string name = prefix.empty() ? key : prefix + "." + key;
        if (!target.contains(key)) throw ConfigError("unknown config key '" + name + "'");
        auto& def = target[key];
        if (!compatible(def, val))
            throw ConfigError("config key '" + name + "' must be " + type_name(def) + ", got " + type_name(val));
        if (def.is_object()) {
            merge_into(def, val, name);
        } else {
            def = val;
        }
    }
}

template <typename Fn>
void as_config_error(Fn&& fn) {
    try {
        fn();
    } catch (const InputError& e) {
        throw ConfigError(e.what());
    }
}

json profile_json(const RiskProfile& p) {
    return json{{"gamma_j", p.gamma}, {"lambda_j", p.lambda_floor}, {"battery_capacity_j", p.battery_capacity}};
}

json provenance(const MissionConfig& cfg, const std::map<std::string, fs::path>& files) {
    json f = json::object();
    for (const auto& [k, p] : files) f[k] = {{"path", p.filename().string()}, {"sha256", file_hash(p)}};
    return json{{"config_sha256", config_hash(cfg)}, {"master_seed", cfg.mc.master_seed}, {"files", f}};
}

struct LoadedMission {
    MissionModel mission;
    WindFieldSet windset;
    PowerModel model;
    json provenance;
};

LoadedMission load_inputs(const MissionConfig& cfg, bool need_trajectory) {
    if (need_trajectory) require_file(cfg.trajectory, "trajectory");
    require_file(cfg.power_model, "power model");
    if (cfg.wind_grids.empty()) throw ConfigError("wind.grids must list at least one wind grid file");
    for (const auto& g : cfg.wind_grids) require_file(g, "wind grid");

    std::map<std::string, fs::path> files{{"power_model", cfg.power_model}};
    for (std::size_t i = 0; i < cfg.wind_grids.size(); ++i)
        files["wind_grid_" + std::to_string(i)] = cfg.wind_grids[i];
    MissionModel m;
    if (need_trajectory) {
        m.plan = load_trajectory(cfg.trajectory);
        files["trajectory"] = cfg.trajectory;
    }
    m.controller = cfg.controller;
    m.noise = cfg.noise;
    m.sim = cfg.sim;
    m.context = cfg.context;
    auto windset = load_windset(cfg);
    auto model = load_power_model(cfg.power_model);
    check_compatible(model, cfg.sim);
    return LoadedMission{std::move(m), std::move(windset), std::move(model), provenance(cfg, files)};
}

std::string histogram_csv(const Histogram& h) {
    std::string out = "bin,lower_j,upper_j,count,probability\n";
    for (std::size_t b = 0; b < h.counts.size(); ++b)
        out += std::to_string(b) + "," + csv::format_double(h.edges[b]) + "," + csv::format_double(h.edges[b + 1]) +
               "," + std::to_string(h.counts[b]) + "," + csv::format_double(h.probabilities[b]) + "\n";
    return out;
}

std::string risk_histogram_csv(const RiskHistogram& h) {
    std::string out = "bin,lower,upper,count,raw,density\n";
    for (std::size_t b = 0; b < h.counts.size(); ++b)
        out += std::to_string(b) + "," + csv::format_double(h.edges[b]) + "," + csv::format_double(h.edges[b + 1]) +
               "," + std::to_string(h.counts[b]) + "," + csv::format_double(h.raw[b]) + "," +
               csv::format_double(h.density[b]) + "\n";
    return out;
}

std::string model_note(const PowerModel& model) {
    if (model.kind() == "analytical-baseline")
        return "power model: least-squares analytical baseline (a stand-in, not a published analytical model)";
    if (model.kind() == "constant") return "power model: constant-power stub";
    return "power model: TCN inference from exported weights";
}

}  // namespace

json default_config() {
    return json{
        {"trajectory", ""},
        {"power_model", ""},
        {"occupancy_map", ""},
        {"wind",
         {{"grids", json::array()},
          {"inlet", {{"mean_angle_deg", 0.0}, {"mean_speed", 0.0}, {"std_angle_deg", 0.0}, {"std_speed", 0.0}}}}},
        {"context", {{"air_density", 1.225}, {"payload_kg", 0.0}}},
        {"risk", {{"gamma_j", 64000.0}, {"lambda_j", 92340.0}, {"battery_capacity_j", 369360.0}, {"nu", 0.95}}},
        {"mc", {{"runs", 1000}, {"master_seed", 1}, {"histogram_bins", 30}, {"include_incomplete", true}}},
        {"sim", {{"dt", 0.1}, {"max_sim_time_s", 0.0}, {"drag_per_s", 0.1}}},
        {"controller",
         {{"position_gain", 1.0},
          {"velocity_gain", 2.0},
          {"max_horizontal_accel", 5.0},
          {"max_vertical_speed", 3.0},
          {"capture_radius_m", 1.0},
          {"arrival_speed_mps", 0.5},
          {"yaw_rate_limit", 1.5}}},
        {"noise", {{"accel_std", {0.0, 0.0, 0.0}}}},
        {"coverage",
         {{"base", {0.0, 0.0}},
          {"radius_m", 100.0},
          {"goals", 20},
          {"cruise_altitude_m", 30.0},
          {"speed_mps", 5.0},
          {"out_and_back", true},
          {"goal_seed", 7},
          {"raster_cells", 50}}},
    };
}

json merge_config(const json& user) {
    if (!user.is_object()) throw ConfigError("config document must be a JSON object");
    json merged = default_config();
    merge_into(merged, user, "");
    return merged;
}

MissionConfig mission_from_json(const json& j, const fs::path& base_dir) {
    MissionConfig c;
    c.base_dir = base_dir;
    c.document = j;
    c.trajectory = resolve(base_dir, j.at("trajectory").get<std::string>());
    c.power_model = resolve(base_dir, j.at("power_model").get<std::string>());
    c.occupancy_map = resolve(base_dir, j.at("occupancy_map").get<std::string>());
    for (const auto& g : j.at("wind").at("grids")) {
        if (!g.is_string()) throw ConfigError("wind.grids entries must be strings");
        c.wind_grids.push_back(resolve(base_dir, g.get<std::string>()));
    }
    const auto& in = j.at("wind").at("inlet");
    c.inlet = {in.at("mean_angle_deg").get<double>(), in.at("mean_speed").get<double>(),
               in.at("std_angle_deg").get<double>(), in.at("std_speed").get<double>()};
    c.context = {j.at("context").at("air_density").get<double>(), j.at("context").at("payload_kg").get<double>()};
    const auto& r = j.at("risk");
    c.profile = {r.at("gamma_j").get<double>(), r.at("lambda_j").get<double>(), r.at("battery_capacity_j").get<double>()};
    c.nu = r.at("nu").get<double>();
    const auto& mc = j.at("mc");
    c.mc.runs = mc.at("runs").get<int>();
    c.mc.master_seed = mc.at("master_seed").get<std::uint64_t>();
    c.mc.histogram_bins = mc.at("histogram_bins").get<int>();
    c.mc.include_incomplete = mc.at("include_incomplete").get<bool>();
    const auto& s = j.at("sim");
    c.sim.dt = s.at("dt").get<double>();
    c.sim.max_sim_time = s.at("max_sim_time_s").get<double>();
    c.sim.drag_coefficient_per_mass = s.at("drag_per_s").get<double>();
    const auto& ct = j.at("controller");
    c.controller.position_gain = ct.at("position_gain").get<double>();
    c.controller.velocity_gain = ct.at("velocity_gain").get<double>();
    c.controller.max_horizontal_accel = ct.at("max_horizontal_accel").get<double>();
    c.controller.max_vertical_speed = ct.at("max_vertical_speed").get<double>();
    c.controller.capture_radius = ct.at("capture_radius_m").get<double>();
    c.controller.arrival_speed = ct.at("arrival_speed_mps").get<double>();
    c.controller.yaw_rate_limit = ct.at("yaw_rate_limit").get<double>();
    const auto& a = j.at("noise").at("accel_std");
    if (a.size() != 3) throw ConfigError("noise.accel_std needs 3 values");
    c.noise.accel_std = Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
    const auto& cv = j.at("coverage");
    if (cv.at("base").size() != 2) throw ConfigError("coverage.base needs 2 values");
    c.coverage.base = Vec2(cv.at("base")[0].get<double>(), cv.at("base")[1].get<double>());
    c.coverage.radius = cv.at("radius_m").get<double>();
    c.coverage.goal_count = cv.at("goals").get<int>();
    c.coverage.cruise_altitude = cv.at("cruise_altitude_m").get<double>();
    c.coverage.speed = cv.at("speed_mps").get<double>();
    c.coverage.out_and_back = cv.at("out_and_back").get<bool>();
    c.coverage.goal_seed = cv.at("goal_seed").get<std::uint64_t>();
    c.coverage.raster_cells = cv.at("raster_cells").get<int>();
    c.coverage.nu = c.nu;

    as_config_error([&] {
        c.inlet.validate();
        c.context.validate();
        c.profile.validate();
        if (!(c.nu > 0.0 && c.nu < 1.0)) throw InputError("risk.nu must lie in (0, 1)");
        c.mc.validate();
        c.sim.validate();
        c.controller.validate();
        c.noise.validate();
        if (!(c.coverage.radius > 0.0)) throw InputError("coverage.radius_m must be positive");
        if (c.coverage.goal_count < 1) throw InputError("coverage.goals must be >= 1");
        if (!(c.coverage.speed > 0.0)) throw InputError("coverage.speed_mps must be positive");
        if (c.coverage.raster_cells < 2) throw InputError("coverage.raster_cells must be >= 2");
    });
    return c;
}

MissionConfig load_mission_config(const fs::path& path) {
    if (!fs::is_regular_file(path)) throw LoadError("config file not found: " + path.string());
    const auto text = csv::read_file(path.string());
    json user;
    try {
        user = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": parse error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    return mission_from_json(merge_config(user), path.parent_path());
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return out.str();
}

std::string config_hash(const MissionConfig& cfg) { return sha256_hex(cfg.document.dump()); }

int default_workers() {
    if (const char* env = std::getenv("UAVRISK_WORKERS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

WindFieldSet load_windset(const MissionConfig& cfg) {
    WindFieldSet set;
    for (const auto& g : cfg.wind_grids) {
        require_file(g, "wind grid");
        set.grids.push_back(load_wind_grid(g));
    }
    set.inlet = cfg.inlet;
    as_config_error([&] { set.validate(); });
    return set;
}

AssessSummary cmd_assess(const MissionConfig& cfg, const RunContext& ctx) {
    auto in = load_inputs(cfg, true);
    McConfig mc = cfg.mc;
    mc.workers = ctx.workers;
    AssessSummary s;
    s.samples = run_mc(in.mission, in.windset, in.model, mc);
    s.samples.metadata["provenance"] = in.provenance;

    const auto risks = risk_transform(s.samples, cfg.profile);
    s.mean_energy_j = sample_mean(s.samples.energies);
    s.mean_risk = sample_mean(risks.risks);
    s.var = value_at_risk(risks, cfg.nu);
    s.cvar = cvar(risks, cfg.nu);
    s.cap = cfg.profile.cap();
    s.incomplete = s.samples.incomplete_count;

    const auto eh = energy_histogram(s.samples.energies, cfg.mc.histogram_bins);
    const auto rh = risk_histogram(risks, cfg.mc.histogram_bins);

    auto notes = kCommonNotes;
    notes.push_back(model_note(in.model));
    json report{{"nu", cfg.nu},
                {"mean_energy_j", s.mean_energy_j},
                {"mean_risk", s.mean_risk},
                {"var", s.var},
                {"cvar", s.cvar},
                {"cap", s.cap},
                {"profile", profile_json(cfg.profile)},
                {"runs", cfg.mc.runs},
                {"samples_in_distribution", s.samples.energies.size()},
                {"incomplete_count", s.incomplete},
                {"quantile_convention", "lower empirical quantile, index ceil(nu*N)-1"},
                {"energy_histogram",
                 {{"edges_j", eh.edges}, {"counts", eh.counts}, {"probabilities", eh.probabilities}}},
                {"risk_histogram",
                 {{"edges", rh.edges}, {"counts", rh.counts}, {"raw", rh.raw}, {"density", rh.density}}},
                {"provenance", s.samples.metadata},
                {"notes", notes}};

    fs::create_directories(ctx.out_dir);
    save_energy_samples(s.samples, ctx.out_dir / "energy_samples.csv");
    write_text(ctx.out_dir / "energy_histogram.csv", histogram_csv(eh));
    write_text(ctx.out_dir / "risk_histogram.csv", risk_histogram_csv(rh));
    write_text(ctx.out_dir / "risk_report.json", report.dump(2) + "\n");
    write_run_info(ctx.out_dir, "assess", ctx);

    if (ctx.log) {
        auto& o = *ctx.log;
        o << std::setprecision(6);
        o << "runs: " << cfg.mc.runs << " (incomplete: " << s.incomplete << ")\n";
        o << "mean energy: " << s.mean_energy_j << " J\n";
        o << "mean risk: " << s.mean_risk << "\n";
        o << "VaR_" << cfg.nu << ": " << s.var << "\n";
        o << "CVaR_" << cfg.nu << ": " << s.cvar << " (cap " << s.cap << ")\n";
        o << "report: " << (ctx.out_dir / "risk_report.json").string() << "\n";
    }
    return s;
}

CoverageResult cmd_coverage(const MissionConfig& cfg, const RunContext& ctx) {
    require_file(cfg.occupancy_map, "occupancy map");
    auto in = load_inputs(cfg, false);
    const auto map = load_occupancy_map(cfg.occupancy_map);
    in.provenance["files"]["occupancy_map"] = {{"path", cfg.occupancy_map.filename().string()},
                                               {"sha256", file_hash(cfg.occupancy_map)}};
    CoverageConfig cc = cfg.coverage;
    cc.workers = ctx.workers;
    McConfig mc = cfg.mc;
    const auto res = coverage_map(map, cc, in.mission, in.windset, in.model, cfg.profile, mc);

    fs::create_directories(ctx.out_dir);
    std::string goals = "x,y,cvar\n";
    std::string detail = "x,y,cvar,path_length_m,altitude_m\n";
    for (std::size_t i = 0; i < res.goals.size(); ++i) {
        goals += csv::format_double(res.goals[i].x()) + "," + csv::format_double(res.goals[i].y()) + "," +
                 csv::format_double(res.cvar_values[i]) + "\n";
        detail += csv::format_double(res.goals[i].x()) + "," + csv::format_double(res.goals[i].y()) + "," +
                  csv::format_double(res.cvar_values[i]) + "," + csv::format_double(res.path_lengths[i]) + "," +
                  csv::format_double(res.altitudes[i]) + "\n";
    }
    std::string raster = "x,y,cvar\n";
    for (int y = 0; y < res.grid.ny; ++y)
        for (int x = 0; x < res.grid.nx; ++x) {
            const double v = res.grid.values[static_cast<std::size_t>(y) * res.grid.nx + x];
            raster += csv::format_double(res.grid.origin.x() + (x + 0.5) * res.grid.cell) + "," +
                      csv::format_double(res.grid.origin.y() + (y + 0.5) * res.grid.cell) + "," +
                      (std::isnan(v) ? std::string("nan") : csv::format_double(v)) + "\n";
        }
    auto notes = kCommonNotes;
    notes.push_back(model_note(in.model));
    notes.push_back("planner: 8-connected grid A* with line-of-sight shortcutting (substitutes a sampling-based planner)");
    notes.push_back(cc.out_and_back ? "paths are out-and-back from the base" : "paths are one-way");
    notes.push_back("cruise altitude = configured cruise altitude + tallest building cell along the path");
    json failed = json::array();
    for (const auto& g : res.failed_goals) failed.push_back({g.x(), g.y()});
    json report{{"nu", cc.nu},
                {"profile", profile_json(cfg.profile)},
                {"goals_requested", cc.goal_count},
                {"goals_evaluated", res.goals.size()},
                {"failed_plans", res.failed_plans},
                {"failed_goals", failed},
                {"cap", cfg.profile.cap()},
                {"raster", {{"origin", {res.grid.origin.x(), res.grid.origin.y()}}, {"cell_m", res.grid.cell},
                            {"nx", res.grid.nx}, {"ny", res.grid.ny}, {"blend", "inverse-distance, 4 nearest goals"}}},
                {"mc", {{"runs", mc.runs}, {"master_seed", mc.master_seed}, {"rng_algorithm", kRngAlgorithmId},
                        {"per_goal_seed", "mix(master_seed, goal_index)"}}},
                {"provenance", in.provenance},
                {"notes", notes}};
    write_text(ctx.out_dir / "coverage_goals.csv", goals);
    write_text(ctx.out_dir / "coverage_goals_detail.csv", detail);
    write_text(ctx.out_dir / "coverage_raster.csv", raster);
    write_text(ctx.out_dir / "coverage_report.json", report.dump(2) + "\n");
    write_run_info(ctx.out_dir, "coverage", ctx);
    if (ctx.log) {
        *ctx.log << "goals evaluated: " << res.goals.size() << ", failed plans: " << res.failed_plans << "\n";
        if (!res.cvar_values.empty()) {
            const auto [lo, hi] = std::minmax_element(res.cvar_values.begin(), res.cvar_values.end());
            *ctx.log << "CVaR range: [" << *lo << ", " << *hi << "]\n";
        }
    }
    return res;
}

SingleRun cmd_simulate(const MissionConfig& cfg, const RunContext& ctx, int run_index) {
    auto in = load_inputs(cfg, true);
    in.mission.plan.validate();
    auto run = simulate_run(in.mission, in.windset, in.model, cfg.mc.master_seed, run_index);
    fs::create_directories(ctx.out_dir);
    std::string out =
        "t,x,y,z,vx,vy,vz,yaw,pitch,wind_x,wind_y,wind_z,airspeed,airspeed_body_x,airspeed_body_y,vertical_speed,"
        "alpha,power_w\n";
    for (std::size_t k = 0; k < run.sim.states.size(); ++k) {
        const auto& s = run.sim.states[k];
        const auto& w = run.sim.winds[k];
        const auto& f = run.features[k];
        for (double v : {s.time, s.position.x(), s.position.y(), s.position.z(), s.velocity.x(), s.velocity.y(),
                         s.velocity.z(), s.yaw, s.pitch, w.x(), w.y(), w.z(), f.airspeed, f.airspeed_body_x,
                         f.airspeed_body_y, f.vertical_speed, f.angle_of_attack})
            out += csv::format_double(v) + ",";
        out += csv::format_double(run.power[k]) + "\n";
    }
    write_text(ctx.out_dir / "simulation.csv", out);
    write_text(ctx.out_dir / "simulation.meta.json",
               json{{"run", run_index},
                    {"master_seed", cfg.mc.master_seed},
                    {"rng_algorithm", kRngAlgorithmId},
                    {"inlet", {{"angle_deg", run.outcome.inlet.angle_deg}, {"speed", run.outcome.inlet.speed}}},
                    {"energy_j", run.outcome.energy_j},
                    {"complete", run.outcome.complete},
                    {"provenance", in.provenance}}
                       .dump(2) +
                   "\n");
    if (ctx.log)
        *ctx.log << "run " << run_index << ": " << run.sim.states.size() << " states, energy " << run.outcome.energy_j
                 << " J, " << (run.outcome.complete ? "complete" : "incomplete") << "\n";
    return run;
}

std::vector<CorpusEntry> load_corpus(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw LoadError("corpus directory not found: " + dir.string());
    std::vector<CorpusEntry> out;
    const auto manifest = dir / "manifest.csv";
    if (fs::is_regular_file(manifest)) {
        bool header = true;
        for (const auto& line : csv::lines(csv::read_file(manifest.string()))) {
            if (csv::trim(line).empty() || line.front() == '#') continue;
            if (header) {
                header = false;
                continue;
            }
            const auto cells = csv::split(line);
            if (cells.size() < 3) throw LoadError(manifest.string() + ": rows need flight_id,file,split");
            auto flight = load_flight_csv(dir / std::string(cells[1]));
            flight.id = std::string(cells[0]);
            out.push_back({std::string(cells[2]), std::move(flight)});
        }
    } else {
        std::vector<fs::path> files;
        for (const auto& e : fs::recursive_directory_iterator(dir))
            if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            const auto rel = fs::relative(f, dir);
            const std::string split = rel.has_parent_path() ? rel.begin()->string() : "all";
            out.push_back({split, load_flight_csv(f)});
        }
    }
    if (out.empty()) throw LoadError("empty corpus: no flight files in " + dir.string());
    for (const auto& e : out) {
        const auto violations = validate_flight(e.flight);
        if (!violations.empty()) throw LoadError("flight '" + e.flight.id + "' is invalid: " + violations.front());
    }
    return out;
}

EvalReport cmd_eval_model(const EvalOptions& opts, const RunContext& ctx) {
    const auto corpus = load_corpus(opts.corpus);
    std::optional<PowerModel> model;
    if (!opts.perfect_oracle) {
        require_file(opts.model, "power model");
        model = load_power_model(opts.model);
    }
    EvalReport rep;
    std::map<std::string, std::pair<double, double>> sums;
    std::map<std::string, int> counts;
    for (const auto& e : corpus) {
        const auto& f = e.flight;
        std::vector<double> pred;
        if (model) {
            if (const auto sp = model->sample_period(); sp && std::abs(*sp - f.sample_period) > 1e-9)
                throw ConfigError("flight '" + f.id + "' sample period " + csv::format_double(f.sample_period) +
                                  " s does not match the model's " + csv::format_double(*sp) + " s");
            pred = model->predict_sequence(f.frames, f.context);
        } else {
            pred = f.measured_power;
        }
        const auto ev = adjusted_re(f, pred, opts.segmentation);
        rep.flights.push_back({f.id, e.split, ev.mape_percent, ev.re_percent, ev.section_count});
        sums[e.split].first += ev.mape_percent;
        sums[e.split].second += ev.re_percent;
        ++counts[e.split];
    }
    std::string flights_csv = "flight_id,mape,re,sections\n";
    json membership = json::object();
    for (const auto& r : rep.flights) {
        flights_csv += r.id + "," + csv::format_double(r.mape) + "," + csv::format_double(r.re) + "," +
                       std::to_string(r.sections) + "\n";
        membership[r.split].push_back(r.id);
    }
    std::string summary_csv = "split,flights,mean_mape,mean_re\n";
    json splits = json::object();
    for (const auto& [split, s] : sums) {
        const double n = counts[split];
        summary_csv += split + "," + std::to_string(counts[split]) + "," + csv::format_double(s.first / n) + "," +
                       csv::format_double(s.second / n) + "\n";
        splits[split] = {{"flights", counts[split]}, {"mean_mape", s.first / n}, {"mean_re", s.second / n}};
    }
    const auto [best, worst] = std::minmax_element(rep.flights.begin(), rep.flights.end(),
                                                   [](const auto& a, const auto& b) { return a.mape < b.mape; });
    rep.summary = {{"model", opts.perfect_oracle ? "perfect-oracle" : model->kind()},
                   {"splits", splits},
                   {"split_membership", membership},
                   {"best_flight", {{"id", best->id}, {"mape", best->mape}}},
                   {"worst_flight", {{"id", worst->id}, {"mape", worst->mape}}},
                   {"segmentation", {{"threshold_deg", opts.segmentation.threshold_deg},
                                     {"dwell_s", opts.segmentation.dwell_s}}},
                   {"notes",
                    {"split aggregates are means over flights",
                     "RE sections delimited by yaw changes (threshold + dwell rule)"}}};
    if (model) rep.summary["notes"].push_back(model_note(*model));
    fs::create_directories(ctx.out_dir);
    write_text(ctx.out_dir / "eval_flights.csv", flights_csv);
    write_text(ctx.out_dir / "eval_summary.csv", summary_csv);
    write_text(ctx.out_dir / "eval_report.json", rep.summary.dump(2) + "\n");
    if (ctx.log) *ctx.log << summary_csv;
    return rep;
}

AnalyticalCoefficients cmd_fit_baseline(const fs::path& corpus_dir, const fs::path& out_file) {
    const auto corpus = load_corpus(corpus_dir);
    std::vector<ProcessedFlight> flights;
    for (const auto& e : corpus) flights.push_back(e.flight);
    const auto c = fit_analytical(flights);
    if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());
    write_text(out_file, analytical_to_json(c).dump(2) + "\n");
    return c;
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Pre-flight energy risk assessment for multirotor UAVs"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    int workers = default_workers();
    int run_index = 0;
    EvalOptions eval;
    std::string model_path, corpus_path, coeff_out;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "Mission config (JSON)")->required();
        sub->add_option("-o,--out", out_dir, "Output directory");
        sub->add_option("-w,--workers", workers, "Worker threads (default: $UAVRISK_WORKERS or all cores)")
            ->check(CLI::PositiveNumber);
    };
    auto* assess = app.add_subcommand("assess", "Monte Carlo energy risk of one trajectory");
    add_common(assess);
    auto* coverage = app.add_subcommand("coverage", "CVaR coverage map around a base location");
    add_common(coverage);
    auto* simulate = app.add_subcommand("simulate", "Dump one deterministic Monte Carlo run");
    add_common(simulate);
    simulate->add_option("--run", run_index, "Run index within the master seed")->check(CLI::NonNegativeNumber);
    auto* evalc = app.add_subcommand("eval-model", "MAPE / adjusted RE of a power model on a flight corpus");
    evalc->add_option("-m,--model", model_path, "Model file (TCN weights, baseline coefficients or constant)");
    evalc->add_option("--corpus", corpus_path, "Directory of ProcessedFlight CSVs")->required();
    evalc->add_option("-o,--out", out_dir, "Output directory");
    evalc->add_option("--yaw-threshold-deg", eval.segmentation.threshold_deg, "Section yaw threshold");
    evalc->add_option("--dwell-s", eval.segmentation.dwell_s, "Section dwell time");
    evalc->add_flag("--perfect-oracle", eval.perfect_oracle, "Use ground truth as predictions");
    auto* fit = app.add_subcommand("fit-baseline", "Fit the least-squares analytical baseline");
    fit->add_option("--corpus", corpus_path, "Directory of ProcessedFlight CSVs")->required();
    fit->add_option("-o,--out", coeff_out, "Coefficients JSON to write")->required();
    auto* print = app.add_subcommand("print-config", "Print the default mission config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInputError;
    }

    try {
        RunContext ctx{out_dir, workers, &out};
        if (*print) {
            out << default_config().dump(2) << "\n";
        } else if (*assess) {
            cmd_assess(load_mission_config(config_path), ctx);
        } else if (*coverage) {
            cmd_coverage(load_mission_config(config_path), ctx);
        } else if (*simulate) {
            cmd_simulate(load_mission_config(config_path), ctx, run_index);
        } else if (*evalc) {
            if (model_path.empty() && !eval.perfect_oracle) throw ConfigError("eval-model needs --model or --perfect-oracle");
            eval.model = model_path;
            eval.corpus = corpus_path;
            cmd_eval_model(eval, ctx);
        } else if (*fit) {
            const auto c = cmd_fit_baseline(corpus_path, coeff_out);
            out << "beta:";
            for (double b : c.beta) out << " " << b;
            out << "\nwritten: " << coeff_out << "\n";
        }
    } catch (const LoadError& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kInputError;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const SamplingError& e) {
        err << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const std::exception& e) {
        err << "failure: " << e.what() << "\n";
        return kComputeFailure;
    }
    return kOk;
}

}  // namespace uavrisk::app
