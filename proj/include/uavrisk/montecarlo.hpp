#pragma once

// Monte Carlo energy distribution of a planned flight.
//
// Run i draws everything from substreams of (master_seed, i): one inlet
// condition (constant wind for the run), per-step Dryden turbulence and
// dynamics noise. Energy is the left-rectangle sum of predicted power.
// Results are assembled by run index, so the worker count never changes them.

#include "uavrisk/csv.hpp"
#include "uavrisk/dynamics.hpp"
#include "uavrisk/errors.hpp"
#include "uavrisk/power_model.hpp"
#include "uavrisk/rng.hpp"
#include "uavrisk/wind.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <span>
#include <thread>
#include <vector>

namespace uavrisk {

struct McConfig {
    int runs = 1000;
    std::uint64_t master_seed = 1;
    int histogram_bins = 30;
    bool include_incomplete = true;
    int workers = 1;  // execution only; never affects results

    void validate() const {
        if (runs < 1) throw InputError("mc runs must be >= 1");
        if (histogram_bins < 2) throw InputError("histogram_bins must be >= 2");
        if (workers < 1) throw InputError("workers must be >= 1");
    }
};

struct RunOutcome {
    int run = 0;
    double energy_j = 0.0;
    double flight_time_s = 0.0;
    bool complete = false;
    InletSample inlet;
};

struct EnergySamples {
    std::vector<RunOutcome> runs;   // every run, ordered by index
    std::vector<double> energies;   // runs entering the distribution
    int incomplete_count = 0;
    nlohmann::json metadata = nlohmann::json::object();
};

// Left rectangle rule: sum over intervals k of P_k * dt.
inline double integrate_energy(std::span<const double> power, double dt) {
    double e = 0.0;
    for (std::size_t k = 0; k + 1 < power.size(); ++k) e += power[k] * dt;
    return e;
}

// Runs fn(i) for i in [0, count) on `workers` threads.
template <typename Fn>
void parallel_for(int count, int workers, Fn&& fn) {
    workers = std::max(1, std::min(workers, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = count;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

struct MissionModel {
    TrajectoryPlan plan;
    ControllerConfig controller;
    DynamicsNoise noise;
    SimConfig sim;
    ContextFeatures context;
};

inline double mean_altitude(const TrajectoryPlan& plan) {
    double z = 0.0;
    for (const auto& w : plan.waypoints) z += w.position.z();
    return std::max(1.0, z / static_cast<double>(plan.waypoints.size()));
}

inline double mean_target_speed(const TrajectoryPlan& plan) {
    double v = 0.0;
    for (std::size_t i = 1; i < plan.waypoints.size(); ++i) v += plan.waypoints[i].target_speed;
    return v / static_cast<double>(plan.waypoints.size() - 1);
}

// Rejects model/simulation combinations before any run starts.
inline void check_compatible(const PowerModel& model, const SimConfig& sim) {
    if (const auto sp = model.sample_period(); sp && std::abs(*sp - sim.dt) > 1e-9)
        throw ConfigError("power model sample period " + csv::format_double(*sp) + " s does not match sim dt " +
                          csv::format_double(sim.dt) + " s");
}

// One Monte Carlo run with its own substreams.
struct SingleRun {
    SimResult sim;
    std::vector<FeatureFrame> features;
    std::vector<double> power;
    RunOutcome outcome;
};

inline SingleRun simulate_run(const MissionModel& mission, const WindFieldSet& windset, const PowerModel& model,
                              std::uint64_t master_seed, int index) {
    const std::uint64_t run_key = mix_key(master_seed, static_cast<std::uint64_t>(index));
    Rng inlet_rng = Rng::substream(run_key, 0);
    Rng turbulence_rng = Rng::substream(run_key, 1);
    Rng dynamics_rng = Rng::substream(run_key, 2);

    SingleRun r;
    r.outcome.run = index;
    r.outcome.inlet = sample_inlet(windset.inlet, inlet_rng);

    DrydenConfig dc;
    dc.altitude_m = mean_altitude(mission.plan);
    dc.mean_wind_speed_6m = r.outcome.inlet.speed;
    dc.timestep = mission.sim.dt;
    dc.airspeed = mean_target_speed(mission.plan);
    DrydenTurbulence turbulence(dc);

    const InletSample inlet = r.outcome.inlet;
    r.sim = simulate_flight(
        mission.plan, mission.controller, mission.noise, mission.sim,
        [&](const Vec3& p) { return lookup_wind(windset, inlet, p); },
        [&] { return turbulence.step(turbulence_rng); }, dynamics_rng);
    r.features = derive_features(r.sim.states, r.sim.winds);
    r.power = model.predict_sequence(r.features, mission.context);
    r.outcome.energy_j = integrate_energy(r.power, mission.sim.dt);
    r.outcome.flight_time_s = r.sim.states.back().time;
    r.outcome.complete = r.sim.complete;
    return r;
}

inline EnergySamples run_mc(const MissionModel& mission, const WindFieldSet& windset, const PowerModel& model,
                            const McConfig& mc) {
    mc.validate();
    mission.plan.validate();
    mission.sim.validate();
    mission.context.validate();
    windset.validate();
    check_compatible(model, mission.sim);

    EnergySamples out;
    out.runs.resize(static_cast<std::size_t>(mc.runs));
    parallel_for(mc.runs, mc.workers, [&](int i) {
        out.runs[static_cast<std::size_t>(i)] = simulate_run(mission, windset, model, mc.master_seed, i).outcome;
    });

    for (const auto& r : out.runs) {
        if (!r.complete) ++out.incomplete_count;
        if (r.complete || mc.include_incomplete) out.energies.push_back(r.energy_j);
    }
    if (out.energies.empty())
        throw ConfigError("no run completed and include_incomplete is off; energy distribution is empty");

    out.metadata = {{"runs", mc.runs},
                    {"master_seed", mc.master_seed},
                    {"histogram_bins", mc.histogram_bins},
                    {"include_incomplete", mc.include_incomplete},
                    {"incomplete_count", out.incomplete_count},
                    {"rng_algorithm", kRngAlgorithmId},
                    {"substreams", "run i: mix(master_seed, i); inlet/turbulence/dynamics = substream 0/1/2"},
                    {"integration", "left rectangle, power at step start times dt"},
                    {"dt_s", mission.sim.dt},
                    {"power_model", model.kind()}};
    return out;
}

struct Histogram {
    std::vector<double> edges;          // size bins + 1
    std::vector<double> probabilities;  // sums to exactly 1
    std::vector<long> counts;
};

namespace detail {

// Makes the left-to-right sum of `p` exactly 1 by adjusting the last entry.
inline void absorb_rounding(std::vector<double>& p) {
    double head = 0.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) head += p[i];
    double last = 1.0 - head;
    for (int guard = 0; guard < 8 && head + last != 1.0; ++guard)
        last = std::nextafter(last, head + last < 1.0 ? 2.0 : -1.0);
    p.back() = std::max(0.0, last);
}

}  // namespace detail

// Equal-width bins over [min, max], right edge of the last bin inclusive.
inline Histogram energy_histogram(std::span<const double> samples, int bins) {
    if (samples.empty()) throw InputError("energy_histogram: no samples");
    if (bins < 2) throw InputError("energy_histogram: need at least 2 bins");
    const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
    const double lo = *lo_it, hi = *hi_it;
    Histogram h;
    if (!(hi > lo)) {
        h.edges = {lo, lo + std::max(1.0, std::abs(lo) * 1e-12)};
        h.counts = {static_cast<long>(samples.size())};
        h.probabilities = {1.0};
        return h;
    }
    const double width = (hi - lo) / bins;
    h.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int b = 0; b <= bins; ++b) h.edges[static_cast<std::size_t>(b)] = lo + width * b;
    h.edges.back() = hi;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (double x : samples) {
        auto idx = static_cast<long>(std::floor((x - lo) / width));
        idx = std::clamp(idx, 0L, static_cast<long>(bins) - 1);
        ++h.counts[static_cast<std::size_t>(idx)];
    }
    const auto n = static_cast<double>(samples.size());
    h.probabilities.resize(h.counts.size());
    for (std::size_t b = 0; b < h.counts.size(); ++b) h.probabilities[b] = static_cast<double>(h.counts[b]) / n;
    detail::absorb_rounding(h.probabilities);
    return h;
}

inline std::string format_energy_csv(const EnergySamples& s) {
    std::string out = "run,energy_j,complete\n";
    for (const auto& r : s.runs)
        out += std::to_string(r.run) + "," + csv::format_double(r.energy_j) + "," + (r.complete ? "1" : "0") + "\n";
    return out;
}

inline void save_energy_samples(const EnergySamples& s, const std::filesystem::path& csv_path) {
    {
        std::ofstream out(csv_path, std::ios::binary);
        if (!out) throw LoadError("cannot write " + csv_path.string());
        out << format_energy_csv(s);
    }
    auto sidecar = csv_path;
    sidecar.replace_extension(".meta.json");
    std::ofstream meta(sidecar, std::ios::binary);
    if (!meta) throw LoadError("cannot write " + sidecar.string());
    meta << s.metadata.dump(2) << '\n';
}

}  // namespace uavrisk
