// Acceptance gate: one PASS/FAIL line per headline criterion; exit status 1 if any fails.

#include "uavrisk/coverage.hpp"
#include "uavrisk/dynamics.hpp"
#include "uavrisk/metrics.hpp"
#include "uavrisk/montecarlo.hpp"
#include "uavrisk/power_model.hpp"
#include "uavrisk/risk.hpp"
#include "uavrisk/wind.hpp"

#include "oracles/cvar_oracle.hpp"
#include "oracles/dijkstra_oracle.hpp"
#include "oracles/tcn_oracle.hpp"
#include "support/fixtures.hpp"

#include <fftw3.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

using namespace uavrisk;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double ulp(double x) { return std::nextafter(x, INFINITY) - x; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Outcome cvar_estimator() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(101);
    double worst = 0.0;
    long total = 0;
    for (int d = 0; d < 1000; ++d) {
        const int n = 1 + static_cast<int>(rng.uniform() * 10000);
        std::vector<double> x(static_cast<std::size_t>(n));
        const int kind = d % 4;
        for (auto& v : x) {
            if (kind == 0) v = rng.uniform();
            else if (kind == 1) v = std::exp(rng.normal(0.0, 1.5));
            else if (kind == 2) v = std::floor(rng.uniform() * 7.0) / 7.0;  // heavy ties
            else v = rng.uniform() < 0.03 ? 50.0 + rng.uniform() : rng.uniform();
        }
        const double nu = d % 10 == 0 ? 0.95 : rng.uniform(0.001, 0.999);
        const double got = cvar(x, nu);
        const double want = oracle::tail_average(x, nu);
        worst = std::max(worst, std::abs(got - want) / std::max(std::abs(want), 1e-300));
        total += n;
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-9 && secs < 10.0,
            fmt("1000 distributions (%ld samples), max rel err %.2e (tol 1e-9), %.2f s (limit 10 s)", total, worst,
                secs)};
}

Outcome tail_shift_discrimination() {
    const RiskProfile g{6.93, 10.0, 40.0};
    const double nu = 0.95;
    // Base energies spread over [0, 25] J; the top 5% are then pushed further right.
    std::vector<double> base;
    for (int i = 0; i < 1000; ++i) base.push_back(25.0 * (i + 0.5) / 1000.0);
    const std::size_t k = static_cast<std::size_t>(std::ceil(nu * 1000.0)) - 1;
    double var[3], mean[3], cv[3];
    for (int t = 0; t < 3; ++t) {
        auto e = base;
        for (std::size_t i = k + 1; i < e.size(); ++i) e[i] += 0.5 * t * static_cast<double>(i - k) / 50.0;
        const auto r = risk_transform(e, g);
        var[t] = value_at_risk(r, nu);
        mean[t] = sample_mean(r.risks);
        cv[t] = cvar(r, nu);
    }
    const double mean_spread = (std::max({mean[0], mean[1], mean[2]}) - std::min({mean[0], mean[1], mean[2]})) / mean[0];
    const bool ok = var[0] == var[1] && var[1] == var[2] && mean_spread < 0.01 && cv[0] < cv[1] && cv[1] < cv[2];
    return {ok, fmt("VaR %.6f/%.6f/%.6f, mean spread %.3f%% (<1%%), CVaR %.6f < %.6f < %.6f", var[0], var[1], var[2],
                    100.0 * mean_spread, cv[0], cv[1], cv[2])};
}

Outcome risk_transform_properties() {
    Rng rng(202);
    long violations = 0, boundary_checked = 0;
    for (int i = 0; i < 100000; ++i) {
        const RiskProfile p{rng.uniform(0.1, 100.0), rng.uniform(0.5, 50.0), rng.uniform(60.0, 1000.0)};
        const double cap = p.cap();
        const double e1 = rng.uniform(0.0, 1.2 * p.battery_capacity);
        const double e2 = e1 + rng.uniform(0.0, 0.3 * p.battery_capacity);
        const double r1 = p(e1), r2 = p(e2);
        if (!(r1 > 0.0 && r1 <= cap && r2 > 0.0 && r2 <= cap)) ++violations;
        if (r2 < r1) ++violations;
        // Reserve at or below the floor: exactly the cap.
        const double e_floor = p.battery_capacity - p.lambda_floor;
        if (p.battery_capacity - e_floor <= p.lambda_floor) {
            ++boundary_checked;
            if (p(e_floor) != cap) ++violations;
        }
        if (p(e_floor + rng.uniform(0.0, 10.0)) != cap) ++violations;
        // Approaching the floor from below is continuous: the gap to the cap is bounded by the slope at the floor.
        const double delta = std::max(1e-9 * p.battery_capacity, (p.battery_capacity - e_floor) - p.lambda_floor);
        const double e_below = e_floor - delta;
        const double reserve = p.battery_capacity - e_below;
        const double slope = p.gamma / (p.lambda_floor * p.lambda_floor) * std::exp(p.gamma / p.lambda_floor);
        const double below = p(e_below);
        if (!(below <= cap && cap - below <= slope * (reserve - p.lambda_floor) * (1.0 + 1e-6) + 4.0 * ulp(cap)))
            ++violations;
    }
    return {violations == 0,
            fmt("1e5 random (e, profile) pairs: %ld violations of bounds/monotonicity/cap continuity "
                "(%ld exact floor hits)",
                violations, boundary_checked)};
}

Outcome tcn_oracle_equivalence() {
    Rng rng(303);
    double worst = 0.0;
    int causality_failures = 0;
    for (int c = 0; c < 100; ++c) {
        TcnWeights w;
        if (c == 0) {
            w = fixtures::random_tcn(rng, 64, 5, 2, 1);
        } else {
            const int filters = 1 + static_cast<int>(rng.uniform() * 64);
            const int layers = 1 + static_cast<int>(rng.uniform() * 6);
            const int kernel = 2 + static_cast<int>(rng.uniform() * 3);
            const int stacks = 1 + static_cast<int>(rng.uniform() * 2);
            w = fixtures::random_tcn(rng, filters, layers, kernel, stacks);
        }
        const int tau = w.receptive_field();
        const ContextFeatures ctx{rng.uniform(1.1, 1.3), rng.uniform(0.0, 2.0)};
        for (int rep = 0; rep < 3; ++rep) {
            const auto n = static_cast<std::size_t>(1 + rng.uniform() * 2 * tau);
            auto frames = fixtures::random_frames(rng, n);
            const double got = tcn_forward(w, frames, ctx);
            const double want = oracle::tcn(w, frames, ctx);
            worst = std::max(worst, std::abs(got - want) / std::max(std::abs(want), 1e-12));
            if (n > static_cast<std::size_t>(tau)) {
                for (std::size_t i = 0; i + tau < n; ++i) frames[i] = fixtures::random_frames(rng, 1).front();
                if (tcn_forward(w, frames, ctx) != got) ++causality_failures;
            }
        }
        // Future frames never reach past predictions.
        auto seq_frames = fixtures::random_frames(rng, 40);
        const auto before = tcn_predict_sequence(w, seq_frames, ctx);
        for (std::size_t i = 20; i < seq_frames.size(); ++i) seq_frames[i].airspeed += 7.0;
        const auto after = tcn_predict_sequence(w, seq_frames, ctx);
        for (std::size_t i = 0; i < 20; ++i)
            if (before[i] != after[i]) ++causality_failures;
    }
    return {worst <= 1e-6 && causality_failures == 0,
            fmt("100 configs incl. 64-filter/5-layer/kernel-2 (rf 63): max rel err %.2e (tol 1e-6), causality "
                "mismatches %d",
                worst, causality_failures)};
}

// Welch PSD (Hann window, 50% overlap) and least-squares log-log slope over [f_lo, f_hi].
double psd_slope(const std::vector<double>& x, double fs, double f_lo, double f_hi) {
    const int nseg = 4096;
    std::vector<double> psd(nseg / 2 + 1, 0.0), win(nseg);
    for (int i = 0; i < nseg; ++i) win[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / nseg);
    double* in = fftw_alloc_real(nseg);
    fftw_complex* out = fftw_alloc_complex(nseg / 2 + 1);
    fftw_plan plan = fftw_plan_dft_r2c_1d(nseg, in, out, FFTW_ESTIMATE);
    int segments = 0;
    for (std::size_t start = 0; start + nseg <= x.size(); start += nseg / 2, ++segments) {
        for (int i = 0; i < nseg; ++i) in[i] = x[start + static_cast<std::size_t>(i)] * win[static_cast<std::size_t>(i)];
        fftw_execute(plan);
        for (int k = 0; k <= nseg / 2; ++k) psd[static_cast<std::size_t>(k)] += out[k][0] * out[k][0] + out[k][1] * out[k][1];
    }
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
    double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
    for (int k = 1; k <= nseg / 2; ++k) {
        const double f = fs * k / nseg;
        if (f < f_lo || f > f_hi) continue;
        const double lx = std::log10(f), ly = std::log10(psd[static_cast<std::size_t>(k)] / segments);
        sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly, n += 1;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Outcome dryden_statistics() {
    const auto t0 = std::chrono::steady_clock::now();
    DrydenConfig cfg;
    cfg.altitude_m = 50.0;
    cfg.mean_wind_speed_6m = 5.0;
    cfg.timestep = 0.1;
    cfg.airspeed = 5.0;
    DrydenTurbulence t(cfg);
    Rng rng(404);
    const std::size_t steps = 1'000'000, spin_up = 20'000;
    for (std::size_t i = 0; i < spin_up; ++i) t.step(rng);
    std::vector<double> axis[3];
    for (auto& a : axis) a.reserve(steps);
    for (std::size_t i = 0; i < steps; ++i) {
        const Vec3 v = t.step(rng);
        for (int a = 0; a < 3; ++a) axis[a].push_back(v[a]);
    }
    const auto& p = t.params();
    const double sigma[3] = {p.sigma_u, p.sigma_v, p.sigma_w};
    const double length[3] = {p.length_u, p.length_v, p.length_w};
    double worst_sigma = 0.0;
    bool slopes_ok = true;
    std::ostringstream d;
    d.precision(3);
    for (int a = 0; a < 3; ++a) {
        double s = 0, s2 = 0;
        for (double v : axis[a]) s += v, s2 += v * v;
        const double m = s / steps;
        const double sd = std::sqrt(s2 / steps - m * m);
        worst_sigma = std::max(worst_sigma, std::abs(sd - sigma[a]) / sigma[a]);
        const double fc = cfg.airspeed / (2.0 * std::numbers::pi * length[a]);
        const double slope = psd_slope(axis[a], 1.0 / cfg.timestep, 10.0 * fc, 0.2 * 0.5 / cfg.timestep);
        slopes_ok = slopes_ok && slope <= -1.0 && slope >= -4.0;
        d << "uvw"[a] << ": sigma " << sd << " vs " << sigma[a] << ", slope " << slope << "; ";
    }
    const double secs = seconds_since(t0);
    return {worst_sigma <= 0.10 && slopes_ok && secs < 30.0,
            d.str() + fmt("max sigma err %.2f%% (tol 10%%), slopes vs -2 within x2, %.2f s (limit 30 s)",
                          100.0 * worst_sigma, secs)};
}

MissionModel loop_mission() {
    MissionModel m;
    m.plan = fixtures::loop_plan();
    m.noise.accel_std = Vec3(0.2, 0.2, 0.05);
    m.context = {1.225, 0.5};
    return m;
}

WindFieldSet inlet_winds() {
    WindFieldSet set;
    for (int a = 0; a < 360; a += 45) {
        const double r = deg_to_rad(a);
        set.grids.push_back(WindGrid::uniform(Vec3(3.14 * std::cos(r), 3.14 * std::sin(r), 0.0), a, 3.14,
                                              Vec3(-1000, -1000, -10), 100.0, {21, 21, 3}));
    }
    set.inlet = fixtures::reference_inlet();
    return set;
}

Outcome mc_determinism() {
    const auto m = loop_mission();
    const auto set = inlet_winds();
    const PowerModel model(fixtures::sample_coefficients());
    McConfig c;
    c.runs = 200;
    c.master_seed = 505;
    c.workers = 1;
    const auto a = run_mc(m, set, model, c);
    c.workers = 8;
    const auto b = run_mc(m, set, model, c);
    int diffs = 0;
    for (std::size_t i = 0; i < a.runs.size(); ++i) {
        const auto &x = a.runs[i], &y = b.runs[i];
        diffs += !(x.run == y.run && x.energy_j == y.energy_j && x.flight_time_s == y.flight_time_s &&
                   x.complete == y.complete && x.inlet.angle_deg == y.inlet.angle_deg && x.inlet.speed == y.inlet.speed);
    }
    const bool ok = diffs == 0 && a.energies == b.energies && a.incomplete_count == b.incomplete_count &&
                    a.metadata == b.metadata;
    return {ok, fmt("200 runs, 1 vs 8 workers: %d differing runs, energies %s", diffs,
                    a.energies == b.energies ? "bitwise equal" : "differ")};
}

Outcome metrics_fixtures() {
    std::vector<std::string> failures;
    const std::vector<double> y{100, 200}, p{110, 180};
    if (std::abs(mape(y, p) - 10.0) > 1e-12) failures.push_back("mape hand case");
    const std::vector<double> y2{120, 250, 333, 90}, p2{132, 275, 366.3, 99};
    if (std::abs(mape(y2, p2) - 10.0) > 1e-12) failures.push_back("mape scaled case");
    if (mape(y2, y2) != 0.0) failures.push_back("mape perfect");

    ProcessedFlight f;
    f.sample_period = 0.5;
    f.frames.resize(20);
    f.measured_power.assign(20, 100.0);
    f.yaw_series.assign(20, 0.0);
    std::vector<double> pred(20, 110.0);
    for (std::size_t i = 10; i < 20; ++i) f.yaw_series[i] = std::numbers::pi / 2, pred[i] = 90.0;
    const auto ev = adjusted_re(f, pred);
    double et = 0, ep = 0;
    for (const auto& s : ev.sections) et += s.true_j, ep += s.predicted_j;
    const double whole = 100.0 * std::abs(et - ep) / et;
    if (ev.section_count != 2 || std::abs(ev.re_percent - 10.0) > 1e-12 || whole != 0.0)
        failures.push_back("anti-cancellation RE");

    std::vector<double> yaw;
    const double legs[3] = {0.0, 120.0, 240.0};
    for (int l = 0; l < 3; ++l) {
        for (int i = 0; i < 100; ++i) yaw.push_back(deg_to_rad(legs[l] + 2.0 * std::sin(0.7 * i)));
        if (l < 2)
            for (int i = 1; i <= 6; ++i) yaw.push_back(deg_to_rad(legs[l] + 120.0 * i / 7.0));
    }
    yaw[50] = deg_to_rad(30.0);
    const auto sections = segment_by_yaw(yaw, 0.1);
    if (sections.size() != 3) failures.push_back("triangular yaw gave " + std::to_string(sections.size()) + " sections");

    std::string detail = fmt("MAPE cases exact to 1e-12; RE %.12g%% with whole-flight %.3g%%; triangular legs %zu",
                             ev.re_percent, whole, sections.size());
    for (const auto& m : failures) detail += "; failed: " + m;
    return {failures.empty(), detail};
}

Outcome mission_end_to_end() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto m = loop_mission();
    const PowerModel model(fixtures::sample_coefficients());
    McConfig c;
    c.runs = 1000;
    c.master_seed = 20240501;
    c.workers = 1;
    const auto samples = run_mc(m, inlet_winds(), model, c);
    const auto profile = fixtures::reference_profile();
    const double nu = 0.95;
    const auto r = risk_transform(samples, profile);
    const double cv = cvar(r, nu);
    const double secs = seconds_since(t0);

    auto sorted = samples.energies;
    std::sort(sorted.begin(), sorted.end());
    const double e_var = sorted[static_cast<std::size_t>(std::ceil(nu * sorted.size())) - 1];
    const double e_max = sorted.back();
    const double e_star = profile.energy_for_risk(cv);
    const double g_star = profile(e_star);
    const bool in_range = e_star >= e_var * (1 - 1e-12) && e_star <= e_max * (1 + 1e-12);
    const bool ok = cv > 0.0 && cv < profile.cap() && in_range && std::abs(g_star - cv) <= 1e-9 * cv &&
                    samples.energies.size() == 1000 && secs < 60.0;
    return {ok, fmt("N=1000 in %.2f s (limit 60 s); mean energy %.1f J, CVaR %.6f in (0, %.6f); e* = %.1f J in "
                    "[%.1f, %.1f], |G(e*) - CVaR| = %.1e",
                    secs, sample_mean(samples.energies), cv, profile.cap(), e_star, e_var, e_max,
                    std::abs(g_star - cv))};
}

Outcome coverage_dominance() {
    auto map = OccupancyMap::empty(60, 60, 5.0, Vec2(-150, -150));
    for (int y = 34; y < 44; ++y)
        for (int x = 10; x < 22; ++x) map.set_occupied({x, y});
    for (int y = 8; y < 20; ++y)
        for (int x = 38; x < 46; ++x) map.set_occupied({x, y});
    CoverageConfig cfg;
    cfg.radius = 140.0;
    cfg.goal_count = 12;
    cfg.raster_cells = 20;
    McConfig c;
    c.runs = 100;
    c.master_seed = 606;
    auto m = loop_mission();
    const auto winds = inlet_winds();
    const PowerModel model(fixtures::sample_coefficients());
    const RiskProfile low{64000.0, 5000.0, 80000.0};
    const RiskProfile generous = fixtures::reference_profile();
    const auto a = coverage_map(map, cfg, m, winds, model, low, c);
    const auto b = coverage_map(map, cfg, m, winds, model, generous, c);
    int shared = 0, dominated = 0;
    double min_gap = INFINITY;
    for (std::size_t i = 0; i < a.goals.size(); ++i)
        for (std::size_t j = 0; j < b.goals.size(); ++j)
            if (a.goals[i] == b.goals[j]) {
                ++shared;
                dominated += a.cvar_values[i] > b.cvar_values[j];
                min_gap = std::min(min_gap, a.cvar_values[i] - b.cvar_values[j]);
            }
    return {shared > 0 && dominated == shared,
            fmt("%d shared goals, low-capacity CVaR > generous on %d; min gap %.4f", shared, dominated, min_gap)};
}

Outcome astar_vs_dijkstra() {
    Rng rng(707);
    int mismatches = 0, reachable = 0;
    for (int t = 0; t < 20; ++t) {
        const int w = 10 + static_cast<int>(rng.uniform() * 41), h = 10 + static_cast<int>(rng.uniform() * 41);
        auto map = OccupancyMap::empty(std::min(w, 50), std::min(h, 50));
        const double density = rng.uniform(0.1, 0.4);
        for (auto& cell : map.occupied) cell = rng.uniform() < density;
        auto random_free = [&] {
            for (;;) {
                const Cell c{static_cast<int>(rng.uniform() * map.width), static_cast<int>(rng.uniform() * map.height)};
                if (map.free(c)) return c;
            }
        };
        const Cell s = random_free(), g = random_free();
        const auto a = astar(map, s, g);
        const auto d = oracle::dijkstra_cost(map, s, g);
        if (d < 0) {
            mismatches += a.has_value();
        } else {
            ++reachable;
            mismatches += !a || a->cost != d;
        }
    }
    return {mismatches == 0, fmt("20 random maps (%d reachable pairs): %d cost mismatches", reachable, mismatches)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"cvar-estimator-vs-oracle", cvar_estimator},
        {"tail-shift-discrimination", tail_shift_discrimination},
        {"risk-transform-properties", risk_transform_properties},
        {"tcn-oracle-equivalence", tcn_oracle_equivalence},
        {"dryden-statistics", dryden_statistics},
        {"mc-determinism", mc_determinism},
        {"metrics-fixtures", metrics_fixtures},
        {"mission-end-to-end", mission_end_to_end},
        {"coverage-profile-dominance", coverage_dominance},
        {"astar-vs-dijkstra", astar_vs_dijkstra},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
