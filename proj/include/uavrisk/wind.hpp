#pragma once

// Environmental wind: a spatially varying constant field chosen from a
// library of gridded fields by the sampled inlet condition, plus Dryden
// turbulence.

#include "uavrisk/errors.hpp"
#include "uavrisk/flight_core.hpp"
#include "uavrisk/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace uavrisk {

struct InletDistribution {
    double mean_angle_deg = 0.0;
    double mean_speed = 0.0;
    double std_angle_deg = 0.0;
    double std_speed = 0.0;

    void validate() const {
        if (!(std_angle_deg >= 0.0) || !(std_speed >= 0.0)) throw InputError("inlet std values must be >= 0");
        if (!(mean_speed >= 0.0)) throw InputError("inlet mean_speed must be >= 0");
    }
};

struct InletSample {
    double angle_deg = 0.0;
    double speed = 0.0;
};

// Angle ~ N(mu, sigma^2); speed ~ N(mu, sigma^2) truncated at zero by
// resampling (at most 100 tries, then 0).
inline InletSample sample_inlet(const InletDistribution& inlet, Rng& rng) {
    InletSample s;
    s.angle_deg = inlet.mean_angle_deg + inlet.std_angle_deg * rng.normal();
    s.speed = 0.0;
    for (int attempt = 0; attempt < 100; ++attempt) {
        const double v = inlet.mean_speed + inlet.std_speed * rng.normal();
        if (v >= 0.0) {
            s.speed = v;
            break;
        }
    }
    return s;
}

struct WindGrid {
    Vec3 origin = Vec3::Zero();
    double cell_size = 1.0;
    std::array<int, 3> dims{2, 2, 2};
    std::vector<Vec3> vectors;  // row-major (i, j, k), k fastest
    double ref_angle_deg = 0.0;
    double ref_speed = 1.0;

    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * dims[1] + j) * dims[2] + k;
    }
    const Vec3& at(int i, int j, int k) const { return vectors[index(i, j, k)]; }

    void validate() const {
        if (!(cell_size > 0.0)) throw InputError("wind grid cell_size must be positive");
        for (int d : dims)
            if (d < 2) throw InputError("wind grid dims must be >= 2 per axis");
        if (vectors.size() != static_cast<std::size_t>(dims[0]) * dims[1] * dims[2])
            throw InputError("wind grid vector count does not match dims");
        for (const auto& v : vectors)
            if (!v.allFinite()) throw InputError("wind grid contains non-finite vectors");
        if (!(ref_speed > 0.0)) throw InputError("wind grid ref_speed must be positive");
    }

    // Trilinear interpolation; positions outside the grid clamp to the boundary.
    Vec3 interpolate(const Vec3& p) const {
        std::array<int, 3> i0{};
        std::array<double, 3> frac{};
        for (int a = 0; a < 3; ++a) {
            const double u = std::clamp((p[a] - origin[a]) / cell_size, 0.0, static_cast<double>(dims[a] - 1));
            int base = static_cast<int>(std::floor(u));
            if (base >= dims[a] - 1) base = dims[a] - 2;
            i0[a] = base;
            frac[a] = u - base;
        }
        Vec3 acc = Vec3::Zero();
        for (int c = 0; c < 8; ++c) {
            const int di = c >> 2 & 1, dj = c >> 1 & 1, dk = c & 1;
            const double w = (di ? frac[0] : 1.0 - frac[0]) * (dj ? frac[1] : 1.0 - frac[1]) *
                             (dk ? frac[2] : 1.0 - frac[2]);
            if (w != 0.0) acc += w * at(i0[0] + di, i0[1] + dj, i0[2] + dk);
        }
        return acc;
    }

    static WindGrid uniform(const Vec3& v, double ref_angle_deg, double ref_speed, const Vec3& origin,
                            double cell_size, std::array<int, 3> dims) {
        WindGrid g;
        g.origin = origin;
        g.cell_size = cell_size;
        g.dims = dims;
        g.vectors.assign(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], v);
        g.ref_angle_deg = ref_angle_deg;
        g.ref_speed = ref_speed;
        return g;
    }
};

// Absolute difference of two headings in degrees, in [0, 180].
inline double angular_distance_deg(double a, double b) {
    double d = std::fmod(std::abs(a - b), 360.0);
    return d > 180.0 ? 360.0 - d : d;
}

struct WindFieldSet {
    std::vector<WindGrid> grids;
    InletDistribution inlet;

    void validate() const {
        if (grids.empty()) throw InputError("wind field set needs at least one grid");
        for (std::size_t i = 0; i < grids.size(); ++i) {
            grids[i].validate();
            for (std::size_t j = 0; j < i; ++j)
                if (angular_distance_deg(grids[i].ref_angle_deg, grids[j].ref_angle_deg) == 0.0)
                    throw InputError("wind field set has duplicate reference angles");
        }
        inlet.validate();
    }

    // Nearest reference angle (circular distance), ties to the smaller angle.
    const WindGrid& select(double angle_deg) const {
        const WindGrid* best = nullptr;
        double best_d = std::numeric_limits<double>::infinity();
        for (const auto& g : grids) {
            const double d = angular_distance_deg(angle_deg, g.ref_angle_deg);
            if (d < best_d || (d == best_d && best && g.ref_angle_deg < best->ref_angle_deg)) {
                best = &g;
                best_d = d;
            }
        }
        return *best;
    }
};

inline Vec3 lookup_wind(const WindFieldSet& set, const InletSample& inlet, const Vec3& position) {
    const WindGrid& g = set.select(inlet.angle_deg);
    return g.interpolate(position) * (inlet.speed / g.ref_speed);
}

// ---------------------------------------------------------------------------
// Dryden turbulence, low-altitude MIL-F-8785C form.
//   L_w = h, L_u = L_v = h / (0.177 + 0.000823 h)^1.2          (h in feet)
//   sigma_w = 0.1 W20, sigma_u = sigma_v = sigma_w / (0.177 + 0.000823 h)^0.4
// Forming filters: H_u = 1 / (1 + T_u s); H_v,w = (1 + sqrt(3) T s) / (1 + T s)^2
// with T = L / V, discretized by the bilinear transform. The filter gain is
// set so the discrete stationary variance equals sigma^2.
// ---------------------------------------------------------------------------

struct DrydenParams {
    double sigma_u = 0.0, sigma_v = 0.0, sigma_w = 0.0;
    double length_u = 0.0, length_v = 0.0, length_w = 0.0;  // meters
};

inline DrydenParams dryden_params(double altitude_m, double w20) {
    constexpr double kFt = 0.3048;
    const double h_ft = std::clamp(altitude_m / kFt, 10.0, 1000.0);
    const double denom = 0.177 + 0.000823 * h_ft;
    DrydenParams p;
    p.length_w = h_ft * kFt;
    p.length_u = p.length_v = h_ft / std::pow(denom, 1.2) * kFt;
    p.sigma_w = 0.1 * w20;
    p.sigma_u = p.sigma_v = p.sigma_w / std::pow(denom, 0.4);
    return p;
}

// Second-order IIR section y = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2) x
// in direct form II transposed.
struct Biquad {
    double b0 = 0, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
    double s1 = 0, s2 = 0;

    double step(double x) {
        const double y = b0 * x + s1;
        s1 = b1 * x - a1 * y + s2;
        s2 = b2 * x - a2 * y;
        return y;
    }

    // Sum of squared impulse response: output variance for unit white input.
    double white_noise_gain() const {
        Biquad f = *this;
        f.s1 = f.s2 = 0.0;
        double sum = 0.0;
        double y = f.step(1.0);
        sum += y * y;
        double peak = std::abs(y);
        for (long n = 1; n < 50'000'000; ++n) {
            y = f.step(0.0);
            sum += y * y;
            peak = std::max(peak, std::abs(y));
            if (n > 16 && std::abs(y) < 1e-13 * peak && std::abs(f.s1) + std::abs(f.s2) < 1e-13 * peak) break;
        }
        return sum;
    }

    void scale_numerator(double k) {
        b0 *= k;
        b1 *= k;
        b2 *= k;
    }
};

inline Biquad first_order_form(double time_constant, double dt) {
    const double tc = 2.0 * time_constant / dt;
    Biquad f;
    f.b0 = f.b1 = 1.0 / (1.0 + tc);
    f.a1 = (1.0 - tc) / (1.0 + tc);
    return f;
}

inline Biquad second_order_form(double time_constant, double dt) {
    const double c = 2.0 / dt;
    const double ac = std::sqrt(3.0) * time_constant * c;
    const double tc = time_constant * c;
    const double d0 = (1.0 + tc) * (1.0 + tc);
    Biquad f;
    f.b0 = (1.0 + ac) / d0;
    f.b1 = 2.0 / d0;
    f.b2 = (1.0 - ac) / d0;
    f.a1 = 2.0 * (1.0 + tc) * (1.0 - tc) / d0;
    f.a2 = (1.0 - tc) * (1.0 - tc) / d0;
    return f;
}

struct DrydenConfig {
    double altitude_m = 50.0;
    double mean_wind_speed_6m = 0.0;  // W20
    double timestep = 0.1;
    double airspeed = 5.0;  // sets the spatial-to-temporal frequency mapping
};

// Per-run turbulence generator; body-axis output (u forward, v right, w down).
class DrydenTurbulence {
public:
    explicit DrydenTurbulence(const DrydenConfig& cfg) : cfg_(cfg), params_(dryden_params(cfg.altitude_m, cfg.mean_wind_speed_6m)) {
        if (!(cfg.altitude_m > 0.0)) throw InputError("dryden altitude must be positive");
        if (!(cfg.mean_wind_speed_6m >= 0.0)) throw InputError("dryden W20 must be >= 0");
        if (!(cfg.timestep > 0.0)) throw InputError("dryden timestep must be positive");
        const double v = std::max(cfg.airspeed, 1.0);
        filters_[0] = first_order_form(params_.length_u / v, cfg.timestep);
        filters_[1] = second_order_form(params_.length_v / v, cfg.timestep);
        filters_[2] = second_order_form(params_.length_w / v, cfg.timestep);
        const std::array<double, 3> sigma{params_.sigma_u, params_.sigma_v, params_.sigma_w};
        for (int a = 0; a < 3; ++a) {
            const double g = filters_[a].white_noise_gain();
            filters_[a].scale_numerator(sigma[a] / std::sqrt(g));
        }
    }

    const DrydenParams& params() const { return params_; }
    const DrydenConfig& config() const { return cfg_; }

    Vec3 step(Rng& rng) {
        Vec3 out;
        for (int a = 0; a < 3; ++a) out[a] = filters_[a].step(rng.normal());
        return out;
    }

    // Discrete filter coefficients per axis (after gain scaling).
    const std::array<Biquad, 3>& filters() const { return filters_; }

private:
    DrydenConfig cfg_;
    DrydenParams params_;
    std::array<Biquad, 3> filters_{};
};

inline Vec3 dryden_step(DrydenTurbulence& state, Rng& rng) { return state.step(rng); }

// Body (x forward, y right, z down) to inertial (z up) for a given yaw.
inline Vec3 body_to_inertial(const Vec3& body, double yaw) {
    const double c = std::cos(yaw), s = std::sin(yaw);
    return {c * body.x() + s * body.y(), s * body.x() - c * body.y(), -body.z()};
}

}  // namespace uavrisk
