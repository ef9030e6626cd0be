#pragma once

// Energy-to-risk transform and tail statistics.
//
//   G(e, b) = exp(gamma / max(b - e, lambda)) - 1
//
// VaR is the lower empirical quantile (sorted index ceil(nu N) - 1, no
// interpolation). CVaR is the discrete Rockafellar-Uryasev estimator
//   CVaR = VaR + 1 / ((1 - nu) N) * sum_i max(r_i - VaR, 0),
// computed from raw samples; the histogram is for reporting only.

#include "uavrisk/errors.hpp"
#include "uavrisk/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace uavrisk {

struct RiskProfile {
    double gamma = 1.0;
    double lambda_floor = 1.0;      // J
    double battery_capacity = 1.0;  // J

    void validate() const {
        if (!(gamma > 0.0) || !(lambda_floor > 0.0) || !(battery_capacity > 0.0))
            throw InputError("risk profile gamma, lambda and battery capacity must be positive");
    }

    double cap() const { return std::expm1(gamma / lambda_floor); }

    double operator()(double energy) const { return std::expm1(gamma / std::max(battery_capacity - energy, lambda_floor)); }

    // Smallest energy with G(e) = risk, for risk in [G(-inf), cap].
    double energy_for_risk(double risk) const {
        if (risk >= cap()) return battery_capacity - lambda_floor;
        return battery_capacity - gamma / std::log1p(risk);
    }
};

struct RiskSamples {
    std::vector<double> risks;
    RiskProfile profile;
    nlohmann::json source_metadata = nlohmann::json::object();
};

inline RiskSamples risk_transform(std::span<const double> energies, const RiskProfile& profile) {
    profile.validate();
    RiskSamples out;
    out.profile = profile;
    out.risks.reserve(energies.size());
    for (double e : energies) out.risks.push_back(profile(e));
    return out;
}

inline RiskSamples risk_transform(const EnergySamples& samples, const RiskProfile& profile) {
    auto out = risk_transform(std::span<const double>(samples.energies), profile);
    out.source_metadata = samples.metadata;
    return out;
}

namespace detail {

inline void check_level(double nu) {
    if (!(nu > 0.0 && nu < 1.0)) throw InputError("risk level nu must lie in (0, 1)");
}

inline std::size_t var_index(std::size_t n, double nu) {
    const double pos = std::ceil(nu * static_cast<double>(n));
    const auto idx = static_cast<long long>(pos) - 1;
    return static_cast<std::size_t>(std::clamp<long long>(idx, 0, static_cast<long long>(n) - 1));
}

}  // namespace detail

inline double value_at_risk(std::span<const double> risks, double nu) {
    detail::check_level(nu);
    if (risks.empty()) throw InputError("value_at_risk: no samples");
    std::vector<double> sorted(risks.begin(), risks.end());
    const auto idx = detail::var_index(sorted.size(), nu);
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(idx), sorted.end());
    return sorted[idx];
}

inline double cvar(std::span<const double> risks, double nu) {
    const double var = value_at_risk(risks, nu);
    double excess = 0.0;
    for (double r : risks) excess += std::max(r - var, 0.0);
    return var + excess / ((1.0 - nu) * static_cast<double>(risks.size()));
}

inline double value_at_risk(const RiskSamples& s, double nu) { return value_at_risk(std::span<const double>(s.risks), nu); }
inline double cvar(const RiskSamples& s, double nu) { return cvar(std::span<const double>(s.risks), nu); }

inline double sample_mean(std::span<const double> v) {
    if (v.empty()) throw InputError("sample_mean: no samples");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

struct RiskHistogram {
    std::vector<double> edges;        // bins + 1, over [0, cap]
    std::vector<long> counts;
    std::vector<double> raw;          // (M / N) * count
    std::vector<double> density;      // normalized so sum(density * width) = 1
};

inline RiskHistogram risk_histogram(const RiskSamples& s, int bins) {
    if (s.risks.empty()) throw InputError("risk_histogram: no samples");
    if (bins < 1) throw InputError("risk_histogram: need at least 1 bin");
    const double cap = s.profile.cap();
    const double width = cap / bins;
    RiskHistogram h;
    h.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int b = 0; b <= bins; ++b) h.edges[static_cast<std::size_t>(b)] = width * b;
    h.edges.back() = cap;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (double r : s.risks) {
        auto idx = static_cast<long>(std::floor(r / width));
        idx = std::clamp(idx, 0L, static_cast<long>(bins) - 1);
        ++h.counts[static_cast<std::size_t>(idx)];
    }
    const auto n = static_cast<double>(s.risks.size());
    for (long c : h.counts) {
        h.raw.push_back(static_cast<double>(bins) / n * static_cast<double>(c));
        h.density.push_back(static_cast<double>(c) / (n * width));
    }
    return h;
}

}  // namespace uavrisk
