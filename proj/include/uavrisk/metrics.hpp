#pragma once

// Power-model evaluation against recorded flights: per-timestep MAPE and
// the yaw-section adjusted relative energy error.

#include "uavrisk/errors.hpp"
#include "uavrisk/flight_core.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace uavrisk {

inline double mape(std::span<const double> truth, std::span<const double> predicted) {
    if (truth.size() != predicted.size()) throw InputError("mape: length mismatch");
    if (truth.empty()) throw InputError("mape: empty series");
    double sum = 0.0;
    for (std::size_t t = 0; t < truth.size(); ++t) {
        if (!(truth[t] > 0.0)) throw InputError("mape: true power must be positive (index " + std::to_string(t) + ")");
        sum += std::abs(truth[t] - predicted[t]) / truth[t];
    }
    return 100.0 * sum / static_cast<double>(truth.size());
}

struct SectionRange {
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive
};

struct YawSegmentation {
    double threshold_deg = 15.0;
    double dwell_s = 1.0;
};

namespace detail {

struct CircularMean {
    double s = 0.0, c = 0.0;
    void add(double a) {
        s += std::sin(a);
        c += std::cos(a);
    }
    double value() const { return std::atan2(s, c); }
};

}  // namespace detail

// A section ends when yaw leaves the running section mean by more than the
// threshold and stays out for at least the dwell time, with the trailing
// dwell window settled (every sample within the threshold of the window's
// mean). The new section starts at the first deviating sample. Excursions
// that come back inside the threshold stay in the current section.
inline std::vector<SectionRange> segment_by_yaw(std::span<const double> yaw, double sample_period,
                                                const YawSegmentation& cfg = {}) {
    std::vector<SectionRange> sections;
    const std::size_t n = yaw.size();
    if (n == 0) return sections;
    const double thr = deg_to_rad(cfg.threshold_deg);
    const auto dwell = static_cast<std::size_t>(std::max(1.0, std::ceil(cfg.dwell_s / sample_period - 1e-9)));

    std::size_t start = 0;
    detail::CircularMean mean;
    mean.add(yaw[0]);
    std::size_t candidate = n;  // n: none pending

    auto window_settled = [&](std::size_t end_inclusive) {
        const std::size_t first = end_inclusive + 1 - dwell;
        detail::CircularMean wm;
        for (std::size_t i = first; i <= end_inclusive; ++i) wm.add(yaw[i]);
        const double m = wm.value();
        for (std::size_t i = first; i <= end_inclusive; ++i)
            if (std::abs(wrap_angle(yaw[i] - m)) > thr) return false;
        return true;
    };

    for (std::size_t i = 1; i < n; ++i) {
        const bool deviating = std::abs(wrap_angle(yaw[i] - mean.value())) > thr;
        if (!deviating) {
            candidate = n;
            mean.add(yaw[i]);
            continue;
        }
        if (candidate == n) candidate = i;
        if (i + 1 - candidate >= dwell && window_settled(i)) {
            sections.push_back({start, candidate});
            start = candidate;
            mean = {};
            for (std::size_t j = i + 1 - dwell; j <= i; ++j) mean.add(yaw[j]);
            candidate = n;
        }
    }
    sections.push_back({start, n});
    return sections;
}

struct SectionEnergy {
    double true_j = 0.0;
    double predicted_j = 0.0;
};

struct FlightEvaluation {
    double mape_percent = 0.0;
    double re_percent = 0.0;
    int section_count = 0;
    std::vector<SectionEnergy> sections;
};

inline FlightEvaluation adjusted_re(const ProcessedFlight& flight, std::span<const double> predicted,
                                    const YawSegmentation& cfg = {}) {
    if (predicted.size() != flight.measured_power.size())
        throw InputError("adjusted_re: prediction length does not match the flight");
    FlightEvaluation ev;
    ev.mape_percent = mape(flight.measured_power, predicted);
    const auto ranges = segment_by_yaw(flight.yaw_series, flight.sample_period, cfg);
    double sum = 0.0;
    for (const auto& r : ranges) {
        SectionEnergy se;
        for (std::size_t t = r.begin; t < r.end; ++t) {
            se.true_j += flight.measured_power[t] * flight.sample_period;
            se.predicted_j += predicted[t] * flight.sample_period;
        }
        if (!(se.true_j > 0.0)) throw std::logic_error("adjusted_re: section with zero true energy");
        sum += 100.0 * std::abs(se.true_j - se.predicted_j) / se.true_j;
        ev.sections.push_back(se);
    }
    ev.section_count = static_cast<int>(ranges.size());
    ev.re_percent = sum / static_cast<double>(ranges.size());
    return ev;
}

}  // namespace uavrisk
