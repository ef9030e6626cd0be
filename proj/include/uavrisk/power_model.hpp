#pragma once

// Instantaneous power prediction.
//
// TCN inference: normalized time-varying features pass through residual
// blocks of dilated causal convolutions; the last timestep's channel vector
// is concatenated with the normalized context and fed to a dense head.
//
// Convolution tap layout: weights are out x in x kernel (row-major) and tap k
// reads the input at t - (kernel - 1 - k) * dilation, so the last tap is the
// current timestep.

#include "uavrisk/errors.hpp"
#include "uavrisk/flight_core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace uavrisk {

struct CausalConv1d {
    int kernel_size = 2;
    int dilation = 1;
    int in_channels = 0;
    int out_channels = 0;
    std::vector<double> weights;  // out x in x kernel
    std::vector<double> bias;     // out

    double weight(int o, int i, int k) const {
        return weights[(static_cast<std::size_t>(o) * in_channels + i) * kernel_size + k];
    }
};

// 1x1 convolution used when a block changes channel count.
struct ResidualProjection {
    int in_channels = 0;
    int out_channels = 0;
    std::vector<double> weights;  // out x in
    std::vector<double> bias;
};

struct ResidualBlock {
    CausalConv1d conv1;
    CausalConv1d conv2;
    std::optional<ResidualProjection> projection;

    int in_channels() const { return conv1.in_channels; }
    int out_channels() const { return conv2.out_channels; }
};

struct DenseHead {
    std::vector<double> weights;  // channels + context features
    double bias = 0.0;
};

struct Normalization {
    std::array<double, FeatureFrame::kCount> feature_means{};
    std::array<double, FeatureFrame::kCount> feature_stds{1, 1, 1, 1, 1};
    std::array<double, ContextFeatures::kCount> context_means{};
    std::array<double, ContextFeatures::kCount> context_stds{1, 1};
    double target_mean = 0.0;
    double target_std = 1.0;
};

struct TcnWeights {
    Normalization normalization;
    std::vector<ResidualBlock> blocks;
    DenseHead head;
    double sample_period_s = 0.1;
    double clamp_floor_w = 1.0;
    std::string convention = kFrameConvention;
    // Opaque trainer-side record (window length, padding, dropout, loss); kept as JSON text.
    std::string training_json = "{}";

    int channels() const { return blocks.empty() ? static_cast<int>(FeatureFrame::kCount) : blocks.back().out_channels(); }

    // 1 + sum over conv layers of (kernel - 1) * dilation.
    int receptive_field() const {
        int rf = 1;
        for (const auto& b : blocks) {
            rf += (b.conv1.kernel_size - 1) * b.conv1.dilation;
            rf += (b.conv2.kernel_size - 1) * b.conv2.dilation;
        }
        return rf;
    }

    // Throws LoadError naming the offending tensor.
    void validate() const;
};

namespace detail {

inline void check_finite(std::span<const double> v, const std::string& name) {
    for (double x : v)
        if (!std::isfinite(x)) throw LoadError(name + " contains a non-finite value");
}

inline void check_conv(const CausalConv1d& c, const std::string& name) {
    if (c.kernel_size < 1 || c.dilation < 1 || c.in_channels < 1 || c.out_channels < 1)
        throw LoadError(name + ": kernel_size, dilation and channel counts must be positive");
    const auto expected = static_cast<std::size_t>(c.out_channels) * c.in_channels * c.kernel_size;
    if (c.weights.size() != expected)
        throw LoadError(name + ".weights: expected " + std::to_string(expected) + " values, got " +
                        std::to_string(c.weights.size()));
    if (c.bias.size() != static_cast<std::size_t>(c.out_channels))
        throw LoadError(name + ".bias: expected " + std::to_string(c.out_channels) + " values, got " +
                        std::to_string(c.bias.size()));
    check_finite(c.weights, name + ".weights");
    check_finite(c.bias, name + ".bias");
}

}  // namespace detail

inline void TcnWeights::validate() const {
    const auto& n = normalization;
    for (double s : n.feature_stds)
        if (!(s > 0.0)) throw LoadError("feature_stds must be positive");
    for (double s : n.context_stds)
        if (!(s > 0.0)) throw LoadError("context_stds must be positive");
    if (!(n.target_std > 0.0)) throw LoadError("target_std must be positive");
    detail::check_finite(n.feature_means, "feature_means");
    detail::check_finite(n.feature_stds, "feature_stds");
    detail::check_finite(n.context_means, "context_means");
    detail::check_finite(n.context_stds, "context_stds");
    if (!std::isfinite(n.target_mean) || !std::isfinite(n.target_std))
        throw LoadError("target_mean/target_std must be finite");
    if (!(sample_period_s > 0.0) || !std::isfinite(sample_period_s))
        throw LoadError("sample_period_s must be positive");
    if (!std::isfinite(clamp_floor_w)) throw LoadError("clamp_floor_w must be finite");

    int channels_in = static_cast<int>(FeatureFrame::kCount);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const auto& blk = blocks[b];
        const std::string name = "blocks[" + std::to_string(b) + "]";
        detail::check_conv(blk.conv1, name + ".conv1");
        detail::check_conv(blk.conv2, name + ".conv2");
        if (blk.conv1.in_channels != channels_in)
            throw LoadError(name + ".conv1: in_channels " + std::to_string(blk.conv1.in_channels) + " != " +
                            std::to_string(channels_in));
        if (blk.conv2.in_channels != blk.conv1.out_channels)
            throw LoadError(name + ".conv2: in_channels must equal conv1.out_channels");
        if (blk.conv1.kernel_size != blk.conv2.kernel_size || blk.conv1.dilation != blk.conv2.dilation)
            throw LoadError(name + ": conv1 and conv2 must share kernel_size and dilation");
        const int d = blk.conv1.dilation;
        const bool restart = d == 1;
        const bool doubled = b > 0 && d == 2 * blocks[b - 1].conv1.dilation;
        if (!restart && !doubled)
            throw LoadError(name + ": dilation " + std::to_string(d) + " breaks the 2^layer schedule");
        const bool needs_projection = blk.in_channels() != blk.out_channels();
        if (needs_projection != blk.projection.has_value())
            throw LoadError(name + ".projection: present iff in_channels != out_channels");
        if (blk.projection) {
            const auto& p = *blk.projection;
            if (p.in_channels != blk.in_channels() || p.out_channels != blk.out_channels())
                throw LoadError(name + ".projection: shape mismatch");
            if (p.weights.size() != static_cast<std::size_t>(p.in_channels) * p.out_channels)
                throw LoadError(name + ".projection.weights: dimension mismatch");
            if (p.bias.size() != static_cast<std::size_t>(p.out_channels))
                throw LoadError(name + ".projection.bias: dimension mismatch");
            detail::check_finite(p.weights, name + ".projection.weights");
            detail::check_finite(p.bias, name + ".projection.bias");
        }
        channels_in = blk.out_channels();
    }
    const auto head_len = static_cast<std::size_t>(channels_in) + ContextFeatures::kCount;
    if (head.weights.size() != head_len)
        throw LoadError("head.weights: expected " + std::to_string(head_len) + " values, got " +
                        std::to_string(head.weights.size()));
    detail::check_finite(head.weights, "head.weights");
    if (!std::isfinite(head.bias)) throw LoadError("head.bias must be finite");
}

namespace detail {

// Activations are time-major: row t holds all channels at timestep t.
struct Activations {
    std::size_t steps = 0;
    int channels = 0;
    std::vector<double> data;

    double* row(std::size_t t) { return data.data() + t * static_cast<std::size_t>(channels); }
    const double* row(std::size_t t) const { return data.data() + t * static_cast<std::size_t>(channels); }
};

inline Activations causal_conv(const CausalConv1d& c, const Activations& x, bool relu) {
    // Repack to kernel x out x in so each output is a contiguous dot product.
    const int K = c.kernel_size, I = c.in_channels, O = c.out_channels;
    std::vector<double> packed(static_cast<std::size_t>(K) * O * I);
    for (int k = 0; k < K; ++k)
        for (int o = 0; o < O; ++o)
            for (int i = 0; i < I; ++i)
                packed[(static_cast<std::size_t>(k) * O + o) * I + i] = c.weight(o, i, k);

    Activations y{x.steps, O, std::vector<double>(x.steps * static_cast<std::size_t>(O))};
    for (std::size_t t = 0; t < x.steps; ++t) {
        double* out = y.row(t);
        for (int o = 0; o < O; ++o) out[o] = c.bias[o];
        for (int k = 0; k < K; ++k) {
            const auto shift = static_cast<std::size_t>(K - 1 - k) * static_cast<std::size_t>(c.dilation);
            if (shift > t) continue;  // zero padding
            const double* in = x.row(t - shift);
            const double* wk = packed.data() + static_cast<std::size_t>(k) * O * I;
            for (int o = 0; o < O; ++o) {
                const double* w = wk + static_cast<std::size_t>(o) * I;
                double acc = 0.0;
                for (int i = 0; i < I; ++i) acc += w[i] * in[i];
                out[o] += acc;
            }
        }
        if (relu)
            for (int o = 0; o < O; ++o) out[o] = std::max(out[o], 0.0);
    }
    return y;
}

inline Activations residual_block(const ResidualBlock& b, const Activations& x) {
    const Activations h1 = causal_conv(b.conv1, x, true);
    Activations h2 = causal_conv(b.conv2, h1, true);
    const int O = h2.channels;
    for (std::size_t t = 0; t < x.steps; ++t) {
        double* out = h2.row(t);
        const double* in = x.row(t);
        if (b.projection) {
            const auto& p = *b.projection;
            for (int o = 0; o < O; ++o) {
                double acc = p.bias[o];
                const double* w = p.weights.data() + static_cast<std::size_t>(o) * p.in_channels;
                for (int i = 0; i < p.in_channels; ++i) acc += w[i] * in[i];
                out[o] = std::max(out[o] + acc, 0.0);
            }
        } else {
            for (int o = 0; o < O; ++o) out[o] = std::max(out[o] + in[o], 0.0);
        }
    }
    return h2;
}

// Normalized input with `lead` zero rows before the frames.
inline Activations normalized_input(const Normalization& n, std::span<const FeatureFrame> frames, std::size_t lead) {
    constexpr int F = static_cast<int>(FeatureFrame::kCount);
    Activations x{lead + frames.size(), F, std::vector<double>((lead + frames.size()) * F, 0.0)};
    for (std::size_t t = 0; t < frames.size(); ++t) {
        double* r = x.row(lead + t);
        for (int f = 0; f < F; ++f) r[f] = (frames[t][f] - n.feature_means[f]) / n.feature_stds[f];
    }
    return x;
}

inline double head_output(const TcnWeights& w, const double* phi, int channels, const ContextFeatures& ctx) {
    const auto& n = w.normalization;
    double acc = w.head.bias;
    for (int c = 0; c < channels; ++c) acc += w.head.weights[c] * phi[c];
    for (std::size_t j = 0; j < ContextFeatures::kCount; ++j)
        acc += w.head.weights[channels + j] * ((ctx[j] - n.context_means[j]) / n.context_stds[j]);
    return std::max(n.target_mean + n.target_std * acc, w.clamp_floor_w);
}

inline Activations encode(const TcnWeights& w, Activations x) {
    for (const auto& b : w.blocks) x = residual_block(b, x);
    return x;
}

}  // namespace detail

// Power at the last frame of `window`. Only the last receptive_field() frames
// matter; shorter windows are padded with zeros in normalized space.
inline double tcn_forward(const TcnWeights& w, std::span<const FeatureFrame> window, const ContextFeatures& ctx) {
    if (window.empty()) throw InputError("tcn_forward: empty window");
    const auto tau = static_cast<std::size_t>(w.receptive_field());
    if (window.size() > tau) window = window.subspan(window.size() - tau);
    const std::size_t lead = tau - window.size();
    const auto phi = detail::encode(w, detail::normalized_input(w.normalization, window, lead));
    return detail::head_output(w, phi.row(phi.steps - 1), phi.channels, ctx);
}

// Rolling-window prediction for every frame: element t equals
// tcn_forward(frames[max(0, t - tau + 1) .. t]). Computed in one causal pass.
inline std::vector<double> tcn_predict_sequence(const TcnWeights& w, std::span<const FeatureFrame> frames,
                                                const ContextFeatures& ctx) {
    std::vector<double> out;
    if (frames.empty()) return out;
    const auto lead = static_cast<std::size_t>(w.receptive_field()) - 1;
    const auto phi = detail::encode(w, detail::normalized_input(w.normalization, frames, lead));
    out.reserve(frames.size());
    for (std::size_t t = 0; t < frames.size(); ++t)
        out.push_back(detail::head_output(w, phi.row(lead + t), phi.channels, ctx));
    return out;
}

// ---------------------------------------------------------------------------
// Analytical baseline: least-squares stand-in for a physics-derived model,
// basis [1, v, v^2, v_z, v_z^2, m, alpha].
// ---------------------------------------------------------------------------

struct AnalyticalCoefficients {
    std::array<double, 7> beta{};
    double clamp_floor_w = 1.0;
};

inline std::array<double, 7> analytical_basis(const FeatureFrame& f, const ContextFeatures& ctx) {
    return {1.0,
            f.airspeed,
            f.airspeed * f.airspeed,
            f.vertical_speed,
            f.vertical_speed * f.vertical_speed,
            ctx.payload_mass,
            f.angle_of_attack};
}

inline double analytical_predict(const AnalyticalCoefficients& c, const FeatureFrame& f, const ContextFeatures& ctx) {
    const auto phi = analytical_basis(f, ctx);
    double p = 0.0;
    for (std::size_t j = 0; j < phi.size(); ++j) p += c.beta[j] * phi[j];
    return std::max(p, c.clamp_floor_w);
}

inline AnalyticalCoefficients fit_analytical(std::span<const ProcessedFlight> flights) {
    if (flights.empty()) throw FitError("fit_analytical: no flights");
    std::size_t rows = 0;
    for (const auto& f : flights) {
        if (f.measured_power.size() != f.frames.size())
            throw FitError("fit_analytical: flight '" + f.id + "' has mismatched power/frame lengths");
        rows += f.frames.size();
    }
    if (rows < 8) throw FitError("fit_analytical: need at least 8 frames, got " + std::to_string(rows));

    Eigen::MatrixXd A(static_cast<Eigen::Index>(rows), 7);
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows));
    Eigen::Index r = 0;
    for (const auto& f : flights) {
        for (std::size_t t = 0; t < f.frames.size(); ++t, ++r) {
            const auto phi = analytical_basis(f.frames[t], f.context);
            for (int j = 0; j < 7; ++j) A(r, j) = phi[static_cast<std::size_t>(j)];
            y(r) = f.measured_power[t];
        }
    }
    // Scale columns so the rank test is not dominated by units.
    Eigen::VectorXd scale = A.colwise().norm().transpose();
    for (int j = 0; j < 7; ++j)
        if (scale(j) == 0.0) scale(j) = 1.0;
    const Eigen::MatrixXd As = A * scale.cwiseInverse().asDiagonal();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(As);
    qr.setThreshold(1e-10);
    if (qr.rank() < 7)
        throw FitError("fit_analytical: basis matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                       " of 7); provide flights with more varied speed, climb rate, pitch and payload");
    const Eigen::VectorXd bs = qr.solve(y);
    AnalyticalCoefficients c;
    for (int j = 0; j < 7; ++j) c.beta[static_cast<std::size_t>(j)] = bs(j) / scale(j);
    return c;
}

// ---------------------------------------------------------------------------
// Model selection used by the Monte Carlo engine and the CLI.
// ---------------------------------------------------------------------------

struct ConstantPower {
    double watts = 250.0;
};

class PowerModel {
public:
    using Variant = std::variant<TcnWeights, AnalyticalCoefficients, ConstantPower>;

    PowerModel(TcnWeights w) : model_(std::move(w)) {}
    PowerModel(AnalyticalCoefficients c) : model_(c) {}
    PowerModel(ConstantPower c) : model_(c) {}

    const Variant& variant() const { return model_; }

    std::string kind() const {
        switch (model_.index()) {
            case 0: return "tcn";
            case 1: return "analytical-baseline";
            default: return "constant";
        }
    }

    // Models without a trained sample period accept any simulation step.
    std::optional<double> sample_period() const {
        if (const auto* w = std::get_if<TcnWeights>(&model_)) return w->sample_period_s;
        return std::nullopt;
    }

    std::vector<double> predict_sequence(std::span<const FeatureFrame> frames, const ContextFeatures& ctx) const {
        if (const auto* w = std::get_if<TcnWeights>(&model_)) return tcn_predict_sequence(*w, frames, ctx);
        std::vector<double> out;
        out.reserve(frames.size());
        if (const auto* c = std::get_if<AnalyticalCoefficients>(&model_)) {
            for (const auto& f : frames) out.push_back(analytical_predict(*c, f, ctx));
        } else {
            const double p = std::get<ConstantPower>(model_).watts;
            out.assign(frames.size(), p);
        }
        return out;
    }

private:
    Variant model_;
};

}  // namespace uavrisk
