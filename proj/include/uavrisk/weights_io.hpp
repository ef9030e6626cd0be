#pragma once

// JSON weight files for the power models.
//
// TCN export (schema_version 1):
//   { "schema_version": 1, "model_type": "tcn", "convention": "...",
//     "sample_period_s": 0.1, "clamp_floor_w": 1.0, "receptive_field": 63,
//     "normalization": { "feature_means": [5], "feature_stds": [5],
//                        "context_means": [2], "context_stds": [2],
//                        "target_mean": x, "target_std": y },
//     "blocks": [ { "conv1": {kernel_size, dilation, in_channels, out_channels,
//                             shape: [out, in, kernel], weights: [...], bias: [...]},
//                   "conv2": {...}, "projection": {in_channels, out_channels,
//                             shape: [out, in], weights, bias} | null } ],
//     "head": { "in_features": C + 2, "weights": [...], "bias": b },
//     "training": { ...trainer record... } }
//
// Analytical baseline: { "schema_version": 1, "model_type": "analytical-baseline",
//   "basis": [...], "beta": [7], "clamp_floor_w": 1.0 }
// Constant stub:       { "schema_version": 1, "model_type": "constant", "watts": P }

#include "uavrisk/csv.hpp"
#include "uavrisk/errors.hpp"
#include "uavrisk/power_model.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>

namespace uavrisk {

inline constexpr int kWeightsSchemaVersion = 1;

namespace detail {

using nlohmann::json;

inline const json& require(const json& j, const char* key, const std::string& ctx) {
    if (!j.is_object() || !j.contains(key)) throw LoadError(ctx + ": missing field '" + key + "'");
    return j.at(key);
}

inline double get_number(const json& j, const char* key, const std::string& ctx) {
    const auto& v = require(j, key, ctx);
    if (!v.is_number()) throw LoadError(ctx + "." + key + " must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw LoadError(ctx + "." + key + " contains a non-finite value");
    return d;
}

inline int get_int(const json& j, const char* key, const std::string& ctx) {
    const auto& v = require(j, key, ctx);
    if (!v.is_number_integer()) throw LoadError(ctx + "." + key + " must be an integer");
    return v.get<int>();
}

inline std::vector<double> get_vector(const json& j, const char* key, const std::string& ctx) {
    const auto& v = require(j, key, ctx);
    if (!v.is_array()) throw LoadError(ctx + "." + key + " must be an array");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& e : v) {
        // nlohmann parses NaN/Inf as null; treat both as non-finite.
        if (!e.is_number()) throw LoadError(ctx + "." + key + " contains a non-finite value");
        out.push_back(e.get<double>());
    }
    return out;
}

template <std::size_t N>
std::array<double, N> get_array(const json& j, const char* key, const std::string& ctx) {
    const auto v = get_vector(j, key, ctx);
    if (v.size() != N)
        throw LoadError(ctx + "." + key + ": expected " + std::to_string(N) + " values, got " +
                        std::to_string(v.size()));
    std::array<double, N> a{};
    std::copy(v.begin(), v.end(), a.begin());
    return a;
}

inline void check_shape(const json& j, std::initializer_list<int> dims, const std::string& ctx) {
    if (!j.contains("shape")) return;
    const auto& s = j.at("shape");
    std::vector<int> want(dims);
    if (!s.is_array() || s.size() != want.size()) throw LoadError(ctx + ".shape: dimension mismatch");
    for (std::size_t i = 0; i < want.size(); ++i)
        if (!s[i].is_number_integer() || s[i].get<int>() != want[i])
            throw LoadError(ctx + ".shape: dimension mismatch");
}

inline CausalConv1d conv_from_json(const json& j, const std::string& ctx) {
    CausalConv1d c;
    c.kernel_size = get_int(j, "kernel_size", ctx);
    c.dilation = get_int(j, "dilation", ctx);
    c.in_channels = get_int(j, "in_channels", ctx);
    c.out_channels = get_int(j, "out_channels", ctx);
    check_shape(j, {c.out_channels, c.in_channels, c.kernel_size}, ctx);
    c.weights = get_vector(j, "weights", ctx);
    c.bias = get_vector(j, "bias", ctx);
    return c;
}

inline json conv_to_json(const CausalConv1d& c) {
    return json{{"kernel_size", c.kernel_size},
                {"dilation", c.dilation},
                {"in_channels", c.in_channels},
                {"out_channels", c.out_channels},
                {"shape", {c.out_channels, c.in_channels, c.kernel_size}},
                {"weights", c.weights},
                {"bias", c.bias}};
}

inline json parse_json_text(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw LoadError(source + ": parse error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
}

inline void check_schema_version(const json& j, const std::string& source) {
    const int v = get_int(j, "schema_version", source);
    if (v != kWeightsSchemaVersion)
        throw LoadError(source + ": unsupported schema_version " + std::to_string(v) + " (supported: " +
                        std::to_string(kWeightsSchemaVersion) + ")");
}

}  // namespace detail

inline TcnWeights tcn_weights_from_json(const nlohmann::json& j, const std::string& source = "weights") {
    using namespace detail;
    check_schema_version(j, source);
    TcnWeights w;
    const auto& conv = require(j, "convention", source);
    if (!conv.is_string() || conv.get<std::string>() != kFrameConvention)
        throw LoadError(source + ": unsupported frame convention '" + conv.dump() + "' (expected '" +
                        kFrameConvention + "')");
    w.convention = conv.get<std::string>();
    w.sample_period_s = get_number(j, "sample_period_s", source);
    w.clamp_floor_w = j.contains("clamp_floor_w") ? get_number(j, "clamp_floor_w", source) : 1.0;

    const auto& n = require(j, "normalization", source);
    w.normalization.feature_means = get_array<5>(n, "feature_means", "normalization");
    w.normalization.feature_stds = get_array<5>(n, "feature_stds", "normalization");
    w.normalization.context_means = get_array<2>(n, "context_means", "normalization");
    w.normalization.context_stds = get_array<2>(n, "context_stds", "normalization");
    w.normalization.target_mean = get_number(n, "target_mean", "normalization");
    w.normalization.target_std = get_number(n, "target_std", "normalization");

    const auto& blocks = require(j, "blocks", source);
    if (!blocks.is_array()) throw LoadError(source + ".blocks must be an array");
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const std::string ctx = "blocks[" + std::to_string(b) + "]";
        ResidualBlock blk;
        blk.conv1 = conv_from_json(require(blocks[b], "conv1", ctx), ctx + ".conv1");
        blk.conv2 = conv_from_json(require(blocks[b], "conv2", ctx), ctx + ".conv2");
        if (blocks[b].contains("projection") && !blocks[b].at("projection").is_null()) {
            const auto& p = blocks[b].at("projection");
            const std::string pctx = ctx + ".projection";
            ResidualProjection proj;
            proj.in_channels = get_int(p, "in_channels", pctx);
            proj.out_channels = get_int(p, "out_channels", pctx);
            check_shape(p, {proj.out_channels, proj.in_channels}, pctx);
            proj.weights = get_vector(p, "weights", pctx);
            proj.bias = get_vector(p, "bias", pctx);
            blk.projection = std::move(proj);
        }
        w.blocks.push_back(std::move(blk));
    }
    const auto& head = require(j, "head", source);
    w.head.weights = get_vector(head, "weights", "head");
    w.head.bias = get_number(head, "bias", "head");
    if (head.contains("in_features") && get_int(head, "in_features", "head") != static_cast<int>(w.head.weights.size()))
        throw LoadError("head.weights: in_features does not match weight count");
    if (j.contains("training")) w.training_json = j.at("training").dump();

    w.validate();
    if (j.contains("receptive_field") && get_int(j, "receptive_field", source) != w.receptive_field())
        throw LoadError(source + ": receptive_field " + j.at("receptive_field").dump() +
                        " does not match the block structure (" + std::to_string(w.receptive_field()) + ")");
    return w;
}

inline nlohmann::json tcn_weights_to_json(const TcnWeights& w) {
    using nlohmann::json;
    const auto& n = w.normalization;
    json blocks = json::array();
    for (const auto& b : w.blocks) {
        json jb{{"conv1", detail::conv_to_json(b.conv1)}, {"conv2", detail::conv_to_json(b.conv2)}};
        if (b.projection) {
            const auto& p = *b.projection;
            jb["projection"] = json{{"in_channels", p.in_channels},
                                    {"out_channels", p.out_channels},
                                    {"shape", {p.out_channels, p.in_channels}},
                                    {"weights", p.weights},
                                    {"bias", p.bias}};
        } else {
            jb["projection"] = nullptr;
        }
        blocks.push_back(std::move(jb));
    }
    return json{{"schema_version", kWeightsSchemaVersion},
                {"model_type", "tcn"},
                {"convention", w.convention},
                {"sample_period_s", w.sample_period_s},
                {"clamp_floor_w", w.clamp_floor_w},
                {"receptive_field", w.receptive_field()},
                {"normalization",
                 {{"feature_means", n.feature_means},
                  {"feature_stds", n.feature_stds},
                  {"context_means", n.context_means},
                  {"context_stds", n.context_stds},
                  {"target_mean", n.target_mean},
                  {"target_std", n.target_std}}},
                {"blocks", std::move(blocks)},
                {"head", {{"in_features", w.head.weights.size()}, {"weights", w.head.weights}, {"bias", w.head.bias}}},
                {"training", json::parse(w.training_json)}};
}

inline TcnWeights load_weights(const std::filesystem::path& path) {
    const auto j = detail::parse_json_text(csv::read_file(path.string()), path.string());
    return tcn_weights_from_json(j, path.string());
}

inline void save_weights(const TcnWeights& w, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError("cannot write " + path.string());
    out << tcn_weights_to_json(w).dump(1) << '\n';
}

inline nlohmann::json analytical_to_json(const AnalyticalCoefficients& c) {
    return nlohmann::json{{"schema_version", kWeightsSchemaVersion},
                          {"model_type", "analytical-baseline"},
                          {"basis", {"1", "v", "v^2", "v_z", "v_z^2", "m", "alpha"}},
                          {"beta", c.beta},
                          {"clamp_floor_w", c.clamp_floor_w},
                          {"note", "least-squares baseline; not a reproduction of a published analytical model"}};
}

// Any supported model file, dispatched on "model_type" (default "tcn").
inline PowerModel load_power_model(const std::filesystem::path& path) {
    using namespace detail;
    const std::string source = path.string();
    const auto j = parse_json_text(csv::read_file(source), source);
    const std::string type = j.contains("model_type") && j.at("model_type").is_string()
                                 ? j.at("model_type").get<std::string>()
                                 : std::string("tcn");
    if (type == "tcn") return PowerModel(tcn_weights_from_json(j, source));
    check_schema_version(j, source);
    if (type == "analytical-baseline") {
        AnalyticalCoefficients c;
        c.beta = get_array<7>(j, "beta", source);
        for (double b : c.beta)
            if (!std::isfinite(b)) throw LoadError(source + ".beta contains a non-finite value");
        if (j.contains("clamp_floor_w")) c.clamp_floor_w = get_number(j, "clamp_floor_w", source);
        return PowerModel(c);
    }
    if (type == "constant") {
        const double p = get_number(j, "watts", source);
        if (!(p > 0.0)) throw LoadError(source + ".watts must be positive");
        return PowerModel(ConstantPower{p});
    }
    throw LoadError(source + ": unknown model_type '" + type + "'");
}

}  // namespace uavrisk
