// Copyright (c) 2026, dvdlens contributors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic synthetic traces with known ground truth.
//
// Each layer belongs to one group (lowres, then mid, then down, else "other")
// and its attention row at step s is
//
//     softmax(init[group] + s * drift[group] + noise)
//
// with noise ~ N(0, noise_std^2) drawn from mt19937_64 through Box-Muller, in
// layer -> step -> token order. Both generator and transform are fixed here
// (not left to the standard library's distributions), so a seed reproduces
// the same bytes on every platform.

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dvdlens/error.hpp"
#include "dvdlens/parallel.hpp"
#include "dvdlens/trace.hpp"

namespace dvdlens::synth {

inline constexpr std::string_view kRngId = "mt19937_64+box-muller";

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

private:
    std::mt19937_64 engine_;
};

enum class Group { down, mid, lowres, other };

/// Per-group vectors over tokens; a missing group means all zeros.
using GroupVectors = std::map<std::string, std::vector<double>>;

struct SynthParams {
    std::size_t n_tokens = 8;
    std::size_t n_layers = 16;
    std::size_t n_steps = 50;
    std::size_t n_heads = 8;
    std::optional<std::size_t> dominant_idx;
    std::optional<std::size_t> dominated_idx;
    LayerGroups layer_groups;
    GroupVectors init_logits;
    GroupVectors drift;
    double noise_std = 0.0;
    std::uint64_t seed = 0;

    Category category = Category::other;
    std::string prompt_text;
    std::vector<std::string> tokens;  // defaults to t0..t{N-1}

    // Optional per-head logits for these layers: [H][S][P][N], each head/position
    // seeing the layer's logits plus independent noise.
    LayerSet head_logit_layers;
    std::size_t spatial_positions = 4;
};

inline std::string group_name(Group g) {
    switch (g) {
        case Group::down: return "down";
        case Group::mid: return "mid";
        case Group::lowres: return "lowres";
        case Group::other: return "other";
    }
    return "other";
}

inline Group group_of(const LayerGroups& groups, LayerId layer) {
    if (groups.lowres.contains(layer)) return Group::lowres;
    if (groups.mid.contains(layer)) return Group::mid;
    if (groups.down.contains(layer)) return Group::down;
    return Group::other;
}

inline void check_params(const SynthParams& p) {
    auto bad = [](const std::string& msg) { fail(ErrorCode::InvalidParams, msg); };
    if (p.n_tokens < 2) bad("n_tokens must be at least 2");
    if (p.n_layers == 0 || p.n_steps == 0 || p.n_heads == 0) bad("n_layers, n_steps and n_heads must be positive");
    if (!(p.noise_std >= 0.0) || !std::isfinite(p.noise_std)) bad("noise_std must be a finite nonnegative number");
    if (p.dominant_idx && *p.dominant_idx >= p.n_tokens) bad("dominant_idx out of range");
    if (p.dominated_idx && *p.dominated_idx >= p.n_tokens) bad("dominated_idx out of range");
    if (p.dominant_idx && p.dominated_idx && *p.dominant_idx == *p.dominated_idx) {
        bad("dominant_idx and dominated_idx must differ");
    }
    if (!p.tokens.empty() && p.tokens.size() != p.n_tokens) bad("tokens length differs from n_tokens");
    for (const auto* vectors : {&p.init_logits, &p.drift}) {
        for (const auto& [name, v] : *vectors) {
            if (name != "down" && name != "mid" && name != "lowres" && name != "other") {
                bad("unknown layer group '" + name + "'");
            }
            if (v.size() != p.n_tokens) bad("group '" + name + "' vector length differs from n_tokens");
        }
    }
    for (const LayerSet* g : {&p.layer_groups.down, &p.layer_groups.mid, &p.layer_groups.lowres}) {
        for (LayerId l : *g) {
            if (l < 1 || static_cast<std::size_t>(l) > p.n_layers) bad("layer group member outside [1, n_layers]");
        }
    }
    for (LayerId l : p.head_logit_layers) {
        if (l < 1 || static_cast<std::size_t>(l) > p.n_layers) bad("head logit layer outside [1, n_layers]");
    }
    if (!p.head_logit_layers.empty() && p.spatial_positions == 0) bad("spatial_positions must be positive");
}

/// Noise-free logits of one layer at one step.
inline std::vector<double> base_logits(const SynthParams& p, LayerId layer, std::size_t step) {
    const std::string g = group_name(group_of(p.layer_groups, layer));
    std::vector<double> out(p.n_tokens, 0.0);
    if (auto it = p.init_logits.find(g); it != p.init_logits.end()) out = it->second;
    if (auto it = p.drift.find(g); it != p.drift.end()) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += static_cast<double>(step) * it->second[i];
    }
    return out;
}

inline std::vector<double> softmax(std::vector<double> x) {
    double mx = x.front();
    for (double v : x) mx = std::max(mx, v);
    double sum = 0.0;
    for (double& v : x) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : x) v /= sum;
    return x;
}

inline Trace gen_trace(const SynthParams& p) {
    check_params(p);
    Rng rng(p.seed);
    Trace t;
    auto& m = t.manifest;
    m.model_id = "synthetic:" + std::string(kRngId) + ":seed=" + std::to_string(p.seed);
    m.n_layers = p.n_layers;
    m.n_heads = p.n_heads;
    m.n_steps = p.n_steps;
    for (std::size_t s = 0; s < p.n_steps; ++s) m.scheduler_timesteps.push_back(static_cast<double>(p.n_steps - s));
    m.layer_groups = p.layer_groups;

    auto& tm = t.token_map;
    tm.tokens = p.tokens;
    if (tm.tokens.empty()) {
        for (std::size_t i = 0; i < p.n_tokens; ++i) tm.tokens.push_back("t" + std::to_string(i));
    }
    tm.prompt_text = p.prompt_text;
    if (tm.prompt_text.empty()) {
        for (const auto& tok : tm.tokens) tm.prompt_text += (tm.prompt_text.empty() ? "" : " ") + tok;
    }
    tm.dominant_idx = p.dominant_idx;
    tm.dominated_idx = p.dominated_idx;
    tm.category = p.category;

    t.attention = AggregatedAttention({p.n_layers, p.n_steps, p.n_tokens});
    for (LayerId l = 1; static_cast<std::size_t>(l) <= p.n_layers; ++l) {
        for (std::size_t s = 0; s < p.n_steps; ++s) {
            auto logits = base_logits(p, l, s);
            if (p.noise_std > 0.0) {
                for (double& v : logits) v += p.noise_std * rng.normal();
            }
            const auto probs = softmax(std::move(logits));
            auto row = t.attention.row(static_cast<std::size_t>(l - 1), s);
            for (std::size_t i = 0; i < probs.size(); ++i) row[i] = static_cast<float>(probs[i]);
        }
    }

    if (!p.head_logit_layers.empty()) {
        HeadLogits logits;
        for (LayerId l : p.head_logit_layers) {
            LayerLogits layer({p.n_heads, p.n_steps, p.spatial_positions, p.n_tokens});
            for (std::size_t h = 0; h < p.n_heads; ++h) {
                for (std::size_t s = 0; s < p.n_steps; ++s) {
                    const auto base = base_logits(p, l, s);
                    for (std::size_t pos = 0; pos < p.spatial_positions; ++pos) {
                        auto row = layer.row(h, s, pos);
                        for (std::size_t i = 0; i < base.size(); ++i) {
                            const double noise = p.noise_std > 0.0 ? p.noise_std * rng.normal() : 0.0;
                            row[i] = static_cast<float>(base[i] + noise);
                        }
                    }
                }
            }
            logits.emplace(l, std::move(layer));
        }
        t.head_logits = std::move(logits);
    }
    return t;
}

// ---------------------------------------------------------------------------
// corpora

/// Two labelled populations. Positives put an extra logit `peak` on the
/// dominant token in the low-resolution layers (peak drawn from
/// [pos_peak_min, pos_peak_max]) and let the dominated token fade in the mid
/// layers; negatives draw a much smaller peak and no fade.
struct CorpusSpec {
    std::size_t count_pos = 100;
    std::size_t count_neg = 100;
    std::size_t n_tokens = 8;
    std::size_t n_layers = 16;
    std::size_t n_steps = 50;
    std::size_t n_heads = 8;
    LayerGroups layer_groups;
    double pos_peak_min = 1.0;
    double pos_peak_max = 2.0;
    double neg_peak_min = 0.0;
    double neg_peak_max = 0.03;
    double dominated_mid_boost = 0.5;
    double dominated_mid_drift = -0.02;
    double noise_std = 0.005;
    std::uint64_t seed = 0;
};

struct Corpus {
    std::vector<Trace> pos;
    std::vector<Trace> neg;
};

/// Per-trace parameters of the i-th member of one population.
inline SynthParams corpus_member(const CorpusSpec& spec, bool positive, std::size_t index) {
    // One stream per member keeps members independent of corpus size.
    Rng rng(spec.seed ^ (positive ? 0x9E3779B97F4A7C15ULL : 0xC2B2AE3D27D4EB4FULL) ^ (index * 0xBF58476D1CE4E5B9ULL));
    SynthParams p;
    p.n_tokens = spec.n_tokens;
    p.n_layers = spec.n_layers;
    p.n_steps = spec.n_steps;
    p.n_heads = spec.n_heads;
    p.layer_groups = spec.layer_groups;
    p.noise_std = spec.noise_std;

    const std::size_t dominant = rng.below(spec.n_tokens);
    const std::size_t dominated = (dominant + 1 + rng.below(spec.n_tokens - 1)) % spec.n_tokens;
    p.dominant_idx = dominant;
    p.dominated_idx = dominated;

    const double lo = positive ? spec.pos_peak_min : spec.neg_peak_min;
    const double hi = positive ? spec.pos_peak_max : spec.neg_peak_max;
    const double peak = lo + (hi - lo) * rng.uniform();

    std::vector<double> lowres(spec.n_tokens, 0.0);
    lowres[dominant] = peak;
    p.init_logits["lowres"] = lowres;
    if (positive) {
        std::vector<double> mid_init(spec.n_tokens, 0.0);
        std::vector<double> mid_drift(spec.n_tokens, 0.0);
        mid_init[dominated] = spec.dominated_mid_boost;
        mid_drift[dominated] = spec.dominated_mid_drift;
        p.init_logits["mid"] = mid_init;
        p.drift["mid"] = mid_drift;
    }
    p.seed = rng.next_u64();
    p.prompt_text = (positive ? "pos-" : "neg-") + std::to_string(index);
    return p;
}

inline Corpus gen_corpus(const CorpusSpec& spec, std::size_t threads = 1) {
    if (spec.count_pos < 1 || spec.count_neg < 1) fail(ErrorCode::InvalidParams, "corpus counts must be at least 1");
    if (spec.n_tokens < 2) fail(ErrorCode::InvalidParams, "n_tokens must be at least 2");
    if (spec.pos_peak_min > spec.pos_peak_max || spec.neg_peak_min > spec.neg_peak_max) {
        fail(ErrorCode::InvalidParams, "peak ranges must have min <= max");
    }
    Corpus c;
    c.pos.resize(spec.count_pos);
    c.neg.resize(spec.count_neg);
    parallel_for(spec.count_pos, threads, [&](std::size_t i) { c.pos[i] = gen_trace(corpus_member(spec, true, i)); });
    parallel_for(spec.count_neg, threads, [&](std::size_t i) { c.neg[i] = gen_trace(corpus_member(spec, false, i)); });
    return c;
}

}  // namespace dvdlens::synth
