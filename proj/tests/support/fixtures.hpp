// Copyright (c) 2026, dvdlens contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "dvdlens/detector.hpp"
#include "dvdlens/trace.hpp"

namespace fixtures {

using dvdlens::LayerId;
using dvdlens::Trace;

/// Trace whose row (layer, step) is fill(layer, step) (must have N entries).
inline Trace make_trace(std::size_t layers, std::size_t steps, std::size_t tokens,
                        const std::function<std::vector<double>(LayerId, std::size_t)>& fill) {
    Trace t;
    t.manifest.model_id = "fixture";
    t.manifest.n_layers = layers;
    t.manifest.n_heads = 2;
    t.manifest.n_steps = steps;
    for (std::size_t s = 0; s < steps; ++s) t.manifest.scheduler_timesteps.push_back(static_cast<double>(steps - s));
    dvdlens::LayerGroups g;
    auto clip = [&](const dvdlens::LayerSet& in) {
        dvdlens::LayerSet out;
        for (int l : in) {
            if (static_cast<std::size_t>(l) <= layers) out.insert(l);
        }
        return out;
    };
    g.down = clip(g.down);
    g.mid = clip(g.mid);
    g.lowres = clip(g.lowres);
    t.manifest.layer_groups = g;
    for (std::size_t i = 0; i < tokens; ++i) t.token_map.tokens.push_back("tok" + std::to_string(i));
    t.token_map.prompt_text = "fixture prompt";
    t.attention = dvdlens::AggregatedAttention({layers, steps, tokens});
    for (LayerId l = 1; static_cast<std::size_t>(l) <= layers; ++l) {
        for (std::size_t s = 0; s < steps; ++s) {
            const auto row = fill(l, s);
            for (std::size_t i = 0; i < tokens; ++i) {
                t.attention(static_cast<std::size_t>(l - 1), s, i) = static_cast<float>(row[i]);
            }
        }
    }
    return t;
}

inline std::vector<double> uniform(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

inline std::vector<double> one_hot(std::size_t n, std::size_t at) {
    std::vector<double> v(n, 0.0);
    v[at] = 1.0;
    return v;
}

inline Trace uniform_trace(std::size_t layers = 16, std::size_t steps = 4, std::size_t tokens = 8) {
    return make_trace(layers, steps, tokens, [&](LayerId, std::size_t) { return uniform(tokens); });
}

/// Random point on the simplex (normalized exponentials).
inline std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> v(n);
    double s = 0.0;
    for (auto& x : v) s += (x = e(rng));
    for (auto& x : v) x /= s;
    return v;
}

/// Random simplex rows with float-exact values: float entries whose float sum
/// is close to 1, so traces built from them validate.
inline std::vector<double> random_float_simplex(std::mt19937_64& rng, std::size_t n) {
    auto v = random_simplex(rng, n);
    for (auto& x : v) x = static_cast<double>(static_cast<float>(x));
    return v;
}

inline Trace random_trace(std::mt19937_64& rng, std::size_t layers, std::size_t steps, std::size_t tokens,
                          bool with_logits = false) {
    Trace t = make_trace(layers, steps, tokens, [&](LayerId, std::size_t) { return random_float_simplex(rng, tokens); });
    t.manifest.model_id = "random-" + std::to_string(rng() % 100000);
    t.token_map.dominant_idx = 0;
    t.token_map.dominated_idx = tokens - 1;
    t.token_map.category = dvdlens::Category::landmark;
    if (with_logits) {
        std::normal_distribution<float> nd(0.0f, 3.0f);
        dvdlens::HeadLogits hl;
        const std::size_t positions = 1 + rng() % 5;
        for (LayerId l = 1; static_cast<std::size_t>(l) <= layers; l += 2) {
            dvdlens::LayerLogits x({t.manifest.n_heads, steps, positions, tokens});
            for (float& v : x.data()) v = nd(rng);
            hl.emplace(l, std::move(x));
        }
        t.head_logits = std::move(hl);
    }
    return t;
}

inline std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("dvdlens_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

/// Reference detection-rate table (percent): rows are thresholds
/// 0.010/0.015/0.020/0.025, columns max, mean, L8, L9, L10, 8&9, 8&10, 9&10.
inline constexpr std::array<std::array<double, 8>, 4> kReferenceRatePos{{
    {81.00, 67.33, 55.00, 60.00, 63.67, 61.67, 67.33, 70.67},
    {66.00, 47.67, 38.00, 39.33, 43.33, 39.00, 47.00, 49.00},
    {54.67, 27.00, 28.67, 25.33, 33.33, 26.33, 35.00, 27.67},
    {40.67, 15.00, 21.33, 14.33, 21.67, 16.67, 19.00, 14.00},
}};
inline constexpr std::array<std::array<double, 8>, 4> kReferenceRateNeg{{
    {62.67, 41.00, 52.00, 40.67, 26.33, 48.67, 38.00, 33.67},
    {41.00, 17.00, 29.67, 27.33, 10.33, 25.67, 17.33, 17.00},
    {22.67, 7.67, 15.33, 15.00, 4.00, 11.67, 7.00, 7.67},
    {11.33, 5.00, 8.33, 7.33, 2.33, 6.33, 3.33, 3.33},
}};

/// The table as a GridResult with rates as fractions.
inline dvdlens::detector::GridResult reference_rate_grid() {
    const auto thresholds = dvdlens::detector::default_thresholds();
    const auto selectors = dvdlens::detector::default_selectors();
    dvdlens::detector::GridResult g;
    for (std::size_t r = 0; r < thresholds.size(); ++r) {
        for (std::size_t c = 0; c < selectors.size(); ++c) {
            dvdlens::detector::GridEntry e{{thresholds[r], selectors[c]}, kReferenceRatePos[r][c] / 100.0,
                                           kReferenceRateNeg[r][c] / 100.0, 0.0};
            e.gap = e.rate_pos - e.rate_neg;
            g.entries.push_back(e);
        }
    }
    return g;
}

}  // namespace fixtures
