// Copyright (c) 2026, dvdlens contributors
// SPDX-License-Identifier: Apache-2.0
//
// Immutable domain types for one exported cross-attention trace.
//
// Conventions:
//   * layers are 1-based ids (1..L), the way layer numbers are usually quoted
//     for the SD UNet cross-attention blocks;
//   * steps are 0-based in generation order, so s = 0 is the first denoising
//     step (scheduler timestep 50 on a 50-step run);
//   * the aggregated tensor is [layer][step][token], already averaged over
//     spatial positions and heads.

#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dvdlens/error.hpp"
#include "dvdlens/tensor.hpp"

namespace dvdlens {

using LayerId = int;
using LayerSet = std::set<LayerId>;

inline constexpr double kRowSumTolerance = 1e-4;
inline constexpr int kFormatVersion = 1;

enum class Category { artist, landmark, character, object, other };

constexpr std::string_view to_string(Category c) {
    switch (c) {
        case Category::artist: return "artist";
        case Category::landmark: return "landmark";
        case Category::character: return "character";
        case Category::object: return "object";
        case Category::other: return "other";
    }
    return "other";
}

inline std::optional<Category> parse_category(std::string_view s) {
    for (auto c : {Category::artist, Category::landmark, Category::character, Category::object,
                   Category::other}) {
        if (s == to_string(c)) return c;
    }
    return std::nullopt;
}

struct TokenMap {
    std::string prompt_text;
    std::vector<std::string> tokens;
    std::optional<std::size_t> dominant_idx;
    std::optional<std::size_t> dominated_idx;
    Category category = Category::other;

    std::size_t n_tokens() const noexcept { return tokens.size(); }

    friend bool operator==(const TokenMap&, const TokenMap&) = default;
};

struct LayerGroups {
    LayerSet down{1, 2, 3, 4, 5, 6};
    LayerSet mid{7};
    LayerSet lowres{8, 9, 10};

    friend bool operator==(const LayerGroups&, const LayerGroups&) = default;
};

struct TraceManifest {
    int format_version = kFormatVersion;
    std::string model_id;
    std::size_t n_layers = 0;
    std::size_t n_heads = 0;
    std::size_t n_steps = 0;
    std::vector<double> scheduler_timesteps;
    LayerGroups layer_groups;

    friend bool operator==(const TraceManifest&, const TraceManifest&) = default;
};

/// [L][S][N] attention weights, float32 as stored on disk.
using AggregatedAttention = Tensor<float, 3>;

/// Pre-softmax logits of one layer, [H][S][P][N].
using LayerLogits = Tensor<float, 4>;

/// Optional per-layer head logits keyed by 1-based layer id; layers may be absent.
using HeadLogits = std::map<LayerId, LayerLogits>;

struct Trace {
    TraceManifest manifest;
    TokenMap token_map;
    AggregatedAttention attention;
    std::optional<HeadLogits> head_logits;

    std::size_t n_layers() const noexcept { return manifest.n_layers; }
    std::size_t n_steps() const noexcept { return manifest.n_steps; }
    std::size_t n_tokens() const noexcept { return token_map.n_tokens(); }

    /// Attention row for a 1-based layer at a generation step.
    std::span<const float> row(LayerId layer, std::size_t step) const {
        return attention.row(static_cast<std::size_t>(layer - 1), step);
    }

    friend bool operator==(const Trace&, const Trace&) = default;
};

namespace detail {

template <typename... Args>
std::string concat(const Args&... args) {
    std::ostringstream os;
    (os << ... << args);
    return os.str();
}

inline void check_group(std::vector<std::string>& out, std::string_view name, const LayerSet& group,
                        std::size_t n_layers) {
    for (LayerId id : group) {
        if (id < 1 || static_cast<std::size_t>(id) > n_layers) {
            out.push_back(concat("layer group '", name, "' member ", id, " outside [1, ", n_layers, "]"));
        }
    }
}

}  // namespace detail

/// Every invariant violation of `trace`, in a stable order. Empty means valid.
inline std::vector<std::string> validate(const Trace& trace) {
    using detail::concat;
    std::vector<std::string> out;
    const auto& m = trace.manifest;
    const auto& tm = trace.token_map;

    if (m.format_version != kFormatVersion) {
        out.push_back(concat("format_version ", m.format_version, " unsupported"));
    }
    if (m.n_layers == 0) out.push_back("n_layers must be positive");
    if (m.n_heads == 0) out.push_back("n_heads must be positive");
    if (m.n_steps == 0) out.push_back("n_steps must be positive");
    if (m.scheduler_timesteps.size() != m.n_steps) {
        out.push_back(concat("scheduler_timesteps has length ", m.scheduler_timesteps.size(),
                             ", expected ", m.n_steps));
    }
    for (std::size_t s = 1; s < m.scheduler_timesteps.size(); ++s) {
        if (!(m.scheduler_timesteps[s] < m.scheduler_timesteps[s - 1])) {
            out.push_back(concat("scheduler_timesteps not strictly decreasing at index ", s));
            break;
        }
    }
    detail::check_group(out, "down", m.layer_groups.down, m.n_layers);
    detail::check_group(out, "mid", m.layer_groups.mid, m.n_layers);
    detail::check_group(out, "lowres", m.layer_groups.lowres, m.n_layers);

    const std::size_t n = tm.n_tokens();
    if (n < 2) out.push_back(concat("token map has ", n, " tokens, need at least 2"));
    if (tm.dominant_idx && *tm.dominant_idx >= n) {
        out.push_back(concat("dominant_idx ", *tm.dominant_idx, " out of range for ", n, " tokens"));
    }
    if (tm.dominated_idx && *tm.dominated_idx >= n) {
        out.push_back(concat("dominated_idx ", *tm.dominated_idx, " out of range for ", n, " tokens"));
    }
    if (tm.dominant_idx && tm.dominated_idx && *tm.dominant_idx == *tm.dominated_idx) {
        out.push_back(concat("dominant_idx and dominated_idx are both ", *tm.dominant_idx));
    }

    const auto& shape = trace.attention.shape();
    if (shape[0] != m.n_layers || shape[1] != m.n_steps || shape[2] != n) {
        out.push_back(concat("attention shape [", shape[0], "][", shape[1], "][", shape[2],
                             "] does not match manifest/token map [", m.n_layers, "][", m.n_steps, "][",
                             n, "]"));
    } else {
        for (std::size_t l = 0; l < shape[0]; ++l) {
            for (std::size_t s = 0; s < shape[1]; ++s) {
                double sum = 0.0;
                bool in_range = true;
                for (float v : trace.attention.row(l, s)) {
                    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) in_range = false;
                    sum += v;
                }
                if (!in_range) {
                    out.push_back(concat("attention row (", l + 1, ",", s, ") has an entry outside [0, 1]"));
                }
                if (!(std::abs(sum - 1.0) <= kRowSumTolerance)) {
                    out.push_back(concat("attention row (", l + 1, ",", s, ") sums to ", sum));
                }
            }
        }
    }

    if (trace.head_logits) {
        for (const auto& [layer, logits] : *trace.head_logits) {
            if (layer < 1 || static_cast<std::size_t>(layer) > m.n_layers) {
                out.push_back(concat("head logits for layer ", layer, " outside [1, ", m.n_layers, "]"));
                continue;
            }
            const auto& ls = logits.shape();
            if (ls[0] != m.n_heads || ls[1] != m.n_steps || ls[3] != n) {
                out.push_back(concat("head logits for layer ", layer, " have shape [", ls[0], "][", ls[1],
                                     "][", ls[2], "][", ls[3], "], expected [", m.n_heads, "][",
                                     m.n_steps, "][P][", n, "]"));
            }
            for (float v : logits.data()) {
                if (!std::isfinite(v)) {
                    out.push_back(concat("head logits for layer ", layer, " contain a non-finite value"));
                    break;
                }
            }
        }
    }
    return out;
}

}  // namespace dvdlens
