// Copyright (c) 2026, dvdlens contributors
// SPDX-License-Identifier: Apache-2.0
//
// Pointwise and temporal attention metrics over token distributions.
//
//   focus(a)     = (max_i a_i - mean_{j != argmax} a_j) / (H(a) / log2 N + eps)
//   alpha_i(a)   = a_i - mean_{j != i} a_j
//   delta_alpha  = alpha[s + 1] - alpha[s]       (generation order)
//
// H is Shannon entropy in bits. Functions are templated on the element type so
// float rows straight out of a trace and double rows from averaging share code.

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <ranges>
#include <span>
#include <vector>

#include "dvdlens/error.hpp"
#include "dvdlens/trace.hpp"

namespace dvdlens::metrics {

struct FocusParams {
    double epsilon = 1e-8;
};

struct DeviationSeries {
    std::size_t token_idx = 0;
    LayerSet layer_set;
    std::vector<double> alpha;
};

struct DistanceStats {
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
    std::size_t count = 0;
};

template <std::floating_point T>
void check_distribution(std::span<const T> dist) {
    if (dist.empty()) fail(ErrorCode::NotADistribution, "empty vector");
    double sum = 0.0;
    for (T v : dist) {
        if (!std::isfinite(v) || v < T(0)) fail(ErrorCode::NotADistribution, "negative or non-finite entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
        fail(ErrorCode::NotADistribution, "entries sum to " + std::to_string(sum));
    }
}

template <std::floating_point T>
double entropy_bits(std::span<const T> dist) {
    check_distribution(dist);
    double h = 0.0;
    for (T v : dist) {
        if (v > T(0)) h -= static_cast<double>(v) * std::log2(static_cast<double>(v));
    }
    return h;
}

template <std::floating_point T>
double focus_score(std::span<const T> dist, const FocusParams& params = {}) {
    if (dist.size() < 2) fail(ErrorCode::NotADistribution, "focus score needs at least 2 tokens");
    if (!(params.epsilon > 0.0)) fail(ErrorCode::InvalidArgument, "focus epsilon must be positive");
    const double h = entropy_bits(dist);
    const auto peak = static_cast<std::size_t>(std::distance(dist.begin(), std::max_element(dist.begin(), dist.end())));
    double others = 0.0;
    for (std::size_t j = 0; j < dist.size(); ++j) {
        if (j != peak) others += dist[j];
    }
    const double n = static_cast<double>(dist.size());
    const double numerator = static_cast<double>(dist[peak]) - others / (n - 1.0);
    return numerator / (h / std::log2(n) + params.epsilon);
}

template <std::floating_point T>
double attention_deviation(std::span<const T> dist, std::size_t token) {
    if (token >= dist.size()) {
        fail(ErrorCode::IndexOutOfRange, "token " + std::to_string(token) + " of " + std::to_string(dist.size()));
    }
    if (dist.size() < 2) fail(ErrorCode::IndexOutOfRange, "deviation needs at least 2 tokens");
    double others = 0.0;
    for (std::size_t j = 0; j < dist.size(); ++j) {
        if (j != token) others += dist[j];
    }
    return static_cast<double>(dist[token]) - others / static_cast<double>(dist.size() - 1);
}

// Convenience overloads for contiguous ranges (vectors, arrays, mutable spans).
template <std::ranges::contiguous_range C>
auto as_const_span(const C& c) {
    return std::span<const std::ranges::range_value_t<C>>(std::ranges::data(c), std::ranges::size(c));
}

template <std::ranges::contiguous_range C>
double entropy_bits(const C& dist) {
    return entropy_bits(as_const_span(dist));
}
template <std::ranges::contiguous_range C>
double focus_score(const C& dist, const FocusParams& params = {}) {
    return focus_score(as_const_span(dist), params);
}
template <std::ranges::contiguous_range C>
double attention_deviation(const C& dist, std::size_t token) {
    return attention_deviation(as_const_span(dist), token);
}

inline void check_layer_set(const Trace& trace, const LayerSet& layers) {
    if (layers.empty()) fail(ErrorCode::EmptyLayerSet, "layer set is empty");
    for (LayerId l : layers) {
        if (l < 1 || static_cast<std::size_t>(l) > trace.n_layers()) {
            fail(ErrorCode::IndexOutOfRange,
                 "layer " + std::to_string(l) + " outside [1, " + std::to_string(trace.n_layers()) + "]");
        }
    }
}

inline void check_step(const Trace& trace, std::size_t step) {
    if (step >= trace.n_steps()) {
        fail(ErrorCode::IndexOutOfRange,
             "step " + std::to_string(step) + " outside [0, " + std::to_string(trace.n_steps()) + ")");
    }
}

/// Element-wise mean of the attention rows of `layers` at `step`.
inline std::vector<double> mean_row(const Trace& trace, const LayerSet& layers, std::size_t step) {
    check_layer_set(trace, layers);
    check_step(trace, step);
    std::vector<double> acc(trace.n_tokens(), 0.0);
    for (LayerId l : layers) {
        const auto r = trace.row(l, step);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += r[i];
    }
    for (double& v : acc) v /= static_cast<double>(layers.size());
    return acc;
}

inline DeviationSeries deviation_series(const Trace& trace, const LayerSet& layers, std::size_t token) {
    check_layer_set(trace, layers);
    if (token >= trace.n_tokens()) fail(ErrorCode::IndexOutOfRange, "token " + std::to_string(token));
    DeviationSeries out{token, layers, {}};
    out.alpha.reserve(trace.n_steps());
    for (std::size_t s = 0; s < trace.n_steps(); ++s) {
        out.alpha.push_back(attention_deviation(mean_row(trace, layers, s), token));
    }
    return out;
}

inline std::vector<double> delta_series(const DeviationSeries& series) {
    const auto& a = series.alpha;
    if (a.size() < 2) fail(ErrorCode::TooShort, "need at least 2 steps for a delta series");
    std::vector<double> out(a.size() - 1);
    for (std::size_t k = 0; k + 1 < a.size(); ++k) out[k] = a[k + 1] - a[k];
    return out;
}

/// Means of consecutive chunks of `bin_size`; a short final chunk is averaged
/// over its own length.
inline std::vector<double> bin_deltas(std::span<const double> deltas, std::size_t bin_size) {
    if (bin_size == 0) fail(ErrorCode::InvalidArgument, "bin_size must be at least 1");
    std::vector<double> out;
    for (std::size_t start = 0; start < deltas.size(); start += bin_size) {
        const std::size_t end = std::min(deltas.size(), start + bin_size);
        double sum = 0.0;
        for (std::size_t k = start; k < end; ++k) sum += deltas[k];
        out.push_back(sum / static_cast<double>(end - start));
    }
    return out;
}

/// Argmax of the layer-set mean row; ties go to the lowest index.
inline std::size_t peak_token(const Trace& trace, const LayerSet& layers, std::size_t step) {
    const auto row = mean_row(trace, layers, step);
    return static_cast<std::size_t>(std::distance(row.begin(), std::max_element(row.begin(), row.end())));
}

inline std::vector<double> layer_focus_profile(const Trace& trace, std::size_t step, const FocusParams& params = {}) {
    check_step(trace, step);
    std::vector<double> out;
    out.reserve(trace.n_layers());
    for (LayerId l = 1; static_cast<std::size_t>(l) <= trace.n_layers(); ++l) {
        out.push_back(focus_score(trace.row(l, step), params));
    }
    return out;
}

namespace detail {

// Linear interpolation between closest ranks on sorted data.
inline double quantile_sorted(std::span<const double> sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

/// Median and quartiles of a sample. Even counts take the mean of the two
/// central values for the median.
inline DistanceStats summarize(std::vector<double> values) {
    if (values.empty()) fail(ErrorCode::EmptyInput, "no values to summarize");
    std::sort(values.begin(), values.end());
    return {detail::quantile_sorted(values, 0.5), detail::quantile_sorted(values, 0.25),
            detail::quantile_sorted(values, 0.75), values.size()};
}

/// Pairwise cosine distances 1 - cos(u, v) over all unordered pairs.
inline std::vector<double> pairwise_cosine_distances(std::span<const std::vector<double>> embeddings) {
    if (embeddings.size() < 2) fail(ErrorCode::EmptyInput, "need at least 2 vectors");
    const std::size_t dim = embeddings.front().size();
    std::vector<double> norms;
    norms.reserve(embeddings.size());
    for (const auto& v : embeddings) {
        if (v.size() != dim) fail(ErrorCode::DimensionMismatch, "embedding dimensions differ");
        double sq = 0.0;
        for (double x : v) sq += x * x;
        if (!(sq > 0.0)) fail(ErrorCode::ZeroNormVector, "embedding with zero norm");
        norms.push_back(std::sqrt(sq));
    }
    std::vector<double> out;
    out.reserve(embeddings.size() * (embeddings.size() - 1) / 2);
    for (std::size_t a = 0; a < embeddings.size(); ++a) {
        for (std::size_t b = a + 1; b < embeddings.size(); ++b) {
            double dot = 0.0;
            for (std::size_t k = 0; k < dim; ++k) dot += embeddings[a][k] * embeddings[b][k];
            out.push_back(1.0 - dot / (norms[a] * norms[b]));
        }
    }
    return out;
}

inline DistanceStats cosine_distance_stats(std::span<const std::vector<double>> embeddings) {
    return summarize(pairwise_cosine_distances(embeddings));
}

/// L2 norm of the guidance difference cond - uncond.
inline double noise_magnitude(std::span<const double> cond, std::span<const double> uncond) {
    if (cond.size() != uncond.size()) fail(ErrorCode::DimensionMismatch, "cond and uncond lengths differ");
    double sq = 0.0;
    for (std::size_t k = 0; k < cond.size(); ++k) {
        const double d = cond[k] - uncond[k];
        sq += d * d;
    }
    return std::sqrt(sq);
}

}  // namespace dvdlens::metrics
