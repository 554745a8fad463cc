// Copyright (c) 2026, dvdlens contributors
// SPDX-License-Identifier: Apache-2.0
//
// First-step focus-score detector and the threshold x layer-selector grid
// used to pick its configuration.
//
// A selector turns the per-layer focus scores at step 0 into one value:
//   max(set)   largest focus over the set
//   mean(set)  average focus over the set
//   L<l>       focus of a single layer
//   a&b        min of the two layers' focus, i.e. both must clear the threshold
// A trace is flagged when that value is >= the threshold.

#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dvdlens/attention_metrics.hpp"
#include "dvdlens/csv.hpp"
#include "dvdlens/error.hpp"
#include "dvdlens/parallel.hpp"
#include "dvdlens/trace.hpp"

namespace dvdlens::detector {

inline const LayerSet kDefaultAggregateLayers{8, 9, 10};

class LayerSelector {
public:
    enum class Kind { max_over, mean_over, single, both };

    static LayerSelector max_over(LayerSet layers = kDefaultAggregateLayers) {
        return LayerSelector(Kind::max_over, std::move(layers));
    }
    static LayerSelector mean_over(LayerSet layers = kDefaultAggregateLayers) {
        return LayerSelector(Kind::mean_over, std::move(layers));
    }
    static LayerSelector single(LayerId layer) { return LayerSelector(Kind::single, {layer}); }
    static LayerSelector both(LayerId a, LayerId b) {
        if (a == b) fail(ErrorCode::InvalidArgument, "pair selector needs two distinct layers");
        return LayerSelector(Kind::both, {a, b});
    }

    /// Accepts the names produced by name(): "max", "mean", "max(1,2)",
    /// "mean(8,9,10)", "L9", "9&10".
    static LayerSelector parse(std::string_view text) {
        auto parse_set = [&](std::string_view body) {
            LayerSet out;
            std::size_t start = 0;
            while (start <= body.size()) {
                const auto end = std::min(body.find(',', start), body.size());
                out.insert(static_cast<LayerId>(csv::to_int(body.substr(start, end - start), "selector layer")));
                start = end + 1;
            }
            return out;
        };
        auto aggregate = [&](std::string_view prefix, Kind kind) -> std::optional<LayerSelector> {
            if (!text.starts_with(prefix)) return std::nullopt;
            auto rest = text.substr(prefix.size());
            if (rest.empty()) return LayerSelector(kind, kDefaultAggregateLayers);
            if (rest.size() < 3 || rest.front() != '(' || rest.back() != ')') {
                fail(ErrorCode::InvalidArgument, "bad selector '" + std::string(text) + "'");
            }
            auto set = parse_set(rest.substr(1, rest.size() - 2));
            if (set.empty()) fail(ErrorCode::EmptyLayerSet, "selector '" + std::string(text) + "' has no layers");
            return LayerSelector(kind, std::move(set));
        };
        if (auto s = aggregate("max", Kind::max_over)) return *s;
        if (auto s = aggregate("mean", Kind::mean_over)) return *s;
        if (text.starts_with("L")) return single(static_cast<LayerId>(csv::to_int(text.substr(1), "selector layer")));
        if (const auto amp = text.find('&'); amp != std::string_view::npos) {
            return both(static_cast<LayerId>(csv::to_int(text.substr(0, amp), "selector layer")),
                        static_cast<LayerId>(csv::to_int(text.substr(amp + 1), "selector layer")));
        }
        fail(ErrorCode::InvalidArgument, "unknown selector '" + std::string(text) + "'");
    }

    Kind kind() const noexcept { return kind_; }
    const LayerSet& layers() const noexcept { return layers_; }

    std::string name() const {
        auto joined = [&] {
            std::string s;
            for (LayerId l : layers_) {
                if (!s.empty()) s.push_back(',');
                s += std::to_string(l);
            }
            return s;
        };
        switch (kind_) {
            case Kind::max_over: return layers_ == kDefaultAggregateLayers ? "max" : "max(" + joined() + ")";
            case Kind::mean_over: return layers_ == kDefaultAggregateLayers ? "mean" : "mean(" + joined() + ")";
            case Kind::single: return "L" + std::to_string(*layers_.begin());
            case Kind::both: return std::to_string(*layers_.begin()) + "&" + std::to_string(*layers_.rbegin());
        }
        return {};
    }

    /// Aggregates per-layer focus values (indexed by layer id - 1).
    double aggregate(std::span<const double> focus_by_layer) const {
        auto at = [&](LayerId l) { return focus_by_layer[static_cast<std::size_t>(l - 1)]; };
        switch (kind_) {
            case Kind::max_over: {
                double v = at(*layers_.begin());
                for (LayerId l : layers_) v = std::max(v, at(l));
                return v;
            }
            case Kind::mean_over: {
                double sum = 0.0;
                for (LayerId l : layers_) sum += at(l);
                return sum / static_cast<double>(layers_.size());
            }
            case Kind::single: return at(*layers_.begin());
            case Kind::both: return std::min(at(*layers_.begin()), at(*layers_.rbegin()));
        }
        return 0.0;
    }

    /// Tie-break order: max, mean, singles, pairs; then by layer ids.
    friend std::strong_ordering operator<=>(const LayerSelector& a, const LayerSelector& b) {
        if (auto c = static_cast<int>(a.kind_) <=> static_cast<int>(b.kind_); c != 0) return c;
        return std::lexicographical_compare_three_way(a.layers_.begin(), a.layers_.end(), b.layers_.begin(),
                                                      b.layers_.end());
    }
    friend bool operator==(const LayerSelector&, const LayerSelector&) = default;

private:
    LayerSelector(Kind kind, LayerSet layers) : kind_(kind), layers_(std::move(layers)) {
        if (layers_.empty()) fail(ErrorCode::EmptyLayerSet, "selector has no layers");
    }

    Kind kind_;
    LayerSet layers_;
};

inline std::vector<double> default_thresholds() { return {0.010, 0.015, 0.020, 0.025}; }

inline std::vector<LayerSelector> default_selectors() {
    return {LayerSelector::max_over(), LayerSelector::mean_over(), LayerSelector::single(8),
            LayerSelector::single(9),  LayerSelector::single(10),  LayerSelector::both(8, 9),
            LayerSelector::both(8, 10), LayerSelector::both(9, 10)};
}

struct DetectorConfig {
    double threshold = 0.010;
    LayerSelector selector = LayerSelector::both(9, 10);

    friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

struct Detection {
    bool flagged = false;
    double value = 0.0;
    std::size_t peak = 0;
};

inline constexpr std::size_t kDetectionStep = 0;

inline void check_selector(const Trace& trace, const LayerSelector& selector) {
    metrics::check_layer_set(trace, selector.layers());
}

/// Selector value at the first denoising step.
inline double selector_value(const Trace& trace, const LayerSelector& selector, const metrics::FocusParams& params) {
    check_selector(trace, selector);
    std::vector<double> focus(trace.n_layers(), 0.0);
    for (LayerId l : selector.layers()) {
        focus[static_cast<std::size_t>(l - 1)] = metrics::focus_score(trace.row(l, kDetectionStep), params);
    }
    return selector.aggregate(focus);
}

inline Detection detect(const Trace& trace, const DetectorConfig& config, const metrics::FocusParams& params = {}) {
    if (!(config.threshold > 0.0)) fail(ErrorCode::InvalidArgument, "detector threshold must be positive");
    Detection d;
    d.value = selector_value(trace, config.selector, params);
    d.flagged = d.value >= config.threshold;
    d.peak = metrics::peak_token(trace, config.selector.layers(), kDetectionStep);
    return d;
}

struct GridEntry {
    DetectorConfig config;
    double rate_pos = 0.0;
    double rate_neg = 0.0;
    double gap = 0.0;
};

struct GridResult {
    std::vector<GridEntry> entries;  // threshold-major, selectors in the given order
};

namespace detail {

// values[t][k]: selector k's value on trace t.
inline std::vector<std::vector<double>> selector_values(std::span<const Trace> corpus,
                                                        std::span<const LayerSelector> selectors,
                                                        const metrics::FocusParams& params, std::size_t threads) {
    std::vector<std::vector<double>> values(corpus.size());
    parallel_for(corpus.size(), threads, [&](std::size_t t) {
        auto& row = values[t];
        row.reserve(selectors.size());
        for (const auto& sel : selectors) row.push_back(selector_value(corpus[t], sel, params));
    });
    return values;
}

inline double flag_rate(const std::vector<std::vector<double>>& values, std::size_t k, double threshold) {
    std::size_t hits = 0;
    for (const auto& row : values) hits += row[k] >= threshold ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(values.size());
}

}  // namespace detail

inline GridResult grid_eval(std::span<const Trace> pos, std::span<const Trace> neg, std::span<const double> thresholds,
                            std::span<const LayerSelector> selectors, const metrics::FocusParams& params = {},
                            std::size_t threads = 1) {
    if (pos.empty() || neg.empty()) fail(ErrorCode::EmptyCorpus, "both corpora must be nonempty");
    for (double th : thresholds) {
        if (!(th > 0.0)) fail(ErrorCode::InvalidArgument, "detector threshold must be positive");
    }
    const auto vpos = detail::selector_values(pos, selectors, params, threads);
    const auto vneg = detail::selector_values(neg, selectors, params, threads);
    GridResult out;
    out.entries.reserve(thresholds.size() * selectors.size());
    for (double th : thresholds) {
        for (std::size_t k = 0; k < selectors.size(); ++k) {
            GridEntry e{{th, selectors[k]}, detail::flag_rate(vpos, k, th), detail::flag_rate(vneg, k, th), 0.0};
            e.gap = e.rate_pos - e.rate_neg;
            out.entries.push_back(std::move(e));
        }
    }
    return out;
}

/// Entry with the largest gap; ties go to the lower threshold, then to the
/// selector order of LayerSelector's comparison.
inline GridEntry select_config(const GridResult& grid) {
    if (grid.entries.empty()) fail(ErrorCode::EmptyGrid, "grid has no entries");
    const GridEntry* best = &grid.entries.front();
    for (const auto& e : grid.entries) {
        if (e.gap > best->gap) {
            best = &e;
        } else if (e.gap == best->gap) {
            if (e.config.threshold < best->config.threshold ||
                (e.config.threshold == best->config.threshold && e.config.selector < best->config.selector)) {
                best = &e;
            }
        }
    }
    return *best;
}

}  // namespace dvdlens::detector
