// Copyright (c) 2026, dvdlens contributors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>

#include "dvdlens/detector.hpp"
#include "dvdlens/synth.hpp"
#include "support/fixtures.hpp"

using namespace dvdlens;
using namespace dvdlens::detector;

namespace {

// Two-level row (peak at token 0) whose focus score is `target`.
std::vector<double> row_with_focus(std::size_t n, double target) {
    auto row = [n](double p) {
        std::vector<double> v(n, (1.0 - p) / static_cast<double>(n - 1));
        v[0] = p;
        return v;
    };
    if (target <= 0.0) return fixtures::uniform(n);
    double lo = 1.0 / static_cast<double>(n);
    double hi = 1.0 - 1e-9;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (metrics::focus_score(row(mid)) < target ? lo : hi) = mid;
    }
    return row(hi);
}

// 10-layer trace whose layer l has focus focus[l] at step 0 (others uniform).
Trace trace_with_focus(const std::map<LayerId, double>& focus, std::size_t n = 6) {
    return fixtures::make_trace(10, 2, n, [&](LayerId l, std::size_t) {
        auto it = focus.find(l);
        return it == focus.end() ? fixtures::uniform(n) : row_with_focus(n, it->second);
    });
}

GridEntry entry(double th, LayerSelector sel, double pos, double neg) {
    return {{th, std::move(sel)}, pos, neg, pos - neg};
}

}  // namespace

TEST(Selector, ParseAndName) {
    for (const auto& s : default_selectors()) EXPECT_EQ(LayerSelector::parse(s.name()), s);
    EXPECT_EQ(LayerSelector::parse("9&10"), LayerSelector::both(9, 10));
    EXPECT_EQ(LayerSelector::parse("L8"), LayerSelector::single(8));
    EXPECT_EQ(LayerSelector::parse("max(1,2)"), LayerSelector::max_over({1, 2}));
    EXPECT_THROW(LayerSelector::parse("median"), Error);
    EXPECT_THROW(LayerSelector::parse("9&9"), Error);
}

TEST(Selector, DefaultOrderIsTieOrder) {
    const auto s = default_selectors();
    ASSERT_EQ(s.size(), 8u);
    EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
    EXPECT_EQ(s.back(), LayerSelector::both(9, 10));
}

TEST(Detect, Examples) {
    const auto flat = fixtures::uniform_trace(16, 2, 5);
    for (double th : default_thresholds()) {
        for (const auto& sel : default_selectors()) {
            const auto d = detect(flat, {th, sel});
            EXPECT_FALSE(d.flagged);
            EXPECT_NEAR(d.value, 0.0, 1e-12);
        }
    }
    const auto t = trace_with_focus({{9, 0.02}, {10, 0.005}});
    const auto both = detect(t, {0.010, LayerSelector::both(9, 10)});
    EXPECT_FALSE(both.flagged);
    EXPECT_NEAR(both.value, 0.005, 1e-7);  // rows are stored as float32

    const auto single = detect(trace_with_focus({{10, 0.012}}), {0.010, LayerSelector::single(10)});
    EXPECT_TRUE(single.flagged);
    EXPECT_EQ(single.peak, 0u);
}

TEST(Detect, InclusiveThreshold) {
    const auto t = trace_with_focus({{10, 0.02}});
    const double v = selector_value(t, LayerSelector::single(10), {});
    EXPECT_TRUE(detect(t, {v, LayerSelector::single(10)}).flagged);
    EXPECT_FALSE(detect(t, {std::nextafter(v, 1.0), LayerSelector::single(10)}).flagged);
}

TEST(Detect, Errors) {
    const auto t = fixtures::uniform_trace(10, 1, 3);
    EXPECT_THROW(detect(t, {0.0, LayerSelector::single(9)}), Error);
    EXPECT_THROW(detect(t, {0.01, LayerSelector::single(11)}), Error);
}

TEST(Grid, Examples) {
    std::mt19937_64 rng(8);
    std::vector<Trace> corpus;
    for (int k = 0; k < 6; ++k) corpus.push_back(fixtures::random_trace(rng, 12, 1, 5));
    const auto th = default_thresholds();
    const auto sel = default_selectors();
    const auto same = grid_eval(corpus, corpus, th, sel);
    ASSERT_EQ(same.entries.size(), 32u);
    for (const auto& e : same.entries) EXPECT_EQ(e.gap, 0.0);

    const std::vector<Trace> hot{fixtures::make_trace(10, 1, 4, [](LayerId, std::size_t) { return fixtures::one_hot(4, 1); })};
    const std::vector<Trace> flat{fixtures::uniform_trace(10, 1, 4)};
    const std::vector<LayerSelector> singles{LayerSelector::single(8), LayerSelector::single(9), LayerSelector::single(10)};
    const std::vector<double> many{1e-6, 0.01, 0.5, 1.0, 1e7};
    for (const auto& e : grid_eval(hot, flat, many, singles).entries) EXPECT_EQ(e.gap, 1.0);

    EXPECT_THROW(grid_eval(std::vector<Trace>{}, flat, th, sel), Error);
    EXPECT_THROW(grid_eval(flat, std::vector<Trace>{}, th, sel), Error);
}

TEST(Grid, RatesMatchPerTraceDetect) {
    synth::CorpusSpec spec;
    spec.count_pos = 30;
    spec.count_neg = 30;
    spec.seed = 77;
    const auto corpus = synth::gen_corpus(spec, 2);
    const auto th = default_thresholds();
    const auto sel = default_selectors();
    const auto grid = grid_eval(corpus.pos, corpus.neg, th, sel, {}, 3);
    std::size_t k = 0;
    for (double t : th) {
        for (const auto& s : sel) {
            const auto& e = grid.entries[k++];
            EXPECT_EQ(e.config, (DetectorConfig{t, s}));
            std::size_t pos = 0, neg = 0;
            for (const auto& tr : corpus.pos) pos += detect(tr, {t, s}).flagged;
            for (const auto& tr : corpus.neg) neg += detect(tr, {t, s}).flagged;
            EXPECT_EQ(e.rate_pos, static_cast<double>(pos) / 30.0);
            EXPECT_EQ(e.rate_neg, static_cast<double>(neg) / 30.0);
            EXPECT_EQ(e.gap, e.rate_pos - e.rate_neg);
        }
    }
    auto shuffled = corpus.pos;
    std::mt19937_64 rng(1);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto again = grid_eval(shuffled, corpus.neg, th, sel, {}, 1);
    for (std::size_t i = 0; i < grid.entries.size(); ++i) EXPECT_EQ(again.entries[i].rate_pos, grid.entries[i].rate_pos);
}

TEST(Grid, RatesNonIncreasingInThreshold) {
    std::mt19937_64 rng(9);
    std::vector<Trace> corpus;
    std::uniform_real_distribution<double> f(0.0, 0.04);
    for (int k = 0; k < 60; ++k) corpus.push_back(trace_with_focus({{8, f(rng)}, {9, f(rng)}, {10, f(rng)}}));
    const std::vector<double> th{0.005, 0.010, 0.015, 0.020, 0.025, 0.030};
    const auto sel = default_selectors();
    const auto g = grid_eval(corpus, corpus, th, sel);
    for (std::size_t k = 0; k < sel.size(); ++k) {
        for (std::size_t r = 1; r < th.size(); ++r) {
            EXPECT_LE(g.entries[r * sel.size() + k].rate_pos, g.entries[(r - 1) * sel.size() + k].rate_pos);
        }
    }
}

TEST(Grid, MaxFlagSetContainsMeanAndPairs) {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> f(0.0, 0.04);
    for (int k = 0; k < 200; ++k) {
        const auto t = trace_with_focus({{8, f(rng)}, {9, f(rng)}, {10, f(rng)}});
        for (double th : default_thresholds()) {
            if (!detect(t, {th, LayerSelector::max_over()}).flagged) {
                EXPECT_FALSE(detect(t, {th, LayerSelector::mean_over()}).flagged);
                for (auto [a, b] : {std::pair{8, 9}, std::pair{8, 10}, std::pair{9, 10}}) {
                    EXPECT_FALSE(detect(t, {th, LayerSelector::both(a, b)}).flagged);
                }
            }
        }
    }
}

// A pair can flag where the three-layer mean does not, so the mean flag set
// does not contain the pair flag sets.
TEST(Grid, PairFlagSetNotContainedInMean) {
    const auto t = trace_with_focus({{9, 0.02}, {10, 0.02}});
    EXPECT_TRUE(detect(t, {0.015, LayerSelector::both(9, 10)}).flagged);
    EXPECT_FALSE(detect(t, {0.015, LayerSelector::mean_over()}).flagged);
}

TEST(Select, ReferenceTableMaximizesGap) {
    const auto best = select_config(fixtures::reference_rate_grid());
    EXPECT_EQ(best.config.threshold, 0.010);
    EXPECT_EQ(best.config.selector, LayerSelector::single(10));
    EXPECT_NEAR(best.gap * 100.0, 37.34, 1e-9);
}

TEST(Select, ReferenceTableRestrictedToPairs) {
    GridResult pairs;
    for (const auto& e : fixtures::reference_rate_grid().entries) {
        if (e.config.selector.kind() == LayerSelector::Kind::both) pairs.entries.push_back(e);
    }
    const auto best = select_config(pairs);
    EXPECT_EQ(best.config.threshold, 0.010);
    EXPECT_EQ(best.config.selector, LayerSelector::both(9, 10));
    EXPECT_NEAR(best.gap * 100.0, 37.00, 1e-9);
    EXPECT_NEAR(best.rate_pos * 100.0, 70.67, 1e-9);
    EXPECT_NEAR(best.rate_neg * 100.0, 33.67, 1e-9);
}

TEST(Select, TieRules) {
    GridResult one{{entry(0.02, LayerSelector::single(8), 0.3, 0.1)}};
    EXPECT_EQ(select_config(one).config.threshold, 0.02);

    GridResult by_threshold{{entry(0.015, LayerSelector::max_over(), 0.5, 0.25),
                             entry(0.010, LayerSelector::both(9, 10), 0.75, 0.5)}};
    EXPECT_EQ(select_config(by_threshold).config.threshold, 0.010);

    GridResult by_selector{{entry(0.010, LayerSelector::both(8, 9), 0.5, 0.25),
                            entry(0.010, LayerSelector::single(10), 0.5, 0.25),
                            entry(0.010, LayerSelector::mean_over(), 0.75, 0.5)}};
    EXPECT_EQ(select_config(by_selector).config.selector, LayerSelector::mean_over());

    EXPECT_THROW(select_config(GridResult{}), Error);
}
