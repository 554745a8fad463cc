// Copyright (c) 2026, dvdlens contributors
// SPDX-License-Identifier: Apache-2.0
//
// DvD Score from VQA yes-counts and the benchmark inclusion rule.
//
//   score = C1 * (N - C2) / N^2 * 100
//
// C1 counts "yes" for the concept expected to dominate, C2 for the one
// expected to be suppressed. A score at or above 36 marks a DvD image; a
// prompt enters the benchmark when at least 7 of its images are DvD.

#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dvdlens/attention_metrics.hpp"
#include "dvdlens/csv.hpp"
#include "dvdlens/error.hpp"

namespace dvdlens::scoring {

inline constexpr int kDefaultQuestions = 5;
inline constexpr double kDvdThreshold = 36.0;
inline constexpr std::size_t kMinDvdImages = 7;

/// Comparison used against the threshold. The main-text rule is inclusive;
/// the benchmark-construction pseudocode reads exclusive.
enum class Boundary { inclusive, exclusive };
inline constexpr Boundary kDvdBoundary = Boundary::inclusive;

struct VqaTally {
    int c1 = 0;
    int c2 = 0;
    int n = kDefaultQuestions;

    friend bool operator==(const VqaTally&, const VqaTally&) = default;
};

inline bool is_valid(const VqaTally& t) {
    return t.n >= 1 && t.c1 >= 0 && t.c1 <= t.n && t.c2 >= 0 && t.c2 <= t.n;
}

inline double dvd_score(const VqaTally& t) {
    if (!is_valid(t)) {
        fail(ErrorCode::InvalidTally, "tally (" + std::to_string(t.c1) + ", " + std::to_string(t.c2) + ", " +
                                          std::to_string(t.n) + ") out of range");
    }
    return static_cast<double>(t.c1 * (t.n - t.c2)) * 100.0 / static_cast<double>(t.n * t.n);
}

constexpr bool passes(double score, double threshold, Boundary boundary = kDvdBoundary) {
    return boundary == Boundary::inclusive ? score >= threshold : score > threshold;
}

constexpr bool is_dvd(double score, double threshold = kDvdThreshold, Boundary boundary = kDvdBoundary) {
    return passes(score, threshold, boundary);
}

inline std::size_t count_dvd(std::span<const double> scores, double threshold = kDvdThreshold,
                             Boundary boundary = kDvdBoundary) {
    return static_cast<std::size_t>(
        std::count_if(scores.begin(), scores.end(), [&](double s) { return passes(s, threshold, boundary); }));
}

/// Benchmark inclusion: at least `min_count` of the prompt's images are DvD.
inline bool image_set_filter(std::span<const double> scores, std::size_t min_count = kMinDvdImages,
                             double threshold = kDvdThreshold, Boundary boundary = kDvdBoundary) {
    if (scores.empty()) fail(ErrorCode::EmptyInput, "no image scores");
    return count_dvd(scores, threshold, boundary) >= min_count;
}

struct PromptSummary {
    std::string prompt_id;
    std::size_t count = 0;
    double mean = 0.0;
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
    double min = 0.0;
    double max = 0.0;
};

/// Scores grouped per prompt, in first-seen order.
using PromptScores = std::vector<std::pair<std::string, std::vector<double>>>;

inline std::vector<PromptSummary> prompt_summary(const PromptScores& per_prompt) {
    std::vector<PromptSummary> out;
    out.reserve(per_prompt.size());
    for (const auto& [prompt, scores] : per_prompt) {
        if (scores.empty()) fail(ErrorCode::EmptyInput, "prompt '" + prompt + "' has no scores");
        double sum = 0.0;
        for (double s : scores) sum += s;
        const auto stats = metrics::summarize(scores);
        const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
        out.push_back({prompt, scores.size(), sum / static_cast<double>(scores.size()), stats.median, stats.q25,
                       stats.q75, *lo, *hi});
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV inputs

struct ImageTally {
    std::string prompt_id;
    std::string image_id;
    VqaTally tally;
};

/// Reads either a container vqa.csv (image_id,c1,c2,n) or a standalone score
/// CSV (prompt_id,image_id,c1,c2,n). Rows without prompt_id get `default_prompt`.
inline std::vector<ImageTally> parse_tallies(std::string_view text, const std::string& default_prompt = "") {
    const auto t = csv::parse(text);
    const auto prompt_col = t.column("prompt_id");
    const auto image_col = t.require_column("image_id");
    const auto c1_col = t.require_column("c1");
    const auto c2_col = t.require_column("c2");
    const auto n_col = t.column("n");
    std::vector<ImageTally> out;
    out.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        ImageTally it;
        it.prompt_id = prompt_col ? row[*prompt_col] : default_prompt;
        it.image_id = row[image_col];
        it.tally.c1 = static_cast<int>(csv::to_int(row[c1_col], "c1"));
        it.tally.c2 = static_cast<int>(csv::to_int(row[c2_col], "c2"));
        it.tally.n = n_col && !row[*n_col].empty() ? static_cast<int>(csv::to_int(row[*n_col], "n"))
                                                   : kDefaultQuestions;
        if (!is_valid(it.tally)) {
            fail(ErrorCode::InvalidTally, "image '" + it.image_id + "' has an out-of-range tally");
        }
        out.push_back(std::move(it));
    }
    return out;
}

inline PromptScores group_scores(const std::vector<ImageTally>& images) {
    PromptScores out;
    std::map<std::string, std::size_t> slot;
    for (const auto& img : images) {
        auto [it, inserted] = slot.emplace(img.prompt_id, out.size());
        if (inserted) out.emplace_back(img.prompt_id, std::vector<double>{});
        out[it->second].second.push_back(dvd_score(img.tally));
    }
    return out;
}

}  // namespace dvdlens::scoring
