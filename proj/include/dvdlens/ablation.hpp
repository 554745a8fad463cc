// Copyright (c) 2026, dvdlens contributors
// SPDX-License-Identifier: Apache-2.0
//
// Head ablation and outcome bookkeeping.
//
// Ablation multiplies the pre-softmax logits of the selected heads at one
// (layer, step) by a small factor; everything else passes through untouched.
// Ablated generations are then labelled mitigated / unchanged / others from
// externally computed image metrics, and the labels are rolled up per layer.

#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dvdlens/csv.hpp"
#include "dvdlens/dvd_scoring.hpp"
#include "dvdlens/error.hpp"
#include "dvdlens/trace.hpp"

namespace dvdlens::ablation {

using HeadId = int;  // 1-based
using HeadSet = std::set<HeadId>;

inline constexpr double kDefaultScale = 1e-5;

// Outcome thresholds; comparisons are strict exactly where printed so.
inline constexpr double kDvdLpipsMin = 0.5;         // mitigated needs lpips > 0.5
inline constexpr double kMemorizationSscdMax = 0.5;  // mitigated needs sscd < 0.5
inline constexpr double kMemorizationLpipsMin = 0.6; // and lpips > 0.6

struct AblationSpec {
    LayerId layer = 1;
    std::size_t step = 0;
    HeadSet heads;
    double scale = kDefaultScale;
};

enum class Phenomenon { dvd, memorization };
enum class OutcomeLabel { mitigated, unchanged, others };

constexpr std::string_view to_string(Phenomenon p) { return p == Phenomenon::dvd ? "dvd" : "memorization"; }

constexpr std::string_view to_string(OutcomeLabel l) {
    switch (l) {
        case OutcomeLabel::mitigated: return "mitigated";
        case OutcomeLabel::unchanged: return "unchanged";
        case OutcomeLabel::others: return "others";
    }
    return "others";
}

struct AblationRecord {
    std::string prompt_id;
    Phenomenon phenomenon = Phenomenon::dvd;
    LayerId layer = 1;
    HeadSet heads;
    std::optional<double> lpips;
    std::optional<double> sscd;
    std::optional<double> dvd_score;
    bool degraded = false;
};

/// Returns a copy of one layer's logits with the selected heads scaled at the
/// selected step. `layer` must be the layer the logits belong to.
inline LayerLogits ablate_logits(const LayerLogits& logits, LayerId layer, const AblationSpec& spec) {
    if (layer != spec.layer) {
        fail(ErrorCode::InvalidArgument,
             "logits belong to layer " + std::to_string(layer) + ", spec targets " + std::to_string(spec.layer));
    }
    if (spec.heads.empty()) fail(ErrorCode::HeadOutOfRange, "no heads selected");
    if (!(spec.scale > 0.0)) fail(ErrorCode::InvalidArgument, "ablation scale must be positive");
    const std::size_t n_heads = logits.dim(0);
    if (spec.step >= logits.dim(1)) {
        fail(ErrorCode::StepOutOfRange, "step " + std::to_string(spec.step) + " of " + std::to_string(logits.dim(1)));
    }
    for (HeadId h : spec.heads) {
        if (h < 1 || static_cast<std::size_t>(h) > n_heads) {
            fail(ErrorCode::HeadOutOfRange, "head " + std::to_string(h) + " outside [1, " + std::to_string(n_heads) + "]");
        }
    }
    LayerLogits out = logits;
    for (HeadId h : spec.heads) {
        const auto hi = static_cast<std::size_t>(h - 1);
        for (std::size_t p = 0; p < out.dim(2); ++p) {
            for (float& v : out.row(hi, spec.step, p)) {
                v = static_cast<float>(static_cast<double>(v) * spec.scale);
            }
        }
    }
    return out;
}

/// Applies the ablation to a whole set of head logits; other layers are copied.
inline HeadLogits ablate_logits(const HeadLogits& logits, const AblationSpec& spec) {
    auto it = logits.find(spec.layer);
    if (it == logits.end()) {
        fail(ErrorCode::IndexOutOfRange, "no head logits for layer " + std::to_string(spec.layer));
    }
    HeadLogits out = logits;
    out[spec.layer] = ablate_logits(it->second, spec.layer, spec);
    return out;
}

inline OutcomeLabel classify_dvd(const AblationRecord& r) {
    if (r.phenomenon != Phenomenon::dvd) fail(ErrorCode::InvalidArgument, "record is not a dvd record");
    if (!r.lpips || !r.dvd_score) fail(ErrorCode::MissingMetric, "dvd record '" + r.prompt_id + "' needs lpips and dvd_score");
    if (r.degraded) return OutcomeLabel::others;
    return (*r.lpips > kDvdLpipsMin && *r.dvd_score < scoring::kDvdThreshold) ? OutcomeLabel::mitigated
                                                                              : OutcomeLabel::unchanged;
}

inline OutcomeLabel classify_memorization(const AblationRecord& r) {
    if (r.phenomenon != Phenomenon::memorization) {
        fail(ErrorCode::InvalidArgument, "record is not a memorization record");
    }
    if (!r.sscd || !r.lpips) {
        fail(ErrorCode::MissingMetric, "memorization record '" + r.prompt_id + "' needs sscd and lpips");
    }
    if (r.degraded) return OutcomeLabel::others;
    return (*r.sscd < kMemorizationSscdMax && *r.lpips > kMemorizationLpipsMin) ? OutcomeLabel::mitigated
                                                                                : OutcomeLabel::unchanged;
}

inline OutcomeLabel classify(const AblationRecord& r) {
    return r.phenomenon == Phenomenon::dvd ? classify_dvd(r) : classify_memorization(r);
}

/// Per layer: share of prompts with at least one mitigating single head in
/// that layer, among prompts evaluated at that layer.
inline std::map<LayerId, double> layer_mitigation_ratio(std::span<const AblationRecord> records) {
    std::map<LayerId, std::set<std::string>> seen;
    std::map<LayerId, std::set<std::string>> mitigated;
    for (const auto& r : records) {
        if (r.heads.size() != 1) fail(ErrorCode::NotSingleHead, "record '" + r.prompt_id + "' ablates " +
                                                                    std::to_string(r.heads.size()) + " heads");
        seen[r.layer].insert(r.prompt_id);
        if (classify(r) == OutcomeLabel::mitigated) mitigated[r.layer].insert(r.prompt_id);
    }
    std::map<LayerId, double> out;
    for (const auto& [layer, prompts] : seen) {
        out[layer] = static_cast<double>(mitigated[layer].size()) / static_cast<double>(prompts.size());
    }
    return out;
}

/// Share of prompts mitigated by at least one single head in any layer.
inline double any_layer_mitigation_ratio(std::span<const AblationRecord> records) {
    std::set<std::string> seen;
    std::set<std::string> mitigated;
    for (const auto& r : records) {
        if (r.heads.size() != 1) fail(ErrorCode::NotSingleHead, "record '" + r.prompt_id + "' is not single-head");
        seen.insert(r.prompt_id);
        if (classify(r) == OutcomeLabel::mitigated) mitigated.insert(r.prompt_id);
    }
    if (seen.empty()) fail(ErrorCode::EmptyInput, "no records");
    return static_cast<double>(mitigated.size()) / static_cast<double>(seen.size());
}

struct OutcomeRatios {
    double mitigated = 0.0;
    double unchanged = 0.0;
    double others = 0.0;
};

/// Per layer, the mean over prompts of each prompt's outcome fractions across
/// its evaluated head pairs.
inline std::map<LayerId, OutcomeRatios> multi_head_ratios(std::span<const AblationRecord> records) {
    if (records.empty()) fail(ErrorCode::EmptyGroup, "no head-pair records");
    struct Counts {
        std::size_t total = 0;
        std::size_t mitigated = 0;
        std::size_t unchanged = 0;
        std::size_t others = 0;
    };
    std::map<LayerId, std::map<std::string, Counts>> groups;
    for (const auto& r : records) {
        if (r.heads.size() != 2) {
            fail(ErrorCode::NotHeadPair, "record '" + r.prompt_id + "' ablates " + std::to_string(r.heads.size()) + " heads");
        }
        auto& c = groups[r.layer][r.prompt_id];
        ++c.total;
        switch (classify(r)) {
            case OutcomeLabel::mitigated: ++c.mitigated; break;
            case OutcomeLabel::unchanged: ++c.unchanged; break;
            case OutcomeLabel::others: ++c.others; break;
        }
    }
    std::map<LayerId, OutcomeRatios> out;
    for (const auto& [layer, prompts] : groups) {
        OutcomeRatios r;
        for (const auto& [_, c] : prompts) {
            if (c.total == 0) fail(ErrorCode::EmptyGroup, "prompt with no pairs at layer " + std::to_string(layer));
            const auto t = static_cast<double>(c.total);
            r.mitigated += static_cast<double>(c.mitigated) / t;
            r.unchanged += static_cast<double>(c.unchanged) / t;
            r.others += static_cast<double>(c.others) / t;
        }
        const auto p = static_cast<double>(prompts.size());
        r.mitigated /= p;
        r.unchanged /= p;
        r.others /= p;
        out[layer] = r;
    }
    return out;
}

// ---------------------------------------------------------------------------
// records CSV: prompt_id,phenomenon,layer,heads,sscd,lpips,dvd_score,degraded

inline HeadSet parse_heads(std::string_view s) {
    HeadSet out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto end = std::min(s.find(';', start), s.size());
        const auto item = s.substr(start, end - start);
        if (!item.empty()) out.insert(static_cast<HeadId>(csv::to_int(item, "heads")));
        start = end + 1;
    }
    return out;
}

inline std::string format_heads(const HeadSet& heads) {
    std::string out;
    for (HeadId h : heads) {
        if (!out.empty()) out.push_back(';');
        out += std::to_string(h);
    }
    return out;
}

inline bool parse_flag(std::string_view s) {
    if (s == "1" || s == "true" || s == "True" || s == "TRUE" || s == "yes") return true;
    if (s == "0" || s == "false" || s == "False" || s == "FALSE" || s == "no" || s.empty()) return false;
    fail(ErrorCode::MalformedCsv, "degraded: '" + std::string(s) + "' is not a boolean");
}

inline std::vector<AblationRecord> parse_records(std::string_view text) {
    const auto t = csv::parse(text);
    const auto c_prompt = t.require_column("prompt_id");
    const auto c_phen = t.require_column("phenomenon");
    const auto c_layer = t.require_column("layer");
    const auto c_heads = t.require_column("heads");
    const auto c_sscd = t.require_column("sscd");
    const auto c_lpips = t.require_column("lpips");
    const auto c_dvd = t.require_column("dvd_score");
    const auto c_deg = t.require_column("degraded");
    std::vector<AblationRecord> out;
    out.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        AblationRecord r;
        r.prompt_id = row[c_prompt];
        if (row[c_phen] == "dvd") {
            r.phenomenon = Phenomenon::dvd;
        } else if (row[c_phen] == "memorization") {
            r.phenomenon = Phenomenon::memorization;
        } else {
            fail(ErrorCode::MalformedCsv, "phenomenon: '" + row[c_phen] + "' is neither dvd nor memorization");
        }
        r.layer = static_cast<LayerId>(csv::to_int(row[c_layer], "layer"));
        r.heads = parse_heads(row[c_heads]);
        r.sscd = csv::to_optional_double(row[c_sscd], "sscd");
        r.lpips = csv::to_optional_double(row[c_lpips], "lpips");
        r.dvd_score = csv::to_optional_double(row[c_dvd], "dvd_score");
        r.degraded = parse_flag(row[c_deg]);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace dvdlens::ablation
