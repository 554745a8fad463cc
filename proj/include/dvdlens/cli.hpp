// Copyright (c) 2026, dvdlens contributors
// SPDX-License-Identifier: Apache-2.0
//
// `dvdlens` command line. Subcommands only orchestrate library calls and
// tabulate their results; no metric is computed here.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#pragma once

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dvdlens/ablation.hpp"
#include "dvdlens/attention_metrics.hpp"
#include "dvdlens/config.hpp"
#include "dvdlens/detector.hpp"
#include "dvdlens/dvd_scoring.hpp"
#include "dvdlens/parallel.hpp"
#include "dvdlens/report.hpp"
#include "dvdlens/synth.hpp"
#include "dvdlens/trace_io.hpp"

namespace dvdlens::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

inline constexpr const char* kThreadsEnv = "DVDLENS_THREADS";

struct RunConfig {
    std::string subcommand;
    std::string input;
    std::string pos;
    std::string neg;
    std::string config;
    std::string format = "json";
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::size_t resolve_threads(const RunConfig& rc) {
    if (rc.threads) return std::max<std::size_t>(1, *rc.threads);
    if (const char* env = std::getenv(kThreadsEnv); env && *env) {
        try {
            const long long v = csv::to_int(env, kThreadsEnv);
            if (v >= 1) return static_cast<std::size_t>(v);
        } catch (const Error&) {
        }
        throw UsageError(std::string(kThreadsEnv) + " must be a positive integer");
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

inline config::KeyValues load_config(const RunConfig& rc) {
    if (rc.config.empty()) return config::KeyValues::parse("");
    std::string text;
    try {
        text = io::read_file(rc.config);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    return config::KeyValues::parse(text);
}

inline metrics::FocusParams focus_params(const config::KeyValues& kv) {
    metrics::FocusParams p;
    p.epsilon = kv.get_double("epsilon", p.epsilon);
    if (!(p.epsilon > 0.0)) throw config::ConfigError("epsilon must be positive");
    return p;
}

inline bool is_container(const fs::path& p) {
    std::error_code ec;
    if (fs::is_directory(p, ec)) return fs::is_regular_file(p / std::string(io::kManifestFile), ec);
    return fs::is_regular_file(p, ec) && io::is_zip_path(p);
}

/// A single container, or a directory whose children are containers (sorted by name).
inline std::vector<fs::path> corpus_paths(const fs::path& root) {
    if (is_container(root)) return {root};
    std::error_code ec;
    if (!fs::is_directory(root, ec)) fail(ErrorCode::IoFailure, "no trace container or corpus at " + root.string());
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (is_container(entry.path())) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    if (out.empty()) fail(ErrorCode::EmptyCorpus, "no trace containers under " + root.string());
    return out;
}

inline std::vector<Trace> load_corpus(const std::vector<fs::path>& paths, std::size_t threads) {
    std::vector<Trace> out(paths.size());
    parallel_for(paths.size(), threads, [&](std::size_t i) { out[i] = io::read_trace(paths[i]); });
    return out;
}

inline std::string trace_label(const fs::path& p) { return p.filename().string(); }

inline report::Cell cell(std::size_t v) { return static_cast<long long>(v); }
inline report::Cell cell(int v) { return static_cast<long long>(v); }
inline report::Cell cell(double v) { return v; }
inline report::Cell cell(bool v) { return v; }
inline report::Cell cell(std::string v) { return v; }
inline report::Cell cell(std::string_view v) { return std::string(v); }
inline report::Cell cell(const char* v) { return std::string(v); }

inline std::string join_layers(const LayerSet& s) {
    std::string out;
    for (LayerId l : s) out += (out.empty() ? "" : ";") + std::to_string(l);
    return out;
}

// ---------------------------------------------------------------------------
// score

inline report::Report cmd_score(const RunConfig& rc, const config::KeyValues& kv) {
    const double threshold = kv.get_double("threshold", scoring::kDvdThreshold);
    const auto min_count = kv.get_int("min_count", static_cast<long long>(scoring::kMinDvdImages));
    if (min_count < 0) throw config::ConfigError("min_count must be nonnegative");
    const std::string boundary_name = kv.get_or("boundary", "inclusive");
    scoring::Boundary boundary;
    if (boundary_name == "inclusive") {
        boundary = scoring::Boundary::inclusive;
    } else if (boundary_name == "exclusive") {
        boundary = scoring::Boundary::exclusive;
    } else {
        throw config::ConfigError("boundary must be inclusive or exclusive");
    }
    kv.reject_unused();

    const fs::path input = rc.input;
    std::vector<scoring::ImageTally> images;
    if (is_container(input)) {
        const auto c = io::Container::open(input);
        const auto [manifest, tokens] = io::manifest_from_json(c.require(io::kManifestFile));
        const std::string prompt = tokens.prompt_text.empty() ? trace_label(input) : tokens.prompt_text;
        images = scoring::parse_tallies(c.require(io::kVqaFile), prompt);
    } else {
        images = scoring::parse_tallies(io::read_file(input), trace_label(input));
    }

    report::Report rep;
    auto& img = rep.add_table("images", {"prompt_id", "image_id", "c1", "c2", "n", "dvd_score", "is_dvd"});
    for (const auto& it : images) {
        const double s = scoring::dvd_score(it.tally);
        img.add_row({it.prompt_id, it.image_id, cell(it.tally.c1), cell(it.tally.c2), cell(it.tally.n), s,
                     scoring::is_dvd(s, threshold, boundary)});
    }
    const auto grouped = scoring::group_scores(images);
    const auto summaries = scoring::prompt_summary(grouped);
    auto& pr = rep.add_table("prompts", {"prompt_id", "count", "mean", "median", "q25", "q75", "min", "max",
                                         "dvd_images", "in_benchmark"});
    for (std::size_t k = 0; k < summaries.size(); ++k) {
        const auto& s = summaries[k];
        const auto& scores = grouped[k].second;
        pr.add_row({s.prompt_id, cell(s.count), s.mean, s.median, s.q25, s.q75, s.min, s.max,
                    cell(scoring::count_dvd(scores, threshold, boundary)),
                    scoring::image_set_filter(scores, static_cast<std::size_t>(min_count), threshold, boundary)});
    }
    return rep;
}

// ---------------------------------------------------------------------------
// analyze

inline report::Report cmd_analyze(const RunConfig& rc, const config::KeyValues& kv) {
    const auto params = focus_params(kv);
    const auto step = kv.get_int("step", 0);
    const auto bin_size = kv.get_int("bin_size", 10);
    if (step < 0) throw config::ConfigError("step must be nonnegative");
    if (bin_size < 1) throw config::ConfigError("bin_size must be at least 1");
    const auto dominant_layers_cfg = kv.get_int_set("dominant_layers");
    const auto dominated_layers_cfg = kv.get_int_set("dominated_layers");
    const auto peak_layers_cfg = kv.get_int_set("peak_layers");
    kv.reject_unused();

    const Trace t = io::read_trace(rc.input);
    const auto& groups = t.manifest.layer_groups;
    const LayerSet dominant_layers = dominant_layers_cfg.empty() ? groups.lowres : dominant_layers_cfg;
    const LayerSet dominated_layers = dominated_layers_cfg.empty() ? groups.mid : dominated_layers_cfg;
    const LayerSet peak_layers = peak_layers_cfg.empty() ? groups.lowres : peak_layers_cfg;
    const auto s = static_cast<std::size_t>(step);

    report::Report rep;
    const auto peak = metrics::peak_token(t, peak_layers, s);
    auto& summary = rep.add_table("summary", {"model_id", "n_layers", "n_steps", "n_tokens", "step", "peak_layers",
                                              "peak_token", "peak_token_text"});
    summary.add_row({t.manifest.model_id, cell(t.n_layers()), cell(t.n_steps()), cell(t.n_tokens()), cell(s),
                     join_layers(peak_layers), cell(peak), t.token_map.tokens[peak]});

    auto& focus = rep.add_table("layer_focus", {"layer", "focus"});
    const auto profile = metrics::layer_focus_profile(t, s, params);
    for (std::size_t l = 0; l < profile.size(); ++l) focus.add_row({cell(l + 1), profile[l]});

    struct Role {
        std::string name;
        std::size_t token;
        LayerSet layers;
    };
    std::vector<Role> roles;
    roles.push_back({t.token_map.dominant_idx ? "dominant" : "peak", t.token_map.dominant_idx.value_or(peak),
                     dominant_layers});
    if (t.token_map.dominated_idx) roles.push_back({"dominated", *t.token_map.dominated_idx, dominated_layers});

    auto& dev = rep.add_table("deviation", {"role", "token", "layers", "step", "timestep", "alpha", "delta"});
    auto& bins = rep.add_table("delta_bins", {"role", "bin", "first_step", "last_step", "mean_delta"});
    for (const auto& role : roles) {
        const auto series = metrics::deviation_series(t, role.layers, role.token);
        std::vector<double> deltas;
        if (series.alpha.size() >= 2) deltas = metrics::delta_series(series);
        for (std::size_t k = 0; k < series.alpha.size(); ++k) {
            dev.add_row({role.name, cell(role.token), join_layers(role.layers), cell(k),
                         t.manifest.scheduler_timesteps[k], series.alpha[k],
                         k < deltas.size() ? report::Cell(deltas[k]) : report::Cell(nullptr)});
        }
        const auto binned = metrics::bin_deltas(deltas, static_cast<std::size_t>(bin_size));
        const auto width = static_cast<std::size_t>(bin_size);
        for (std::size_t b = 0; b < binned.size(); ++b) {
            // delta k spans steps k -> k+1
            const std::size_t first = b * width;
            const std::size_t last = std::min(deltas.size(), first + width);
            bins.add_row({role.name, cell(b), cell(first), cell(last), binned[b]});
        }
    }

    if (auto noise = io::read_member(rc.input, io::kNoiseFile)) {
        const auto table = csv::parse(*noise);
        const auto c_cond = table.require_column("cond");
        const auto c_uncond = table.require_column("uncond");
        std::vector<double> cond;
        std::vector<double> uncond;
        for (const auto& row : table.rows) {
            cond.push_back(csv::to_double(row[c_cond], "cond"));
            uncond.push_back(csv::to_double(row[c_uncond], "uncond"));
        }
        auto& nt = rep.add_table("noise", {"elements", "noise_magnitude"});
        nt.add_row({cell(cond.size()), metrics::noise_magnitude(cond, uncond)});
    }
    return rep;
}

// ---------------------------------------------------------------------------
// detect / grid

inline report::Report cmd_detect(const RunConfig& rc, const config::KeyValues& kv) {
    const auto params = focus_params(kv);
    detector::DetectorConfig cfg;
    cfg.threshold = kv.get_double("threshold", cfg.threshold);
    if (auto sel = kv.get("selector")) {
        try {
            cfg.selector = detector::LayerSelector::parse(*sel);
        } catch (const Error& e) {
            throw config::ConfigError(e.what());
        }
    }
    if (!(cfg.threshold > 0.0)) throw config::ConfigError("threshold must be positive");
    kv.reject_unused();

    const auto paths = corpus_paths(rc.input);
    const auto threads = resolve_threads(rc);
    std::vector<std::optional<detector::Detection>> results(paths.size());
    std::vector<std::string> peak_text(paths.size());
    parallel_for(paths.size(), threads, [&](std::size_t i) {
        const Trace t = io::read_trace(paths[i]);
        results[i] = detector::detect(t, cfg, params);
        peak_text[i] = t.token_map.tokens[results[i]->peak];
    });

    report::Report rep;
    auto& tab = rep.add_table("detections", {"trace", "threshold", "selector", "flagged", "value", "peak",
                                             "peak_token_text"});
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const auto& d = *results[i];
        tab.add_row({trace_label(paths[i]), cfg.threshold, cfg.selector.name(), d.flagged, d.value, cell(d.peak),
                     peak_text[i]});
    }
    return rep;
}

inline void add_grid_row(report::Table& t, const detector::GridEntry& e) {
    t.add_row({e.config.threshold, e.config.selector.name(), e.rate_pos, e.rate_neg, e.gap});
}

inline report::Report cmd_grid(const RunConfig& rc, const config::KeyValues& kv) {
    const auto params = focus_params(kv);
    auto thresholds = kv.get_double_list("thresholds");
    if (thresholds.empty()) thresholds = detector::default_thresholds();
    std::vector<detector::LayerSelector> selectors;
    for (const auto& name : kv.get_list("selectors")) {
        try {
            selectors.push_back(detector::LayerSelector::parse(name));
        } catch (const Error& e) {
            throw config::ConfigError(e.what());
        }
    }
    if (selectors.empty()) selectors = detector::default_selectors();
    for (double th : thresholds) {
        if (!(th > 0.0)) throw config::ConfigError("thresholds must be positive");
    }
    kv.reject_unused();

    const auto threads = resolve_threads(rc);
    const auto pos = load_corpus(corpus_paths(rc.pos), threads);
    const auto neg = load_corpus(corpus_paths(rc.neg), threads);
    const auto grid = detector::grid_eval(pos, neg, thresholds, selectors, params, threads);
    const auto best = detector::select_config(grid);

    report::Report rep;
    const std::vector<std::string> cols{"threshold", "selector", "rate_pos", "rate_neg", "gap"};
    auto& g = rep.add_table("grid", cols);
    for (const auto& e : grid.entries) add_grid_row(g, e);
    add_grid_row(rep.add_table("selected", cols), best);
    return rep;
}

// ---------------------------------------------------------------------------
// ablate-classify

inline report::Report cmd_ablate_classify(const RunConfig& rc, const config::KeyValues& kv) {
    kv.reject_unused();
    const auto records = ablation::parse_records(io::read_file(rc.input));

    report::Report rep;
    auto& rec = rep.add_table("records", {"prompt_id", "phenomenon", "layer", "heads", "label"});
    std::map<ablation::Phenomenon, std::vector<ablation::AblationRecord>> singles;
    std::map<ablation::Phenomenon, std::vector<ablation::AblationRecord>> pairs;
    for (const auto& r : records) {
        rec.add_row({r.prompt_id, std::string(to_string(r.phenomenon)), cell(r.layer), ablation::format_heads(r.heads),
                     std::string(to_string(ablation::classify(r)))});
        if (r.heads.size() == 1) singles[r.phenomenon].push_back(r);
        if (r.heads.size() == 2) pairs[r.phenomenon].push_back(r);
    }

    auto& lm = rep.add_table("layer_mitigation", {"phenomenon", "layer", "ratio"});
    auto& any = rep.add_table("any_layer_mitigation", {"phenomenon", "ratio"});
    for (const auto& [phen, recs] : singles) {
        for (const auto& [layer, ratio] : ablation::layer_mitigation_ratio(recs)) {
            lm.add_row({std::string(to_string(phen)), cell(layer), ratio});
        }
        any.add_row({std::string(to_string(phen)), ablation::any_layer_mitigation_ratio(recs)});
    }
    auto& mh = rep.add_table("multi_head", {"phenomenon", "layer", "mitigated", "unchanged", "others"});
    for (const auto& [phen, recs] : pairs) {
        for (const auto& [layer, r] : ablation::multi_head_ratios(recs)) {
            mh.add_row({std::string(to_string(phen)), cell(layer), r.mitigated, r.unchanged, r.others});
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// synth

inline LayerGroups read_groups(const config::KeyValues& kv, LayerGroups groups) {
    if (kv.has("layer_groups.down")) groups.down = kv.get_int_set("layer_groups.down");
    if (kv.has("layer_groups.mid")) groups.mid = kv.get_int_set("layer_groups.mid");
    if (kv.has("layer_groups.lowres")) groups.lowres = kv.get_int_set("layer_groups.lowres");
    return groups;
}

inline std::size_t positive_size(const config::KeyValues& kv, const std::string& key, std::size_t fallback) {
    const auto v = kv.get_int(key, static_cast<long long>(fallback));
    if (v < 0) throw config::ConfigError(key + " must be nonnegative");
    return static_cast<std::size_t>(v);
}

inline synth::SynthParams read_synth_params(const config::KeyValues& kv) {
    synth::SynthParams p;
    p.n_tokens = positive_size(kv, "n_tokens", p.n_tokens);
    p.n_layers = positive_size(kv, "n_layers", p.n_layers);
    p.n_steps = positive_size(kv, "n_steps", p.n_steps);
    p.n_heads = positive_size(kv, "n_heads", p.n_heads);
    if (auto v = kv.get_optional_int("dominant_idx")) p.dominant_idx = static_cast<std::size_t>(*v);
    if (auto v = kv.get_optional_int("dominated_idx")) p.dominated_idx = static_cast<std::size_t>(*v);
    p.layer_groups = read_groups(kv, p.layer_groups);
    for (const char* g : {"down", "mid", "lowres", "other"}) {
        const std::string name(g);
        if (kv.has("init." + name)) p.init_logits[name] = kv.get_double_list("init." + name);
        if (kv.has("drift." + name)) p.drift[name] = kv.get_double_list("drift." + name);
    }
    p.noise_std = kv.get_double("noise_std", p.noise_std);
    p.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
    if (auto c = kv.get("category")) {
        const auto cat = parse_category(*c);
        if (!cat) throw config::ConfigError("unknown category '" + *c + "'");
        p.category = *cat;
    }
    p.prompt_text = kv.get_or("prompt_text", "");
    p.tokens = kv.get_list("tokens");
    p.head_logit_layers = kv.get_int_set("head_logit_layers");
    p.spatial_positions = positive_size(kv, "spatial_positions", p.spatial_positions);
    return p;
}

inline synth::CorpusSpec read_corpus_spec(const config::KeyValues& kv) {
    synth::CorpusSpec c;
    c.count_pos = positive_size(kv, "count_pos", c.count_pos);
    c.count_neg = positive_size(kv, "count_neg", c.count_neg);
    c.n_tokens = positive_size(kv, "n_tokens", c.n_tokens);
    c.n_layers = positive_size(kv, "n_layers", c.n_layers);
    c.n_steps = positive_size(kv, "n_steps", c.n_steps);
    c.n_heads = positive_size(kv, "n_heads", c.n_heads);
    c.layer_groups = read_groups(kv, c.layer_groups);
    c.pos_peak_min = kv.get_double("pos_peak_min", c.pos_peak_min);
    c.pos_peak_max = kv.get_double("pos_peak_max", c.pos_peak_max);
    c.neg_peak_min = kv.get_double("neg_peak_min", c.neg_peak_min);
    c.neg_peak_max = kv.get_double("neg_peak_max", c.neg_peak_max);
    c.dominated_mid_boost = kv.get_double("dominated_mid_boost", c.dominated_mid_boost);
    c.dominated_mid_drift = kv.get_double("dominated_mid_drift", c.dominated_mid_drift);
    c.noise_std = kv.get_double("noise_std", c.noise_std);
    c.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
    return c;
}

inline report::Report cmd_synth(const RunConfig& rc, const config::KeyValues& kv) {
    if (rc.out.empty()) throw UsageError("synth needs --out <directory>");
    const std::string mode = kv.get_or("mode", "trace");
    const std::string container = kv.get_or("container", "dir");
    if (container != "dir" && container != "zip") throw config::ConfigError("container must be dir or zip");
    const std::string suffix = container == "zip" ? ".zip" : "";
    const fs::path out = rc.out;

    report::Report rep;
    auto& written = rep.add_table("written", {"label", "path", "dominant_idx", "dominated_idx", "model_id"});
    auto add = [&](std::string_view label, const fs::path& path, const Trace& t) {
        auto opt = [](const std::optional<std::size_t>& v) { return v ? cell(*v) : report::Cell(nullptr); };
        written.add_row({cell(label), path.string(), opt(t.token_map.dominant_idx), opt(t.token_map.dominated_idx),
                         t.manifest.model_id});
    };

    if (mode == "trace") {
        auto p = read_synth_params(kv);
        if (rc.seed) p.seed = *rc.seed;
        kv.reject_unused();
        const Trace t = synth::gen_trace(p);
        const fs::path target = container == "zip" ? fs::path(out.string() + suffix) : out;
        io::write_trace(t, target);
        add("trace", target, t);
    } else if (mode == "corpus") {
        auto spec = read_corpus_spec(kv);
        if (rc.seed) spec.seed = *rc.seed;
        kv.reject_unused();
        const auto threads = resolve_threads(rc);
        const auto corpus = synth::gen_corpus(spec, threads);
        for (const auto& [label, traces] : {std::pair{"pos", &corpus.pos}, std::pair{"neg", &corpus.neg}}) {
            const fs::path dir = out / label;
            std::error_code ec;
            fs::create_directories(dir, ec);
            if (ec) fail(ErrorCode::IoFailure, "cannot create " + dir.string());
            for (std::size_t i = 0; i < traces->size(); ++i) {
                char name[32];
                std::snprintf(name, sizeof(name), "trace_%05zu", i);
                const fs::path target = dir / (std::string(name) + suffix);
                io::write_trace((*traces)[i], target);
                add(label, target, (*traces)[i]);
            }
        }
    } else {
        throw config::ConfigError("mode must be trace or corpus");
    }
    return rep;
}

// ---------------------------------------------------------------------------

/// Runs the CLI on `args` (program name excluded). Reports go to `out` or to
/// --out; diagnostics go to `err`.
inline int run(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    RunConfig rc;
    CLI::App app{"dvdlens: dominant-vs-dominated analysis of cross-attention traces", "dvdlens"};
    app.require_subcommand(1, 1);

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", rc.config, "key = value config file")->check(CLI::ExistingFile);
        sub->add_option("--format", rc.format, "report format")->check(CLI::IsMember({"json", "csv"}));
        sub->add_option("--threads", rc.threads, "worker threads (falls back to $DVDLENS_THREADS)")
            ->check(CLI::PositiveNumber);
    };
    auto* score = app.add_subcommand("score", "VQA tallies -> DvD scores, per-prompt summaries, benchmark verdicts");
    score->add_option("--input", rc.input, "vqa/score CSV or trace container")->required();
    score->add_option("--out", rc.out, "report path (default stdout)");
    add_common(score);

    auto* analyze = app.add_subcommand("analyze", "trace -> layer focus profile, deviation series, peak token");
    analyze->add_option("--input", rc.input, "trace container")->required();
    analyze->add_option("--out", rc.out, "report path (default stdout)");
    add_common(analyze);

    auto* detect = app.add_subcommand("detect", "first-step focus detection on a trace or corpus");
    detect->add_option("--input", rc.input, "trace container or corpus directory")->required();
    detect->add_option("--out", rc.out, "report path (default stdout)");
    add_common(detect);

    auto* grid = app.add_subcommand("grid", "threshold x selector grid and max-gap configuration");
    grid->add_option("--pos", rc.pos, "DvD corpus directory")->required();
    grid->add_option("--neg", rc.neg, "balanced corpus directory")->required();
    grid->add_option("--out", rc.out, "report path (default stdout)");
    add_common(grid);

    auto* ablate = app.add_subcommand("ablate-classify", "ablation records -> labels and per-layer ratios");
    ablate->add_option("--input", rc.input, "ablation records CSV")->required();
    ablate->add_option("--out", rc.out, "report path (default stdout)");
    add_common(ablate);

    auto* synth_cmd = app.add_subcommand("synth", "generate synthetic trace containers");
    synth_cmd->add_option("--out", rc.out, "output container (mode=trace) or corpus directory (mode=corpus)")
        ->required();
    synth_cmd->add_option("--seed", rc.seed, "overrides the config seed");
    add_common(synth_cmd);

    std::reverse(args.begin(), args.end());
    try {
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    for (auto* sub : app.get_subcommands()) rc.subcommand = sub->get_name();

    try {
        const auto kv = load_config(rc);
        report::Report rep;
        if (rc.subcommand == "score") rep = cmd_score(rc, kv);
        else if (rc.subcommand == "analyze") rep = cmd_analyze(rc, kv);
        else if (rc.subcommand == "detect") rep = cmd_detect(rc, kv);
        else if (rc.subcommand == "grid") rep = cmd_grid(rc, kv);
        else if (rc.subcommand == "ablate-classify") rep = cmd_ablate_classify(rc, kv);
        else rep = cmd_synth(rc, kv);

        const auto fmt = rc.format == "csv" ? report::Format::csv : report::Format::json;
        const std::string bytes = report::emit_report(rep, fmt);
        if (rc.subcommand == "synth" || rc.out.empty()) {
            out << bytes;
        } else {
            io::write_file(rc.out, bytes);
        }
        return kExitOk;
    } catch (const config::ConfigError& e) {
        err << "dvdlens: " << e.what() << "\n";
        return kExitUsage;
    } catch (const UsageError& e) {
        err << "dvdlens: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "dvdlens: " << e.what() << "\n";
        return kExitData;
    } catch (const fs::filesystem_error& e) {
        err << "dvdlens: " << e.what() << "\n";
        return kExitData;
    }
}

}  // namespace dvdlens::cli
