// Copyright (c) 2026, dvdlens contributors
// SPDX-License-Identifier: Apache-2.0
//
// Trace container reader/writer. A container is a directory or a zip archive
// holding:
//
//   manifest.json           UTF-8, manifest + token map (see manifest_to_json)
//   attn_agg.bin            DVDT float32 [L][S][N]            (required)
//   head_logits_L<l>.bin    DVDT float32 [H][S][P][N]         (optional, per layer)
//   vqa.csv                 image_id,c1,c2,n                  (optional)
//   noise.csv               index,cond,uncond                 (optional)

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>

#include <nlohmann/json.hpp>

#include "dvdlens/error.hpp"
#include "dvdlens/tensor_codec.hpp"
#include "dvdlens/trace.hpp"
#include "dvdlens/zip_archive.hpp"

namespace dvdlens::io {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline constexpr std::string_view kManifestFile = "manifest.json";
inline constexpr std::string_view kAttentionFile = "attn_agg.bin";
inline constexpr std::string_view kVqaFile = "vqa.csv";
inline constexpr std::string_view kNoiseFile = "noise.csv";

inline std::string head_logits_file(LayerId layer) {
    return "head_logits_L" + std::to_string(layer) + ".bin";
}

/// Extra members written alongside the trace (vqa.csv, noise.csv, ...).
using ContainerExtras = std::map<std::string, std::string>;

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) fail(ErrorCode::IoFailure, "read failed for " + path.string());
    return ss.str();
}

inline void write_file(const fs::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoFailure, "cannot create " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::IoFailure, "write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// manifest.json

inline json manifest_to_json(const TraceManifest& m, const TokenMap& tm) {
    auto opt_index = [](const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); };
    json groups;
    groups["down"] = m.layer_groups.down;
    groups["mid"] = m.layer_groups.mid;
    groups["lowres"] = m.layer_groups.lowres;

    json j;
    j["format_version"] = m.format_version;
    j["model_id"] = m.model_id;
    j["n_layers"] = m.n_layers;
    j["n_heads"] = m.n_heads;
    j["n_steps"] = m.n_steps;
    j["scheduler_timesteps"] = m.scheduler_timesteps;
    j["prompt_text"] = tm.prompt_text;
    j["tokens"] = tm.tokens;
    j["dominant_idx"] = opt_index(tm.dominant_idx);
    j["dominated_idx"] = opt_index(tm.dominated_idx);
    j["category"] = std::string(to_string(tm.category));
    j["layer_groups"] = std::move(groups);
    return j;
}

/// Parses manifest.json. Unknown keys are ignored.
inline std::pair<TraceManifest, TokenMap> manifest_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorCode::MalformedManifest, std::string("manifest.json does not parse: ") + e.what());
    }
    if (!j.is_object()) fail(ErrorCode::MalformedManifest, "manifest.json is not an object");

    for (const char* key : {"format_version", "model_id", "n_layers", "n_heads", "n_steps", "scheduler_timesteps",
                            "tokens", "prompt_text", "dominant_idx", "dominated_idx", "category", "layer_groups"}) {
        if (!j.contains(key)) fail(ErrorCode::MalformedManifest, std::string("missing key '") + key + "'");
    }

    TraceManifest m;
    TokenMap tm;
    try {
        m.format_version = j.at("format_version").get<int>();
        if (m.format_version != kFormatVersion) {
            fail(ErrorCode::UnsupportedVersion, "manifest format_version " + std::to_string(m.format_version));
        }
        auto positive = [&](const char* key) {
            const auto& v = j.at(key);
            if (!v.is_number_integer() || v.get<long long>() <= 0) {
                fail(ErrorCode::MalformedManifest, std::string("'") + key + "' must be a positive integer");
            }
            return v.get<std::size_t>();
        };
        m.model_id = j.at("model_id").get<std::string>();
        m.n_layers = positive("n_layers");
        m.n_heads = positive("n_heads");
        m.n_steps = positive("n_steps");
        m.scheduler_timesteps = j.at("scheduler_timesteps").get<std::vector<double>>();

        tm.prompt_text = j.at("prompt_text").get<std::string>();
        tm.tokens = j.at("tokens").get<std::vector<std::string>>();
        auto opt_index = [&](const char* key) -> std::optional<std::size_t> {
            const auto& v = j.at(key);
            if (v.is_null()) return std::nullopt;
            if (!v.is_number_integer() || v.get<long long>() < 0) {
                fail(ErrorCode::MalformedManifest, std::string("'") + key + "' must be null or a token index");
            }
            return v.get<std::size_t>();
        };
        tm.dominant_idx = opt_index("dominant_idx");
        tm.dominated_idx = opt_index("dominated_idx");
        const auto cat = parse_category(j.at("category").get<std::string>());
        if (!cat) fail(ErrorCode::MalformedManifest, "unknown category '" + j.at("category").get<std::string>() + "'");
        tm.category = *cat;

        const auto& groups = j.at("layer_groups");
        if (!groups.is_object()) fail(ErrorCode::MalformedManifest, "'layer_groups' must be an object");
        if (groups.contains("down")) m.layer_groups.down = groups.at("down").get<LayerSet>();
        if (groups.contains("mid")) m.layer_groups.mid = groups.at("mid").get<LayerSet>();
        if (groups.contains("lowres")) m.layer_groups.lowres = groups.at("lowres").get<LayerSet>();
    } catch (const json::exception& e) {
        fail(ErrorCode::MalformedManifest, std::string("manifest.json has a wrongly typed field: ") + e.what());
    }
    return {std::move(m), std::move(tm)};
}

// ---------------------------------------------------------------------------
// container access

/// Read-only view of a container on disk (directory or zip archive).
class Container {
public:
    static Container open(const fs::path& path) {
        std::error_code ec;
        if (fs::is_directory(path, ec)) return Container(path);
        if (!fs::exists(path, ec)) fail(ErrorCode::IoFailure, "no such container: " + path.string());
        std::string bytes = read_file(path);
        if (!zip::looks_like_zip(bytes)) {
            fail(ErrorCode::IoFailure, path.string() + " is neither a directory nor a zip archive");
        }
        return Container(zip::Reader(std::move(bytes)));
    }

    std::optional<std::string> read(std::string_view name) const {
        if (const auto* dir = std::get_if<fs::path>(&backend_)) {
            const fs::path p = *dir / std::string(name);
            std::error_code ec;
            if (!fs::is_regular_file(p, ec)) return std::nullopt;
            return read_file(p);
        }
        return std::get<zip::Reader>(backend_).read(name);
    }

    std::string require(std::string_view name) const {
        auto bytes = read(name);
        if (!bytes) fail(ErrorCode::IoFailure, "container is missing " + std::string(name));
        return std::move(*bytes);
    }

private:
    explicit Container(fs::path dir) : backend_(std::move(dir)) {}
    explicit Container(zip::Reader reader) : backend_(std::move(reader)) {}

    std::variant<fs::path, zip::Reader> backend_;
};

inline bool is_zip_path(const fs::path& path) { return path.extension() == ".zip"; }

/// Loads and validates a trace. Throws on any format or invariant problem.
inline Trace read_trace(const fs::path& path) {
    const Container c = Container::open(path);
    Trace t;
    std::tie(t.manifest, t.token_map) = manifest_from_json(c.require(kManifestFile));
    const auto& m = t.manifest;
    const std::size_t n = t.token_map.n_tokens();

    t.attention = codec::decode<3>(c.require(kAttentionFile), {m.n_layers, m.n_steps, n}, kAttentionFile);

    HeadLogits logits;
    for (LayerId layer = 1; static_cast<std::size_t>(layer) <= m.n_layers; ++layer) {
        const std::string name = head_logits_file(layer);
        if (auto bytes = c.read(name)) {
            logits.emplace(layer, codec::decode<4>(*bytes, {m.n_heads, m.n_steps, std::nullopt, n}, name));
        }
    }
    if (!logits.empty()) t.head_logits = std::move(logits);

    if (const auto problems = validate(t); !problems.empty()) {
        fail(ErrorCode::InvalidTrace, path.string() + ": " + problems.front());
    }
    return t;
}

/// Optional container member (vqa.csv, noise.csv, ...), nullopt when absent.
inline std::optional<std::string> read_member(const fs::path& path, std::string_view name) {
    return Container::open(path).read(name);
}

/// Writes `trace` as a directory container, or as a zip when `path` ends in
/// .zip. Output bytes depend only on the inputs.
inline void write_trace(const Trace& trace, const fs::path& path, const ContainerExtras& extras = {}) {
    if (const auto problems = validate(trace); !problems.empty()) {
        fail(ErrorCode::InvalidTrace, problems.front());
    }
    std::vector<std::pair<std::string, std::string>> members;
    members.emplace_back(std::string(kManifestFile), manifest_to_json(trace.manifest, trace.token_map).dump(2) + "\n");
    members.emplace_back(std::string(kAttentionFile), codec::encode(trace.attention));
    if (trace.head_logits) {
        for (const auto& [layer, logits] : *trace.head_logits) {
            members.emplace_back(head_logits_file(layer), codec::encode(logits));
        }
    }
    for (const auto& [name, bytes] : extras) members.emplace_back(name, bytes);

    if (is_zip_path(path)) {
        zip::Writer w;
        for (auto& [name, bytes] : members) w.add(name, bytes);
        write_file(path, w.finish());
        return;
    }

    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec) fail(ErrorCode::IoFailure, "cannot create directory " + path.string() + ": " + ec.message());
    // Stale per-layer logits from an earlier write would be picked up on read.
    for (const auto& entry : fs::directory_iterator(path, ec)) {
        const std::string fname = entry.path().filename().string();
        if (fname.starts_with("head_logits_L") && fname.ends_with(".bin")) fs::remove(entry.path(), ec);
    }
    for (const auto& [name, bytes] : members) write_file(path / name, bytes);
}

}  // namespace dvdlens::io
