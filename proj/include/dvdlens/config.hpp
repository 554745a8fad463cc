// Copyright (c) 2026, dvdlens contributors
// SPDX-License-Identifier: Apache-2.0
//
// `key = value` config files. '#' starts a comment, blank lines are skipped,
// lists are comma-separated. Every key must be consumed by its reader;
// leftovers are reported so typos don't pass silently.

#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dvdlens/csv.hpp"
#include "dvdlens/error.hpp"

namespace dvdlens::config {

/// Raised for bad config content; the CLI maps it to a usage error.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

class KeyValues {
public:
    static KeyValues parse(std::string_view text) {
        KeyValues kv;
        std::size_t pos = 0;
        std::size_t line_no = 0;
        while (pos <= text.size()) {
            const auto end = std::min(text.find('\n', pos), text.size());
            std::string_view line = text.substr(pos, end - pos);
            ++line_no;
            pos = end + 1;
            if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
            const std::string body = trim(line);
            if (body.empty()) continue;
            const auto eq = body.find('=');
            if (eq == std::string::npos) {
                throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
            }
            std::string key = trim(std::string_view(body).substr(0, eq));
            if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
            kv.values_[key] = trim(std::string_view(body).substr(eq + 1));
        }
        return kv;
    }

    bool has(const std::string& key) const { return values_.contains(key); }

    std::optional<std::string> get(const std::string& key) const {
        used_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        return it->second;
    }

    std::string get_or(const std::string& key, std::string fallback) const {
        return get(key).value_or(std::move(fallback));
    }

    double get_double(const std::string& key, double fallback) const {
        auto v = get(key);
        return v ? as_double(key, *v) : fallback;
    }

    long long get_int(const std::string& key, long long fallback) const {
        auto v = get(key);
        return v ? as_int(key, *v) : fallback;
    }

    std::optional<long long> get_optional_int(const std::string& key) const {
        auto v = get(key);
        if (!v || v->empty() || *v == "none" || *v == "null") return std::nullopt;
        return as_int(key, *v);
    }

    std::vector<std::string> get_list(const std::string& key) const {
        std::vector<std::string> out;
        auto v = get(key);
        if (!v) return out;
        std::size_t start = 0;
        while (start <= v->size()) {
            const auto end = std::min(v->find(',', start), v->size());
            auto item = trim(std::string_view(*v).substr(start, end - start));
            if (!item.empty()) out.push_back(std::move(item));
            start = end + 1;
        }
        return out;
    }

    std::vector<double> get_double_list(const std::string& key) const {
        std::vector<double> out;
        for (const auto& item : get_list(key)) out.push_back(as_double(key, item));
        return out;
    }

    std::set<int> get_int_set(const std::string& key) const {
        std::set<int> out;
        for (const auto& item : get_list(key)) out.insert(static_cast<int>(as_int(key, item)));
        return out;
    }

    /// Keys present in the file but never read.
    std::vector<std::string> unused() const {
        std::vector<std::string> out;
        for (const auto& [k, _] : values_) {
            if (!used_.contains(k)) out.push_back(k);
        }
        return out;
    }

    void reject_unused() const {
        const auto extra = unused();
        if (extra.empty()) return;
        std::string msg = "unknown config key(s):";
        for (const auto& k : extra) msg += " " + k;
        throw ConfigError(msg);
    }

private:
    static double as_double(const std::string& key, const std::string& v) {
        try {
            return csv::to_double(v, key);
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
    }

    static long long as_int(const std::string& key, const std::string& v) {
        try {
            return csv::to_int(v, key);
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
    }

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

}  // namespace dvdlens::config
