// Copyright (c) 2026, dvdlens contributors
// SPDX-License-Identifier: Apache-2.0
//
// Small RFC 4180-style CSV reader/writer: header row required, quoted fields
// with doubled quotes, CRLF tolerated.

#pragma once

#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "dvdlens/error.hpp"

namespace dvdlens::csv {

class Table {
public:
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::size_t> column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        return std::nullopt;
    }

    std::size_t require_column(std::string_view name) const {
        auto c = column(name);
        if (!c) fail(ErrorCode::MalformedCsv, "missing column '" + std::string(name) + "'");
        return *c;
    }
};

inline std::vector<std::vector<std::string>> parse_records(std::string_view text) {
    std::vector<std::vector<std::string>> out;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        if (!(record.size() == 1 && record[0].empty())) out.push_back(std::move(record));
        record.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && !field_started) {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            end_record();
        } else if (c == '\r') {
            // tolerated before \n
        } else {
            field.push_back(c);
            field_started = true;
        }
    }
    if (quoted) fail(ErrorCode::MalformedCsv, "unterminated quoted field");
    if (field_started || !record.empty()) end_record();
    return out;
}

inline Table parse(std::string_view text) {
    auto records = parse_records(text);
    if (records.empty()) fail(ErrorCode::MalformedCsv, "no header row");
    Table t;
    t.header = std::move(records.front());
    for (auto& h : t.header) {
        while (!h.empty() && (h.back() == ' ' || h.back() == '\t')) h.pop_back();
        while (!h.empty() && (h.front() == ' ' || h.front() == '\t')) h.erase(h.begin());
    }
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != t.header.size()) {
            fail(ErrorCode::MalformedCsv, "row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                                              " fields, header has " + std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(records[r]));
    }
    return t;
}

inline std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline long long to_int(std::string_view s, std::string_view what) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        fail(ErrorCode::MalformedCsv, std::string(what) + ": '" + std::string(s) + "' is not an integer");
    }
    return v;
}

inline double to_double(std::string_view s, std::string_view what) {
    double v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        fail(ErrorCode::MalformedCsv, std::string(what) + ": '" + std::string(s) + "' is not a number");
    }
    return v;
}

inline std::optional<double> to_optional_double(std::string_view s, std::string_view what) {
    if (s.empty()) return std::nullopt;
    return to_double(s, what);
}

}  // namespace dvdlens::csv
