// Copyright (c) 2026, dvdlens contributors
// SPDX-License-Identifier: Apache-2.0
//
// Tabular analysis results and their JSON / CSV serializations.
//
// JSON: one object keyed by table name (in insertion order), each an array of
// row objects with keys in column order.
// CSV:  each table as "# <name>", a header line and its rows; tables are
//       separated by a blank line.
// Doubles use the shortest representation that round-trips, so both formats
// carry identical numbers.

#pragma once

#include <charconv>
#include <deque>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "dvdlens/csv.hpp"
#include "dvdlens/error.hpp"

namespace dvdlens::report {

using Cell = std::variant<std::nullptr_t, bool, long long, double, std::string>;

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add_row(std::vector<Cell> row) {
        if (row.size() != columns.size()) {
            fail(ErrorCode::SerializationFailure, "table '" + name + "' row width differs from its columns");
        }
        rows.push_back(std::move(row));
    }
};

struct Report {
    std::deque<Table> tables;  // add_table references stay valid

    Table& add_table(std::string name, std::vector<std::string> columns) {
        tables.push_back(Table{std::move(name), std::move(columns), {}});
        return tables.back();
    }
};

enum class Format { json, csv };

inline std::string format_double(double v) {
    if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace detail {

inline nlohmann::ordered_json to_json(const Cell& c) {
    return std::visit(
        [](const auto& v) -> nlohmann::ordered_json {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, double>) {
                if (!std::isfinite(v)) return nullptr;
            }
            return v;
        },
        c);
}

inline std::string to_csv(const Cell& c) {
    return std::visit(
        [](const auto& v) -> std::string {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, std::nullptr_t>) return "";
            else if constexpr (std::is_same_v<V, bool>) return v ? "true" : "false";
            else if constexpr (std::is_same_v<V, long long>) return std::to_string(v);
            else if constexpr (std::is_same_v<V, double>) return format_double(v);
            else return csv::escape(v);
        },
        c);
}

}  // namespace detail

inline std::string emit_report(const Report& report, Format format) {
    if (format == Format::json) {
        nlohmann::ordered_json doc = nlohmann::ordered_json::object();
        for (const auto& t : report.tables) {
            auto rows = nlohmann::ordered_json::array();
            for (const auto& row : t.rows) {
                nlohmann::ordered_json obj = nlohmann::ordered_json::object();
                for (std::size_t k = 0; k < t.columns.size(); ++k) obj[t.columns[k]] = detail::to_json(row[k]);
                rows.push_back(std::move(obj));
            }
            doc[t.name] = std::move(rows);
        }
        try {
            return doc.dump(2) + "\n";
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::SerializationFailure, e.what());
        }
    }
    std::string out;
    for (const auto& t : report.tables) {
        if (!out.empty()) out += "\n";
        out += "# " + t.name + "\n";
        for (std::size_t k = 0; k < t.columns.size(); ++k) out += (k ? "," : "") + csv::escape(t.columns[k]);
        out += "\n";
        for (const auto& row : t.rows) {
            for (std::size_t k = 0; k < row.size(); ++k) out += (k ? "," : "") + detail::to_csv(row[k]);
            out += "\n";
        }
    }
    return out;
}

/// Splits a CSV report back into its named tables.
inline std::map<std::string, csv::Table> parse_csv_report(std::string_view text) {
    std::map<std::string, csv::Table> out;
    std::size_t pos = 0;
    std::string current;
    std::string body;
    auto flush = [&] {
        if (!current.empty()) out[current] = csv::parse(body);
        body.clear();
    };
    while (pos < text.size()) {
        const auto end = std::min(text.find('\n', pos), text.size());
        const auto line = text.substr(pos, end - pos);
        if (line.starts_with("# ")) {
            flush();
            current = std::string(line.substr(2));
        } else if (!line.empty()) {
            body += std::string(line) + "\n";
        }
        pos = end + 1;
    }
    flush();
    return out;
}

}  // namespace dvdlens::report
