// Copyright (c) 2026, dvdlens contributors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal zip support for trace containers: reads stored and deflated members
// (what Python's zipfile produces), writes stored members with zeroed
// timestamps so identical input gives identical archive bytes. No ZIP64.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <zlib.h>

#include "dvdlens/error.hpp"

namespace dvdlens::zip {

namespace detail {

inline std::uint32_t rd32(std::string_view b, std::size_t at) {
    if (at + 4 > b.size()) fail(ErrorCode::Truncated, "zip: record runs past end of archive");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[at + i]);
    return v;
}

inline std::uint16_t rd16(std::string_view b, std::size_t at) {
    if (at + 2 > b.size()) fail(ErrorCode::Truncated, "zip: record runs past end of archive");
    return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                      (static_cast<unsigned char>(b[at + 1]) << 8));
}

inline void wr16(std::string& o, std::uint16_t v) {
    o.push_back(static_cast<char>(v & 0xFF));
    o.push_back(static_cast<char>(v >> 8));
}

inline void wr32(std::string& o, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) o.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::string inflate_raw(std::string_view in, std::size_t out_size) {
    std::string out(out_size, '\0');
    z_stream zs{};
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) fail(ErrorCode::IoFailure, "zip: inflateInit2 failed");
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
    zs.avail_in = static_cast<uInt>(in.size());
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    const auto produced = zs.total_out;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || produced != out_size) {
        fail(ErrorCode::IoFailure, "zip: corrupt deflate stream");
    }
    return out;
}

}  // namespace detail

inline bool looks_like_zip(std::string_view bytes) {
    return bytes.size() >= 4 && bytes.substr(0, 4) == std::string_view("PK\x03\x04", 4);
}

/// Parsed archive held in memory; member lookup by path.
class Reader {
public:
    explicit Reader(std::string bytes) : bytes_(std::move(bytes)) { index(); }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& [name, _] : entries_) out.push_back(name);
        return out;
    }

    /// Member by exact name, or by basename when the archive wraps everything
    /// in a single top-level folder.
    std::optional<std::string> read(std::string_view name) const {
        auto it = entries_.find(std::string(name));
        if (it == entries_.end()) {
            const std::string suffix = "/" + std::string(name);
            for (auto jt = entries_.begin(); jt != entries_.end(); ++jt) {
                const auto& n = jt->first;
                if (n.size() > suffix.size() && n.compare(n.size() - suffix.size(), suffix.size(), suffix) == 0 &&
                    n.find('/') == n.size() - suffix.size()) {
                    it = jt;
                    break;
                }
            }
        }
        if (it == entries_.end()) return std::nullopt;
        return extract(it->second);
    }

private:
    struct Entry {
        std::uint16_t method;
        std::uint32_t crc;
        std::uint32_t csize;
        std::uint32_t usize;
        std::uint32_t local_offset;
    };

    void index() {
        std::string_view b = bytes_;
        if (b.size() < 22) fail(ErrorCode::Truncated, "zip: archive too small");
        std::size_t eocd = std::string_view::npos;
        const std::size_t lo = b.size() > 22 + 0xFFFF ? b.size() - 22 - 0xFFFF : 0;
        for (std::size_t i = b.size() - 22 + 1; i-- > lo;) {
            if (detail::rd32(b, i) == 0x06054b50) {
                eocd = i;
                break;
            }
        }
        if (eocd == std::string_view::npos) fail(ErrorCode::IoFailure, "zip: no end-of-central-directory record");
        const std::uint16_t count = detail::rd16(b, eocd + 10);
        std::size_t at = detail::rd32(b, eocd + 16);
        for (std::uint16_t k = 0; k < count; ++k) {
            if (detail::rd32(b, at) != 0x02014b50) fail(ErrorCode::IoFailure, "zip: bad central directory entry");
            Entry e{};
            e.method = detail::rd16(b, at + 10);
            e.crc = detail::rd32(b, at + 16);
            e.csize = detail::rd32(b, at + 20);
            e.usize = detail::rd32(b, at + 24);
            const std::uint16_t name_len = detail::rd16(b, at + 28);
            const std::uint16_t extra_len = detail::rd16(b, at + 30);
            const std::uint16_t comment_len = detail::rd16(b, at + 32);
            e.local_offset = detail::rd32(b, at + 42);
            if (e.csize == 0xFFFFFFFF || e.usize == 0xFFFFFFFF || e.local_offset == 0xFFFFFFFF) {
                fail(ErrorCode::IoFailure, "zip: ZIP64 archives are not supported");
            }
            if (at + 46 + name_len > b.size()) fail(ErrorCode::Truncated, "zip: entry name cut short");
            std::string name(b.substr(at + 46, name_len));
            if (!name.empty() && name.back() != '/') entries_.emplace(std::move(name), e);
            at += 46 + name_len + extra_len + comment_len;
        }
    }

    std::string extract(const Entry& e) const {
        std::string_view b = bytes_;
        if (detail::rd32(b, e.local_offset) != 0x04034b50) fail(ErrorCode::IoFailure, "zip: bad local header");
        const std::size_t data_at =
            e.local_offset + 30 + detail::rd16(b, e.local_offset + 26) + detail::rd16(b, e.local_offset + 28);
        if (data_at + e.csize > b.size()) fail(ErrorCode::Truncated, "zip: member data cut short");
        std::string_view raw = b.substr(data_at, e.csize);
        std::string out;
        if (e.method == 0) {
            out = std::string(raw);
        } else if (e.method == 8) {
            out = detail::inflate_raw(raw, e.usize);
        } else {
            fail(ErrorCode::IoFailure, "zip: unsupported compression method " + std::to_string(e.method));
        }
        const auto crc = static_cast<std::uint32_t>(
            crc32(0L, reinterpret_cast<const Bytef*>(out.data()), static_cast<uInt>(out.size())));
        if (crc != e.crc) fail(ErrorCode::IoFailure, "zip: CRC mismatch");
        return out;
    }

    std::string bytes_;
    std::map<std::string, Entry> entries_;
};

/// Builds a stored (uncompressed) archive. Members keep insertion order.
class Writer {
public:
    void add(std::string name, std::string data) { members_.emplace_back(std::move(name), std::move(data)); }

    std::string finish() const {
        std::string out;
        std::string central;
        for (const auto& [name, data] : members_) {
            const auto crc = static_cast<std::uint32_t>(
                crc32(0L, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size())));
            const auto size = static_cast<std::uint32_t>(data.size());
            const auto offset = static_cast<std::uint32_t>(out.size());

            detail::wr32(out, 0x04034b50);
            detail::wr16(out, 20);  // version needed
            detail::wr16(out, 0);   // flags
            detail::wr16(out, 0);   // stored
            detail::wr16(out, 0);   // time
            detail::wr16(out, 0x21);  // date 1980-01-01
            detail::wr32(out, crc);
            detail::wr32(out, size);
            detail::wr32(out, size);
            detail::wr16(out, static_cast<std::uint16_t>(name.size()));
            detail::wr16(out, 0);
            out += name;
            out += data;

            detail::wr32(central, 0x02014b50);
            detail::wr16(central, 20);
            detail::wr16(central, 20);
            detail::wr16(central, 0);
            detail::wr16(central, 0);
            detail::wr16(central, 0);
            detail::wr16(central, 0x21);
            detail::wr32(central, crc);
            detail::wr32(central, size);
            detail::wr32(central, size);
            detail::wr16(central, static_cast<std::uint16_t>(name.size()));
            detail::wr16(central, 0);
            detail::wr16(central, 0);
            detail::wr16(central, 0);
            detail::wr16(central, 0);
            detail::wr32(central, 0);
            detail::wr32(central, offset);
            central += name;
        }
        const auto cd_offset = static_cast<std::uint32_t>(out.size());
        out += central;
        detail::wr32(out, 0x06054b50);
        detail::wr16(out, 0);
        detail::wr16(out, 0);
        detail::wr16(out, static_cast<std::uint16_t>(members_.size()));
        detail::wr16(out, static_cast<std::uint16_t>(members_.size()));
        detail::wr32(out, static_cast<std::uint32_t>(central.size()));
        detail::wr32(out, cd_offset);
        detail::wr16(out, 0);
        return out;
    }

private:
    std::vector<std::pair<std::string, std::string>> members_;
};

}  // namespace dvdlens::zip
