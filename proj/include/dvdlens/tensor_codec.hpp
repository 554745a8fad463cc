// Copyright (c) 2026, dvdlens contributors
// SPDX-License-Identifier: Apache-2.0
//
// DVDT binary tensor layout (all integers little-endian):
//
//   offset  size      field
//   0       4         magic "DVDT"
//   4       2         version (u16) = 1
//   6       1         dtype (u8), 0 = float32 LE
//   7       1         ndim (u8)
//   8       4*ndim    dims (u32 each)
//   ...     4*prod    row-major float32 payload
//
// attn_agg.bin is ndim 3 [L][S][N]; head_logits_L<l>.bin is ndim 4 [H][S][P][N].

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "dvdlens/error.hpp"
#include "dvdlens/tensor.hpp"

namespace dvdlens::codec {

inline constexpr std::array<char, 4> kMagic{'D', 'V', 'D', 'T'};
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 0;

constexpr std::size_t header_size(std::size_t ndim) { return 8 + 4 * ndim; }

namespace detail {

inline void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint16_t get_u16(std::string_view in, std::size_t at) {
    return static_cast<std::uint16_t>(static_cast<unsigned char>(in[at]) |
                                      (static_cast<unsigned char>(in[at + 1]) << 8));
}

inline std::uint32_t get_u32(std::string_view in, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(in[at + i]);
    return v;
}

}  // namespace detail

template <std::size_t Rank>
std::string encode(const Tensor<float, Rank>& t) {
    std::string out;
    out.reserve(header_size(Rank) + 4 * t.size());
    out.append(kMagic.data(), kMagic.size());
    detail::put_u16(out, kVersion);
    out.push_back(static_cast<char>(kDtypeFloat32));
    out.push_back(static_cast<char>(Rank));
    for (std::size_t d : t.shape()) {
        if (d > UINT32_MAX) fail(ErrorCode::DimMismatch, "dimension exceeds u32");
        detail::put_u32(out, static_cast<std::uint32_t>(d));
    }
    for (float v : t.data()) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

/// Decodes a DVDT blob. `expected` pins dims that the caller already knows
/// from the manifest; a std::nullopt entry accepts whatever the header says.
template <std::size_t Rank>
Tensor<float, Rank> decode(std::string_view bytes,
                           const std::array<std::optional<std::size_t>, Rank>& expected = {},
                           std::string_view what = "tensor") {
    const std::string name(what);
    if (bytes.size() < 4) fail(ErrorCode::Truncated, name + ": shorter than magic");
    if (bytes.substr(0, 4) != std::string_view(kMagic.data(), kMagic.size())) {
        fail(ErrorCode::BadMagic, name + ": magic is not DVDT");
    }
    if (bytes.size() < header_size(0)) fail(ErrorCode::Truncated, name + ": header cut short");
    if (const auto version = detail::get_u16(bytes, 4); version != kVersion) {
        fail(ErrorCode::UnsupportedVersion, name + ": version " + std::to_string(version));
    }
    if (const auto dtype = static_cast<std::uint8_t>(bytes[6]); dtype != kDtypeFloat32) {
        fail(ErrorCode::UnsupportedDtype, name + ": dtype " + std::to_string(dtype));
    }
    if (const auto ndim = static_cast<std::uint8_t>(bytes[7]); ndim != Rank) {
        fail(ErrorCode::DimMismatch,
             name + ": ndim " + std::to_string(ndim) + ", expected " + std::to_string(Rank));
    }
    if (bytes.size() < header_size(Rank)) fail(ErrorCode::Truncated, name + ": dims cut short");

    typename Tensor<float, Rank>::Shape shape{};
    for (std::size_t a = 0; a < Rank; ++a) {
        shape[a] = detail::get_u32(bytes, 8 + 4 * a);
        if (expected[a] && *expected[a] != shape[a]) {
            fail(ErrorCode::DimMismatch, name + ": dim " + std::to_string(a) + " is " +
                                             std::to_string(shape[a]) + ", manifest says " +
                                             std::to_string(*expected[a]));
        }
    }
    const std::size_t count = Tensor<float, Rank>::element_count(shape);
    const std::size_t want = header_size(Rank) + 4 * count;
    if (bytes.size() < want) {
        fail(ErrorCode::Truncated, name + ": " + std::to_string(bytes.size()) + " bytes, dims imply " +
                                       std::to_string(want));
    }
    if (bytes.size() > want) {
        fail(ErrorCode::DimMismatch, name + ": " + std::to_string(bytes.size() - want) +
                                         " trailing bytes beyond the declared dims");
    }
    std::vector<float> data(count);
    for (std::size_t i = 0; i < count; ++i) {
        data[i] = std::bit_cast<float>(detail::get_u32(bytes, header_size(Rank) + 4 * i));
    }
    return Tensor<float, Rank>(shape, std::move(data));
}

}  // namespace dvdlens::codec
