// Copyright (c) 2026, dvdlens contributors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "dvdlens/tensor_codec.hpp"
#include "dvdlens/trace_io.hpp"
#include "dvdlens/zip_archive.hpp"
#include "support/fixtures.hpp"

using namespace dvdlens;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no dvdlens::Error thrown";
    return ErrorCode::InvalidArgument;
}

Trace small_trace() {
    auto t = fixtures::make_trace(2, 2, 3, [](LayerId l, std::size_t s) {
        if (l == 1 && s == 0) return std::vector<double>{0.5, 0.25, 0.25};
        return std::vector<double>{0.25, 0.5, 0.25};
    });
    t.token_map.dominant_idx = 0;
    t.token_map.dominated_idx = 2;
    return t;
}

}  // namespace

TEST(Codec, AttentionSizeForSmallShape) {
    const auto bytes = codec::encode(small_trace().attention);
    EXPECT_EQ(bytes.size(), 68u);
    EXPECT_EQ(bytes.substr(0, 4), "DVDT");
}

TEST(Codec, TruncatedPayload) {
    auto bytes = codec::encode(small_trace().attention);
    bytes.pop_back();
    EXPECT_EQ(code_of([&] { codec::decode<3>(bytes, {2, 2, 3}); }), ErrorCode::Truncated);
}

TEST(Codec, TrailingBytes) {
    auto bytes = codec::encode(small_trace().attention);
    bytes.append(4, '\0');
    EXPECT_EQ(code_of([&] { codec::decode<3>(bytes, {2, 2, 3}); }), ErrorCode::DimMismatch);
}

TEST(Codec, BadMagic) {
    auto bytes = codec::encode(small_trace().attention);
    bytes[0] = 'X';
    EXPECT_EQ(code_of([&] { codec::decode<3>(bytes); }), ErrorCode::BadMagic);
    EXPECT_EQ(code_of([&] { codec::decode<3>("DV"); }), ErrorCode::Truncated);
}

TEST(Codec, VersionDtypeAndRank) {
    const auto good = codec::encode(small_trace().attention);
    auto v = good;
    v[4] = 2;
    EXPECT_EQ(code_of([&] { codec::decode<3>(v); }), ErrorCode::UnsupportedVersion);
    auto d = good;
    d[6] = 1;
    EXPECT_EQ(code_of([&] { codec::decode<3>(d); }), ErrorCode::UnsupportedDtype);
    EXPECT_EQ(code_of([&] { codec::decode<4>(good); }), ErrorCode::DimMismatch);
}

TEST(Codec, DimsDisagreeWithManifest) {
    const auto bytes = codec::encode(small_trace().attention);
    EXPECT_EQ(code_of([&] { codec::decode<3>(bytes, {2, 2, 4}); }), ErrorCode::DimMismatch);
}

TEST(Codec, EveryHeaderByteMutationIsRejected) {
    std::mt19937_64 rng(3);
    const auto t = fixtures::random_trace(rng, 3, 2, 5, true);
    const auto att = codec::encode(t.attention);
    for (std::size_t i = 0; i < codec::header_size(3); ++i) {
        auto m = att;
        m[i] = static_cast<char>(m[i] ^ 0xFF);
        EXPECT_THROW(codec::decode<3>(m, {3, 2, 5}), Error) << "byte " << i;
    }
    const auto& logits = t.head_logits->begin()->second;
    const auto hl = codec::encode(logits);
    for (std::size_t i = 0; i < codec::header_size(4); ++i) {
        auto m = hl;
        m[i] = static_cast<char>(m[i] ^ 0xFF);
        EXPECT_THROW(codec::decode<4>(m, {2, 2, logits.dim(2), 5}), Error) << "byte " << i;
    }
}

TEST(Codec, RoundTripIsBitExact) {
    Tensor<float, 4> x({2, 3, 1, 4});
    std::mt19937 rng(1);
    for (float& v : x.data()) v = std::bit_cast<float>(static_cast<std::uint32_t>(rng()) & 0x7F7FFFFFu);
    EXPECT_EQ(codec::decode<4>(codec::encode(x)), x);
}

TEST(Manifest, JsonRoundTripAndKeyOrder) {
    auto t = small_trace();
    t.token_map.category = Category::artist;
    const auto j = io::manifest_to_json(t.manifest, t.token_map);
    std::vector<std::string> keys;
    for (const auto& [k, _] : j.items()) keys.push_back(k);
    EXPECT_EQ(keys, (std::vector<std::string>{"format_version", "model_id", "n_layers", "n_heads", "n_steps",
                                              "scheduler_timesteps", "prompt_text", "tokens", "dominant_idx",
                                              "dominated_idx", "category", "layer_groups"}));
    const auto [m, tm] = io::manifest_from_json(j.dump());
    EXPECT_EQ(m, t.manifest);
    EXPECT_EQ(tm, t.token_map);
}

TEST(Manifest, Errors) {
    auto j = io::manifest_to_json(small_trace().manifest, small_trace().token_map);
    auto bad_version = j;
    bad_version["format_version"] = 2;
    EXPECT_EQ(code_of([&] { io::manifest_from_json(bad_version.dump()); }), ErrorCode::UnsupportedVersion);
    auto missing = j;
    missing.erase("tokens");
    EXPECT_EQ(code_of([&] { io::manifest_from_json(missing.dump()); }), ErrorCode::MalformedManifest);
    auto wrong_type = j;
    wrong_type["n_steps"] = "two";
    EXPECT_EQ(code_of([&] { io::manifest_from_json(wrong_type.dump()); }), ErrorCode::MalformedManifest);
    auto bad_cat = j;
    bad_cat["category"] = "planet";
    EXPECT_EQ(code_of([&] { io::manifest_from_json(bad_cat.dump()); }), ErrorCode::MalformedManifest);
    EXPECT_EQ(code_of([&] { io::manifest_from_json("{not json"); }), ErrorCode::MalformedManifest);
    auto null_idx = j;
    null_idx["dominant_idx"] = nullptr;
    EXPECT_FALSE(io::manifest_from_json(null_idx.dump()).second.dominant_idx.has_value());
}

TEST(Container, DirectoryAndZipRoundTrip) {
    const auto dir = fixtures::temp_dir("io_roundtrip");
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 10; ++rep) {
        const auto t = fixtures::random_trace(rng, 4, 3, 2 + rng() % 6, rep % 2 == 0);
        io::write_trace(t, dir / "d");
        io::write_trace(t, dir / "z.zip");
        EXPECT_EQ(io::read_trace(dir / "d"), t);
        EXPECT_EQ(io::read_trace(dir / "z.zip"), t);
    }
    fs::remove_all(dir);
}

TEST(Container, RewriteDropsStaleHeadLogits) {
    const auto dir = fixtures::temp_dir("io_stale");
    std::mt19937_64 rng(5);
    const auto with = fixtures::random_trace(rng, 4, 2, 3, true);
    auto without = with;
    without.head_logits.reset();
    io::write_trace(with, dir / "d");
    io::write_trace(without, dir / "d");
    EXPECT_FALSE(io::read_trace(dir / "d").head_logits.has_value());
    fs::remove_all(dir);
}

TEST(Container, DeterministicBytes) {
    const auto dir = fixtures::temp_dir("io_determinism");
    std::mt19937_64 rng(9);
    const auto t = fixtures::random_trace(rng, 3, 2, 4, true);
    const io::ContainerExtras extras{{"vqa.csv", "c1,c2,n\n3,2,5\n"}};
    io::write_trace(t, dir / "a.zip", extras);
    io::write_trace(t, dir / "b.zip", extras);
    EXPECT_EQ(io::read_file(dir / "a.zip"), io::read_file(dir / "b.zip"));
    EXPECT_EQ(io::read_member(dir / "a.zip", "vqa.csv"), extras.at("vqa.csv"));
    EXPECT_FALSE(io::read_member(dir / "a.zip", "noise.csv").has_value());
    fs::remove_all(dir);
}

TEST(Container, WriteRejectsInvalidTrace) {
    const auto dir = fixtures::temp_dir("io_invalid");
    auto t = small_trace();
    t.attention(0, 0, 0) = 0.9f;
    EXPECT_EQ(code_of([&] { io::write_trace(t, dir / "d"); }), ErrorCode::InvalidTrace);
    fs::remove_all(dir);
}

TEST(Container, ReadRejectsInvalidTrace) {
    const auto dir = fixtures::temp_dir("io_invalid_read");
    io::write_trace(small_trace(), dir / "d");
    auto att = codec::encode(small_trace().attention);
    const float bad = 0.9f;
    std::memcpy(att.data() + codec::header_size(3), &bad, sizeof bad);
    io::write_file(dir / "d" / "attn_agg.bin", att);
    EXPECT_EQ(code_of([&] { io::read_trace(dir / "d"); }), ErrorCode::InvalidTrace);
    fs::remove(dir / "d" / "attn_agg.bin");
    EXPECT_EQ(code_of([&] { io::read_trace(dir / "d"); }), ErrorCode::IoFailure);
    EXPECT_EQ(code_of([&] { io::read_trace(dir / "missing"); }), ErrorCode::IoFailure);
    fs::remove_all(dir);
}

TEST(Container, ReadsDeflatedZipWithTopLevelFolder) {
    const fs::path zip = fs::path(DVDLENS_TEST_DATA_DIR) / "deflate_trace.zip";
    const auto t = io::read_trace(zip);
    EXPECT_EQ(t.manifest.model_id, "fixture-deflate");
    EXPECT_EQ(t.attention.shape(), (AggregatedAttention::Shape{2, 2, 3}));
    EXPECT_FLOAT_EQ(t.attention(1, 0, 2), 0.75f);
    EXPECT_EQ(io::read_member(zip, "vqa.csv"), std::optional<std::string>("prompt_id,c1,c2,n\np0,3,2,5\n"));
}

TEST(Zip, CorruptedCrcIsRejected) {
    zip::Writer w;
    w.add("x.txt", "hello");
    auto bytes = w.finish();
    const auto at = bytes.find("hello");
    ASSERT_NE(at, std::string::npos);
    bytes[at] = 'j';
    zip::Reader r(bytes);
    EXPECT_THROW(r.read("x.txt"), Error);
}
