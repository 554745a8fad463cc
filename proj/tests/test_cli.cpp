// Copyright (c) 2026, dvdlens contributors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>
#include <sstream>

#include "dvdlens/cli.hpp"
#include "dvdlens/dvdlens.hpp"
#include "support/fixtures.hpp"

using namespace dvdlens;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(std::move(args), out, err);
    return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fixtures::temp_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
    }
    void TearDown() override { fs::remove_all(dir); }

    fs::path write(const std::string& name, const std::string& text) {
        io::write_file(dir / name, text);
        return dir / name;
    }

    fs::path dir;
};

}  // namespace

TEST_F(Cli, ScoreReportsBoundaryValue) {
    const auto csv = write("vqa.csv", "prompt_id,image_id,c1,c2,n\np,0,3,2,5\n");
    const auto r = run({"score", "--input", csv.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_EQ(j["images"][0]["dvd_score"].get<double>(), 36.0);
    EXPECT_TRUE(j["images"][0]["is_dvd"].get<bool>());
    EXPECT_EQ(j["prompts"][0]["dvd_images"].get<int>(), 1);
    EXPECT_FALSE(j["prompts"][0]["in_benchmark"].get<bool>());
}

TEST_F(Cli, ScoreConfigAndContainer) {
    std::string rows = "image_id,c1,c2,n\n";
    for (int k = 0; k < 10; ++k) rows += std::to_string(k) + (k < 7 ? ",3,2,5\n" : ",0,0,5\n");
    auto t = fixtures::uniform_trace(2, 1, 3);
    t.token_map.prompt_text = "a cat and a dog";
    io::write_trace(t, dir / "trace", {{"vqa.csv", rows}});
    const auto inclusive = run({"score", "--input", (dir / "trace").string()});
    ASSERT_EQ(inclusive.code, 0) << inclusive.err;
    EXPECT_TRUE(json::parse(inclusive.out)["prompts"][0]["in_benchmark"].get<bool>());
    EXPECT_EQ(json::parse(inclusive.out)["prompts"][0]["prompt_id"], "a cat and a dog");

    const auto cfg = write("score.cfg", "boundary = exclusive\n");
    const auto exclusive = run({"score", "--input", (dir / "trace").string(), "--config", cfg.string()});
    ASSERT_EQ(exclusive.code, 0) << exclusive.err;
    EXPECT_FALSE(json::parse(exclusive.out)["prompts"][0]["in_benchmark"].get<bool>());
}

TEST_F(Cli, EmptyInputGivesEmptyDocument) {
    const auto csv = write("vqa.csv", "prompt_id,image_id,c1,c2,n\n");
    const auto r = run({"score", "--input", csv.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_TRUE(j["images"].empty());
    EXPECT_TRUE(j["prompts"].empty());
}

TEST_F(Cli, DetectOnUniformTraceIsNotFlagged) {
    io::write_trace(fixtures::uniform_trace(16, 2, 5), dir / "flat.zip");
    const auto r = run({"detect", "--input", (dir / "flat.zip").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_FALSE(j["detections"][0]["flagged"].get<bool>());
    EXPECT_EQ(j["detections"][0]["selector"], "9&10");
}

TEST_F(Cli, SynthGridAndSelectedRow) {
    const auto cfg = write("corpus.cfg",
                           "mode = corpus\ncount_pos = 12\ncount_neg = 12\nn_steps = 3\nseed = 4\n");
    const auto s = run({"synth", "--config", cfg.string(), "--out", (dir / "corpus").string(), "--threads", "2"});
    ASSERT_EQ(s.code, 0) << s.err;
    EXPECT_EQ(json::parse(s.out)["written"].size(), 24u);

    const auto out = dir / "grid.csv";
    const auto g = run({"grid", "--pos", (dir / "corpus" / "pos").string(), "--neg", (dir / "corpus" / "neg").string(),
                        "--format", "csv", "--out", out.string()});
    ASSERT_EQ(g.code, 0) << g.err;
    const auto tables = report::parse_csv_report(io::read_file(out));
    const auto& grid = tables.at("grid");
    ASSERT_EQ(grid.rows.size(), 32u);
    double best = -2.0;
    for (const auto& row : grid.rows) {
        const double pos = csv::to_double(row[2], "rate_pos");
        const double neg = csv::to_double(row[3], "rate_neg");
        EXPECT_EQ(csv::to_double(row[4], "gap"), pos - neg);
        best = std::max(best, pos - neg);
    }
    const auto& selected = tables.at("selected");
    ASSERT_EQ(selected.rows.size(), 1u);
    EXPECT_EQ(csv::to_double(selected.rows[0][4], "gap"), best);
}

TEST_F(Cli, SynthTraceThenAnalyze) {
    const auto cfg = write("trace.cfg",
                           "n_tokens = 4\nn_layers = 10\nn_steps = 21\ndominant_idx = 1\ndominated_idx = 2\n"
                           "init.lowres = 0, 2, 0, 0\ndrift.mid = 0, 0, -0.1, 0\nnoise_std = 0\ncontainer = zip\n");
    const auto s = run({"synth", "--config", cfg.string(), "--out", (dir / "t").string()});
    ASSERT_EQ(s.code, 0) << s.err;
    const auto trace = dir / "t.zip";
    ASSERT_TRUE(fs::exists(trace));

    const auto r = run({"analyze", "--input", trace.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_EQ(j["summary"][0]["peak_token"].get<int>(), 1);
    EXPECT_EQ(j["layer_focus"].size(), 10u);
    EXPECT_EQ(j["delta_bins"].size(), 4u);  // two roles, 20 deltas in bins of 10

    const Trace t = io::read_trace(trace);
    const auto series = metrics::deviation_series(t, t.manifest.layer_groups.mid, 2);
    const auto deltas = metrics::delta_series(series);
    for (const auto& row : j["deviation"]) {
        if (row["role"] != "dominated") continue;
        const auto k = row["step"].get<std::size_t>();
        EXPECT_EQ(row["alpha"].get<double>(), series.alpha[k]);
        if (k < deltas.size()) {
            EXPECT_EQ(row["delta"].get<double>(), deltas[k]);
        }
    }
}

TEST_F(Cli, AnalyzeReadsNoiseMember) {
    io::write_trace(fixtures::uniform_trace(10, 2, 3), dir / "t", {{"noise.csv", "index,cond,uncond\n0,3,0\n1,4,0\n"}});
    const auto r = run({"analyze", "--input", (dir / "t").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(json::parse(r.out)["noise"][0]["noise_magnitude"].get<double>(), 5.0);
}

TEST_F(Cli, AblateClassify) {
    const auto csv = write("rec.csv",
                           "prompt_id,phenomenon,layer,heads,sscd,lpips,dvd_score,degraded\n"
                           "A,dvd,3,1,,0.9,0,0\nB,dvd,3,1,,0.1,90,0\n"
                           "A,dvd,1,1;2,,0.9,0,0\nA,dvd,1,1;3,,0.1,90,0\n");
    const auto r = run({"ablate-classify", "--input", csv.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_EQ(j["records"][0]["label"], "mitigated");
    EXPECT_EQ(j["layer_mitigation"][0]["ratio"].get<double>(), 0.5);
    EXPECT_EQ(j["multi_head"][0]["mitigated"].get<double>(), 0.5);
}

TEST_F(Cli, UsageErrorsExitOne) {
    EXPECT_EQ(run({}).code, 1);
    EXPECT_EQ(run({"bogus"}).code, 1);
    EXPECT_EQ(run({"score"}).code, 1);
    EXPECT_EQ(run({"score", "--input", "x", "--unknown"}).code, 1);
    EXPECT_EQ(run({"score", "--input", "x", "--format", "xml"}).code, 1);
    const auto cfg = write("bad.cfg", "tresholds = 0.1\n");
    const auto csv = write("vqa.csv", "image_id,c1,c2\n0,1,1\n");
    const auto r = run({"score", "--input", csv.string(), "--config", cfg.string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("tresholds"), std::string::npos);
}

TEST_F(Cli, DataErrorsExitTwo) {
    const auto bad = write("vqa.csv", "image_id,c1,c2\n0,9,1\n");
    const auto r = run({"score", "--input", bad.string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_FALSE(r.err.empty());
    EXPECT_EQ(run({"detect", "--input", (dir / "missing").string()}).code, 2);
    write("junk.zip", "not a zip");
    EXPECT_EQ(run({"analyze", "--input", (dir / "junk.zip").string()}).code, 2);
}

TEST_F(Cli, HelpExitsZero) {
    const auto r = run({"--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("grid"), std::string::npos);
}

TEST_F(Cli, ThreadCountDoesNotChangeOutput) {
    const auto cfg = write("corpus.cfg", "mode = corpus\ncount_pos = 6\ncount_neg = 6\nn_steps = 2\n");
    ASSERT_EQ(run({"synth", "--config", cfg.string(), "--out", (dir / "c").string()}).code, 0);
    const auto a = run({"grid", "--pos", (dir / "c/pos").string(), "--neg", (dir / "c/neg").string(), "--threads", "1"});
    const auto b = run({"grid", "--pos", (dir / "c/pos").string(), "--neg", (dir / "c/neg").string(), "--threads", "4"});
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    const auto d1 = run({"detect", "--input", (dir / "c/pos").string(), "--threads", "1"});
    const auto d3 = run({"detect", "--input", (dir / "c/pos").string(), "--threads", "3"});
    EXPECT_EQ(d1.out, d3.out);
}
