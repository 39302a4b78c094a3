#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <map>

#include "firecp/pipeline.hpp"
#include "fixtures.hpp"

using namespace firecp;

namespace {

fs::path fresh_dir(const std::string& name) {
    auto d = fs::temp_directory_path() / ("firecp_pipeline_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

void write_inputs(const fs::path& dir, const std::vector<SamplePair>& pairs) {
    fs::create_directories(dir);
    for (const auto& p : pairs) {
        write_rgb_png(dir / (p.id + ".png"), p.image);
        write_mask_png(dir / (p.id + "_mask.png"), p.mask);
    }
}

struct CliResult {
    int status = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::string& args, const fs::path& scratch) {
    const auto out_file = scratch / "stdout.txt";
    const auto err_file = scratch / "stderr.txt";
    const std::string cmd = std::string("\"") + FIRECP_CLI_PATH + "\" " + args + " > \"" + out_file.string() +
                            "\" 2> \"" + err_file.string() + "\"";
    CliResult r;
    const int raw = std::system(cmd.c_str());
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = detail::read_text(out_file);
    r.err = detail::read_text(err_file);
    return r;
}

std::string read_file(const fs::path& p) { return detail::read_text(p); }

}  // namespace

TEST(Csv, EscapeAndParseRoundTrip) {
    std::ostringstream os;
    const csv::Row row{"plain", "with,comma", "with \"quote\"", "line\nbreak", ""};
    csv::write_row(os, row);
    auto rows = csv::parse(os.str());
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0], row);
    EXPECT_THROW(csv::parse("\"open"), Error);
}

TEST(Split, CountsAndDeterminism) {
    auto pairs = fixture::synthetic_set(20, 1, 8, 8);
    auto a = split_dataset(pairs, {}, 7);
    auto b = split_dataset(pairs, {}, 7);
    std::map<std::string, int> counts;
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].id, pairs[i].id);
        EXPECT_EQ(a[i].split, b[i].split);
        ++counts[a[i].split];
    }
    EXPECT_EQ(counts["train"], 8);
    EXPECT_EQ(counts["val"], 2);
    EXPECT_EQ(counts["test"], 10);
    auto c = split_dataset(pairs, {}, 8);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) differs |= a[i].split != c[i].split;
    EXPECT_TRUE(differs);
    try {
        split_dataset(pairs, {8, 2, 9}, 7);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "count_mismatch");
    }
}

TEST(Manifest, WriteAndReadBack) {
    const auto dir = fresh_dir("manifest");
    auto d = fixture::synthetic_set(2, 3, 32, 32);
    AugmentConfig cfg;
    cfg.n = 2;
    cfg.seed = 5;
    auto samples = build_dataset(d, cfg);
    auto m = write_dataset(dir, samples, std::pair{16, 16});
    auto back = read_manifest(dir / "manifest.csv");
    ASSERT_EQ(back.records.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(back.records[i].params_json, m.records[i].params_json);
        EXPECT_EQ(back.records[i].seed, samples[i].provenance.seed);
        EXPECT_EQ(back.records[i].method, "std_copy_paste");
        auto mask = read_mask_png(dir / back.records[i].out_mask);
        EXPECT_EQ(mask.width, 16);
    }
    auto params = nlohmann::json::parse(back.records[0].params_json);
    EXPECT_EQ(params.at("config").at("method"), "std_copy_paste");
    EXPECT_EQ(pixel_stats(back).total, 4u * 256u);
}

TEST(Manifest, RejectsBadHeaderAndDuplicateIds) {
    const auto dir = fresh_dir("manifest_bad");
    detail::write_text(dir / "m.csv", "a,b\n1,2\n");
    EXPECT_THROW(read_manifest(dir / "m.csv"), Error);
    auto d = fixture::synthetic_set(1, 3, 8, 8);
    d.push_back(d[0]);
    try {
        write_originals(dir / "dup", d);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "duplicate_id");
    }
}

TEST(Config, ParsesAndResolvesPaths) {
    auto j = nlohmann::json::parse(R"({
        "input_dir": "in", "output_dir": "/abs/out", "seed": 9,
        "stages": {"augment": true, "stats": true},
        "target_size": [128, 96],
        "dehaze": {"omega": 0.5},
        "augment": {"method": "ccpda", "r": 3, "erosion_percent": 0.1},
        "evaluate": {"prediction_dir": "pred", "total_iou": "micro"},
        "report_formats": ["json"]
    })");
    auto c = pipeline_config_from_json(j, "/base");
    EXPECT_EQ(c.input_dir, fs::path("/base/in"));
    EXPECT_EQ(c.output_dir, fs::path("/abs/out"));
    EXPECT_EQ(c.seed, 9u);
    EXPECT_TRUE(c.stages.augment);
    EXPECT_FALSE(c.stages.dehaze);
    EXPECT_EQ(c.target_width, 128);
    EXPECT_DOUBLE_EQ(c.dehaze.omega, 0.5);
    EXPECT_EQ(c.augment.method, AugmentMethod::ccpda);
    EXPECT_EQ(c.augment.r, 3);
    EXPECT_EQ(c.eval.total_iou, TotalIouMode::micro);
    EXPECT_FALSE(c.write_csv);
    EXPECT_TRUE(c.write_json);
    EXPECT_THROW(pipeline_config_from_json(nlohmann::json::parse(R"({"evaluate": {"accumulation": "x"}})")), Error);
    EXPECT_THROW(pipeline_config_from_json(nlohmann::json::parse(R"({"seed": "abc"})")), Error);
}

TEST(RunPipeline, NoStagesIsNoOp) {
    const auto dir = fresh_dir("noop");
    PipelineConfig cfg;
    cfg.output_dir = dir / "out";
    auto r = run_pipeline(cfg);
    EXPECT_EQ(r.sources, 0u);
    EXPECT_TRUE(r.written.empty());
    EXPECT_FALSE(fs::exists(cfg.output_dir));
}

TEST(RunPipeline, CopyPasteDatasetCardinalityAndPixels) {
    const auto dir = fresh_dir("cardinality");
    write_inputs(dir / "in", fixture::synthetic_set(8, 11));
    PipelineConfig cfg;
    cfg.input_dir = dir / "in";
    cfg.output_dir = dir / "out";
    cfg.seed = 3;
    cfg.stages.augment = true;
    cfg.stages.stats = true;
    cfg.augment.r = 3;
    auto r = run_pipeline(cfg);
    EXPECT_EQ(r.sources, 8u);
    EXPECT_EQ(r.augmented, 192u);
    ASSERT_TRUE(r.report);
    EXPECT_EQ(r.report->source_stats->total, 524288u);
    EXPECT_EQ(r.report->augmented_stats->total, 12582912u);
    EXPECT_TRUE(fs::exists(cfg.output_dir / "std_copy_paste" / "manifest.csv"));
    auto report = nlohmann::json::parse(read_file(cfg.output_dir / "report.json"));
    EXPECT_EQ(report.at("augmented_pixels").at("total_pixels"), 12582912u);
}

TEST(RunPipeline, RerunIsByteIdentical) {
    const auto dir = fresh_dir("rerun");
    write_inputs(dir / "in", fixture::synthetic_set(20, 12, 48, 40));
    PipelineConfig cfg;
    cfg.input_dir = dir / "in";
    cfg.seed = 21;
    cfg.stages.split = true;
    cfg.stages.augment = true;
    cfg.stages.downscale = true;
    cfg.stages.stats = true;
    cfg.target_width = 32;
    cfg.target_height = 32;
    cfg.augment.method = AugmentMethod::ccpda;
    cfg.augment.erosion_percent = 0.1;
    cfg.augment.threads = 4;
    cfg.output_dir = dir / "a";
    auto ra = run_pipeline(cfg);
    cfg.augment.threads = 1;
    cfg.output_dir = dir / "b";
    run_pipeline(cfg);
    EXPECT_EQ(ra.augmented, 64u);  // 8 train sources, r = 1
    for (const auto& rel : {"ccpda/manifest.csv", "dataset/manifest.csv", "report.csv", "report.json"})
        EXPECT_EQ(read_file(dir / "a" / rel), read_file(dir / "b" / rel)) << rel;
    for (const auto& e : fs::directory_iterator(dir / "a" / "ccpda" / "masks"))
        EXPECT_EQ(read_file(e.path()), read_file(dir / "b" / "ccpda" / "masks" / e.path().filename()));

    // Test-split pairs never reach the augmented set.
    auto originals = read_manifest(dir / "a" / "dataset" / "manifest.csv");
    std::set<std::string> test_ids;
    for (const auto& rec : originals.records)
        if (rec.split == "test") test_ids.insert(rec.source_id);
    EXPECT_EQ(test_ids.size(), 10u);
    for (const auto& rec : read_manifest(dir / "a" / "ccpda" / "manifest.csv").records) {
        EXPECT_FALSE(test_ids.count(rec.source_id));
        EXPECT_FALSE(test_ids.count(rec.target_id));
    }
}

TEST(RunPipeline, EvaluateAndRank) {
    const auto dir = fresh_dir("evaluate");
    auto pairs = fixture::synthetic_set(3, 13, 32, 32);
    write_inputs(dir / "in", pairs);
    fs::create_directories(dir / "pred");
    for (const auto& p : pairs) write_mask_png(dir / "pred" / (p.id + "_mask.png"), p.mask);
    detail::write_text(dir / "metrics.csv", "method,fire_fnr,veg_iou,total_iou\nweak,0.5,0.5,0.5\n");
    PipelineConfig cfg;
    cfg.input_dir = dir / "in";
    cfg.output_dir = dir / "out";
    cfg.stages.evaluate = true;
    cfg.stages.rank = true;
    cfg.eval.prediction_dir = dir / "pred";
    cfg.eval.metrics_csv = dir / "metrics.csv";
    cfg.eval.method_name = "perfect";
    auto r = run_pipeline(cfg);
    ASSERT_TRUE(r.report);
    ASSERT_EQ(r.report->ranking.size(), 2u);
    EXPECT_EQ(r.report->ranking[0].method, "perfect");
    EXPECT_NEAR(r.report->ranking[0].score, 1.0, 1e-12);
    auto csv_rows = csv::parse(read_file(cfg.output_dir / "report.csv"));
    EXPECT_EQ(csv_rows[0], (csv::Row{"section", "name", "field", "value"}));
    bool found = false;
    for (const auto& row : csv_rows)
        if (row[0] == "evaluation" && row[2] == "score") found = row[3] == "1.0000";
    EXPECT_TRUE(found);
}

TEST(RunPipeline, PredictionSizeMustMatchGroundTruth) {
    const auto dir = fresh_dir("evaluate_size");
    auto pairs = fixture::synthetic_set(2, 16, 32, 32);
    write_inputs(dir / "in", pairs);
    fs::create_directories(dir / "pred");
    for (const auto& p : pairs) write_mask_png(dir / "pred" / (p.id + "_mask.png"), p.mask);
    PipelineConfig cfg;
    cfg.input_dir = dir / "in";
    cfg.output_dir = dir / "out";
    cfg.stages.evaluate = true;
    cfg.stages.downscale = true;
    cfg.target_width = cfg.target_height = 16;
    cfg.eval.prediction_dir = dir / "pred";
    try {
        run_pipeline(cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "dimension_mismatch");
        EXPECT_NE(std::string(e.what()).find("img0"), std::string::npos) << e.what();
    }
}

TEST(Cli, ErrorsAreJsonWithNonZeroExit) {
    const auto dir = fresh_dir("cli_errors");
    auto r = run_cli("augment --in \"" + (dir / "missing").string() + "\" --out \"" + (dir / "o").string() + "\"", dir);
    EXPECT_EQ(r.status, 1);
    auto err = nlohmann::json::parse(r.err);
    EXPECT_EQ(err.at("error").at("code"), "missing_input");
    EXPECT_FALSE(err.at("error").at("message").get<std::string>().empty());

    detail::write_text(dir / "bad.json", "{ not json");
    r = run_cli("pipeline --config \"" + (dir / "bad.json").string() + "\"", dir);
    EXPECT_EQ(r.status, 1);
    EXPECT_EQ(nlohmann::json::parse(r.err).at("error").at("code"), "invalid_config");

    r = run_cli("augment --method flip --in \"" + dir.string() + "\"", dir);
    EXPECT_EQ(r.status, 1);
    EXPECT_EQ(nlohmann::json::parse(r.err).at("error").at("code"), "invalid_config");
}

TEST(Cli, AugmentStatsRankAndPipeline) {
    const auto dir = fresh_dir("cli_ok");
    auto pairs = fixture::synthetic_set(2, 14, 40, 40);
    write_inputs(dir / "in", pairs);

    auto r = run_cli("augment --in \"" + (dir / "in").string() + "\" --method brightness --out \"" +
                         (dir / "bri").string() + "\" --seed 4",
                     dir);
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_EQ(nlohmann::json::parse(r.out).at("records"), 48);

    r = run_cli("stats --manifest \"" + (dir / "bri" / "manifest.csv").string() + "\"", dir);
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_NE(r.out.find("total,76800,100.00"), std::string::npos) << r.out;

    detail::write_text(dir / "m.csv", "method,fire_fnr,veg_iou,total_iou\na,0.5,0.5,0.5\nb,0.1,0.6,0.5\n");
    r = run_cli("rank --metrics \"" + (dir / "m.csv").string() + "\" --out \"" + (dir / "rank").string() + "\"", dir);
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "rank,method,fire_fnr,veg_iou,total_iou,score");
    EXPECT_NE(r.out.find("1,b,"), std::string::npos) << r.out;

    detail::write_text(dir / "cfg.json", R"({"input_dir": "in", "output_dir": "pipe", "stages": {"stats": true}})");
    r = run_cli("pipeline --config \"" + (dir / "cfg.json").string() + "\"", dir);
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_EQ(nlohmann::json::parse(r.out).at("sources"), 2);
    EXPECT_TRUE(fs::exists(dir / "pipe" / "report.json"));
}

TEST(Cli, DehazeWritesImages) {
    const auto dir = fresh_dir("cli_dehaze");
    auto pairs = fixture::synthetic_set(1, 15, 32, 32);
    write_inputs(dir / "in", pairs);
    auto r = run_cli("dehaze --in \"" + (dir / "in" / "img0.png").string() + "\" --omega 0 --out \"" +
                         (dir / "dh").string() + "\"",
                     dir);
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_EQ(read_rgb_png(dir / "dh" / "img0.png"), pairs[0].image);
}
