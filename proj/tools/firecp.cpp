// firecp: command-line front end for dehazing, dataset splitting,
// augmentation, evaluation, ranking and pixel statistics.
//
//   firecp <subcommand> [--config FILE] [--seed N] [--out DIR] ...
//
// Exit status is 0 on success. Failures print one JSON object on stderr,
// {"error": {"code": ..., "message": ...}}, and exit with status 1.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "firecp/pipeline.hpp"

namespace fs = std::filesystem;
using namespace firecp;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "Pipeline configuration file (JSON)");
    app->add_option("--seed", c.seed, "Top-level random seed");
    app->add_option("--out", c.out, "Output directory");
}

PipelineConfig base_config(const Common& c) {
    PipelineConfig cfg = c.config.empty() ? PipelineConfig{} : load_pipeline_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (!c.out.empty()) cfg.output_dir = c.out;
    return cfg;
}

std::optional<std::pair<int, int>> parse_size(const std::string& s) {
    if (s.empty()) return std::nullopt;
    const auto x = s.find('x');
    if (x == std::string::npos) throw Error("invalid_argument", "size must look like WIDTHxHEIGHT");
    try {
        const int w = std::stoi(s.substr(0, x));
        const int h = std::stoi(s.substr(x + 1));
        if (w < 1 || h < 1) throw Error("invalid_argument", "size must be positive");
        return std::pair{w, h};
    } catch (const std::logic_error&) {
        throw Error("invalid_argument", "size must look like WIDTHxHEIGHT");
    }
}

void print_json(const nlohmann::ordered_json& j) { std::cout << j.dump(2) << '\n'; }

void print_ranking(const std::vector<MetricRecord>& ranking) {
    std::cout << "rank,method,fire_fnr,veg_iou,total_iou,score\n";
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        const auto& m = ranking[i];
        std::printf("%zu,%s,%.4f,%.4f,%.4f,%.4f\n", i + 1, m.method.c_str(), m.fire_fnr, m.veg_iou, m.total_iou,
                    m.score);
    }
}

std::vector<std::string> image_files(const fs::path& in) {
    std::vector<std::string> files;
    if (fs::is_regular_file(in)) return {in.string()};
    if (!fs::is_directory(in)) throw Error("missing_input", "'" + in.string() + "' not found");
    for (const auto& e : fs::directory_iterator(in)) {
        const auto stem = e.path().stem().string();
        if (e.is_regular_file() && e.path().extension() == ".png" && !stem.ends_with("_mask"))
            files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    return files;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wildfire segmentation dataset toolkit: dehaze, split, augment, evaluate, rank"};
    app.require_subcommand(1);

    // dehaze
    Common dehaze_common;
    std::string dehaze_in;
    std::optional<int> patch, radius;
    std::optional<double> omega, t_floor, eps;
    auto* dehaze_cmd = app.add_subcommand("dehaze", "Dark-channel-prior dehazing of PNG images");
    add_common(dehaze_cmd, dehaze_common);
    dehaze_cmd->add_option("--in", dehaze_in, "Image file or directory")->required();
    dehaze_cmd->add_option("--patch", patch, "Dark channel window (odd)");
    dehaze_cmd->add_option("--omega", omega, "Haze-reduction strength in [0,1]");
    dehaze_cmd->add_option("--t-floor", t_floor, "Minimum transmission");
    dehaze_cmd->add_option("--radius", radius, "Guided filter radius");
    dehaze_cmd->add_option("--eps", eps, "Guided filter regularisation");

    // split
    Common split_common;
    std::string split_in, split_size;
    std::optional<int> n_train, n_val, n_test;
    auto* split_cmd = app.add_subcommand("split", "Deterministic train/val/test split");
    add_common(split_cmd, split_common);
    split_cmd->add_option("--in", split_in, "Directory of <id>.png / <id>_mask.png pairs");
    split_cmd->add_option("--train", n_train);
    split_cmd->add_option("--val", n_val);
    split_cmd->add_option("--test", n_test);
    split_cmd->add_option("--size", split_size, "Downscale written pairs to WIDTHxHEIGHT");

    // augment
    Common aug_common;
    std::string aug_in, aug_method, aug_placement, aug_split_manifest, aug_size;
    std::optional<int> aug_r, aug_threads, aug_kernel;
    std::optional<double> aug_erosion, aug_xf, aug_yf, aug_theta;
    auto* aug_cmd = app.add_subcommand("augment", "Generate an augmented dataset");
    add_common(aug_cmd, aug_common);
    aug_cmd->add_option("--in", aug_in, "Directory of source pairs");
    aug_cmd->add_option("--method", aug_method, "rotation|brightness|contrast|std_copy_paste|ccpda");
    aug_cmd->add_option("--r", aug_r, "Repetitions per (source, target) pair");
    aug_cmd->add_option("--dilation-kernel", aug_kernel);
    aug_cmd->add_option("--erosion-percent", aug_erosion, "CCPDA erosion level as a fraction");
    aug_cmd->add_option("--placement", aug_placement, "random|fixed");
    aug_cmd->add_option("--x-frac", aug_xf);
    aug_cmd->add_option("--y-frac", aug_yf);
    aug_cmd->add_option("--theta", aug_theta, "Segment angle for fixed placement");
    aug_cmd->add_option("--threads", aug_threads);
    aug_cmd->add_option("--split-manifest", aug_split_manifest, "Use only train records of this manifest");
    aug_cmd->add_option("--size", aug_size, "Downscale written pairs to WIDTHxHEIGHT");

    // eval
    Common eval_common;
    std::string eval_pred, eval_gt, eval_name, eval_mode, eval_acc;
    auto* eval_cmd = app.add_subcommand("eval", "Score prediction masks against ground truth");
    add_common(eval_cmd, eval_common);
    eval_cmd->add_option("--pred", eval_pred, "Directory of predicted masks")->required();
    eval_cmd->add_option("--gt", eval_gt, "Directory of <id>_mask.png ground truth")->required();
    eval_cmd->add_option("--method-name", eval_name);
    eval_cmd->add_option("--total-iou", eval_mode, "mean|micro");
    eval_cmd->add_option("--accumulation", eval_acc, "global|per_image");

    // rank
    Common rank_common;
    std::string rank_csv;
    auto* rank_cmd = app.add_subcommand("rank", "Rank methods by weighted score");
    add_common(rank_cmd, rank_common);
    rank_cmd->add_option("--metrics", rank_csv, "CSV with method,fire_fnr,veg_iou,total_iou (fractions)");

    // stats
    Common stats_common;
    std::string stats_manifest, stats_masks;
    auto* stats_cmd = app.add_subcommand("stats", "Per-class pixel statistics");
    add_common(stats_cmd, stats_common);
    stats_cmd->add_option("--manifest", stats_manifest, "manifest.csv to read masks from");
    stats_cmd->add_option("--masks", stats_masks, "Directory of *_mask.png files");

    // pipeline
    Common pipe_common;
    auto* pipe_cmd = app.add_subcommand("pipeline", "Run the configured stages end to end");
    add_common(pipe_cmd, pipe_common);
    pipe_cmd->get_option("--config")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (dehaze_cmd->parsed()) {
            auto cfg = base_config(dehaze_common);
            if (patch) cfg.dehaze.patch = *patch;
            if (omega) cfg.dehaze.omega = *omega;
            if (t_floor) cfg.dehaze.t_floor = *t_floor;
            if (radius) cfg.dehaze.guided_radius = *radius;
            if (eps) cfg.dehaze.guided_eps = *eps;
            cfg.dehaze.validate();
            detail::ensure_dir(cfg.output_dir);
            nlohmann::ordered_json written = nlohmann::ordered_json::array();
            for (const auto& file : image_files(dehaze_in)) {
                const auto res = dehaze_detailed(read_rgb_png(file), cfg.dehaze);
                const auto out = cfg.output_dir / fs::path(file).filename();
                write_rgb_png(out, res.image);
                written.push_back({{"file", out.string()},
                                   {"atmospheric_light", {res.atmospheric_light[0], res.atmospheric_light[1],
                                                          res.atmospheric_light[2]}}});
            }
            print_json({{"dehazed", written}});
        } else if (split_cmd->parsed()) {
            auto cfg = base_config(split_common);
            if (!split_in.empty()) cfg.input_dir = split_in;
            if (n_train) cfg.split.train = *n_train;
            if (n_val) cfg.split.val = *n_val;
            if (n_test) cfg.split.test = *n_test;
            const auto pairs = split_dataset(load_pairs(cfg.input_dir), cfg.split, cfg.seed);
            const auto m = write_originals(cfg.output_dir, pairs, parse_size(split_size));
            nlohmann::ordered_json counts{{"train", 0}, {"val", 0}, {"test", 0}};
            for (const auto& r : m.records) counts[r.split] = counts[r.split].get<int>() + 1;
            print_json({{"manifest", (cfg.output_dir / "manifest.csv").string()}, {"counts", counts}});
        } else if (aug_cmd->parsed()) {
            auto cfg = base_config(aug_common);
            if (!aug_in.empty()) cfg.input_dir = aug_in;
            auto& a = cfg.augment;
            if (!aug_method.empty()) a.method = parse_method(aug_method);
            if (aug_r) a.r = *aug_r;
            if (aug_kernel) a.dilation_kernel = *aug_kernel;
            if (aug_erosion) a.erosion_percent = *aug_erosion;
            if (!aug_placement.empty()) {
                if (aug_placement != "random" && aug_placement != "fixed")
                    throw Error("invalid_argument", "placement must be 'random' or 'fixed'");
                a.placement.mode = aug_placement == "fixed" ? Placement::Mode::fixed : Placement::Mode::random;
            }
            if (aug_xf) a.placement.x_frac = *aug_xf;
            if (aug_yf) a.placement.y_frac = *aug_yf;
            if (aug_theta) a.placement.theta = *aug_theta;
            if (aug_threads) a.threads = *aug_threads;
            auto pairs = load_pairs(cfg.input_dir);
            if (!aug_split_manifest.empty()) {
                const auto m = read_manifest(aug_split_manifest);
                std::set<std::string> train;
                for (const auto& r : m.records)
                    if (r.split == "train") train.insert(r.source_id);
                std::erase_if(pairs, [&](const SamplePair& p) { return !train.count(p.id); });
            }
            for (auto& p : pairs) p.split = "train";
            a.seed = derive_seed(cfg.seed, "augment");
            a.n = static_cast<int>(pairs.size());
            const auto samples = build_dataset(pairs, a);
            const auto m = write_dataset(cfg.output_dir, samples, parse_size(aug_size));
            print_json({{"manifest", (cfg.output_dir / "manifest.csv").string()},
                        {"method", to_string(a.method)},
                        {"records", m.records.size()}});
        } else if (eval_cmd->parsed()) {
            auto cfg = base_config(eval_common);
            if (!eval_name.empty()) cfg.eval.method_name = eval_name;
            if (!eval_mode.empty()) {
                if (eval_mode != "mean" && eval_mode != "micro")
                    throw Error("invalid_argument", "total-iou must be 'mean' or 'micro'");
                cfg.eval.total_iou = eval_mode == "micro" ? TotalIouMode::micro : TotalIouMode::mean;
            }
            if (!eval_acc.empty()) {
                if (eval_acc != "global" && eval_acc != "per_image")
                    throw Error("invalid_argument", "accumulation must be 'global' or 'per_image'");
                cfg.eval.accumulation = eval_acc == "per_image" ? Accumulation::per_image : Accumulation::global;
            }
            std::vector<std::string> ids;
            for (const auto& e : fs::directory_iterator(eval_gt)) {
                const auto stem = e.path().stem().string();
                if (e.path().extension() == ".png" && stem.ends_with("_mask")) ids.push_back(stem.substr(0, stem.size() - 5));
            }
            std::sort(ids.begin(), ids.end());
            std::vector<ClassMask> preds, gts;
            for (const auto& id : ids) {
                gts.push_back(read_mask_png(fs::path(eval_gt) / (id + "_mask.png")));
                preds.push_back(load_prediction(eval_pred, id));
            }
            Report report;
            report.evaluation =
                evaluate_set(cfg.eval.method_name, preds, gts, report.weights, cfg.eval.total_iou, cfg.eval.accumulation);
            report.ranking = {report.evaluation->record};
            write_report(cfg.output_dir, report, cfg.write_csv, cfg.write_json);
            print_json(report_json(report));
        } else if (rank_cmd->parsed()) {
            auto cfg = base_config(rank_common);
            if (!rank_csv.empty()) cfg.eval.metrics_csv = rank_csv;
            if (cfg.eval.metrics_csv.empty()) throw Error("invalid_argument", "rank needs --metrics or evaluate.metrics_csv");
            Report report;
            report.ranking = rank_methods(read_metric_rows(cfg.eval.metrics_csv), report.weights);
            write_report(cfg.output_dir, report, cfg.write_csv, cfg.write_json);
            print_ranking(report.ranking);
        } else if (stats_cmd->parsed()) {
            auto cfg = base_config(stats_common);
            PixelStats s;
            if (!stats_manifest.empty()) {
                s = pixel_stats(read_manifest(stats_manifest));
            } else if (!stats_masks.empty()) {
                std::vector<fs::path> files;
                for (const auto& e : fs::directory_iterator(stats_masks))
                    if (e.path().extension() == ".png" && e.path().stem().string().ends_with("_mask"))
                        files.push_back(e.path());
                std::sort(files.begin(), files.end());
                for (const auto& f : files) s.add(read_mask_png(f));
            } else {
                throw Error("invalid_argument", "stats needs --manifest or --masks");
            }
            std::cout << pixel_stats_table(s);
            if (!stats_common.out.empty()) {
                detail::ensure_dir(cfg.output_dir);
                detail::write_text(cfg.output_dir / "stats.json", pixel_stats_json(s).dump(2) + "\n");
            }
        } else if (pipe_cmd->parsed()) {
            const auto cfg = base_config(pipe_common);
            const auto res = run_pipeline(cfg);
            nlohmann::ordered_json written = nlohmann::ordered_json::array();
            for (const auto& p : res.written) written.push_back(p.string());
            print_json({{"sources", res.sources}, {"augmented", res.augmented}, {"written", written}});
        }
    } catch (const Error& e) {
        std::cerr << nlohmann::ordered_json{{"error", {{"code", e.code()}, {"message", e.what()}}}}.dump() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << nlohmann::ordered_json{{"error", {{"code", "internal"}, {"message", e.what()}}}}.dump() << '\n';
        return 1;
    }
    return 0;
}
