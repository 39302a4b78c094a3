#pragma once

// Orchestration used by the command-line tool: configuration, dataset
// loading and splitting, manifests, reports and the end-to-end pipeline
// dehaze -> split -> augment -> downscale -> evaluate -> rank.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "firecp/augment.hpp"
#include "firecp/csv.hpp"
#include "firecp/dehaze.hpp"
#include "firecp/error.hpp"
#include "firecp/evalmoo.hpp"
#include "firecp/imgcore.hpp"
#include "firecp/png_io.hpp"
#include "firecp/random.hpp"

namespace firecp {

namespace fs = std::filesystem;

struct SplitCounts {
    int train = 8;
    int val = 2;
    int test = 10;

    int total() const { return train + val + test; }
};

struct StageFlags {
    bool dehaze = false;
    bool split = false;
    bool augment = false;
    bool downscale = false;
    bool evaluate = false;
    bool rank = false;
    bool stats = false;

    bool any() const { return dehaze || split || augment || downscale || evaluate || rank || stats; }
};

struct EvalConfig {
    fs::path prediction_dir;
    fs::path metrics_csv;  // extra rows for ranking
    std::string method_name = "model";
    TotalIouMode total_iou = TotalIouMode::mean;
    Accumulation accumulation = Accumulation::global;
};

struct PipelineConfig {
    fs::path input_dir;
    fs::path output_dir = "out";
    std::uint64_t seed = 0;
    StageFlags stages;
    SplitCounts split;
    int target_width = 256;
    int target_height = 256;
    DehazeParams dehaze;
    AugmentConfig augment;
    EvalConfig eval;
    bool write_csv = true;
    bool write_json = true;

    void validate() const {
        if (target_width < 1 || target_height < 1) throw Error("invalid_config", "target dimensions must be >= 1");
        if (split.train < 0 || split.val < 0 || split.test < 0)
            throw Error("invalid_config", "split counts must be non-negative");
        dehaze.validate();
        augment.validate();
    }
};

namespace detail {

inline fs::path resolve(const fs::path& base, const fs::path& p) {
    if (p.empty() || p.is_absolute()) return p;
    return base / p;
}

inline std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

inline double round_to(double v, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return std::round(v * scale) / scale;
}

inline void ensure_dir(const fs::path& p) {
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw Error("io_error", "cannot create directory '" + p.string() + "': " + ec.message());
}

inline void write_text(const fs::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw Error("io_error", "cannot write '" + p.string() + "'");
    os << text;
}

inline std::string read_text(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw Error("missing_input", "cannot read '" + p.string() + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace detail

/// Parses a pipeline configuration. Relative paths resolve against `base_dir`.
inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j, const fs::path& base_dir = {}) {
    PipelineConfig c;
    try {
        if (j.contains("input_dir")) c.input_dir = detail::resolve(base_dir, j.at("input_dir").get<std::string>());
        if (j.contains("output_dir")) c.output_dir = detail::resolve(base_dir, j.at("output_dir").get<std::string>());
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("stages")) {
            const auto& s = j.at("stages");
            c.stages.dehaze = s.value("dehaze", false);
            c.stages.split = s.value("split", false);
            c.stages.augment = s.value("augment", false);
            c.stages.downscale = s.value("downscale", false);
            c.stages.evaluate = s.value("evaluate", false);
            c.stages.rank = s.value("rank", false);
            c.stages.stats = s.value("stats", false);
        }
        if (j.contains("split")) {
            const auto& s = j.at("split");
            c.split.train = s.value("train", c.split.train);
            c.split.val = s.value("val", c.split.val);
            c.split.test = s.value("test", c.split.test);
        }
        if (j.contains("target_size")) {
            const auto& t = j.at("target_size");
            c.target_width = t.at(0).get<int>();
            c.target_height = t.at(1).get<int>();
        }
        if (j.contains("dehaze")) {
            const auto& d = j.at("dehaze");
            c.dehaze.patch = d.value("patch", c.dehaze.patch);
            c.dehaze.omega = d.value("omega", c.dehaze.omega);
            c.dehaze.t_floor = d.value("t_floor", c.dehaze.t_floor);
            c.dehaze.guided_radius = d.value("guided_radius", c.dehaze.guided_radius);
            c.dehaze.guided_eps = d.value("guided_eps", c.dehaze.guided_eps);
            c.dehaze.top_fraction = d.value("top_fraction", c.dehaze.top_fraction);
        }
        if (j.contains("augment")) c.augment = augment_config_from_json(j.at("augment"), c.augment);
        if (j.contains("evaluate")) {
            const auto& e = j.at("evaluate");
            if (e.contains("prediction_dir"))
                c.eval.prediction_dir = detail::resolve(base_dir, e.at("prediction_dir").get<std::string>());
            if (e.contains("metrics_csv"))
                c.eval.metrics_csv = detail::resolve(base_dir, e.at("metrics_csv").get<std::string>());
            c.eval.method_name = e.value("method_name", c.eval.method_name);
            const auto mode = e.value("total_iou", std::string("mean"));
            if (mode != "mean" && mode != "micro") throw Error("invalid_config", "total_iou must be 'mean' or 'micro'");
            c.eval.total_iou = mode == "micro" ? TotalIouMode::micro : TotalIouMode::mean;
            const auto acc = e.value("accumulation", std::string("global"));
            if (acc != "global" && acc != "per_image")
                throw Error("invalid_config", "accumulation must be 'global' or 'per_image'");
            c.eval.accumulation = acc == "per_image" ? Accumulation::per_image : Accumulation::global;
        }
        if (j.contains("report_formats")) {
            c.write_csv = c.write_json = false;
            for (const auto& f : j.at("report_formats")) {
                const auto s = f.get<std::string>();
                if (s == "csv")
                    c.write_csv = true;
                else if (s == "json")
                    c.write_json = true;
                else
                    throw Error("invalid_config", "unknown report format '" + s + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("invalid_config", e.what());
    }
    return c;
}

inline PipelineConfig load_pipeline_config(const fs::path& path) {
    const auto text = detail::read_text(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error("invalid_config", "cannot parse '" + path.string() + "': " + e.what());
    }
    return pipeline_config_from_json(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// Dataset loading and splitting.

/// Loads `<id>.png` / `<id>_mask.png` pairs from a directory, sorted by id.
inline std::vector<SamplePair> load_pairs(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error("missing_input", "input directory '" + dir.string() + "' not found");
    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".png") continue;
        const auto stem = entry.path().stem().string();
        if (stem.size() >= 5 && stem.ends_with("_mask")) continue;
        ids.push_back(stem);
    }
    std::sort(ids.begin(), ids.end());
    std::vector<SamplePair> out;
    for (const auto& id : ids) {
        const auto mask_path = dir / (id + "_mask.png");
        if (!fs::exists(mask_path)) throw Error("missing_input", "mask '" + mask_path.string() + "' not found");
        SamplePair p{read_rgb_png(dir / (id + ".png")), read_mask_png(mask_path), id, ""};
        validate(p);
        out.push_back(std::move(p));
    }
    return out;
}

/// Shuffles deterministically by `seed` and tags the first `train` pairs as
/// train, the next `val` as val and the rest as test. Input order is kept.
inline std::vector<SamplePair> split_dataset(std::vector<SamplePair> pairs, SplitCounts counts, std::uint64_t seed) {
    if (counts.train < 0 || counts.val < 0 || counts.test < 0 ||
        static_cast<std::size_t>(counts.total()) != pairs.size())
        throw Error("count_mismatch", "split counts " + std::to_string(counts.train) + ":" + std::to_string(counts.val) +
                                          ":" + std::to_string(counts.test) + " do not sum to " +
                                          std::to_string(pairs.size()) + " pairs");
    std::vector<std::size_t> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(seed, "split"));
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)))]);
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto pos = static_cast<int>(k);
        pairs[order[k]].split = pos < counts.train ? "train" : pos < counts.train + counts.val ? "val" : "test";
    }
    return pairs;
}

// ---------------------------------------------------------------------------
// Manifests.

struct ManifestRecord {
    std::string out_image;
    std::string out_mask;
    std::string method;
    std::string source_id;
    std::string target_id;
    std::string params_json;
    std::uint64_t seed = 0;
    std::string split;
};

struct DatasetManifest {
    std::vector<ManifestRecord> records;
    fs::path base_dir;  // directory that relative paths are resolved against
};

inline const csv::Row& manifest_header() {
    static const csv::Row h{"out_image", "out_mask", "method", "source_id", "target_id", "params_json", "seed", "split"};
    return h;
}

inline std::string manifest_to_csv(const DatasetManifest& m) {
    std::ostringstream os;
    csv::write_row(os, manifest_header());
    for (const auto& r : m.records)
        csv::write_row(os, {r.out_image, r.out_mask, r.method, r.source_id, r.target_id, r.params_json,
                            std::to_string(r.seed), r.split});
    return os.str();
}

inline DatasetManifest read_manifest(const fs::path& path) {
    const auto rows = csv::parse(detail::read_text(path));
    if (rows.empty() || rows.front() != manifest_header())
        throw Error("invalid_manifest", "'" + path.string() + "' does not start with the manifest header");
    DatasetManifest m;
    m.base_dir = path.parent_path();
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.size() != manifest_header().size())
            throw Error("invalid_manifest", "manifest row " + std::to_string(i) + " has the wrong column count");
        ManifestRecord rec{r[0], r[1], r[2], r[3], r[4], r[5], 0, r[7]};
        try {
            rec.seed = std::stoull(r[6]);
        } catch (const std::exception&) {
            throw Error("invalid_manifest", "manifest row " + std::to_string(i) + " has a bad seed");
        }
        m.records.push_back(std::move(rec));
    }
    return m;
}

namespace detail {

inline ManifestRecord write_pair(const fs::path& dir, const SamplePair& p, std::optional<std::pair<int, int>> target) {
    ManifestRecord r;
    r.out_image = "images/" + p.id + ".png";
    r.out_mask = "masks/" + p.id + "_mask.png";
    r.split = p.split;
    if (target) {
        write_rgb_png(dir / r.out_image, resize(p.image, target->first, target->second));
        write_mask_png(dir / r.out_mask, resize(p.mask, target->first, target->second));
    } else {
        write_rgb_png(dir / r.out_image, p.image);
        write_mask_png(dir / r.out_mask, p.mask);
    }
    return r;
}

inline void require_unique(std::set<std::string>& seen, const std::string& id) {
    if (!seen.insert(id).second) throw Error("duplicate_id", "duplicate output id '" + id + "'");
}

}  // namespace detail

/// Writes images, masks and manifest.csv under `dir`. When `target` is set,
/// each pair is downscaled to it just before writing.
inline DatasetManifest write_dataset(const fs::path& dir, const std::vector<AugmentedSample>& samples,
                                     std::optional<std::pair<int, int>> target = std::nullopt) {
    detail::ensure_dir(dir / "images");
    detail::ensure_dir(dir / "masks");
    DatasetManifest m;
    m.base_dir = dir;
    std::set<std::string> seen;
    for (const auto& s : samples) {
        detail::require_unique(seen, s.pair.id);
        auto r = detail::write_pair(dir, s.pair, target);
        r.method = to_string(s.provenance.method);
        r.source_id = s.provenance.source_id;
        r.target_id = s.provenance.target_id;
        r.params_json = s.provenance.params.dump();
        r.seed = s.provenance.seed;
        m.records.push_back(std::move(r));
    }
    detail::write_text(dir / "manifest.csv", manifest_to_csv(m));
    return m;
}

/// Writes un-augmented pairs with method "original" and their split tags.
inline DatasetManifest write_originals(const fs::path& dir, const std::vector<SamplePair>& pairs,
                                       std::optional<std::pair<int, int>> target = std::nullopt) {
    detail::ensure_dir(dir / "images");
    detail::ensure_dir(dir / "masks");
    DatasetManifest m;
    m.base_dir = dir;
    std::set<std::string> seen;
    for (const auto& p : pairs) {
        detail::require_unique(seen, p.id);
        auto r = detail::write_pair(dir, p, target);
        r.method = "original";
        r.source_id = p.id;
        r.target_id = p.id;
        r.params_json = "{}";
        m.records.push_back(std::move(r));
    }
    detail::write_text(dir / "manifest.csv", manifest_to_csv(m));
    return m;
}

/// Pixel composition of every mask referenced by a manifest.
inline PixelStats pixel_stats(const DatasetManifest& m) {
    PixelStats s;
    for (const auto& r : m.records) {
        const auto path = detail::resolve(m.base_dir, r.out_mask);
        if (!fs::exists(path)) throw Error("missing_input", "mask '" + path.string() + "' not found");
        s.add(read_mask_png(path));
    }
    return s;
}

// ---------------------------------------------------------------------------
// Reports.

inline nlohmann::ordered_json pixel_stats_json(const PixelStats& s) {
    nlohmann::ordered_json j;
    j["masks"] = s.masks;
    j["total_pixels"] = s.total;
    nlohmann::ordered_json classes = nlohmann::ordered_json::array();
    for (int c = 0; c < kNumClasses; ++c)
        classes.push_back({{"class", class_name(c)},
                           {"pixels", s.counts[static_cast<std::size_t>(c)]},
                           {"percent", detail::round_to(s.percent(c), 2)}});
    j["classes"] = classes;
    return j;
}

inline std::string pixel_stats_table(const PixelStats& s) {
    std::ostringstream os;
    os << "class,pixels,percent\n";
    for (int c = 0; c < kNumClasses; ++c)
        os << class_name(c) << ',' << s.counts[static_cast<std::size_t>(c)] << ',' << detail::fixed(s.percent(c), 2)
           << '\n';
    os << "total," << s.total << ",100.00\n";
    return os.str();
}

/// Reads metric rows (method, fire_fnr, veg_iou, total_iou) given as fractions.
inline std::vector<MetricRecord> read_metric_rows(const fs::path& path) {
    const auto rows = csv::parse(detail::read_text(path));
    if (rows.empty()) throw Error("invalid_csv", "'" + path.string() + "' is empty");
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < rows[0].size(); ++i) col[rows[0][i]] = i;
    for (const char* name : {"method", "fire_fnr", "veg_iou", "total_iou"})
        if (!col.count(name)) throw Error("invalid_csv", std::string("metric CSV lacks column '") + name + "'");
    std::vector<MetricRecord> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.size() != rows[0].size()) throw Error("invalid_csv", "row " + std::to_string(i) + " has the wrong width");
        MetricRecord m;
        m.method = r[col["method"]];
        try {
            m.fire_fnr = std::stod(r[col["fire_fnr"]]);
            m.veg_iou = std::stod(r[col["veg_iou"]]);
            m.total_iou = std::stod(r[col["total_iou"]]);
        } catch (const std::exception&) {
            throw Error("invalid_csv", "row " + std::to_string(i) + " has a non-numeric metric");
        }
        out.push_back(std::move(m));
    }
    return out;
}

struct Report {
    ScoreWeights weights = roc_weights(3);
    std::optional<SetEvaluation> evaluation;
    std::vector<MetricRecord> ranking;
    std::optional<PixelStats> source_stats;
    std::optional<PixelStats> augmented_stats;
};

inline nlohmann::ordered_json report_json(const Report& r) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json w = nlohmann::ordered_json::array();
    for (double v : r.weights.w) w.push_back(v);
    j["weights"] = w;
    if (r.evaluation) {
        const auto& e = *r.evaluation;
        nlohmann::ordered_json ev;
        ev["method"] = e.record.method;
        ev["images"] = e.per_image.size();
        nlohmann::ordered_json per_class = nlohmann::ordered_json::array();
        for (int c = 0; c < kNumClasses; ++c) {
            const auto& k = e.totals[c];
            per_class.push_back({{"class", class_name(c)},
                                 {"iou", detail::round_to(iou(e.totals, c), 6)},
                                 {"fnr", detail::round_to(fnr(e.totals, c), 6)},
                                 {"tp", k.tp},
                                 {"fp", k.fp},
                                 {"fn", k.fn},
                                 {"tn", k.tn}});
        }
        ev["per_class"] = per_class;
        ev["fire_fnr"] = detail::round_to(e.record.fire_fnr, 6);
        ev["veg_iou"] = detail::round_to(e.record.veg_iou, 6);
        ev["total_iou"] = detail::round_to(e.record.total_iou, 6);
        ev["score"] = detail::round_to(e.record.score, 4);
        j["evaluation"] = ev;
    }
    nlohmann::ordered_json ranking = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < r.ranking.size(); ++i) {
        const auto& m = r.ranking[i];
        ranking.push_back({{"rank", i + 1},
                           {"method", m.method},
                           {"fire_fnr", detail::round_to(m.fire_fnr, 6)},
                           {"veg_iou", detail::round_to(m.veg_iou, 6)},
                           {"total_iou", detail::round_to(m.total_iou, 6)},
                           {"score", detail::round_to(m.score, 4)}});
    }
    j["ranking"] = ranking;
    if (r.source_stats) j["source_pixels"] = pixel_stats_json(*r.source_stats);
    if (r.augmented_stats) j["augmented_pixels"] = pixel_stats_json(*r.augmented_stats);
    return j;
}

/// Long-format CSV: section,name,field,value.
inline std::string report_csv(const Report& r) {
    std::ostringstream os;
    csv::write_row(os, {"section", "name", "field", "value"});
    for (std::size_t i = 0; i < r.weights.w.size(); ++i)
        csv::write_row(os, {"weights", "w" + std::to_string(i + 1), "value", detail::fixed(r.weights.w[i], 6)});
    if (r.evaluation) {
        const auto& e = *r.evaluation;
        for (int c = 0; c < kNumClasses; ++c) {
            const auto& k = e.totals[c];
            const std::string name = class_name(c);
            csv::write_row(os, {"class", name, "iou", detail::fixed(iou(e.totals, c), 6)});
            csv::write_row(os, {"class", name, "fnr", detail::fixed(fnr(e.totals, c), 6)});
            csv::write_row(os, {"class", name, "tp", std::to_string(k.tp)});
            csv::write_row(os, {"class", name, "fp", std::to_string(k.fp)});
            csv::write_row(os, {"class", name, "fn", std::to_string(k.fn)});
            csv::write_row(os, {"class", name, "tn", std::to_string(k.tn)});
        }
        csv::write_row(os, {"evaluation", e.record.method, "fire_fnr", detail::fixed(e.record.fire_fnr, 6)});
        csv::write_row(os, {"evaluation", e.record.method, "veg_iou", detail::fixed(e.record.veg_iou, 6)});
        csv::write_row(os, {"evaluation", e.record.method, "total_iou", detail::fixed(e.record.total_iou, 6)});
        csv::write_row(os, {"evaluation", e.record.method, "score", detail::fixed(e.record.score, 4)});
    }
    for (std::size_t i = 0; i < r.ranking.size(); ++i) {
        const auto& m = r.ranking[i];
        csv::write_row(os, {"ranking", m.method, "rank", std::to_string(i + 1)});
        csv::write_row(os, {"ranking", m.method, "fire_fnr", detail::fixed(m.fire_fnr, 6)});
        csv::write_row(os, {"ranking", m.method, "veg_iou", detail::fixed(m.veg_iou, 6)});
        csv::write_row(os, {"ranking", m.method, "total_iou", detail::fixed(m.total_iou, 6)});
        csv::write_row(os, {"ranking", m.method, "score", detail::fixed(m.score, 4)});
    }
    auto stats_rows = [&](const char* section, const PixelStats& s) {
        for (int c = 0; c < kNumClasses; ++c) {
            csv::write_row(os, {section, class_name(c), "pixels", std::to_string(s.counts[static_cast<std::size_t>(c)])});
            csv::write_row(os, {section, class_name(c), "percent", detail::fixed(s.percent(c), 2)});
        }
        csv::write_row(os, {section, "total", "pixels", std::to_string(s.total)});
    };
    if (r.source_stats) stats_rows("source_pixels", *r.source_stats);
    if (r.augmented_stats) stats_rows("augmented_pixels", *r.augmented_stats);
    return os.str();
}

inline void write_report(const fs::path& dir, const Report& r, bool csv_out = true, bool json_out = true) {
    detail::ensure_dir(dir);
    if (csv_out) detail::write_text(dir / "report.csv", report_csv(r));
    if (json_out) detail::write_text(dir / "report.json", report_json(r).dump(2) + "\n");
}

/// Finds `<id>_mask.png`, then `<id>.png`, in a prediction directory.
inline ClassMask load_prediction(const fs::path& dir, const std::string& id) {
    for (const auto& name : {id + "_mask.png", id + ".png"})
        if (fs::exists(dir / name)) return read_mask_png(dir / name);
    throw Error("missing_input", "no prediction for '" + id + "' in '" + dir.string() + "'");
}

// ---------------------------------------------------------------------------

struct PipelineResult {
    std::size_t sources = 0;
    std::size_t augmented = 0;
    std::optional<Report> report;
    std::vector<fs::path> written;
};

/// Runs the enabled stages in order. Augmentation uses train-split samples
/// only and happens at native resolution; downscaling is applied to every
/// written pair. With no stage enabled this is a no-op.
inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
    cfg.validate();
    PipelineResult result;
    const auto& st = cfg.stages;
    if (!st.any()) return result;

    const bool needs_inputs = st.dehaze || st.split || st.augment || st.downscale || st.evaluate || st.stats;
    std::vector<SamplePair> pairs;
    if (needs_inputs) {
        if (cfg.input_dir.empty()) throw Error("invalid_config", "input_dir is required for the enabled stages");
        pairs = load_pairs(cfg.input_dir);
        if (pairs.empty()) throw Error("missing_input", "no image/mask pairs in '" + cfg.input_dir.string() + "'");
    }
    result.sources = pairs.size();
    detail::ensure_dir(cfg.output_dir);
    const std::optional<std::pair<int, int>> target =
        st.downscale ? std::optional<std::pair<int, int>>({cfg.target_width, cfg.target_height}) : std::nullopt;

    if (st.dehaze) {
        for (auto& p : pairs) p.image = dehaze_pipeline(p.image, cfg.dehaze);
    }
    if (st.split) {
        pairs = split_dataset(std::move(pairs), cfg.split, cfg.seed);
    } else {
        for (auto& p : pairs) p.split = "train";
    }

    Report report;
    bool have_report = false;

    if (needs_inputs) {
        write_originals(cfg.output_dir / "dataset", pairs, target);
        result.written.push_back(cfg.output_dir / "dataset" / "manifest.csv");
        if (st.stats) {
            std::vector<ClassMask> train_masks;
            for (const auto& p : pairs)
                if (p.split == "train")
                    train_masks.push_back(target ? resize(p.mask, target->first, target->second) : p.mask);
            report.source_stats = firecp::pixel_stats(train_masks);
            have_report = true;
        }
    }

    if (st.augment) {
        std::vector<SamplePair> train;
        for (const auto& p : pairs)
            if (p.split == "train") train.push_back(p);
        AugmentConfig acfg = cfg.augment;
        acfg.seed = derive_seed(cfg.seed, "augment");
        if (acfg.n == 0) acfg.n = static_cast<int>(train.size());
        const auto samples = build_dataset(train, acfg);
        const auto dir = cfg.output_dir / to_string(acfg.method);
        const auto manifest = write_dataset(dir, samples, target);
        result.augmented = manifest.records.size();
        result.written.push_back(dir / "manifest.csv");
        if (st.stats) {
            report.augmented_stats = pixel_stats(manifest);
            have_report = true;
        }
    }

    if (st.evaluate) {
        if (cfg.eval.prediction_dir.empty()) throw Error("invalid_config", "evaluate stage needs evaluate.prediction_dir");
        std::vector<ClassMask> preds, gts;
        for (const auto& p : pairs) {
            if (st.split && p.split != "test") continue;
            preds.push_back(load_prediction(cfg.eval.prediction_dir, p.id));
            gts.push_back(target ? resize(p.mask, target->first, target->second) : p.mask);
            if (preds.back().width != gts.back().width || preds.back().height != gts.back().height)
                throw Error("dimension_mismatch",
                            "prediction for '" + p.id + "' is " + std::to_string(preds.back().width) + "x" +
                                std::to_string(preds.back().height) + ", ground truth is " +
                                std::to_string(gts.back().width) + "x" + std::to_string(gts.back().height));
        }
        report.evaluation = evaluate_set(cfg.eval.method_name, preds, gts, report.weights, cfg.eval.total_iou,
                                         cfg.eval.accumulation);
        report.ranking.push_back(report.evaluation->record);
        have_report = true;
    }

    if (st.rank) {
        if (!cfg.eval.metrics_csv.empty())
            for (auto& m : read_metric_rows(cfg.eval.metrics_csv)) report.ranking.push_back(std::move(m));
        if (report.ranking.empty()) throw Error("invalid_config", "rank stage has no metric rows to rank");
        have_report = true;
    }
    if (!report.ranking.empty()) report.ranking = rank_methods(std::move(report.ranking), report.weights);

    if (have_report) {
        write_report(cfg.output_dir, report, cfg.write_csv, cfg.write_json);
        if (cfg.write_csv) result.written.push_back(cfg.output_dir / "report.csv");
        if (cfg.write_json) result.written.push_back(cfg.output_dir / "report.json");
        result.report = std::move(report);
    }
    return result;
}

}  // namespace firecp
