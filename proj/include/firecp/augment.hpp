#pragma once

// Augmented dataset generation: rotation, brightness and contrast sweeps,
// Standard Copy-Paste and Centralized Copy-Paste (CCPDA).
//
// Every output record is produced from its own random stream seeded by
// derive_seed(cfg.seed, source_id, target_id, repetition), so results do not
// depend on the order or the thread in which records are generated.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "firecp/error.hpp"
#include "firecp/imgcore.hpp"
#include "firecp/morphology.hpp"
#include "firecp/random.hpp"

namespace firecp {

enum class AugmentMethod { rotation, brightness, contrast, std_copy_paste, ccpda };

inline const char* to_string(AugmentMethod m) {
    switch (m) {
        case AugmentMethod::rotation: return "rotation";
        case AugmentMethod::brightness: return "brightness";
        case AugmentMethod::contrast: return "contrast";
        case AugmentMethod::std_copy_paste: return "std_copy_paste";
        case AugmentMethod::ccpda: return "ccpda";
    }
    return "unknown";
}

inline AugmentMethod parse_method(const std::string& s) {
    if (s == "rotation") return AugmentMethod::rotation;
    if (s == "brightness") return AugmentMethod::brightness;
    if (s == "contrast") return AugmentMethod::contrast;
    if (s == "std_copy_paste") return AugmentMethod::std_copy_paste;
    if (s == "ccpda") return AugmentMethod::ccpda;
    throw Error("invalid_config", "unknown augmentation method '" + s + "'");
}

inline bool is_copy_paste(AugmentMethod m) { return m == AugmentMethod::std_copy_paste || m == AugmentMethod::ccpda; }

struct Placement {
    enum class Mode { random, fixed };
    Mode mode = Mode::random;
    double x_frac = 0.25;
    double y_frac = 0.25;
    double theta = 0.0;  // segment rotation used in fixed mode

    static Placement fixed(double xf, double yf, double theta_deg = 0.0) { return {Mode::fixed, xf, yf, theta_deg}; }
};

struct AugmentConfig {
    AugmentMethod method = AugmentMethod::std_copy_paste;
    int n = 0;  // expected source count
    int r = 1;  // repetitions per (source, target) pair
    std::uint64_t seed = 0;
    int dilation_kernel = 5;
    std::size_t min_area_std = 100;
    double erosion_percent = 0.0;
    // Unset: each eroded core must cover at least as many pixels as its kernel
    // width.
    std::optional<std::size_t> min_area_ccpda;
    Placement placement;
    int max_placement_tries = 100;
    double subset_probability = 1.0;  // chance that each surviving segment is pasted
    int max_segments = 0;             // >0 keeps only the largest segments
    bool ccpda_dilate = false;
    bool ccpda_random_rotation = false;
    double prescale = kDefaultPrescale;
    int threads = 1;

    void validate() const {
        if (r < 1) throw Error("invalid_config", "repetitions r must be >= 1");
        if (n < 0) throw Error("invalid_config", "n must be >= 0");
        Kernel{dilation_kernel};
        if (!(erosion_percent >= 0.0 && erosion_percent < 1.0))
            throw Error("invalid_config", "erosion_percent must lie in [0,1)");
        if (placement.mode == Placement::Mode::fixed &&
            !(placement.x_frac >= 0.0 && placement.x_frac < 1.0 && placement.y_frac >= 0.0 && placement.y_frac < 1.0))
            throw Error("invalid_config", "fixed placement fractions must lie in [0,1)");
        if (max_placement_tries < 1) throw Error("invalid_config", "max_placement_tries must be >= 1");
        if (!(subset_probability >= 0.0 && subset_probability <= 1.0))
            throw Error("invalid_config", "subset_probability must lie in [0,1]");
        if (max_segments < 0) throw Error("invalid_config", "max_segments must be >= 0");
        if (prescale < 1.0) throw Error("invalid_config", "prescale must be >= 1");
    }
};

inline nlohmann::ordered_json to_json(const AugmentConfig& c) {
    nlohmann::ordered_json j;
    j["method"] = to_string(c.method);
    j["n"] = c.n;
    j["r"] = c.r;
    j["seed"] = c.seed;
    j["dilation_kernel"] = c.dilation_kernel;
    j["min_area_std"] = c.min_area_std;
    j["erosion_percent"] = c.erosion_percent;
    j["min_area_ccpda"] = c.min_area_ccpda ? nlohmann::ordered_json(*c.min_area_ccpda) : nlohmann::ordered_json(nullptr);
    nlohmann::ordered_json p;
    p["mode"] = c.placement.mode == Placement::Mode::fixed ? "fixed" : "random";
    p["x_frac"] = c.placement.x_frac;
    p["y_frac"] = c.placement.y_frac;
    p["theta"] = c.placement.theta;
    j["placement"] = p;
    j["max_placement_tries"] = c.max_placement_tries;
    j["subset_probability"] = c.subset_probability;
    j["max_segments"] = c.max_segments;
    j["ccpda_dilate"] = c.ccpda_dilate;
    j["ccpda_random_rotation"] = c.ccpda_random_rotation;
    j["prescale"] = c.prescale;
    return j;
}

/// Reads the keys present in `j` over `base`; absent keys keep their value.
inline AugmentConfig augment_config_from_json(const nlohmann::json& j, AugmentConfig base = {}) {
    try {
        if (j.contains("method")) base.method = parse_method(j.at("method").get<std::string>());
        if (j.contains("n")) base.n = j.at("n").get<int>();
        if (j.contains("r")) base.r = j.at("r").get<int>();
        if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("dilation_kernel")) base.dilation_kernel = j.at("dilation_kernel").get<int>();
        if (j.contains("min_area_std")) base.min_area_std = j.at("min_area_std").get<std::size_t>();
        if (j.contains("erosion_percent")) base.erosion_percent = j.at("erosion_percent").get<double>();
        if (j.contains("min_area_ccpda")) {
            const auto& v = j.at("min_area_ccpda");
            base.min_area_ccpda = v.is_null() ? std::nullopt : std::optional<std::size_t>(v.get<std::size_t>());
        }
        if (j.contains("placement")) {
            const auto& p = j.at("placement");
            if (p.contains("mode")) {
                const auto mode = p.at("mode").get<std::string>();
                if (mode != "random" && mode != "fixed")
                    throw Error("invalid_config", "placement mode must be 'random' or 'fixed'");
                base.placement.mode = mode == "fixed" ? Placement::Mode::fixed : Placement::Mode::random;
            }
            if (p.contains("x_frac")) base.placement.x_frac = p.at("x_frac").get<double>();
            if (p.contains("y_frac")) base.placement.y_frac = p.at("y_frac").get<double>();
            if (p.contains("theta")) base.placement.theta = p.at("theta").get<double>();
        }
        if (j.contains("max_placement_tries")) base.max_placement_tries = j.at("max_placement_tries").get<int>();
        if (j.contains("subset_probability")) base.subset_probability = j.at("subset_probability").get<double>();
        if (j.contains("max_segments")) base.max_segments = j.at("max_segments").get<int>();
        if (j.contains("ccpda_dilate")) base.ccpda_dilate = j.at("ccpda_dilate").get<bool>();
        if (j.contains("ccpda_random_rotation")) base.ccpda_random_rotation = j.at("ccpda_random_rotation").get<bool>();
        if (j.contains("prescale")) base.prescale = j.at("prescale").get<double>();
        if (j.contains("threads")) base.threads = j.at("threads").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw Error("invalid_config", std::string("augment config: ") + e.what());
    }
    return base;
}

struct Provenance {
    AugmentMethod method = AugmentMethod::rotation;
    std::string source_id;
    std::string target_id;
    nlohmann::ordered_json params;
    std::uint64_t seed = 0;
};

struct PastedSegment {
    int x = 0;  // top-left of the segment bitmap in the target
    int y = 0;
    Segment segment;
};

struct AugmentedSample {
    SamplePair pair;
    Provenance provenance;
    std::vector<PastedSegment> pasted;  // copy-paste methods only
};

// ---------------------------------------------------------------------------
// Photometric and geometric sweeps.

inline constexpr int kSweepLength = 24;

/// 5, 20, ..., 350 degrees.
inline std::vector<double> rotation_angles() {
    std::vector<double> a;
    for (int k = 0; k < kSweepLength; ++k) a.push_back(5.0 + 15.0 * k);
    return a;
}

/// 1.00, 1.05, ..., 2.15.
inline std::vector<double> brightness_factors() {
    std::vector<double> f;
    for (int k = 0; k < kSweepLength; ++k) f.push_back((100 + 5 * k) / 100.0);
    return f;
}

/// 0.50, 0.55, ..., 1.65.
inline std::vector<double> contrast_factors() {
    std::vector<double> f;
    for (int k = 0; k < kSweepLength; ++k) f.push_back((50 + 5 * k) / 100.0);
    return f;
}

/// Scales the HSV value channel by `factor`, clips it to 8 bits and converts
/// back to RGB.
inline Raster scale_brightness(const Raster& img, double factor) {
    Raster out = img;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            auto hsv = rgb_to_hsv(img.at(x, y));
            hsv.v = clip_u8(hsv.v * factor);
            out.set(x, y, hsv_to_rgb(hsv));
        }
    return out;
}

/// I' = I * alpha + beta per channel, clipped to 8 bits.
inline Raster scale_contrast(const Raster& img, double alpha, double beta = 0.0) {
    Raster out = img;
    for (auto& v : out.data) v = clip_u8(v * alpha + beta);
    return out;
}

namespace detail {

inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

inline AugmentedSample sweep_record(const SamplePair& src, AugmentMethod method, double value, double prescale) {
    AugmentedSample s;
    s.provenance.method = method;
    s.provenance.source_id = src.id;
    s.provenance.target_id = src.id;
    s.pair.split = src.split;
    switch (method) {
        case AugmentMethod::rotation:
            s.pair.image = rotate_prescaled(src.image, value, prescale);
            s.pair.mask = rotate_prescaled(src.mask, value, prescale);
            s.pair.id = src.id + "_rot" + format_number(value);
            s.provenance.params = {{"angle", value}, {"prescale", prescale}};
            break;
        case AugmentMethod::brightness:
            s.pair.image = scale_brightness(src.image, value);
            s.pair.mask = src.mask;
            s.pair.id = src.id + "_bri" + format_number(value);
            s.provenance.params = {{"factor", value}};
            break;
        case AugmentMethod::contrast:
            s.pair.image = scale_contrast(src.image, value);
            s.pair.mask = src.mask;
            s.pair.id = src.id + "_con" + format_number(value);
            s.provenance.params = {{"alpha", value}, {"beta", 0.0}};
            break;
        default: throw Error("invalid_config", "not a sweep method");
    }
    return s;
}

inline void require_sources(const std::vector<SamplePair>& d) {
    if (d.empty()) throw Error("empty_input", "augmentation needs at least one input pair");
    for (const auto& p : d) {
        if (p.split == "test") throw Error("test_split_input", "refusing to augment test-split sample '" + p.id + "'");
        validate(p);
    }
}

// Runs fn(i) for i in [0, count) on up to `threads` workers. The first
// exception thrown by any task is rethrown on the caller's thread.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
    const auto workers = static_cast<std::size_t>(std::max(1, threads));
    if (workers == 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(workers, count); ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = count;
                }
            }
        });
    pool.clear();
    if (error) std::rethrow_exception(error);
}

inline std::vector<AugmentedSample> sweep_set(const std::vector<SamplePair>& d, AugmentMethod method,
                                              const std::vector<double>& values, double prescale, int threads) {
    require_sources(d);
    std::vector<AugmentedSample> out(d.size() * values.size());
    parallel_for(out.size(), threads, [&](std::size_t k) {
        out[k] = sweep_record(d[k / values.size()], method, values[k % values.size()], prescale);
    });
    return out;
}

}  // namespace detail

inline std::vector<AugmentedSample> gen_rotation_set(const std::vector<SamplePair>& d,
                                                     double prescale = kDefaultPrescale, int threads = 1) {
    return detail::sweep_set(d, AugmentMethod::rotation, rotation_angles(), prescale, threads);
}

inline std::vector<AugmentedSample> gen_brightness_set(const std::vector<SamplePair>& d, int threads = 1) {
    return detail::sweep_set(d, AugmentMethod::brightness, brightness_factors(), 1.0, threads);
}

inline std::vector<AugmentedSample> gen_contrast_set(const std::vector<SamplePair>& d, int threads = 1) {
    return detail::sweep_set(d, AugmentMethod::contrast, contrast_factors(), 1.0, threads);
}

// ---------------------------------------------------------------------------
// Copy-paste.

/// Square kernel for a CCPDA erosion level: half-width max(1, round(p * r_eq))
/// where r_eq = sqrt(area / pi) is the segment's equivalent-circle radius.
/// p = 0 yields the identity kernel.
inline Kernel erosion_kernel(double percent, std::size_t area) {
    if (percent <= 0.0) return Kernel{1};
    const double r_eq = std::sqrt(static_cast<double>(area) / std::numbers::pi);
    const int half = std::max(1, static_cast<int>(std::lround(percent * r_eq)));
    return Kernel{2 * half + 1};
}

/// Fire components, dilated, coloured from the source image, each rotated by
/// an angle drawn from U[0,360) (or the fixed placement angle), then filtered
/// by area.
inline std::vector<Segment> extract_fire_segments_std(const SamplePair& pair, const AugmentConfig& cfg, Rng& rng) {
    const Kernel k{cfg.dilation_kernel};
    std::vector<Segment> out;
    for (const auto& comp : connected_components(pair.mask, kFire)) {
        const double theta =
            cfg.placement.mode == Placement::Mode::fixed ? cfg.placement.theta : rng.uniform(0.0, 360.0);
        auto seg = attach_pixels(dilate(comp, k), pair.image);
        seg = crop_to_content(seg);
        if (theta != 0.0) seg = rotate_segment(seg, theta);
        out.push_back(std::move(seg));
    }
    return filter_by_area(std::move(out), cfg.min_area_std);
}

/// Fire components eroded to their cores, coloured from the source image and
/// filtered by area. Dilation and random rotation are opt-in.
inline std::vector<Segment> extract_fire_segments_ccpda(const SamplePair& pair, const AugmentConfig& cfg,
                                                        Rng* rng = nullptr) {
    std::vector<Segment> out;
    for (const auto& comp : connected_components(pair.mask, kFire)) {
        const Kernel k = erosion_kernel(cfg.erosion_percent, comp.area);
        double theta = cfg.placement.mode == Placement::Mode::fixed ? cfg.placement.theta : 0.0;
        if (cfg.ccpda_random_rotation) {
            if (!rng) throw Error("invalid_config", "random CCPDA rotation needs a random stream");
            theta = rng->uniform(0.0, 360.0);
        }
        auto core = crop_to_content(erode(comp, k));
        const std::size_t min_area = cfg.min_area_ccpda.value_or(static_cast<std::size_t>(k.size));
        if (core.empty()) continue;
        if (cfg.ccpda_dilate) core = dilate(core, Kernel{cfg.dilation_kernel});
        core = crop_to_content(attach_pixels(core, pair.image));
        if (theta != 0.0) core = rotate_segment(core, theta);
        if (core.area >= min_area) out.push_back(std::move(core));
    }
    return out;
}

namespace detail {

inline bool placement_valid(const ClassMask& mask, const Segment& s, int px, int py) {
    for (int by = 0; by < s.height; ++by)
        for (int bx = 0; bx < s.width; ++bx) {
            if (!s.test(bx, by)) continue;
            const int x = px + bx;
            const int y = py + by;
            if (x < 0 || y < 0 || x >= mask.width || y >= mask.height) return false;
            if (mask.at(x, y) == kFire) return false;
        }
    return true;
}

inline void stamp(SamplePair& target, const Segment& s, int px, int py) {
    const bool colour = s.has_pixels();
    for (int by = 0; by < s.height; ++by)
        for (int bx = 0; bx < s.width; ++bx) {
            if (!s.test(bx, by)) continue;
            if (colour) target.image.set(px + bx, py + by, s.pixels.at(bx, by));
            target.mask.set(px + bx, py + by, kFire);
        }
}

}  // namespace detail

struct PasteResult {
    SamplePair pair;
    std::vector<PastedSegment> pasted;
    std::size_t skipped = 0;
};

/// Pastes segments one by one onto a copy of `target`. A placement is valid
/// when every set bit lands inside the frame and on a non-fire pixel. Random
/// placement retries up to cfg.max_placement_tries times and then skips the
/// segment; fixed placement anchors the bitmap's top-left at
/// (x_frac * W, y_frac * H) and throws if that position is invalid.
inline PasteResult paste(const SamplePair& target, std::vector<Segment> segs, const AugmentConfig& cfg, Rng& rng) {
    validate(target);
    PasteResult out;
    out.pair = target;
    if (cfg.max_segments > 0 && segs.size() > static_cast<std::size_t>(cfg.max_segments)) {
        std::stable_sort(segs.begin(), segs.end(), [](const Segment& a, const Segment& b) { return a.area > b.area; });
        segs.resize(static_cast<std::size_t>(cfg.max_segments));
    }
    const int w = target.mask.width;
    const int h = target.mask.height;
    for (const auto& s : segs) {
        if (s.empty()) continue;
        if (cfg.subset_probability < 1.0 && !rng.bernoulli(cfg.subset_probability)) continue;
        if (cfg.placement.mode == Placement::Mode::fixed) {
            const int px = static_cast<int>(std::floor(cfg.placement.x_frac * w));
            const int py = static_cast<int>(std::floor(cfg.placement.y_frac * h));
            if (!detail::placement_valid(out.pair.mask, s, px, py))
                throw Error("fixed_placement_invalid", "fixed placement at (" + std::to_string(px) + ", " +
                                                           std::to_string(py) + ") overlaps fire or leaves the frame");
            detail::stamp(out.pair, s, px, py);
            out.pasted.push_back({px, py, s});
            continue;
        }
        if (s.width > w || s.height > h) {
            ++out.skipped;
            continue;
        }
        bool placed = false;
        for (int attempt = 0; attempt < cfg.max_placement_tries && !placed; ++attempt) {
            const int px = static_cast<int>(rng.uniform_int(0, w - s.width));
            const int py = static_cast<int>(rng.uniform_int(0, h - s.height));
            if (detail::placement_valid(out.pair.mask, s, px, py)) {
                detail::stamp(out.pair, s, px, py);
                out.pasted.push_back({px, py, s});
                placed = true;
            }
        }
        if (!placed) ++out.skipped;
    }
    return out;
}

/// One copy-paste output record for (source, target, repetition).
inline AugmentedSample generate_copy_paste_record(const SamplePair& source, const SamplePair& target, int repetition,
                                                  const AugmentConfig& cfg) {
    const std::uint64_t seed = derive_seed(cfg.seed, source.id, target.id, repetition);
    Rng rng(seed);
    auto segs = cfg.method == AugmentMethod::ccpda ? extract_fire_segments_ccpda(source, cfg, &rng)
                                                   : extract_fire_segments_std(source, cfg, rng);
    auto pasted = paste(target, std::move(segs), cfg, rng);

    AugmentedSample s;
    s.pair = std::move(pasted.pair);
    s.pair.id = std::string(to_string(cfg.method)) + "_" + source.id + "_" + target.id + "_r" + std::to_string(repetition);
    s.pair.split = target.split;
    s.pasted = std::move(pasted.pasted);
    s.provenance.method = cfg.method;
    s.provenance.source_id = source.id;
    s.provenance.target_id = target.id;
    s.provenance.seed = seed;
    nlohmann::ordered_json placements = nlohmann::ordered_json::array();
    for (const auto& p : s.pasted)
        placements.push_back({{"x", p.x}, {"y", p.y}, {"width", p.segment.width}, {"height", p.segment.height},
                              {"area", p.segment.area}});
    s.provenance.params = {{"repetition", repetition},
                           {"config", to_json(cfg)},
                           {"placements", placements},
                           {"skipped", pasted.skipped}};
    return s;
}

/// Builds the augmented dataset for `cfg.method`. Copy-paste methods visit
/// every ordered (source, target) pair, including source == target, for each
/// of the r repetitions: n * n * r records, ordered by (source, target, rep).
inline std::vector<AugmentedSample> build_dataset(const std::vector<SamplePair>& d, const AugmentConfig& cfg) {
    cfg.validate();
    if (static_cast<std::size_t>(cfg.n) != d.size())
        throw Error("count_mismatch", "config expects n = " + std::to_string(cfg.n) + " sources, got " +
                                          std::to_string(d.size()));
    switch (cfg.method) {
        case AugmentMethod::rotation: return gen_rotation_set(d, cfg.prescale, cfg.threads);
        case AugmentMethod::brightness: return gen_brightness_set(d, cfg.threads);
        case AugmentMethod::contrast: return gen_contrast_set(d, cfg.threads);
        default: break;
    }
    detail::require_sources(d);
    const std::size_t n = d.size();
    const auto r = static_cast<std::size_t>(cfg.r);
    std::vector<AugmentedSample> out(n * n * r);
    detail::parallel_for(out.size(), cfg.threads, [&](std::size_t k) {
        const std::size_t rep = k % r;
        const std::size_t target = (k / r) % n;
        const std::size_t source = k / (r * n);
        out[k] = generate_copy_paste_record(d[source], d[target], static_cast<int>(rep), cfg);
    });
    return out;
}

/// Rebuilds a record from its provenance and the original inputs.
inline AugmentedSample regenerate(const std::vector<SamplePair>& d, const Provenance& prov) {
    auto find = [&](const std::string& id) -> const SamplePair& {
        for (const auto& p : d)
            if (p.id == id) return p;
        throw Error("unknown_sample", "no input sample with id '" + id + "'");
    };
    const auto& source = find(prov.source_id);
    switch (prov.method) {
        case AugmentMethod::rotation:
            return detail::sweep_record(source, prov.method, prov.params.at("angle").get<double>(),
                                        prov.params.at("prescale").get<double>());
        case AugmentMethod::brightness:
            return detail::sweep_record(source, prov.method, prov.params.at("factor").get<double>(), 1.0);
        case AugmentMethod::contrast:
            return detail::sweep_record(source, prov.method, prov.params.at("alpha").get<double>(), 1.0);
        default: break;
    }
    const auto cfg = augment_config_from_json(nlohmann::json::parse(prov.params.at("config").dump()));
    return generate_copy_paste_record(source, find(prov.target_id), prov.params.at("repetition").get<int>(), cfg);
}

}  // namespace firecp
