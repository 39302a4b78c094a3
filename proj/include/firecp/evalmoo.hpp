#pragma once

// Segmentation scoring: one-vs-rest confusion counts, IoU / FNR, rank-order
// centroid weights, the weighted-sum score F(x) and rankings built on it.

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <exception>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "firecp/error.hpp"
#include "firecp/imgcore.hpp"

namespace firecp {

struct ClassCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    bool operator==(const ClassCounts&) const = default;
};

/// Per-class one-vs-rest counts. Accumulation is plain integer addition, so
/// merge order never changes the result.
struct ConfusionStats {
    std::array<ClassCounts, kNumClasses> classes{};

    ConfusionStats& operator+=(const ConfusionStats& o) {
        for (std::size_t c = 0; c < classes.size(); ++c) {
            classes[c].tp += o.classes[c].tp;
            classes[c].fp += o.classes[c].fp;
            classes[c].fn += o.classes[c].fn;
            classes[c].tn += o.classes[c].tn;
        }
        return *this;
    }
    friend ConfusionStats operator+(ConfusionStats a, const ConfusionStats& b) { return a += b; }
    bool operator==(const ConfusionStats&) const = default;

    const ClassCounts& operator[](int c) const { return classes.at(static_cast<std::size_t>(c)); }
};

inline ConfusionStats confusion(const ClassMask& pred, const ClassMask& gt) {
    if (pred.width != gt.width || pred.height != gt.height)
        throw Error("dimension_mismatch", "prediction and ground-truth masks differ in size");
    // Joint histogram, then one-vs-rest counts from it.
    std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> joint{};
    for (std::size_t i = 0; i < gt.labels.size(); ++i) {
        const auto g = gt.labels[i];
        const auto p = pred.labels[i];
        if (g >= kNumClasses || p >= kNumClasses) throw Error("invalid_mask", "mask label out of range");
        ++joint[g][p];
    }
    const std::uint64_t total = gt.labels.size();
    ConfusionStats s;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        std::uint64_t gt_c = 0, pred_c = 0;
        for (std::size_t o = 0; o < kNumClasses; ++o) {
            gt_c += joint[c][o];
            pred_c += joint[o][c];
        }
        auto& k = s.classes[c];
        k.tp = joint[c][c];
        k.fn = gt_c - k.tp;
        k.fp = pred_c - k.tp;
        k.tn = total - k.tp - k.fn - k.fp;
    }
    return s;
}

/// Summed confusion over mask pairs. Each worker accumulates a strided subset
/// and the partial sums are merged in worker order.
inline ConfusionStats accumulate_confusion(const std::vector<ClassMask>& preds, const std::vector<ClassMask>& gts,
                                           int threads = 1) {
    if (preds.size() != gts.size()) throw Error("count_mismatch", "prediction and ground-truth counts differ");
    const auto workers =
        std::min<std::size_t>(static_cast<std::size_t>(std::max(1, threads)), std::max<std::size_t>(1, preds.size()));
    std::vector<ConfusionStats> partial(workers);
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < preds.size(); i += workers) partial[w] += confusion(preds[i], gts[i]);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    ConfusionStats total;
    for (const auto& p : partial) total += p;
    return total;
}

/// TP/(TP+FP+FN); 1 when the class is absent from both masks.
inline double iou(const ConfusionStats& s, int c) {
    const auto& k = s[c];
    const auto denom = k.tp + k.fp + k.fn;
    return denom == 0 ? 1.0 : static_cast<double>(k.tp) / static_cast<double>(denom);
}

/// FN/(TP+FN); 0 when the class has no positives.
inline double fnr(const ConfusionStats& s, int c) {
    const auto& k = s[c];
    const auto denom = k.tp + k.fn;
    return denom == 0 ? 0.0 : static_cast<double>(k.fn) / static_cast<double>(denom);
}

enum class TotalIouMode { mean, micro };

/// Mean of the four per-class IoUs, or the pooled (micro) ratio.
inline double total_iou(const ConfusionStats& s, TotalIouMode mode = TotalIouMode::mean) {
    if (mode == TotalIouMode::mean) {
        double sum = 0.0;
        for (int c = 0; c < kNumClasses; ++c) sum += iou(s, c);
        return sum / kNumClasses;
    }
    std::uint64_t tp = 0, denom = 0;
    for (const auto& k : s.classes) {
        tp += k.tp;
        denom += k.tp + k.fp + k.fn;
    }
    return denom == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(denom);
}

// ---------------------------------------------------------------------------
// Rank-order centroid weights.

using Rational = boost::multiprecision::cpp_rational;

/// w_i = (1/n) * sum_{k=i}^{n} 1/k, exactly.
inline std::vector<Rational> roc_weights_exact(int n) {
    if (n < 1) throw Error("invalid_argument", "rank-order centroid weights need n >= 1");
    std::vector<Rational> w(static_cast<std::size_t>(n));
    Rational tail = 0;
    for (int i = n; i >= 1; --i) {
        tail += Rational(1, i);
        w[static_cast<std::size_t>(i - 1)] = tail / n;
    }
    return w;
}

struct ScoreWeights {
    std::vector<double> w;
};

inline ScoreWeights roc_weights(int n) {
    ScoreWeights out;
    for (const auto& r : roc_weights_exact(n)) out.w.push_back(static_cast<double>(r));
    return out;
}

/// F(x) = w1 (1 - fire_fnr) + w2 veg_iou + w3 total_iou.
inline double weighted_score(double fire_fnr, double veg_iou, double total_iou_value, const ScoreWeights& w) {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(fire_fnr) || !in_unit(veg_iou) || !in_unit(total_iou_value))
        throw Error("invalid_metric", "metric values must lie in [0,1]");
    if (w.w.size() != 3) throw Error("invalid_weights", "weighted score needs exactly three weights");
    return w.w[0] * (1.0 - fire_fnr) + w.w[1] * veg_iou + w.w[2] * total_iou_value;
}

struct MetricRecord {
    std::string method;
    double fire_fnr = 0.0;
    double veg_iou = 0.0;
    double total_iou = 0.0;
    double score = 0.0;
};

inline MetricRecord make_record(std::string method, const ConfusionStats& s, const ScoreWeights& w,
                                TotalIouMode mode = TotalIouMode::mean) {
    MetricRecord r;
    r.method = std::move(method);
    r.fire_fnr = fnr(s, static_cast<int>(ClassId::fire));
    r.veg_iou = iou(s, static_cast<int>(ClassId::vegetation));
    r.total_iou = total_iou(s, mode);
    r.score = weighted_score(r.fire_fnr, r.veg_iou, r.total_iou, w);
    return r;
}

enum class Accumulation { global, per_image };

struct SetEvaluation {
    MetricRecord record;
    ConfusionStats totals;                   // summed over all pairs
    std::vector<ConfusionStats> per_image;
};

/// Scores a prediction set. `global` sums the counts first; `per_image`
/// averages each metric over images before scoring.
inline SetEvaluation evaluate_set(const std::string& method, const std::vector<ClassMask>& preds,
                                  const std::vector<ClassMask>& gts, const ScoreWeights& w = roc_weights(3),
                                  TotalIouMode mode = TotalIouMode::mean, Accumulation acc = Accumulation::global) {
    if (preds.size() != gts.size()) throw Error("count_mismatch", "prediction and ground-truth counts differ");
    if (preds.empty()) throw Error("empty_input", "no masks to evaluate");
    SetEvaluation out;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        out.per_image.push_back(confusion(preds[i], gts[i]));
        out.totals += out.per_image.back();
    }
    if (acc == Accumulation::global) {
        out.record = make_record(method, out.totals, w, mode);
        return out;
    }
    MetricRecord avg;
    avg.method = method;
    for (const auto& s : out.per_image) {
        avg.fire_fnr += fnr(s, static_cast<int>(ClassId::fire));
        avg.veg_iou += iou(s, static_cast<int>(ClassId::vegetation));
        avg.total_iou += total_iou(s, mode);
    }
    const auto n = static_cast<double>(out.per_image.size());
    avg.fire_fnr /= n;
    avg.veg_iou /= n;
    avg.total_iou /= n;
    avg.score = weighted_score(avg.fire_fnr, avg.veg_iou, avg.total_iou, w);
    out.record = avg;
    return out;
}

/// Descending by recomputed score; ties go to the lower fire FNR, then name.
/// Any score carried by the input is overwritten.
inline std::vector<MetricRecord> rank_methods(std::vector<MetricRecord> records, const ScoreWeights& w = roc_weights(3)) {
    for (auto& r : records) r.score = weighted_score(r.fire_fnr, r.veg_iou, r.total_iou, w);
    std::sort(records.begin(), records.end(), [](const MetricRecord& a, const MetricRecord& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.fire_fnr != b.fire_fnr) return a.fire_fnr < b.fire_fnr;
        return a.method < b.method;
    });
    return records;
}

// ---------------------------------------------------------------------------
// Pixel composition.

struct PixelStats {
    std::array<std::uint64_t, kNumClasses> counts{};
    std::uint64_t total = 0;
    std::size_t masks = 0;

    double percent(int c) const {
        return total == 0 ? 0.0 : 100.0 * static_cast<double>(counts.at(static_cast<std::size_t>(c))) / total;
    }
    void add(const ClassMask& m) {
        for (auto v : m.labels) {
            if (v >= kNumClasses) throw Error("invalid_mask", "mask label out of range");
            ++counts[v];
        }
        total += m.labels.size();
        ++masks;
    }
};

inline PixelStats pixel_stats(const std::vector<ClassMask>& masks) {
    PixelStats s;
    for (const auto& m : masks) s.add(m);
    return s;
}

// ---------------------------------------------------------------------------
// Keep-best tuning harness.

struct TuningRow {
    std::string hyperparams;
    double fire_fnr = 0.0;
    double veg_iou = 0.0;
    double total_iou = 0.0;
};

struct RankedTuningRow {
    TuningRow row;
    std::size_t input_index = 0;
    double score = 0.0;
};

struct TuningRanking {
    std::vector<RankedTuningRow> ranked;   // descending score, stable on ties
    std::vector<std::size_t> retained;     // input indices kept by the incremental rule
    std::size_t best = 0;                  // input index of the final retained row
};

/// Scores every row, sorts them, and replays the incremental rule "keep a
/// model only if its score exceeds the current best" in input order.
inline TuningRanking keep_best_rank(const std::vector<TuningRow>& rows, const ScoreWeights& w = roc_weights(3)) {
    if (rows.empty()) throw Error("invalid_argument", "keep-best ranking needs at least one row");
    TuningRanking out;
    std::optional<double> best_score;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const double f = weighted_score(r.fire_fnr, r.veg_iou, r.total_iou, w);
        out.ranked.push_back({r, i, f});
        if (!best_score || f > *best_score) {
            best_score = f;
            out.retained.push_back(i);
            out.best = i;
        }
    }
    std::stable_sort(out.ranked.begin(), out.ranked.end(),
                     [](const RankedTuningRow& a, const RankedTuningRow& b) { return a.score > b.score; });
    return out;
}

}  // namespace firecp
