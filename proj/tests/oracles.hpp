#pragma once

// Brute-force reference implementations used only by the tests. None of these
// call into the library code they are checked against.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "firecp/imgcore.hpp"

namespace oracle {

/// A set of absolute pixel coordinates.
using PixelSet = std::set<std::pair<int, int>>;

// ---------------------------------------------------------------------------
// Random fixtures

inline firecp::ClassMask random_mask(std::mt19937_64& g, int w, int h, int classes = 4) {
    firecp::ClassMask m(w, h);
    std::uniform_int_distribution<int> d(0, classes - 1);
    for (auto& v : m.labels) v = static_cast<std::uint8_t>(d(g));
    return m;
}

/// Binary mask (labels 0 / `cls`) with roughly `density` set.
inline firecp::ClassMask random_binary(std::mt19937_64& g, int w, int h, double density, std::uint8_t cls = 3) {
    firecp::ClassMask m(w, h);
    std::bernoulli_distribution d(density);
    for (auto& v : m.labels) v = d(g) ? cls : 0;
    return m;
}

inline firecp::Raster random_raster(std::mt19937_64& g, int w, int h, int lo = 0, int hi = 255) {
    firecp::Raster r(w, h);
    std::uniform_int_distribution<int> d(lo, hi);
    for (auto& v : r.data) v = static_cast<std::uint8_t>(d(g));
    return r;
}

// ---------------------------------------------------------------------------
// Morphology

inline PixelSet pixels_of(const firecp::ClassMask& m, std::uint8_t cls) {
    PixelSet s;
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            if (m.at(x, y) == cls) s.insert({x, y});
    return s;
}

/// Union over |dx|,|dy| <= half of the set shifted by (dx, dy).
inline PixelSet shift_union(const PixelSet& s, int half) {
    PixelSet out;
    for (int dy = -half; dy <= half; ++dy)
        for (int dx = -half; dx <= half; ++dx)
            for (const auto& [x, y] : s) out.insert({x + dx, y + dy});
    return out;
}

/// Intersection over |dx|,|dy| <= half of the set shifted by (dx, dy).
inline PixelSet shift_intersection(const PixelSet& s, int half) {
    PixelSet out;
    for (const auto& p : s) {
        bool all = true;
        for (int dy = -half; dy <= half && all; ++dy)
            for (int dx = -half; dx <= half && all; ++dx)
                if (!s.count({p.first + dx, p.second + dy})) all = false;
        if (all) out.insert(p);
    }
    return out;
}

/// 8-connected components via union-find, each as a pixel set, sorted by
/// their smallest (row-major) pixel.
inline std::vector<PixelSet> components(const firecp::ClassMask& m, std::uint8_t cls) {
    const int n = m.width * m.height;
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    };
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            if (m.at(x, y) != cls) continue;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= m.width || ny >= m.height || m.at(nx, ny) != cls) continue;
                    parent[find(y * m.width + x)] = find(ny * m.width + nx);
                }
        }
    std::map<int, PixelSet> groups;
    std::map<int, int> first;
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            if (m.at(x, y) == cls) {
                const int root = find(y * m.width + x);
                groups[root].insert({x, y});
                if (!first.count(root)) first[root] = y * m.width + x;
            }
    std::vector<std::pair<int, PixelSet>> ordered;
    for (auto& [root, set] : groups) ordered.push_back({first[root], std::move(set)});
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<PixelSet> out;
    for (auto& [k, set] : ordered) out.push_back(std::move(set));
    return out;
}

/// Continuous area covered by the unit pixel squares of `bits` after an exact
/// rotation by `theta_deg`, estimated on a grid of `ss` x `ss` samples per
/// unit area.
inline double rotated_area_supersampled(const std::vector<std::uint8_t>& bits, int w, int h, double theta_deg,
                                        int ss = 32) {
    const double rad = theta_deg * 3.14159265358979323846 / 180.0;
    const double c = std::cos(rad), s = std::sin(rad);
    const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
    const double reach = std::hypot(w, h) / 2.0 + 1.0;
    const int span = static_cast<int>(std::ceil(reach * ss));
    long long hits = 0;
    for (int j = -span; j < span; ++j)
        for (int i = -span; i < span; ++i) {
            const double u = (i + 0.5) / ss;
            const double v = (j + 0.5) / ss;
            // Undo the rotation to find the source point.
            const double sx = cx + u * c - v * s;
            const double sy = cy + u * s + v * c;
            const int px = static_cast<int>(std::floor(sx + 0.5));
            const int py = static_cast<int>(std::floor(sy + 0.5));
            if (px < 0 || py < 0 || px >= w || py >= h) continue;
            if (bits[static_cast<std::size_t>(py) * w + px]) ++hits;
        }
    return static_cast<double>(hits) / (static_cast<double>(ss) * ss);
}

// ---------------------------------------------------------------------------
// Dehazing

/// Nested loops: min over the clamped window of the per-pixel channel min.
inline std::vector<double> dark_channel(const std::vector<std::array<double, 3>>& img, int w, int h, int patch) {
    const int r = patch / 2;
    std::vector<double> out(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double m = 1e300;
            for (int yy = y - r; yy <= y + r; ++yy)
                for (int xx = x - r; xx <= x + r; ++xx) {
                    if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
                    const auto& p = img[static_cast<std::size_t>(yy) * w + xx];
                    m = std::min({m, p[0], p[1], p[2]});
                }
            out[static_cast<std::size_t>(y) * w + x] = m;
        }
    return out;
}

inline std::vector<std::array<double, 3>> as_double(const firecp::Raster& r, std::array<double, 3> divide = {1, 1, 1}) {
    std::vector<std::array<double, 3>> out;
    for (int y = 0; y < r.height; ++y)
        for (int x = 0; x < r.width; ++x) {
            const auto p = r.at(x, y);
            out.push_back({p[0] / divide[0], p[1] / divide[1], p[2] / divide[2]});
        }
    return out;
}

/// Sort every pixel by (dark desc, index asc), take the first k, return the
/// one with the largest channel sum (earliest on ties).
inline std::array<int, 3> atmospheric_light(const firecp::Raster& img, const std::vector<double>& dark, double frac) {
    const std::size_t n = dark.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return dark[a] > dark[b]; });
    const std::size_t k = std::max<std::size_t>(1, static_cast<std::size_t>(static_cast<double>(n) * frac));
    std::size_t best = idx[0];
    int best_sum = -1;
    for (std::size_t i = 0; i < k; ++i) {
        const int x = static_cast<int>(idx[i] % static_cast<std::size_t>(img.width));
        const int y = static_cast<int>(idx[i] / static_cast<std::size_t>(img.width));
        const auto p = img.at(x, y);
        const int s = p[0] + p[1] + p[2];
        if (s > best_sum) {
            best_sum = s;
            best = idx[i];
        }
    }
    const auto p = img.at(static_cast<int>(best % static_cast<std::size_t>(img.width)),
                          static_cast<int>(best / static_cast<std::size_t>(img.width)));
    return {p[0], p[1], p[2]};
}

/// Guided filter by explicit per-window ridge regression: for every window k
/// fit p ~ a_k I + b_k minimising sum (a I + b - p)^2 + eps * a^2 * |w_k|,
/// then average a_k, b_k over the windows that contain each pixel.
inline std::vector<double> guided_filter(const std::vector<double>& guide, const std::vector<double>& input, int w,
                                         int h, int r, double eps) {
    std::vector<double> a(guide.size()), b(guide.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double n = 0, si = 0, sp = 0, sii = 0, sip = 0;
            for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r); ++yy)
                for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx) {
                    const double gi = guide[static_cast<std::size_t>(yy) * w + xx];
                    const double pi = input[static_cast<std::size_t>(yy) * w + xx];
                    n += 1;
                    si += gi;
                    sp += pi;
                    sii += gi * gi;
                    sip += gi * pi;
                }
            // Normal equations of the ridge problem.
            // [sii + n*eps, si; si, n] [a; b] = [sip; sp]
            const double m11 = sii + n * eps, m12 = si, m22 = n;
            const double det = m11 * m22 - m12 * m12;
            const double ak = (sip * m22 - m12 * sp) / det;
            const double bk = (m11 * sp - m12 * sip) / det;
            a[static_cast<std::size_t>(y) * w + x] = ak;
            b[static_cast<std::size_t>(y) * w + x] = bk;
        }
    std::vector<double> q(guide.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double n = 0, sa = 0, sb = 0;
            for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r); ++yy)
                for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx) {
                    n += 1;
                    sa += a[static_cast<std::size_t>(yy) * w + xx];
                    sb += b[static_cast<std::size_t>(yy) * w + xx];
                }
            const auto i = static_cast<std::size_t>(y) * w + x;
            q[i] = sa / n * guide[i] + sb / n;
        }
    return q;
}

// ---------------------------------------------------------------------------
// Metrics

struct Counts {
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Per-pixel one-vs-rest counting.
inline std::array<Counts, 4> confusion(const firecp::ClassMask& pred, const firecp::ClassMask& gt) {
    std::array<Counts, 4> out{};
    for (int c = 0; c < 4; ++c)
        for (std::size_t i = 0; i < gt.labels.size(); ++i) {
            const bool g = gt.labels[i] == c;
            const bool p = pred.labels[i] == c;
            auto& k = out[static_cast<std::size_t>(c)];
            if (g && p)
                ++k.tp;
            else if (!g && p)
                ++k.fp;
            else if (g && !p)
                ++k.fn;
            else
                ++k.tn;
        }
    return out;
}

}  // namespace oracle
