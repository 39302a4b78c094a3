#pragma once

// Synthetic image/mask pairs shared by the test suites.

#include <random>
#include <string>
#include <vector>

#include "firecp/augment.hpp"
#include "firecp/imgcore.hpp"

namespace fixture {

/// A textured scene with a vegetation band, an ash patch and a few fire discs.
inline firecp::SamplePair synthetic_pair(const std::string& id, std::uint64_t seed, int w = 256, int h = 256,
                                         int fires = 3) {
    std::mt19937_64 g(seed);
    firecp::SamplePair p;
    p.id = id;
    p.split = "train";
    p.image = firecp::Raster(w, h);
    p.mask = firecp::ClassMask(w, h);
    std::uniform_int_distribution<int> noise(-12, 12);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int n = noise(g);
            firecp::Rgb c{static_cast<std::uint8_t>(110 + n), static_cast<std::uint8_t>(100 + n),
                          static_cast<std::uint8_t>(90 + n)};
            std::uint8_t label = 0;
            if (y > h * 3 / 4) {
                c = {static_cast<std::uint8_t>(40 + n), static_cast<std::uint8_t>(120 + n), static_cast<std::uint8_t>(50 + n)};
                label = 2;
            } else if (x < w / 5 && y < h / 5) {
                c = {static_cast<std::uint8_t>(70 + n), static_cast<std::uint8_t>(70 + n), static_cast<std::uint8_t>(70 + n)};
                label = 1;
            }
            p.image.set(x, y, c);
            p.mask.set(x, y, label);
        }
    const int rmin = std::max(2, std::min(w, h) / 40);
    const int rmax = std::max(rmin + 1, std::min(w, h) / 14);
    std::uniform_int_distribution<int> rad(rmin, rmax);
    for (int f = 0; f < fires; ++f) {
        const int r = rad(g);
        std::uniform_int_distribution<int> cx(r, w - 1 - r), cy(r, h * 3 / 4 - r);
        const int x0 = cx(g), y0 = cy(g);
        for (int y = y0 - r; y <= y0 + r; ++y)
            for (int x = x0 - r; x <= x0 + r; ++x)
                if ((x - x0) * (x - x0) + (y - y0) * (y - y0) <= r * r) {
                    p.image.set(x, y, {static_cast<std::uint8_t>(230 + noise(g) / 2), static_cast<std::uint8_t>(120 + noise(g)), 30});
                    p.mask.set(x, y, firecp::kFire);
                }
    }
    return p;
}

inline std::vector<firecp::SamplePair> synthetic_set(int n, std::uint64_t seed = 1, int w = 256, int h = 256) {
    std::vector<firecp::SamplePair> out;
    for (int i = 0; i < n; ++i) out.push_back(synthetic_pair("img" + std::to_string(i), seed * 1000 + i, w, h));
    return out;
}

/// Checks a copy-paste record against its target: the new fire pixels are
/// exactly the pasted bits, none of them lands on existing fire or on another
/// pasted bit, pasted colours come from the segment and every other pixel is
/// unchanged. Returns an empty string when all of that holds.
inline std::string copy_paste_violation(const firecp::AugmentedSample& s, const firecp::SamplePair& target) {
    const int w = target.mask.width;
    const int h = target.mask.height;
    if (s.pair.mask.width != w || s.pair.mask.height != h) return "dimensions changed";
    std::vector<std::uint8_t> pasted(target.mask.labels.size(), 0);
    std::size_t total = 0;
    for (const auto& p : s.pasted) {
        const auto& seg = p.segment;
        if (!seg.has_pixels()) return "segment without colours";
        for (int by = 0; by < seg.height; ++by)
            for (int bx = 0; bx < seg.width; ++bx) {
                if (!seg.test(bx, by)) continue;
                const int x = p.x + bx, y = p.y + by;
                if (x < 0 || y < 0 || x >= w || y >= h) return "pasted bit outside the frame";
                const auto i = static_cast<std::size_t>(y) * w + x;
                if (target.mask.labels[i] == firecp::kFire) return "pasted onto existing fire";
                if (pasted[i]) return "pasted segments overlap";
                pasted[i] = 1;
                ++total;
                if (s.pair.image.at(x, y) != seg.pixels.at(bx, by)) return "pasted colour differs from segment";
            }
    }
    std::size_t new_fire = 0;
    for (std::size_t i = 0; i < pasted.size(); ++i) {
        const bool fire_now = s.pair.mask.labels[i] == firecp::kFire;
        if (fire_now && target.mask.labels[i] != firecp::kFire) ++new_fire;
        if (pasted[i]) {
            if (!fire_now) return "pasted bit not labelled fire";
            continue;
        }
        if (s.pair.mask.labels[i] != target.mask.labels[i]) return "label changed outside pasted bits";
        for (std::size_t c = 0; c < 3; ++c)
            if (s.pair.image.data[i * 3 + c] != target.image.data[i * 3 + c]) return "colour changed outside pasted bits";
    }
    if (new_fire != total) return "new fire count differs from pasted bit count";
    return {};
}

}  // namespace fixture
