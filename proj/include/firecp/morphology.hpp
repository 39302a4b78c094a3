#pragma once

// Binary segment machinery for copy-paste: 8-connected component extraction,
// square-kernel dilation/erosion, nearest-neighbour segment rotation and area
// filtering.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

#include "firecp/error.hpp"
#include "firecp/imgcore.hpp"

namespace firecp {

/// Odd-sized square structuring element.
struct Kernel {
    int size = 1;

    explicit Kernel(int s = 1) : size(s) {
        if (s < 1 || s % 2 == 0) throw Error("invalid_kernel", "kernel size must be odd and >= 1");
    }
    int half() const { return (size - 1) / 2; }
};

/// A binary sub-mask positioned inside a parent image. `pixels`, when
/// non-empty, has the bitmap's dimensions and holds the parent RGB values
/// under each set bit.
struct Segment {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;
    int x = 0;  // origin of the bitmap in parent coordinates (may be negative)
    int y = 0;
    std::size_t area = 0;
    std::uint8_t source_class = kFire;
    Raster pixels;

    Segment() = default;
    Segment(int w, int h, int ox, int oy, std::uint8_t cls = kFire)
        : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0), x(ox), y(oy), source_class(cls) {}

    bool empty() const { return area == 0; }
    bool has_pixels() const { return pixels.width == width && pixels.height == height && !pixels.data.empty(); }
    std::size_t index(int bx, int by) const { return static_cast<std::size_t>(by) * width + bx; }
    bool test(int bx, int by) const { return bits[index(bx, by)] != 0; }

    void recount() { area = static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1})); }

    bool same_shape(const Segment& o) const {
        return width == o.width && height == o.height && x == o.x && y == o.y && bits == o.bits;
    }
};

/// Shrinks the bitmap (and pixel patch) to the bounding box of its set bits.
/// Empty segments collapse to a 0x0 bitmap at their current origin.
inline Segment crop_to_content(const Segment& s) {
    int x0 = s.width, y0 = s.height, x1 = -1, y1 = -1;
    for (int by = 0; by < s.height; ++by)
        for (int bx = 0; bx < s.width; ++bx)
            if (s.test(bx, by)) {
                x0 = std::min(x0, bx);
                x1 = std::max(x1, bx);
                y0 = std::min(y0, by);
                y1 = std::max(y1, by);
            }
    if (x1 < 0) {
        Segment e(0, 0, s.x, s.y, s.source_class);
        return e;
    }
    if (x0 == 0 && y0 == 0 && x1 == s.width - 1 && y1 == s.height - 1) return s;
    Segment out(x1 - x0 + 1, y1 - y0 + 1, s.x + x0, s.y + y0, s.source_class);
    const bool copy_px = s.has_pixels();
    if (copy_px) out.pixels = Raster(out.width, out.height);
    for (int by = 0; by < out.height; ++by)
        for (int bx = 0; bx < out.width; ++bx) {
            out.bits[out.index(bx, by)] = s.bits[s.index(bx + x0, by + y0)];
            if (copy_px) out.pixels.set(bx, by, s.pixels.at(bx + x0, by + y0));
        }
    out.area = s.area;
    return out;
}

/// All maximal 8-connected components of pixels labelled `cls`, in raster
/// order of their first pixel. Each bitmap is the component's tight bounding
/// box.
inline std::vector<Segment> connected_components(const ClassMask& mask, std::uint8_t cls) {
    std::vector<Segment> out;
    const int w = mask.width;
    const int h = mask.height;
    std::vector<int> label(mask.pixel_count(), -1);
    std::vector<int> stack;
    std::vector<int> members;
    for (int start = 0; start < static_cast<int>(mask.pixel_count()); ++start) {
        if (mask.labels[static_cast<std::size_t>(start)] != cls || label[static_cast<std::size_t>(start)] >= 0) continue;
        const int id = static_cast<int>(out.size());
        members.clear();
        stack.assign(1, start);
        label[static_cast<std::size_t>(start)] = id;
        int x0 = w, y0 = h, x1 = -1, y1 = -1;
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            members.push_back(p);
            const int px = p % w;
            const int py = p / w;
            x0 = std::min(x0, px);
            x1 = std::max(x1, px);
            y0 = std::min(y0, py);
            y1 = std::max(y1, py);
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = px + dx;
                    const int ny = py + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const int q = ny * w + nx;
                    if (mask.labels[static_cast<std::size_t>(q)] == cls && label[static_cast<std::size_t>(q)] < 0) {
                        label[static_cast<std::size_t>(q)] = id;
                        stack.push_back(q);
                    }
                }
        }
        Segment s(x1 - x0 + 1, y1 - y0 + 1, x0, y0, cls);
        for (int p : members) s.bits[s.index(p % w - x0, p / w - y0)] = 1;
        s.area = members.size();
        out.push_back(std::move(s));
    }
    return out;
}

namespace detail {

// One-dimensional running max (dilate) or min (erode) along rows or columns
// with a window of +-half. Out-of-bitmap samples count as background.
inline std::vector<std::uint8_t> sweep(const std::vector<std::uint8_t>& in, int w, int h, int half, bool along_x,
                                       bool is_dilation) {
    std::vector<std::uint8_t> out(in.size(), 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            std::uint8_t acc = is_dilation ? 0 : 1;
            for (int d = -half; d <= half; ++d) {
                const int sx = along_x ? x + d : x;
                const int sy = along_x ? y : y + d;
                const bool inside = sx >= 0 && sy >= 0 && sx < w && sy < h;
                const std::uint8_t v = inside ? in[static_cast<std::size_t>(sy) * w + sx] : 0;
                if (is_dilation && v) {
                    acc = 1;
                    break;
                }
                if (!is_dilation && !v) {
                    acc = 0;
                    break;
                }
            }
            out[static_cast<std::size_t>(y) * w + x] = acc;
        }
    return out;
}

}  // namespace detail

/// Square dilation. The bitmap grows by k.half() on every side and the origin
/// moves accordingly. Pixel patches are dropped; callers re-sample colours
/// from the parent image.
inline Segment dilate(const Segment& s, Kernel k) {
    const int half = k.half();
    if (half == 0) return s;
    Segment out(s.width + 2 * half, s.height + 2 * half, s.x - half, s.y - half, s.source_class);
    for (int by = 0; by < s.height; ++by)
        for (int bx = 0; bx < s.width; ++bx) out.bits[out.index(bx + half, by + half)] = s.bits[s.index(bx, by)];
    auto rows = detail::sweep(out.bits, out.width, out.height, half, true, true);
    out.bits = detail::sweep(rows, out.width, out.height, half, false, true);
    out.recount();
    return out;
}

/// Square erosion within the segment's own frame; anything outside the bitmap
/// is background, so border pixels erode away. The result may be empty.
inline Segment erode(const Segment& s, Kernel k) {
    const int half = k.half();
    if (half == 0) return s;
    Segment out = s;
    auto rows = detail::sweep(s.bits, s.width, s.height, half, true, false);
    out.bits = detail::sweep(rows, s.width, s.height, half, false, false);
    out.recount();
    return out;
}

/// Rotates the bitmap (and pixel patch) about its bounding-box centre with
/// nearest-neighbour sampling, then crops tightly. Positive angles turn
/// counter-clockwise as displayed.
inline Segment rotate_segment(const Segment& s, double theta_deg) {
    if (s.width == 0 || s.height == 0) return s;
    const double rad = theta_deg * std::numbers::pi / 180.0;
    const double c = std::cos(rad);
    const double sn = std::sin(rad);
    const double hx = (s.width - 1) / 2.0;
    const double hy = (s.height - 1) / 2.0;
    const double ex = std::fabs(c) * hx + std::fabs(sn) * hy;
    const double ey = std::fabs(sn) * hx + std::fabs(c) * hy;
    const int w = static_cast<int>(std::ceil(2.0 * ex - 1e-9)) + 3;
    const int h = static_cast<int>(std::ceil(2.0 * ey - 1e-9)) + 3;
    const double cx = (w - 1) / 2.0;
    const double cy = (h - 1) / 2.0;
    const int ox = static_cast<int>(std::floor(s.x + hx - cx + 0.5));
    const int oy = static_cast<int>(std::floor(s.y + hy - cy + 0.5));
    Segment out(w, h, ox, oy, s.source_class);
    const bool copy_px = s.has_pixels();
    if (copy_px) out.pixels = Raster(w, h);
    for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u) {
            const double du = u - cx;
            const double dv = v - cy;
            const long sx = std::lround(hx + du * c - dv * sn);
            const long sy = std::lround(hy + du * sn + dv * c);
            if (sx < 0 || sy < 0 || sx >= s.width || sy >= s.height) continue;
            const int ix = static_cast<int>(sx);
            const int iy = static_cast<int>(sy);
            if (!s.test(ix, iy)) continue;
            out.bits[out.index(u, v)] = 1;
            if (copy_px) out.pixels.set(u, v, s.pixels.at(ix, iy));
        }
    out.recount();
    return crop_to_content(out);
}

/// Keeps, in order, the segments whose area is at least `min_area`.
inline std::vector<Segment> filter_by_area(std::vector<Segment> segs, std::size_t min_area) {
    std::erase_if(segs, [min_area](const Segment& s) { return s.area < min_area; });
    return segs;
}

/// Copies the parent-image colours under each set bit. Bits that fall outside
/// the parent frame are cleared, so the segment only carries real pixels.
inline Segment attach_pixels(const Segment& s, const Raster& parent) {
    Segment out = s;
    out.pixels = Raster(s.width, s.height);
    for (int by = 0; by < s.height; ++by)
        for (int bx = 0; bx < s.width; ++bx) {
            if (!s.test(bx, by)) continue;
            const int px = s.x + bx;
            const int py = s.y + by;
            if (px < 0 || py < 0 || px >= parent.width || py >= parent.height) {
                out.bits[out.index(bx, by)] = 0;
                continue;
            }
            out.pixels.set(bx, by, parent.at(px, py));
        }
    out.recount();
    return out;
}

}  // namespace firecp
