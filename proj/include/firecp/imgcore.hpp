#pragma once

// Raster and class-mask primitives shared by every other module: storage,
// colour conversion, resizing and rotation with pre-scaling.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "firecp/error.hpp"

namespace firecp {

enum class ClassId : std::uint8_t { background = 0, ash = 1, vegetation = 2, fire = 3 };

inline constexpr int kNumClasses = 4;
inline constexpr std::uint8_t kFire = static_cast<std::uint8_t>(ClassId::fire);

inline const char* class_name(int c) {
    static constexpr std::array<const char*, kNumClasses> names{"background", "ash", "vegetation", "fire"};
    return (c >= 0 && c < kNumClasses) ? names[static_cast<std::size_t>(c)] : "unknown";
}

using Rgb = std::array<std::uint8_t, 3>;

/// 8-bit RGB image, interleaved, row-major.
struct Raster {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    Raster() = default;
    Raster(int w, int h, Rgb fill = {0, 0, 0}) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3) {
        for (std::size_t i = 0; i < data.size(); i += 3) {
            data[i] = fill[0];
            data[i + 1] = fill[1];
            data[i + 2] = fill[2];
        }
    }

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
    std::size_t offset(int x, int y) const { return (static_cast<std::size_t>(y) * width + x) * 3; }

    Rgb at(int x, int y) const {
        const auto o = offset(x, y);
        return {data[o], data[o + 1], data[o + 2]};
    }
    void set(int x, int y, Rgb v) {
        const auto o = offset(x, y);
        data[o] = v[0];
        data[o + 1] = v[1];
        data[o + 2] = v[2];
    }
    std::uint8_t& channel(int x, int y, int c) { return data[offset(x, y) + c]; }
    std::uint8_t channel(int x, int y, int c) const { return data[offset(x, y) + c]; }

    bool operator==(const Raster&) const = default;
};

/// Per-pixel class labels in {0..3}, row-major.
struct ClassMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> labels;

    ClassMask() = default;
    ClassMask(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), labels(static_cast<std::size_t>(w) * h, fill) {}

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
    std::uint8_t at(int x, int y) const { return labels[index(x, y)]; }
    void set(int x, int y, std::uint8_t c) { labels[index(x, y)] = c; }

    std::size_t count(std::uint8_t c) const {
        return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), c));
    }

    bool operator==(const ClassMask&) const = default;
};

struct SamplePair {
    Raster image;
    ClassMask mask;
    std::string id;
    std::string split;  // "train", "val", "test" or empty when unassigned

    bool operator==(const SamplePair&) const = default;
};

inline void validate(const ClassMask& m) {
    if (m.width < 0 || m.height < 0 || m.labels.size() != m.pixel_count())
        throw Error("invalid_mask", "mask storage does not match its dimensions");
    for (auto v : m.labels)
        if (v >= kNumClasses) throw Error("invalid_mask", "mask label out of range: " + std::to_string(v));
}

inline void validate(const SamplePair& p) {
    if (p.image.width != p.mask.width || p.image.height != p.mask.height)
        throw Error("dimension_mismatch", "image and mask dimensions differ for '" + p.id + "'");
    if (p.image.data.size() != p.image.pixel_count() * 3)
        throw Error("invalid_image", "image storage does not match its dimensions for '" + p.id + "'");
    validate(p.mask);
}

/// min(255, max(0, round(x))), halves rounded away from zero.
inline std::uint8_t clip_u8(double x) {
    if (!(x > 0.0)) return 0;  // also maps NaN to 0
    if (x >= 255.0) return 255;
    return static_cast<std::uint8_t>(std::lround(x));
}

// ---------------------------------------------------------------------------
// HSV (hexcone). Hue in degrees [0,360), saturation in [0,1], value on the
// 8-bit scale. Value is kept as a real so brightness scaling can operate on it
// before quantisation.

struct Hsv {
    double h = 0.0;
    double s = 0.0;
    double v = 0.0;
};

inline Hsv rgb_to_hsv(Rgb rgb) {
    const double r = rgb[0], g = rgb[1], b = rgb[2];
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double delta = mx - mn;
    Hsv out;
    out.v = mx;
    out.s = mx > 0.0 ? delta / mx : 0.0;
    if (delta == 0.0) return out;
    double h;
    if (mx == r)
        h = 60.0 * (g - b) / delta;
    else if (mx == g)
        h = 60.0 * ((b - r) / delta + 2.0);
    else
        h = 60.0 * ((r - g) / delta + 4.0);
    if (h < 0.0) h += 360.0;
    if (h >= 360.0) h -= 360.0;
    out.h = h;
    return out;
}

inline Rgb hsv_to_rgb(Hsv hsv) {
    const double v = hsv.v;
    const double s = std::clamp(hsv.s, 0.0, 1.0);
    if (s == 0.0) {
        const auto g = clip_u8(v);
        return {g, g, g};
    }
    double h = std::fmod(hsv.h, 360.0);
    if (h < 0.0) h += 360.0;
    const double c = v * s;
    const double hp = h / 60.0;
    const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
    const double m = v - c;
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(hp)) {
        case 0: r = c; g = x; break;
        case 1: r = x; g = c; break;
        case 2: g = c; b = x; break;
        case 3: g = x; b = c; break;
        case 4: r = x; b = c; break;
        default: r = c; b = x; break;
    }
    return {clip_u8(r + m), clip_u8(g + m), clip_u8(b + m)};
}

/// Rec.601 luma on [0,1].
inline double luma(Rgb p) { return (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0; }

// ---------------------------------------------------------------------------
// Resampling helpers. Out-of-frame coordinates are clamped to the nearest edge
// pixel, so no sampling path ever produces fill colour.

namespace detail {

inline Rgb sample_bilinear(const Raster& img, double sx, double sy) {
    sx = std::clamp(sx, 0.0, static_cast<double>(img.width - 1));
    sy = std::clamp(sy, 0.0, static_cast<double>(img.height - 1));
    const int x0 = static_cast<int>(std::floor(sx));
    const int y0 = static_cast<int>(std::floor(sy));
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = sx - x0;
    const double fy = sy - y0;
    Rgb out{};
    for (int c = 0; c < 3; ++c) {
        const double top = img.channel(x0, y0, c) * (1.0 - fx) + img.channel(x1, y0, c) * fx;
        const double bot = img.channel(x0, y1, c) * (1.0 - fx) + img.channel(x1, y1, c) * fx;
        out[static_cast<std::size_t>(c)] = clip_u8(top * (1.0 - fy) + bot * fy);
    }
    return out;
}

inline std::uint8_t sample_nearest(const ClassMask& m, double sx, double sy) {
    const int x = std::clamp(static_cast<int>(std::lround(sx)), 0, m.width - 1);
    const int y = std::clamp(static_cast<int>(std::lround(sy)), 0, m.height - 1);
    return m.at(x, y);
}

inline void require_target(int w, int h) {
    if (w < 1 || h < 1) throw Error("invalid_size", "resize target dimensions must be >= 1");
}

// Inverse map of an output pixel for rotate_prescaled. Positive angles turn
// the picture counter-clockwise as displayed (y axis pointing down).
struct InverseRotation {
    double cx, cy, cos_a, sin_a, inv_scale;

    InverseRotation(int w, int h, double angle_deg, double prescale)
        : cx((w - 1) / 2.0),
          cy((h - 1) / 2.0),
          cos_a(std::cos(angle_deg * std::numbers::pi / 180.0)),
          sin_a(std::sin(angle_deg * std::numbers::pi / 180.0)),
          inv_scale(1.0 / prescale) {}

    std::array<double, 2> operator()(int x, int y) const {
        const double dx = x - cx;
        const double dy = y - cy;
        const double rx = dx * cos_a - dy * sin_a;
        const double ry = dx * sin_a + dy * cos_a;
        return {cx + rx * inv_scale, cy + ry * inv_scale};
    }
};

}  // namespace detail

/// Bilinear resize with pixel-centre alignment.
inline Raster resize(const Raster& img, int w, int h) {
    detail::require_target(w, h);
    if (img.width == w && img.height == h) return img;
    Raster out(w, h);
    const double sx = static_cast<double>(img.width) / w;
    const double sy = static_cast<double>(img.height) / h;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.set(x, y, detail::sample_bilinear(img, (x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5));
    return out;
}

/// Nearest-neighbour resize; labels are never blended.
inline ClassMask resize(const ClassMask& m, int w, int h) {
    detail::require_target(w, h);
    if (m.width == w && m.height == h) return m;
    ClassMask out(w, h);
    const double sx = static_cast<double>(m.width) / w;
    const double sy = static_cast<double>(m.height) / h;
    for (int y = 0; y < h; ++y) {
        const int src_y = std::min(static_cast<int>(std::floor((y + 0.5) * sy)), m.height - 1);
        for (int x = 0; x < w; ++x) {
            const int src_x = std::min(static_cast<int>(std::floor((x + 0.5) * sx)), m.width - 1);
            out.set(x, y, m.at(src_x, src_y));
        }
    }
    return out;
}

inline constexpr double kDefaultPrescale = 1.66;

/// Scale about the centre by `prescale`, rotate about the centre by
/// `angle_deg`, crop back to the input size.
inline Raster rotate_prescaled(const Raster& img, double angle_deg, double prescale = kDefaultPrescale) {
    if (prescale < 1.0) throw Error("invalid_prescale", "prescale must be >= 1");
    Raster out(img.width, img.height);
    const detail::InverseRotation inv(img.width, img.height, angle_deg, prescale);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const auto [sx, sy] = inv(x, y);
            out.set(x, y, detail::sample_bilinear(img, sx, sy));
        }
    return out;
}

inline ClassMask rotate_prescaled(const ClassMask& m, double angle_deg, double prescale = kDefaultPrescale) {
    if (prescale < 1.0) throw Error("invalid_prescale", "prescale must be >= 1");
    ClassMask out(m.width, m.height);
    const detail::InverseRotation inv(m.width, m.height, angle_deg, prescale);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            const auto [sx, sy] = inv(x, y);
            out.set(x, y, detail::sample_nearest(m, sx, sy));
        }
    return out;
}

}  // namespace firecp
