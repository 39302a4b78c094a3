#pragma once

// Single-image smoke dehazing with the dark channel prior. The transmission
// map is refined with a guided filter (grayscale guide) and scene radiance is
// recovered as J = (I - A) / max(t, t_floor) + A.
//
// Internal arithmetic is on [0,1]-normalised doubles; quantisation to 8 bits
// happens only in recover().

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "firecp/error.hpp"
#include "firecp/imgcore.hpp"

namespace firecp {

struct DehazeParams {
    int patch = 15;
    double omega = 0.95;  // haze-reduction strength
    double t_floor = 0.1;
    int guided_radius = 60;
    double guided_eps = 1e-3;
    double top_fraction = 0.001;  // share of dark-channel pixels considered for A

    void validate() const {
        if (patch < 1 || patch % 2 == 0) throw Error("invalid_params", "dehaze patch must be odd and >= 1");
        if (!(omega >= 0.0 && omega <= 1.0)) throw Error("invalid_params", "omega must lie in [0,1]");
        if (!(t_floor > 0.0 && t_floor <= 1.0)) throw Error("invalid_params", "t_floor must lie in (0,1]");
        if (guided_radius < 1) throw Error("invalid_params", "guided radius must be >= 1");
        if (!(guided_eps > 0.0)) throw Error("invalid_params", "guided eps must be > 0");
        if (!(top_fraction > 0.0 && top_fraction <= 1.0)) throw Error("invalid_params", "top_fraction must lie in (0,1]");
    }
};

/// Dense single-channel map.
template <typename T>
struct Map2D {
    int width = 0;
    int height = 0;
    std::vector<T> values;

    Map2D() = default;
    Map2D(int w, int h, T fill = T{}) : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

    T& operator()(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    const T& operator()(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

using DarkChannel = Map2D<std::uint8_t>;
using ScalarMap = Map2D<double>;

/// Transmission values are kept in [kMinTransmission, 1].
struct TransmissionMap : ScalarMap {
    using ScalarMap::ScalarMap;
};

inline constexpr double kMinTransmission = 1e-4;

using AtmosphericLight = std::array<double, 3>;

namespace detail {

// Separable min filter with windows clamped to the frame.
template <typename T>
Map2D<T> min_filter(const Map2D<T>& in, int patch) {
    const int r = patch / 2;
    Map2D<T> rows(in.width, in.height);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) {
            T m = in(x, y);
            for (int xx = std::max(0, x - r); xx <= std::min(in.width - 1, x + r); ++xx) m = std::min(m, in(xx, y));
            rows(x, y) = m;
        }
    Map2D<T> out(in.width, in.height);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) {
            T m = rows(x, y);
            for (int yy = std::max(0, y - r); yy <= std::min(in.height - 1, y + r); ++yy) m = std::min(m, rows(x, yy));
            out(x, y) = m;
        }
    return out;
}

// Box mean over clamped (2r+1)^2 windows using a summed-area table.
inline ScalarMap box_mean(const ScalarMap& in, int r) {
    const int w = in.width;
    const int h = in.height;
    std::vector<double> sat(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
    auto at = [&](int x, int y) -> double& { return sat[static_cast<std::size_t>(y) * (w + 1) + x]; };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) at(x + 1, y + 1) = in(x, y) + at(x, y + 1) + at(x + 1, y) - at(x, y);
    ScalarMap out(w, h);
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - r);
        const int y1 = std::min(h - 1, y + r);
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - r);
            const int x1 = std::min(w - 1, x + r);
            const double sum = at(x1 + 1, y1 + 1) - at(x0, y1 + 1) - at(x1 + 1, y0) + at(x0, y0);
            out(x, y) = sum / static_cast<double>((x1 - x0 + 1) * (y1 - y0 + 1));
        }
    }
    return out;
}

inline double clamp_transmission(double t) { return std::clamp(t, kMinTransmission, 1.0); }

}  // namespace detail

inline DarkChannel dark_channel(const Raster& img, int patch) {
    if (patch < 1 || patch % 2 == 0) throw Error("invalid_params", "dark channel patch must be odd and >= 1");
    DarkChannel per_pixel(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const auto p = img.at(x, y);
            per_pixel(x, y) = std::min({p[0], p[1], p[2]});
        }
    return detail::min_filter(per_pixel, patch);
}

/// Picks, among the brightest `top_fraction` of dark-channel pixels (at least
/// one), the image pixel with the largest r+g+b. Dark-channel ties resolve to
/// the earlier pixel in raster order.
inline AtmosphericLight atmospheric_light(const Raster& img, const DarkChannel& dark, double top_fraction = 0.001) {
    if (dark.width != img.width || dark.height != img.height)
        throw Error("dimension_mismatch", "dark channel and image dimensions differ");
    const std::size_t n = img.pixel_count();
    if (n == 0) throw Error("invalid_image", "empty image");
    const std::size_t k = std::max<std::size_t>(1, static_cast<std::size_t>(static_cast<double>(n) * top_fraction));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (dark.values[a] != dark.values[b]) return dark.values[a] > dark.values[b];
                          return a < b;
                      });
    std::size_t best = order[0];
    int best_sum = -1;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t p = order[i];
        const int sum = img.data[p * 3] + img.data[p * 3 + 1] + img.data[p * 3 + 2];
        if (sum > best_sum) {
            best_sum = sum;
            best = p;
        }
    }
    return {static_cast<double>(img.data[best * 3]), static_cast<double>(img.data[best * 3 + 1]),
            static_cast<double>(img.data[best * 3 + 2])};
}

/// t = 1 - omega * patch_min(min_c I_c / A_c), clamped into (0,1].
inline TransmissionMap estimate_transmission(const Raster& img, const AtmosphericLight& a, const DehazeParams& params) {
    params.validate();
    if (!(a[0] > 0.0 && a[1] > 0.0 && a[2] > 0.0))
        throw Error("invalid_atmospheric_light", "atmospheric light must be positive in every channel");
    ScalarMap ratio(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const auto p = img.at(x, y);
            ratio(x, y) = std::min({p[0] / a[0], p[1] / a[1], p[2] / a[2]});
        }
    const auto dark = detail::min_filter(ratio, params.patch);
    TransmissionMap t(img.width, img.height);
    for (std::size_t i = 0; i < t.values.size(); ++i)
        t.values[i] = detail::clamp_transmission(1.0 - params.omega * dark.values[i]);
    return t;
}

/// Grayscale guide on [0,1].
inline ScalarMap luma_map(const Raster& img) {
    ScalarMap g(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) g(x, y) = luma(img.at(x, y));
    return g;
}

/// Guided filter: q = mean(a) * guide + mean(b), with a = cov(I,p)/(var(I)+eps)
/// and b = mean(p) - a * mean(I) over clamped box windows of radius `radius`.
inline TransmissionMap guided_filter(const ScalarMap& guide, const TransmissionMap& input, int radius, double eps) {
    if (guide.width != input.width || guide.height != input.height)
        throw Error("dimension_mismatch", "guide and input dimensions differ");
    if (radius < 1) throw Error("invalid_params", "guided radius must be >= 1");
    if (!(eps > 0.0)) throw Error("invalid_params", "guided eps must be > 0");
    const int w = guide.width;
    const int h = guide.height;
    ScalarMap ii(w, h), ip(w, h);
    for (std::size_t i = 0; i < guide.values.size(); ++i) {
        ii.values[i] = guide.values[i] * guide.values[i];
        ip.values[i] = guide.values[i] * input.values[i];
    }
    const auto mean_i = detail::box_mean(guide, radius);
    const auto mean_p = detail::box_mean(input, radius);
    const auto corr_ii = detail::box_mean(ii, radius);
    const auto corr_ip = detail::box_mean(ip, radius);
    ScalarMap a(w, h), b(w, h);
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double var = corr_ii.values[i] - mean_i.values[i] * mean_i.values[i];
        const double cov = corr_ip.values[i] - mean_i.values[i] * mean_p.values[i];
        a.values[i] = cov / (var + eps);
        b.values[i] = mean_p.values[i] - a.values[i] * mean_i.values[i];
    }
    const auto mean_a = detail::box_mean(a, radius);
    const auto mean_b = detail::box_mean(b, radius);
    TransmissionMap q(w, h);
    for (std::size_t i = 0; i < q.values.size(); ++i)
        q.values[i] = detail::clamp_transmission(mean_a.values[i] * guide.values[i] + mean_b.values[i]);
    return q;
}

inline Raster recover(const Raster& img, const TransmissionMap& t, const AtmosphericLight& a, double t_floor) {
    if (t.width != img.width || t.height != img.height)
        throw Error("dimension_mismatch", "transmission map and image dimensions differ");
    Raster out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double tt = std::max(t(x, y), t_floor);
            for (int c = 0; c < 3; ++c) {
                const double ac = a[static_cast<std::size_t>(c)];
                out.channel(x, y, c) = clip_u8((img.channel(x, y, c) - ac) / tt + ac);
            }
        }
    return out;
}

struct DehazeResult {
    Raster image;
    AtmosphericLight atmospheric_light{};
    TransmissionMap raw_transmission;
    TransmissionMap refined_transmission;
};

inline DehazeResult dehaze_detailed(const Raster& img, const DehazeParams& params = {}) {
    params.validate();
    DehazeResult r;
    const auto dark = dark_channel(img, params.patch);
    r.atmospheric_light = atmospheric_light(img, dark, params.top_fraction);
    for (auto& c : r.atmospheric_light) c = std::max(c, 1.0);  // all-black input
    r.raw_transmission = estimate_transmission(img, r.atmospheric_light, params);
    r.refined_transmission = guided_filter(luma_map(img), r.raw_transmission, params.guided_radius, params.guided_eps);
    r.image = recover(img, r.refined_transmission, r.atmospheric_light, params.t_floor);
    return r;
}

inline Raster dehaze_pipeline(const Raster& img, const DehazeParams& params = {}) {
    return dehaze_detailed(img, params).image;
}

}  // namespace firecp
