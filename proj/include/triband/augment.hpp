#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

#include "triband/bev.hpp"
#include "triband/point_cloud.hpp"
#include "triband/rng.hpp"

namespace triband {

/// Channel-space augmentation: a vertical re-bin offset drawn uniformly from
/// [dz_min, dz_max] before encoding plus one image-wide Gaussian reflectance
/// jitter (sigma in 8-bit intensity units) applied to nonzero pixels.
struct AugmentParams {
    double dz_min = -0.3;
    double dz_max = 0.3;
    double sigma = 20.0;
    std::uint64_t rng_seed = 0;
};

/// Shift every z by dz; x, y and reflectance are untouched.
inline PointCloud rebin_shift(const PointCloud& cloud, double dz) {
    PointCloud out = cloud;
    for (LidarPoint& p : out.points)
        p.z = static_cast<float>(p.z + dz);
    return out;
}

/// Add a single offset to all nonzero pixels, saturating to [0, 255].
/// Zero pixels (no return) stay exactly zero.
inline BevImage jitter(const BevImage& img, double offset) {
    BevImage out = img;
    for (std::uint8_t& px : out.pixels) {
        if (px == 0)
            continue;
        const double v = std::clamp(static_cast<double>(px) + offset, 0.0, 255.0);
        px = static_cast<std::uint8_t>(std::lround(v));
    }
    return out;
}

/// One perturbed BEV per scene: deterministic in (cloud, params, grid).
inline BevImage augment_frame(const PointCloud& cloud, const AugmentParams& params,
                              const GridConfig& grid) {
    Rng rng(params.rng_seed);
    const double dz = rng.uniform(params.dz_min, params.dz_max);
    const double j = rng.normal(0.0, params.sigma);
    return jitter(encode(rebin_shift(cloud, dz), grid), j);
}

/// Inference-time encodings at vertical offsets {-0.3, 0, +0.3} m; detections
/// from the three maps are merged downstream via NMS.
inline std::array<BevImage, 3> multi_offset_encode(const PointCloud& cloud,
                                                   const GridConfig& grid) {
    return {encode(rebin_shift(cloud, -0.3), grid), encode(cloud, grid),
            encode(rebin_shift(cloud, 0.3), grid)};
}

inline constexpr std::array<double, 3> kMultiOffsets = {-0.3, 0.0, 0.3};

} // namespace triband
