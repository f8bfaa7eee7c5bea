#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "triband/errors.hpp"
#include "triband/point_cloud.hpp"

namespace triband {

/// Rasterization grid. Defaults: 70 m x 80 m ROI at 0.1 m cells (700 x 800),
/// height bands split at 0.65 m and 1.30 m above a ground plane 1.73 m below
/// the sensor, and reflectance correction 1.3 * (rho + 0.1).
struct GridConfig {
    double x_min = 0.0;
    double x_max = 70.0;
    double y_min = -40.0;
    double y_max = 40.0;
    double cell_size = 0.1;
    double sensor_height_offset = 1.73;
    double band_low = 0.65;
    double band_high = 1.30;
    double reflectance_bias = 0.1;
    double reflectance_gain = 1.3;

    int width() const { return static_cast<int>(std::lround((x_max - x_min) / cell_size)); }
    int height() const { return static_cast<int>(std::lround((y_max - y_min) / cell_size)); }

    void validate() const {
        if (!(x_max > x_min && y_max > y_min && cell_size > 0.0))
            throw ConfigError("grid extents must be positive");
        const double wf = (x_max - x_min) / cell_size;
        const double hf = (y_max - y_min) / cell_size;
        if (std::abs(wf - std::lround(wf)) > 1e-9 || std::abs(hf - std::lround(hf)) > 1e-9)
            throw ConfigError("grid extents must be integral multiples of the cell size");
        if (!(band_low < band_high))
            throw ConfigError("band edges must be strictly increasing");
        if (!(reflectance_gain > 0.0))
            throw ConfigError("reflectance gain must be positive");
    }
};

struct Cell {
    int u = 0; // column, from x
    int v = 0; // row, from y
};

/// Cell of a ground-plane position; empty outside the half-open ROI
/// [x_min, x_max) x [y_min, y_max).
inline std::optional<Cell> cell_of(double x, double y, const GridConfig& grid) {
    if (!(x >= grid.x_min && x < grid.x_max && y >= grid.y_min && y < grid.y_max))
        return std::nullopt;
    int u = static_cast<int>(std::floor((x - grid.x_min) / grid.cell_size));
    int v = static_cast<int>(std::floor((y - grid.y_min) / grid.cell_size));
    // guard the float edge where x just below x_max lands on width()
    u = std::min(u, grid.width() - 1);
    v = std::min(v, grid.height() - 1);
    return Cell{u, v};
}

/// Height band (1, 2 or 3) of a sensor-frame z. Bands apply to the height
/// above the ground reference plane; bands 1 and 3 are unbounded.
inline int band_of(double z, const GridConfig& grid) {
    const double h = z + grid.sensor_height_offset;
    if (h < grid.band_low)
        return 1;
    if (h < grid.band_high)
        return 2;
    return 3;
}

/// Corrected reflectance gain * (rho + bias); 1.3 * (rho + 0.1) by default.
inline double corrected_reflectance(double rho, const GridConfig& grid = {}) {
    if (!(rho >= 0.0 && rho <= 1.0))
        throw DomainError("reflectance outside [0, 1]");
    return grid.reflectance_gain * (rho + grid.reflectance_bias);
}

/// Three-band BEV raster: height() rows x width() cols x 3 channels, 8-bit.
/// Channel k stores the per-cell maximum corrected reflectance of band k+1,
/// scaled to 8-bit; 0 means no return of that band hit the cell.
struct BevImage {
    GridConfig grid;
    std::vector<std::uint8_t> pixels; // row-major H x W x 3

    BevImage() = default;
    explicit BevImage(const GridConfig& g)
        : grid(g),
          pixels(static_cast<std::size_t>(g.height()) * static_cast<std::size_t>(g.width()) * 3,
                 0) {}

    int width() const { return grid.width(); }
    int height() const { return grid.height(); }

    std::uint8_t& at(int v, int u, int channel) {
        return pixels[(static_cast<std::size_t>(v) * grid.width() + u) * 3 + channel];
    }
    std::uint8_t at(int v, int u, int channel) const {
        return pixels[(static_cast<std::size_t>(v) * grid.width() + u) * 3 + channel];
    }
};

inline std::uint8_t quantize_reflectance(double corrected) {
    const double scaled = std::min(255.0, 255.0 * corrected);
    return static_cast<std::uint8_t>(std::lround(scaled));
}

/// Rasterize a point cloud into the three-band maximum-reflectance image.
/// Out-of-ROI points are ignored; the result does not depend on point order.
inline BevImage encode(const PointCloud& cloud, const GridConfig& grid) {
    grid.validate();
    const int w = grid.width();
    const int h = grid.height();
    std::vector<double> best(static_cast<std::size_t>(w) * h * 3, 0.0);
    for (const LidarPoint& p : cloud.points) {
        const auto cell = cell_of(p.x, p.y, grid);
        if (!cell)
            continue;
        const int band = band_of(p.z, grid);
        const double corrected =
            grid.reflectance_gain * (static_cast<double>(p.reflectance) + grid.reflectance_bias);
        double& slot = best[(static_cast<std::size_t>(cell->v) * w + cell->u) * 3 + (band - 1)];
        slot = std::max(slot, corrected);
    }
    BevImage img(grid);
    for (std::size_t i = 0; i < best.size(); ++i)
        img.pixels[i] = best[i] > 0.0 ? quantize_reflectance(best[i]) : 0;
    return img;
}

} // namespace triband
