#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "triband/errors.hpp"

namespace triband {

struct LidarPoint {
    float x = 0.0f; // m, forward
    float y = 0.0f; // m, left
    float z = 0.0f; // m, up
    float reflectance = 0.0f; // unitless, [0, 1]
};

struct PointCloud {
    std::vector<LidarPoint> points;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

/// Read a velodyne scan: consecutive little-endian float32 quadruples
/// (x, y, z, reflectance), 16 bytes per point. Frames with any reflectance
/// outside [0, 1] are rejected.
inline PointCloud read_velodyne(const std::filesystem::path& path) {
    static_assert(std::endian::native == std::endian::little, "little-endian host expected");
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in)
        throw IoError("cannot open velodyne file: " + path.string());
    const std::streamoff bytes = in.tellg();
    if (bytes % 16 != 0)
        throw MalformedFile(path.string() + ": length " + std::to_string(bytes) +
                            " not a multiple of 16");
    in.seekg(0);
    PointCloud cloud;
    cloud.points.resize(static_cast<std::size_t>(bytes / 16));
    if (bytes > 0) {
        in.read(reinterpret_cast<char*>(cloud.points.data()), bytes);
        if (!in)
            throw IoError("short read on " + path.string());
    }
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        const float r = cloud.points[i].reflectance;
        if (!(r >= 0.0f && r <= 1.0f))
            throw ReflectanceOutOfRange(path.string() + ": reflectance " + std::to_string(r) +
                                        " at point " + std::to_string(i));
    }
    return cloud;
}

inline void write_velodyne(const PointCloud& cloud, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open for write: " + path.string());
    out.write(reinterpret_cast<const char*>(cloud.points.data()),
              static_cast<std::streamsize>(cloud.points.size() * sizeof(LidarPoint)));
    if (!out)
        throw IoError("short write on " + path.string());
}

} // namespace triband
