#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "triband/errors.hpp"
#include "triband/geometry.hpp"

namespace triband {

using Mat3 = std::array<std::array<double, 3>, 3>;
using Mat34 = std::array<std::array<double, 4>, 3>;
using Vec3 = std::array<double, 3>;

inline Vec3 mat3_mul(const Mat3& m, const Vec3& v) {
    Vec3 r{};
    for (int i = 0; i < 3; ++i)
        r[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
    return r;
}

inline Vec3 mat34_mul_h(const Mat34& m, const Vec3& v) { // implicit homogeneous 1
    Vec3 r{};
    for (int i = 0; i < 3; ++i)
        r[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2] + m[i][3];
    return r;
}

inline Mat3 mat3_transpose(const Mat3& m) {
    Mat3 t{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            t[i][j] = m[j][i];
    return t;
}

inline Mat3 mat3_identity() {
    return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
}

inline bool is_orthonormal(const Mat3& m, double tol) {
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double dot = 0.0;
            for (int k = 0; k < 3; ++k)
                dot += m[k][i] * m[k][j];
            if (std::abs(dot - (i == j ? 1.0 : 0.0)) > tol)
                return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Labels

enum class ObjectClass : int { Car = 0, Pedestrian = 1, Cyclist = 2, Other = -1 };

inline int class_id_from_name(const std::string& name) {
    if (name == "Car")
        return 0;
    if (name == "Pedestrian")
        return 1;
    if (name == "Cyclist")
        return 2;
    return -1;
}

inline const char* class_name_from_id(int id) {
    switch (id) {
    case 0: return "Car";
    case 1: return "Pedestrian";
    case 2: return "Cyclist";
    default: return "DontCare";
    }
}

/// One KITTI object label. Geometry lives in the rectified camera frame:
/// location is the bottom-face center, dimensions are (h, w, l).
struct KittiLabel {
    std::string class_name;
    double truncation = 0.0;
    int occlusion = 0;
    double alpha = 0.0;
    double bbox_left = 0.0, bbox_top = 0.0, bbox_right = 0.0, bbox_bottom = 0.0;
    double h = 0.0, w = 0.0, l = 0.0;
    double x = 0.0, y = 0.0, z = 0.0;
    double rotation_y = 0.0;
    std::optional<double> score;

    double bbox_height() const { return bbox_bottom - bbox_top; }
    bool dont_care() const { return class_name == "DontCare"; }
    int class_id() const { return class_id_from_name(class_name); }

    /// Ground-plane footprint in the camera (x, z) plane. The camera yaw
    /// rotates clockwise in that plane, hence the sign flip.
    OrientedBevBox footprint() const { return {x, z, w, l, wrap_angle(-rotation_y)}; }

    Box3D box3d_camera() const {
        // y points down; the box spans [y - h, y] vertically. Reusing Box3D
        // with "z" = -y keeps z_top > z_bottom.
        return {footprint(), -y, -y + h};
    }

    double range() const { return std::hypot(x, z); }
};

inline std::vector<KittiLabel> read_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open label file: " + path.string());
    std::vector<KittiLabel> labels;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos)
            continue;
        std::istringstream ss(line);
        std::vector<std::string> tok;
        std::string t;
        while (ss >> t)
            tok.push_back(t);
        if (tok.size() != 15 && tok.size() != 16)
            throw ParseError("expected 15 or 16 fields, got " + std::to_string(tok.size()),
                             line_no);
        try {
            KittiLabel lab;
            lab.class_name = tok[0];
            lab.truncation = std::stod(tok[1]);
            lab.occlusion = std::stoi(tok[2]);
            lab.alpha = std::stod(tok[3]);
            lab.bbox_left = std::stod(tok[4]);
            lab.bbox_top = std::stod(tok[5]);
            lab.bbox_right = std::stod(tok[6]);
            lab.bbox_bottom = std::stod(tok[7]);
            lab.h = std::stod(tok[8]);
            lab.w = std::stod(tok[9]);
            lab.l = std::stod(tok[10]);
            lab.x = std::stod(tok[11]);
            lab.y = std::stod(tok[12]);
            lab.z = std::stod(tok[13]);
            lab.rotation_y = std::stod(tok[14]);
            if (tok.size() == 16)
                lab.score = std::stod(tok[15]);
            labels.push_back(std::move(lab));
        } catch (const std::exception&) {
            throw ParseError("malformed numeric field", line_no);
        }
    }
    return labels;
}

// ---------------------------------------------------------------------------
// Calibration

struct Calibration {
    Mat34 p2{};
    Mat3 r0_rect = mat3_identity();
    Mat34 tr_velo_to_cam{};
};

/// Identity-rotation calibration with the canonical velodyne->camera axis
/// permutation (x_cam = -y_l, y_cam = -z_l, z_cam = x_l). Useful for
/// synthetic scenes.
inline Calibration make_standard_calib(double focal = 700.0, double cu = 600.0, double cv = 180.0) {
    Calibration c;
    c.p2 = {{{focal, 0, cu, 0}, {0, focal, cv, 0}, {0, 0, 1, 0}}};
    c.r0_rect = mat3_identity();
    c.tr_velo_to_cam = {{{0, -1, 0, 0}, {0, 0, -1, 0}, {1, 0, 0, 0}}};
    return c;
}

inline Calibration read_calib(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open calib file: " + path.string());
    std::map<std::string, std::vector<double>> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto colon = line.find(':');
        if (colon == std::string::npos)
            continue;
        const std::string key = line.substr(0, colon);
        std::istringstream ss(line.substr(colon + 1));
        std::vector<double> vals;
        double v;
        while (ss >> v)
            vals.push_back(v);
        if (!ss.eof())
            throw ParseError("non-numeric value under key " + key, line_no);
        entries[key] = std::move(vals);
    }
    auto need = [&](const std::string& key, std::size_t count) -> const std::vector<double>& {
        auto it = entries.find(key);
        if (it == entries.end())
            throw MissingKey(key);
        if (it->second.size() != count)
            throw ParseError(key + ": expected " + std::to_string(count) + " values, got " +
                             std::to_string(it->second.size()));
        return it->second;
    };
    Calibration c;
    const auto& p2 = need("P2", 12);
    const auto& r0 = need("R0_rect", 9);
    const auto& tr = need("Tr_velo_to_cam", 12);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j)
            c.p2[i][j] = p2[i * 4 + j];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            c.r0_rect[i][j] = r0[i * 3 + j];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j)
            c.tr_velo_to_cam[i][j] = tr[i * 4 + j];
    if (!is_orthonormal(c.r0_rect, 1e-4))
        throw ParseError("R0_rect is not orthonormal");
    Mat3 rot{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            rot[i][j] = c.tr_velo_to_cam[i][j];
    if (!is_orthonormal(rot, 1e-4))
        throw ParseError("Tr_velo_to_cam rotation is not orthonormal");
    return c;
}

inline void write_calib(const Calibration& c, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open for write: " + path.string());
    auto row34 = [&](const char* key, const Mat34& m) {
        out << key << ":";
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 4; ++j)
                out << ' ' << m[i][j];
        out << '\n';
    };
    row34("P2", c.p2);
    out << "R0_rect:";
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            out << ' ' << c.r0_rect[i][j];
    out << '\n';
    row34("Tr_velo_to_cam", c.tr_velo_to_cam);
}

// ---------------------------------------------------------------------------
// Frame conversion

/// Camera-frame geometry of a 3D box: bottom-face center, (h, w, l), yaw.
struct CameraBoxGeometry {
    Vec3 location{}; // bottom-face center, rectified camera frame
    double h = 0.0, w = 0.0, l = 0.0;
    double rotation_y = 0.0;
};

/// Map a LiDAR-frame 3D box to rectified-camera geometry. The location is
/// taken at the footprint's bottom center and yaw converts as
/// ry = -yaw - pi/2.
inline CameraBoxGeometry lidar_box_to_camera(const Box3D& box, const Calibration& calib) {
    if (!box.footprint.valid() || box.height() <= 0.0)
        throw DegenerateBox("non-positive box extent");
    const Vec3 bottom{box.footprint.cx, box.footprint.cy, box.z_bottom};
    CameraBoxGeometry g;
    g.location = mat3_mul(calib.r0_rect, mat34_mul_h(calib.tr_velo_to_cam, bottom));
    g.h = box.height();
    g.w = box.footprint.w;
    g.l = box.footprint.l;
    g.rotation_y = wrap_angle(-box.footprint.yaw - M_PI / 2.0);
    return g;
}

/// Analytic inverse of lidar_box_to_camera.
inline Box3D camera_box_to_lidar(const CameraBoxGeometry& g, const Calibration& calib) {
    const Vec3 rectified = mat3_mul(mat3_transpose(calib.r0_rect), g.location);
    Mat3 rot{};
    Vec3 t{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j)
            rot[i][j] = calib.tr_velo_to_cam[i][j];
        t[i] = calib.tr_velo_to_cam[i][3];
    }
    const Mat3 rot_inv = mat3_transpose(rot);
    const Vec3 shifted{rectified[0] - t[0], rectified[1] - t[1], rectified[2] - t[2]};
    const Vec3 bottom = mat3_mul(rot_inv, shifted);
    Box3D box;
    box.footprint = {bottom[0], bottom[1], g.w, g.l, wrap_angle(-g.rotation_y - M_PI / 2.0)};
    box.z_bottom = bottom[2];
    box.z_top = bottom[2] + g.h;
    return box;
}

// ---------------------------------------------------------------------------
// Detections

struct Detection3D {
    int class_id = 0;
    CameraBoxGeometry geometry;
    double alpha = 0.0;
    double bbox_left = 0.0, bbox_top = 0.0, bbox_right = 0.0, bbox_bottom = 0.0;
    double score = 0.0;
};

/// Project the 3D box through P2 to fill the 2D bbox fields. Left zeroed
/// when any corner falls behind the image plane.
inline void fill_projected_bbox(Detection3D& det, const Calibration& calib) {
    const double c = std::cos(det.geometry.rotation_y), s = std::sin(det.geometry.rotation_y);
    double umin = 0, umax = 0, vmin = 0, vmax = 0;
    bool first = true;
    for (int ix = -1; ix <= 1; ix += 2) {
        for (int iz = -1; iz <= 1; iz += 2) {
            for (int iy = 0; iy <= 1; ++iy) {
                const double dx = 0.5 * det.geometry.l * ix;
                const double dz = 0.5 * det.geometry.w * iz;
                const Vec3 p{det.geometry.location[0] + c * dx + s * dz,
                             det.geometry.location[1] - iy * det.geometry.h,
                             det.geometry.location[2] - s * dx + c * dz};
                const Vec3 uvw = mat34_mul_h(calib.p2, p);
                if (uvw[2] < 0.1)
                    return; // behind the camera; keep zeros
                const double u = uvw[0] / uvw[2], v = uvw[1] / uvw[2];
                if (first) {
                    umin = umax = u;
                    vmin = vmax = v;
                    first = false;
                } else {
                    umin = std::min(umin, u);
                    umax = std::max(umax, u);
                    vmin = std::min(vmin, v);
                    vmax = std::max(vmax, v);
                }
            }
        }
    }
    det.bbox_left = umin;
    det.bbox_top = vmin;
    det.bbox_right = umax;
    det.bbox_bottom = vmax;
}

/// Serialize detections in KITTI result format (label fields plus score),
/// ordered by descending score then input order amongst ties.
inline void write_detections(const std::vector<Detection3D>& dets,
                             const std::filesystem::path& path) {
    for (const Detection3D& d : dets)
        if (!(d.score >= 0.0 && d.score <= 1.0))
            throw DomainError("detection score outside [0, 1]");
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open for write: " + path.string());
    char buf[512];
    for (std::size_t idx : order) {
        const Detection3D& d = dets[idx];
        std::snprintf(buf, sizeof(buf),
                      "%s %.2f %d %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f "
                      "%.2f\n",
                      class_name_from_id(d.class_id), 0.0, 0, d.alpha, d.bbox_left, d.bbox_top,
                      d.bbox_right, d.bbox_bottom, d.geometry.h, d.geometry.w, d.geometry.l,
                      d.geometry.location[0], d.geometry.location[1], d.geometry.location[2],
                      d.geometry.rotation_y, d.score);
        out << buf;
    }
    if (!out)
        throw IoError("short write on " + path.string());
}

} // namespace triband
