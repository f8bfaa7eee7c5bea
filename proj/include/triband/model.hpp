#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "triband/bev.hpp"
#include "triband/errors.hpp"
#include "triband/geometry.hpp"
#include "triband/net.hpp"
#include "triband/rng.hpp"

namespace triband::net {

/// Expectation of a softmax distribution over bins {0, 1, ..., n-1}.
inline double dfl_expectation(const float* logits, int bins) {
    std::vector<float> p(logits, logits + bins);
    softmax_inplace(p.data(), p.size());
    double e = 0.0;
    for (int i = 0; i < bins; ++i)
        e += static_cast<double>(p[i]) * i;
    return e;
}

/// Expectation of a softmax over angle bins whose centers span (-pi, pi].
inline double angle_expectation(const float* logits, int bins) {
    std::vector<float> p(logits, logits + bins);
    softmax_inplace(p.data(), p.size());
    double yaw = 0.0;
    for (int i = 0; i < bins; ++i) {
        const double center = -M_PI + (i + 0.5) * (2.0 * M_PI / bins);
        yaw += static_cast<double>(p[i]) * center;
    }
    return yaw;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Detection decoded from a head cell, in grid-normalized BEV coordinates:
/// the center is a fraction of the unpadded grid (x: width, y: height), and
/// both extents are fractions of the grid width (cells are square).
struct DecodedDetection {
    double cx_norm = 0.0;
    double cy_norm = 0.0;
    double w_norm = 0.0;
    double l_norm = 0.0;
    double yaw = 0.0;
    int class_id = 0;
    double score = 0.0;
};

/// De-normalize to a LiDAR-frame ground-plane box in meters.
inline OrientedBevBox to_bev_box(const DecodedDetection& det, const GridConfig& grid) {
    const double span_x = grid.x_max - grid.x_min;
    const double span_y = grid.y_max - grid.y_min;
    return {grid.x_min + det.cx_norm * span_x, grid.y_min + det.cy_norm * span_y,
            det.w_norm * span_x, det.l_norm * span_x, wrap_angle(det.yaw)};
}

inline ScoredBox to_scored_box(const DecodedDetection& det, const GridConfig& grid) {
    return {to_bev_box(det, grid), det.score, det.class_id};
}

struct HeadOutput {
    HeadLevel level;
    int stride = 0;
    Tensor reg;   // 4 * dfl_bins channels
    Tensor cls;   // n_classes
    Tensor obj;   // 1
    Tensor angle; // n_angle_bins
};

/// Forward-only detector: backbone pyramid, bidirectional neck, and an
/// anchor-free head with DFL side distances and binned yaw.
class DetectorModel {
public:
    explicit DetectorModel(const NetConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        const int w1 = cfg_.width(1), w2 = cfg_.width(2), w3 = cfg_.width(3), w4 = cfg_.width(4),
                  w5 = cfg_.width(5);
        // backbone: one stride-2 conv plus one block per stage
        down_.emplace_back(3, w1, 3, 2, true);
        down_.emplace_back(w1, w2, 3, 2, true);
        down_.emplace_back(w2, w3, 3, 2, true);
        down_.emplace_back(w3, w4, 3, 2, true);
        down_.emplace_back(w4, w5, 3, 2, true);
        c3k2_.emplace_back(w1, w1, cfg_.hidden_ratio);
        c3k2_.emplace_back(w2, w2, cfg_.hidden_ratio);
        c3k2_.emplace_back(w3, w3, cfg_.hidden_ratio);
        attn_blocks_.emplace_back(w4, w4, cfg_);
        attn_blocks_.emplace_back(w5, w5, cfg_);

        if (cfg_.high_res_neck()) {
            // top-down B16 -> B8 -> B4 -> B2, bottom-up D4 -> D8 -> D16
            topdown_.emplace_back(w5 + w4, w4, cfg_.hidden_ratio); // B16
            topdown_.emplace_back(w4 + w3, w3, cfg_.hidden_ratio); // B8
            topdown_.emplace_back(w3 + w2, w2, cfg_.hidden_ratio); // B4
            topdown_.emplace_back(w2 + w1, w1, cfg_.hidden_ratio); // B2
            bottomup_down_.emplace_back(w1, w1, 3, 2, true);
            bottomup_.emplace_back(w1 + w2, w2, cfg_.hidden_ratio); // D4
            bottomup_down_.emplace_back(w2, w2, 3, 2, true);
            bottomup_.emplace_back(w2 + w3, w3, cfg_.hidden_ratio); // D8
            bottomup_down_.emplace_back(w3, w3, 3, 2, true);
            bottomup_.emplace_back(w3 + w4, w4, cfg_.hidden_ratio); // D16
        } else {
            // shallow variant: B16 -> B8, then D16 -> D32
            topdown_.emplace_back(w5 + w4, w4, cfg_.hidden_ratio); // B16
            topdown_.emplace_back(w4 + w3, w3, cfg_.hidden_ratio); // B8
            bottomup_down_.emplace_back(w3, w3, 3, 2, true);
            bottomup_.emplace_back(w3 + w4, w4, cfg_.hidden_ratio); // D16
            bottomup_down_.emplace_back(w4, w4, 3, 2, true);
            bottomup_.emplace_back(w4 + w5, w5, cfg_.hidden_ratio); // D32
        }

        for (HeadLevel level : cfg_.head_levels) {
            HeadBranch branch;
            branch.level = level;
            const int wl = level_width(level);
            branch.stem = Conv(wl, wl, 3, 1, true);
            branch.reg = Conv(wl, 4 * cfg_.dfl_bins, 1, 1, false);
            branch.cls = Conv(wl, cfg_.n_classes, 1, 1, false);
            branch.obj = Conv(wl, 1, 1, 1, false);
            branch.angle = Conv(wl, cfg_.n_angle_bins, 1, 1, false);
            heads_.push_back(std::move(branch));
        }
    }

    const NetConfig& config() const { return cfg_; }

    int level_width(HeadLevel level) const {
        switch (level) {
        case HeadLevel::B2: return cfg_.width(1);
        case HeadLevel::D4: return cfg_.width(2);
        case HeadLevel::D8: return cfg_.width(3);
        case HeadLevel::B8: return cfg_.width(3);
        case HeadLevel::D16: return cfg_.width(4);
        case HeadLevel::D32: return cfg_.width(5);
        }
        return 0;
    }

    /// Backbone pyramid P1..P5 at strides 2, 4, 8, 16, 32.
    std::array<FeatureMap, 5> backbone_forward(const Tensor& input) const {
        std::array<FeatureMap, 5> p;
        Tensor x = input;
        for (int stage = 0; stage < 5; ++stage) {
            x = down_[stage].forward(x);
            if (stage < 3)
                x = c3k2_[stage].forward(x);
            else
                x = attn_blocks_[stage - 3].forward(x);
            p[stage] = {x, 1 << (stage + 1)};
        }
        return p;
    }

    /// Fused maps for the configured head levels.
    std::vector<FeatureMap> neck_forward(const std::array<FeatureMap, 5>& p) const {
        std::map<HeadLevel, FeatureMap> fused;
        if (cfg_.high_res_neck()) {
            const Tensor up5 = upsample2x(p[4].t);
            const Tensor b16 = topdown_[0].forward(concat({&up5, &p[3].t}));
            const Tensor up16 = upsample2x(b16);
            const Tensor b8 = topdown_[1].forward(concat({&up16, &p[2].t}));
            const Tensor up8 = upsample2x(b8);
            const Tensor b4 = topdown_[2].forward(concat({&up8, &p[1].t}));
            const Tensor up4 = upsample2x(b4);
            const Tensor b2 = topdown_[3].forward(concat({&up4, &p[0].t}));
            const Tensor d2 = bottomup_down_[0].forward(b2);
            const Tensor d4 = bottomup_[0].forward(concat({&d2, &b4}));
            const Tensor dd4 = bottomup_down_[1].forward(d4);
            const Tensor d8 = bottomup_[1].forward(concat({&dd4, &b8}));
            const Tensor dd8 = bottomup_down_[2].forward(d8);
            const Tensor d16 = bottomup_[2].forward(concat({&dd8, &b16}));
            fused[HeadLevel::B2] = {b2, 2};
            fused[HeadLevel::D4] = {d4, 4};
            fused[HeadLevel::D8] = {d8, 8};
            fused[HeadLevel::D16] = {d16, 16};
        } else {
            const Tensor up5 = upsample2x(p[4].t);
            const Tensor b16 = topdown_[0].forward(concat({&up5, &p[3].t}));
            const Tensor up16 = upsample2x(b16);
            const Tensor b8 = topdown_[1].forward(concat({&up16, &p[2].t}));
            const Tensor d8 = bottomup_down_[0].forward(b8);
            const Tensor d16 = bottomup_[0].forward(concat({&d8, &b16}));
            const Tensor dd16 = bottomup_down_[1].forward(d16);
            const Tensor d32 = bottomup_[1].forward(concat({&dd16, &p[4].t}));
            fused[HeadLevel::B8] = {b8, 8};
            fused[HeadLevel::D16] = {d16, 16};
            fused[HeadLevel::D32] = {d32, 32};
        }
        std::vector<FeatureMap> out;
        for (HeadLevel level : cfg_.head_levels)
            out.push_back(fused.at(level));
        return out;
    }

    std::vector<HeadOutput> head_forward(const std::vector<FeatureMap>& fused) const {
        if (fused.size() != heads_.size())
            throw ShapeMismatch("head_forward: fused level count mismatch");
        std::vector<HeadOutput> out;
        for (std::size_t i = 0; i < heads_.size(); ++i) {
            const Tensor stem = heads_[i].stem.forward(fused[i].t);
            out.push_back({heads_[i].level, fused[i].stride, heads_[i].reg.forward(stem),
                           heads_[i].cls.forward(stem), heads_[i].obj.forward(stem),
                           heads_[i].angle.forward(stem)});
        }
        return out;
    }

    std::vector<HeadOutput> forward(const Tensor& input) const {
        return head_forward(neck_forward(backbone_forward(input)));
    }

    void visit_params(const ParamVisitor& fn) {
        for (std::size_t i = 0; i < down_.size(); ++i)
            down_[i].visit("backbone.down" + std::to_string(i + 1), fn);
        for (std::size_t i = 0; i < c3k2_.size(); ++i)
            c3k2_[i].visit("backbone.c3k2_" + std::to_string(i + 1), fn);
        for (std::size_t i = 0; i < attn_blocks_.size(); ++i)
            attn_blocks_[i].visit("backbone.ba2c2f_" + std::to_string(i + 4), fn);
        for (std::size_t i = 0; i < topdown_.size(); ++i)
            topdown_[i].visit("neck.topdown" + std::to_string(i), fn);
        for (std::size_t i = 0; i < bottomup_down_.size(); ++i)
            bottomup_down_[i].visit("neck.down" + std::to_string(i), fn);
        for (std::size_t i = 0; i < bottomup_.size(); ++i)
            bottomup_[i].visit("neck.bottomup" + std::to_string(i), fn);
        for (auto& head : heads_) {
            const std::string prefix = std::string("head.") + head_level_name(head.level);
            head.stem.visit(prefix + ".stem", fn);
            head.reg.visit(prefix + ".reg", fn);
            head.cls.visit(prefix + ".cls", fn);
            head.obj.visit(prefix + ".obj", fn);
            head.angle.visit(prefix + ".angle", fn);
        }
    }

    std::size_t param_count() {
        std::size_t n = 0;
        visit_params([&](const std::string&, std::vector<float>& v, const std::vector<int>&) {
            n += v.size();
        });
        return n;
    }

    /// Kaiming-style init (normal, std = sqrt(2 / fan_in)) with zero biases,
    /// deterministic in the seed.
    void init_random(std::uint64_t seed) {
        Rng rng(seed);
        visit_params([&](const std::string& name, std::vector<float>& v,
                         const std::vector<int>& shape) {
            if (name.ends_with(".bias") || shape.size() < 2) {
                std::fill(v.begin(), v.end(), 0.0f);
                return;
            }
            std::size_t fan_in = 1;
            for (std::size_t i = 1; i < shape.size(); ++i)
                fan_in *= static_cast<std::size_t>(shape[i]);
            const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
            for (float& x : v)
                x = static_cast<float>(rng.normal(0.0, std_dev));
        });
    }

    void fill_all(float value) {
        visit_params([&](const std::string&, std::vector<float>& v, const std::vector<int>&) {
            std::fill(v.begin(), v.end(), value);
        });
    }

    // internals exposed for structural tests
    const std::vector<C3k2Block>& backbone_c3k2() const { return c3k2_; }
    const std::vector<BA2C2f>& backbone_attn() const { return attn_blocks_; }
    const std::vector<NA2C2f>& neck_topdown() const { return topdown_; }
    const std::vector<NA2C2f>& neck_bottomup() const { return bottomup_; }
    std::vector<C3k2Block>& backbone_c3k2() { return c3k2_; }
    std::vector<BA2C2f>& backbone_attn() { return attn_blocks_; }

private:
    struct HeadBranch {
        HeadLevel level;
        Conv stem, reg, cls, obj, angle;
    };

    NetConfig cfg_;
    std::vector<Conv> down_;
    std::vector<C3k2Block> c3k2_;
    std::vector<BA2C2f> attn_blocks_;
    std::vector<NA2C2f> topdown_;
    std::vector<Conv> bottomup_down_;
    std::vector<NA2C2f> bottomup_;
    std::vector<HeadBranch> heads_;
};

// ---------------------------------------------------------------------------
// Input conversion and decoding

/// BEV image to network input: channels scaled to [0, 1], width zero-padded
/// up to the next multiple of 32 so every stride divides exactly.
inline Tensor bev_to_tensor(const BevImage& img) {
    const int w_pad = (img.width() + 31) / 32 * 32;
    const int h_pad = (img.height() + 31) / 32 * 32;
    Tensor t(3, h_pad, w_pad);
    for (int ch = 0; ch < 3; ++ch) {
        float* dst = t.channel(ch);
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x)
                dst[static_cast<std::size_t>(y) * w_pad + x] =
                    static_cast<float>(img.at(y, x, ch)) / 255.0f;
    }
    return t;
}

/// Decode head maps into detections: DFL expectations give the four side
/// distances in stride-scaled pixels, the yaw comes from the angle bins, and
/// score = sigmoid(objectness) * sigmoid(max class logit). Cells decoding
/// outside the unpadded grid are dropped.
inline std::vector<DecodedDetection> head_decode(const std::vector<HeadOutput>& outputs,
                                                 const NetConfig& cfg, const GridConfig& grid,
                                                 double score_thresh = 0.25,
                                                 std::size_t pre_nms_top_k = 512) {
    const int bins = cfg.dfl_bins;
    const double grid_w = grid.width();
    const double grid_h = grid.height();
    std::vector<DecodedDetection> dets;
    std::vector<float> logits(static_cast<std::size_t>(bins));
    for (const HeadOutput& head : outputs) {
        const int hs = head.stride;
        for (int gy = 0; gy < head.reg.h; ++gy) {
            for (int gx = 0; gx < head.reg.w; ++gx) {
                double obj = sigmoid(head.obj.at(0, gy, gx));
                int best_class = 0;
                float best_logit = head.cls.at(0, gy, gx);
                for (int ci = 1; ci < cfg.n_classes; ++ci) {
                    if (head.cls.at(ci, gy, gx) > best_logit) {
                        best_logit = head.cls.at(ci, gy, gx);
                        best_class = ci;
                    }
                }
                const double score = obj * sigmoid(best_logit);
                if (score < score_thresh)
                    continue;
                double side[4];
                for (int s = 0; s < 4; ++s) {
                    for (int b = 0; b < bins; ++b)
                        logits[b] = head.reg.at(s * bins + b, gy, gx);
                    side[s] = dfl_expectation(logits.data(), bins) * hs;
                }
                const double dl = side[0], dt = side[1], dr = side[2], db = side[3];
                const double cx_px = (gx + 0.5) * hs + 0.5 * (dr - dl);
                const double cy_px = (gy + 0.5) * hs + 0.5 * (db - dt);
                const double l_px = dl + dr;
                const double w_px = dt + db;
                if (cx_px < 0.0 || cx_px >= grid_w || cy_px < 0.0 || cy_px >= grid_h)
                    continue; // padding region or degenerate
                if (l_px <= 0.0 || w_px <= 0.0)
                    continue;
                std::vector<float> angle_logits(static_cast<std::size_t>(cfg.n_angle_bins));
                for (int b = 0; b < cfg.n_angle_bins; ++b)
                    angle_logits[b] = head.angle.at(b, gy, gx);
                DecodedDetection det;
                det.cx_norm = cx_px / grid_w;
                det.cy_norm = cy_px / grid_h;
                det.w_norm = w_px / grid_w;
                det.l_norm = l_px / grid_w;
                det.yaw = angle_expectation(angle_logits.data(), cfg.n_angle_bins);
                det.class_id = best_class;
                det.score = score;
                dets.push_back(det);
            }
        }
    }
    if (dets.size() > pre_nms_top_k) {
        std::stable_sort(dets.begin(), dets.end(),
                         [](const DecodedDetection& a, const DecodedDetection& b) {
                             return a.score > b.score;
                         });
        dets.resize(pre_nms_top_k);
    }
    return dets;
}

// ---------------------------------------------------------------------------
// Weight container: "TBWT", version, count, then per entry name, shape and
// little-endian float32 payload.

inline void save_weights(DetectorModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open for write: " + path.string());
    std::uint32_t count = 0;
    model.visit_params([&](const std::string&, std::vector<float>&, const std::vector<int>&) {
        ++count;
    });
    out.write("TBWT", 4);
    const std::uint32_t version = 1;
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&count), 4);
    model.visit_params([&](const std::string& name, std::vector<float>& v,
                           const std::vector<int>& shape) {
        const std::uint32_t name_len = static_cast<std::uint32_t>(name.size());
        const std::uint32_t rank = static_cast<std::uint32_t>(shape.size());
        out.write(reinterpret_cast<const char*>(&name_len), 4);
        out.write(name.data(), name_len);
        out.write(reinterpret_cast<const char*>(&rank), 4);
        for (int d : shape) {
            const std::uint32_t dim = static_cast<std::uint32_t>(d);
            out.write(reinterpret_cast<const char*>(&dim), 4);
        }
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(v.size() * sizeof(float)));
    });
    if (!out)
        throw IoError("short write on " + path.string());
}

inline void load_weights(DetectorModel& model, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open: " + path.string());
    char magic[4];
    std::uint32_t version = 0, count = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&count), 4);
    if (!in || std::string_view(magic, 4) != "TBWT" || version != 1)
        throw WeightMismatch("bad weight container header: " + path.string());
    std::map<std::string, std::pair<std::vector<int>, std::vector<float>>> entries;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint32_t name_len = 0, rank = 0;
        in.read(reinterpret_cast<char*>(&name_len), 4);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        in.read(reinterpret_cast<char*>(&rank), 4);
        std::vector<int> shape(rank);
        std::size_t total = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            std::uint32_t dim = 0;
            in.read(reinterpret_cast<char*>(&dim), 4);
            shape[d] = static_cast<int>(dim);
            total *= dim;
        }
        std::vector<float> values(total);
        in.read(reinterpret_cast<char*>(values.data()),
                static_cast<std::streamsize>(total * sizeof(float)));
        if (!in)
            throw WeightMismatch("truncated weight container: " + path.string());
        entries[name] = {std::move(shape), std::move(values)};
    }
    std::size_t used = 0;
    model.visit_params([&](const std::string& name, std::vector<float>& v,
                           const std::vector<int>& shape) {
        auto it = entries.find(name);
        if (it == entries.end())
            throw WeightMismatch("missing weight entry: " + name);
        if (it->second.first != shape || it->second.second.size() != v.size())
            throw WeightMismatch("shape mismatch for entry: " + name);
        v = it->second.second;
        ++used;
    });
    if (used != entries.size())
        throw WeightMismatch("weight container holds " + std::to_string(entries.size()) +
                             " entries, model expects " + std::to_string(used));
}

} // namespace triband::net
