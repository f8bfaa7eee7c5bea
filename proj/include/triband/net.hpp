#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "triband/errors.hpp"
#include "triband/tensor.hpp"

namespace triband::net {

// ---------------------------------------------------------------------------
// Configuration

enum class HeadLevel { B2, D4, D8, D16, B8, D32 };

inline const char* head_level_name(HeadLevel l) {
    switch (l) {
    case HeadLevel::B2: return "B2";
    case HeadLevel::D4: return "D4";
    case HeadLevel::D8: return "D8";
    case HeadLevel::D16: return "D16";
    case HeadLevel::B8: return "B8";
    case HeadLevel::D32: return "D32";
    }
    return "?";
}

inline HeadLevel head_level_from_name(const std::string& s) {
    if (s == "B2") return HeadLevel::B2;
    if (s == "D4") return HeadLevel::D4;
    if (s == "D8") return HeadLevel::D8;
    if (s == "D16") return HeadLevel::D16;
    if (s == "B8") return HeadLevel::B8;
    if (s == "D32") return HeadLevel::D32;
    throw ConfigError("unknown head level: " + s);
}

inline int head_level_stride(HeadLevel l) {
    switch (l) {
    case HeadLevel::B2: return 2;
    case HeadLevel::D4: return 4;
    case HeadLevel::D8: return 8;
    case HeadLevel::D16: return 16;
    case HeadLevel::B8: return 8;
    case HeadLevel::D32: return 32;
    }
    return 0;
}

/// Network hyperparameters. The two supported head sets select the neck
/// topology: {B2, D4, D8, D16} enables the high-resolution bidirectional
/// neck, {B8, D16, D32} the shallow three-level variant.
struct NetConfig {
    int c_base = 32;
    double hidden_ratio = 0.5; // e
    int ffn_expansion = 2;     // rho
    int n_heads = 4;
    int n_areas = 4;
    std::vector<HeadLevel> head_levels = {HeadLevel::B2, HeadLevel::D4, HeadLevel::D8,
                                          HeadLevel::D16};
    int dfl_bins = 16;
    int n_classes = 3;
    int n_angle_bins = 16;

    /// Backbone width at stage i (1-based): min(c_base * 2^(i-1), 512).
    int width(int stage) const { return std::min(c_base << (stage - 1), 512); }

    bool high_res_neck() const {
        for (HeadLevel l : head_levels)
            if (l == HeadLevel::B2 || l == HeadLevel::D4)
                return true;
        return false;
    }

    void validate() const {
        if (c_base != 16 && c_base != 32 && c_base != 64)
            throw ConfigError("c_base must be one of 16, 32, 64");
        if (head_levels.empty())
            throw ConfigError("head_levels must be non-empty");
        if (dfl_bins < 2)
            throw ConfigError("dfl_bins must be at least 2");
        if (n_heads < 1 || n_areas < 1 || n_angle_bins < 2 || n_classes < 1)
            throw ConfigError("invalid head/attention parameters");
        const bool high = high_res_neck();
        for (HeadLevel l : head_levels) {
            const bool deep_only = l == HeadLevel::B8 || l == HeadLevel::D32;
            if (high && deep_only)
                throw ConfigError("head level " + std::string(head_level_name(l)) +
                                  " is not produced by the high-resolution neck");
            if (!high && (l == HeadLevel::D8))
                throw ConfigError("head level D8 requires the high-resolution neck");
        }
    }
};

struct FeatureMap {
    Tensor t;
    int stride = 1;
};

// Parameter visitor: (name, values, shape). Used for init, I/O and counting.
using ParamVisitor =
    std::function<void(const std::string&, std::vector<float>&, const std::vector<int>&)>;

// ---------------------------------------------------------------------------
// Layers

struct Conv {
    int c_in = 0, c_out = 0, k = 1, stride = 1;
    bool act = true;
    std::vector<float> weight; // (c_out, c_in, k, k)
    std::vector<float> bias;   // (c_out)

    Conv() = default;
    Conv(int cin, int cout, int kernel, int s, bool activation)
        : c_in(cin), c_out(cout), k(kernel), stride(s), act(activation),
          weight(static_cast<std::size_t>(cout) * cin * kernel * kernel, 0.0f),
          bias(cout, 0.0f) {}

    Tensor forward(const Tensor& x) const {
        if (x.c != c_in)
            throw ShapeMismatch("conv: expected " + std::to_string(c_in) + " channels, got " +
                                std::to_string(x.c));
        return conv2d(x, weight, bias, c_out, k, stride, act);
    }

    void visit(const std::string& prefix, const ParamVisitor& fn) {
        fn(prefix + ".weight", weight, {c_out, c_in, k, k});
        fn(prefix + ".bias", bias, {c_out});
    }
};

/// Residual bottleneck U(z) = z + conv3x3(conv3x3(z)).
struct Bottleneck {
    Conv c1, c2;

    Bottleneck() = default;
    explicit Bottleneck(int c) : c1(c, c, 3, 1, true), c2(c, c, 3, 1, true) {}

    Tensor forward(const Tensor& x) const { return add(x, c2.forward(c1.forward(x))); }

    void visit(const std::string& prefix, const ParamVisitor& fn) {
        c1.visit(prefix + ".c1", fn);
        c2.visit(prefix + ".c2", fn);
    }
};

/// Split-refine-fuse block: a 1x1 conv expands to 2*C_h, the second half runs
/// through one residual bottleneck, and a 1x1 conv fuses the 3*C_h concat.
struct C3k2Block {
    int c_h = 0;
    Conv expand, fuse;
    Bottleneck u;

    struct Taps {
        Tensor z1, z2, refined, fused_input;
    };

    C3k2Block() = default;
    C3k2Block(int c_in, int c_out, double hidden_ratio)
        : c_h(static_cast<int>(std::floor(hidden_ratio * c_out))),
          expand(c_in, 2 * c_h, 1, 1, true), fuse(3 * c_h, c_out, 1, 1, true), u(c_h) {}

    int fusion_in_channels() const { return 3 * c_h; }

    Tensor forward(const Tensor& x, Taps* taps = nullptr) const {
        const Tensor expanded = expand.forward(x);
        const Tensor z1 = slice_channels(expanded, 0, c_h);
        const Tensor z2 = slice_channels(expanded, c_h, 2 * c_h);
        const Tensor refined = u.forward(z2);
        const Tensor cat = concat({&z1, &z2, &refined});
        if (taps)
            *taps = {z1, z2, refined, cat};
        return fuse.forward(cat);
    }

    void visit(const std::string& prefix, const ParamVisitor& fn) {
        expand.visit(prefix + ".expand", fn);
        u.visit(prefix + ".u", fn);
        fuse.visit(prefix + ".fuse", fn);
    }
};

/// Multi-head scaled dot-product attention restricted to disjoint bands of
/// rows. Rows are split into n_areas near-equal contiguous regions.
struct AreaAttention {
    int channels = 0, n_heads = 1, n_areas = 1;
    Conv q, k, v, proj;

    AreaAttention() = default;
    AreaAttention(int c, int heads, int areas)
        : channels(c), n_heads(heads), n_areas(areas), q(c, c, 1, 1, false),
          k(c, c, 1, 1, false), v(c, c, 1, 1, false), proj(c, c, 1, 1, false) {
        if (c % heads != 0)
            throw ConfigError("attention channels must divide n_heads");
    }

    // Optional probe: receives every softmax row sum before normalization
    // checks in tests.
    Tensor forward(const Tensor& x, std::vector<float>* row_sum_probe = nullptr) const {
        const Tensor qt = q.forward(x);
        const Tensor kt = k.forward(x);
        const Tensor vt = v.forward(x);
        const int d = channels / n_heads;
        const float scale = 1.0f / std::sqrt(static_cast<float>(d));
        Tensor attended(x.c, x.h, x.w);
        std::vector<float> scores;
        for (int r = 0; r < n_areas; ++r) {
            const int r0 = static_cast<int>(static_cast<long>(r) * x.h / n_areas);
            const int r1 = static_cast<int>(static_cast<long>(r + 1) * x.h / n_areas);
            const std::size_t n = static_cast<std::size_t>(r1 - r0) * x.w;
            if (n == 0)
                continue;
            const std::size_t region_off = static_cast<std::size_t>(r0) * x.w;
            scores.assign(n * n, 0.0f);
            for (int head = 0; head < n_heads; ++head) {
                std::fill(scores.begin(), scores.end(), 0.0f);
                for (int dc = 0; dc < d; ++dc) {
                    const int ch = head * d + dc;
                    const float* qrow = qt.channel(ch) + region_off;
                    const float* krow = kt.channel(ch) + region_off;
                    for (std::size_t i = 0; i < n; ++i) {
                        const float qv = qrow[i] * scale;
                        float* srow = scores.data() + i * n;
                        for (std::size_t j = 0; j < n; ++j)
                            srow[j] += qv * krow[j];
                    }
                }
                for (std::size_t i = 0; i < n; ++i) {
                    softmax_inplace(scores.data() + i * n, n);
                    if (row_sum_probe) {
                        float s = 0.0f;
                        for (std::size_t j = 0; j < n; ++j)
                            s += scores[i * n + j];
                        row_sum_probe->push_back(s);
                    }
                }
                for (int dc = 0; dc < d; ++dc) {
                    const int ch = head * d + dc;
                    const float* vrow = vt.channel(ch) + region_off;
                    float* orow = attended.channel(ch) + region_off;
                    for (std::size_t i = 0; i < n; ++i) {
                        const float* srow = scores.data() + i * n;
                        float acc = 0.0f;
                        for (std::size_t j = 0; j < n; ++j)
                            acc += srow[j] * vrow[j];
                        orow[i] = acc;
                    }
                }
            }
        }
        return proj.forward(attended);
    }

    void visit(const std::string& prefix, const ParamVisitor& fn) {
        q.visit(prefix + ".q", fn);
        k.visit(prefix + ".k", fn);
        v.visit(prefix + ".v", fn);
        proj.visit(prefix + ".proj", fn);
    }
};

/// ABlock(T) = T + A(T) + FFN(T + A(T)); the FFN expands channels by rho.
struct ABlock {
    AreaAttention attn;
    Conv ffn1, ffn2;

    ABlock() = default;
    ABlock(int c, int heads, int areas, int rho)
        : attn(c, heads, areas), ffn1(c, rho * c, 1, 1, true), ffn2(rho * c, c, 1, 1, false) {}

    Tensor forward(const Tensor& x, std::vector<float>* row_sum_probe = nullptr) const {
        const Tensor mid = add(x, attn.forward(x, row_sum_probe));
        return add(mid, ffn2.forward(ffn1.forward(mid)));
    }

    void visit(const std::string& prefix, const ParamVisitor& fn) {
        attn.visit(prefix + ".attn", fn);
        ffn1.visit(prefix + ".ffn1", fn);
        ffn2.visit(prefix + ".ffn2", fn);
    }
};

/// Attention variant of the C2f scaffold: three stages of two stacked
/// ABlocks, fused from a 4*C_h concat.
struct BA2C2f {
    int c_h = 0;
    Conv proj, fuse;
    std::vector<ABlock> blocks; // 3 stages x 2 blocks

    struct Taps {
        std::array<Tensor, 4> stages;
        Tensor fused_input;
    };

    BA2C2f() = default;
    BA2C2f(int c_in, int c_out, const NetConfig& cfg)
        : c_h(static_cast<int>(std::floor(cfg.hidden_ratio * c_out))),
          proj(c_in, c_h, 1, 1, true), fuse(4 * c_h, c_out, 1, 1, true) {
        for (int i = 0; i < 6; ++i)
            blocks.emplace_back(c_h, cfg.n_heads, cfg.n_areas, cfg.ffn_expansion);
    }

    int fusion_in_channels() const { return 4 * c_h; }

    Tensor forward(const Tensor& x, Taps* taps = nullptr) const {
        std::array<Tensor, 4> a;
        a[0] = proj.forward(x);
        for (int stage = 1; stage <= 3; ++stage)
            a[stage] = blocks[2 * stage - 1].forward(blocks[2 * stage - 2].forward(a[stage - 1]));
        const Tensor cat = concat({&a[0], &a[1], &a[2], &a[3]});
        if (taps)
            *taps = {a, cat};
        return fuse.forward(cat);
    }

    void visit(const std::string& prefix, const ParamVisitor& fn) {
        proj.visit(prefix + ".proj", fn);
        for (std::size_t i = 0; i < blocks.size(); ++i)
            blocks[i].visit(prefix + ".ablock" + std::to_string(i), fn);
        fuse.visit(prefix + ".fuse", fn);
    }
};

/// Neck variant of the scaffold: attention replaced by two sequential
/// bottlenecks, fused from a 3*C_h concat.
struct NA2C2f {
    int c_h = 0;
    Conv proj, fuse;
    Bottleneck u1, u2;

    struct Taps {
        Tensor a0, r1, r2, fused_input;
    };

    NA2C2f() = default;
    NA2C2f(int c_in, int c_out, double hidden_ratio)
        : c_h(static_cast<int>(std::floor(hidden_ratio * c_out))), proj(c_in, c_h, 1, 1, true),
          fuse(3 * c_h, c_out, 1, 1, true), u1(c_h), u2(c_h) {}

    int fusion_in_channels() const { return 3 * c_h; }

    Tensor forward(const Tensor& x, Taps* taps = nullptr) const {
        const Tensor a0 = proj.forward(x);
        const Tensor r1 = u1.forward(a0);
        const Tensor r2 = u2.forward(r1);
        const Tensor cat = concat({&a0, &r1, &r2});
        if (taps)
            *taps = {a0, r1, r2, cat};
        return fuse.forward(cat);
    }

    void visit(const std::string& prefix, const ParamVisitor& fn) {
        proj.visit(prefix + ".proj", fn);
        u1.visit(prefix + ".u1", fn);
        u2.visit(prefix + ".u2", fn);
        fuse.visit(prefix + ".fuse", fn);
    }
};

} // namespace triband::net
