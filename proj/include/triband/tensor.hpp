#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "triband/errors.hpp"

namespace triband::net {

/// Dense C x H x W float tensor, channel-major.
struct Tensor {
    int c = 0;
    int h = 0;
    int w = 0;
    std::vector<float> data;

    Tensor() = default;
    Tensor(int c_, int h_, int w_)
        : c(c_), h(h_), w(w_),
          data(static_cast<std::size_t>(c_) * h_ * w_, 0.0f) {}

    std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
    std::size_t size() const { return data.size(); }

    float& at(int ci, int y, int x) { return data[(static_cast<std::size_t>(ci) * h + y) * w + x]; }
    float at(int ci, int y, int x) const {
        return data[(static_cast<std::size_t>(ci) * h + y) * w + x];
    }

    float* channel(int ci) { return data.data() + static_cast<std::size_t>(ci) * plane(); }
    const float* channel(int ci) const { return data.data() + static_cast<std::size_t>(ci) * plane(); }
};

inline float silu(float x) { return x / (1.0f + std::exp(-x)); }

inline void silu_inplace(Tensor& t) {
    for (float& v : t.data)
        v = silu(v);
}

/// Numerically stable in-place softmax over a contiguous row.
inline void softmax_inplace(float* row, std::size_t n) {
    float m = row[0];
    for (std::size_t i = 1; i < n; ++i)
        m = std::max(m, row[i]);
    float sum = 0.0f;
    for (std::size_t i = 0; i < n; ++i) {
        row[i] = std::exp(row[i] - m);
        sum += row[i];
    }
    const float inv = 1.0f / sum;
    for (std::size_t i = 0; i < n; ++i)
        row[i] *= inv;
}

/// Channel concatenation.
inline Tensor concat(const std::vector<const Tensor*>& parts) {
    int c_total = 0;
    for (const Tensor* t : parts) {
        if (t->h != parts[0]->h || t->w != parts[0]->w)
            throw ShapeMismatch("concat: spatial dims disagree");
        c_total += t->c;
    }
    Tensor out(c_total, parts[0]->h, parts[0]->w);
    std::size_t offset = 0;
    for (const Tensor* t : parts) {
        std::copy(t->data.begin(), t->data.end(), out.data.begin() + offset);
        offset += t->size();
    }
    return out;
}

/// Channel slice [begin, end).
inline Tensor slice_channels(const Tensor& t, int begin, int end) {
    Tensor out(end - begin, t.h, t.w);
    std::copy(t.data.begin() + begin * static_cast<std::ptrdiff_t>(t.plane()),
              t.data.begin() + end * static_cast<std::ptrdiff_t>(t.plane()), out.data.begin());
    return out;
}

/// 2x nearest-neighbor upsampling.
inline Tensor upsample2x(const Tensor& t) {
    Tensor out(t.c, t.h * 2, t.w * 2);
    for (int ci = 0; ci < t.c; ++ci) {
        const float* src = t.channel(ci);
        float* dst = out.channel(ci);
        for (int y = 0; y < out.h; ++y) {
            const float* src_row = src + static_cast<std::size_t>(y / 2) * t.w;
            float* dst_row = dst + static_cast<std::size_t>(y) * out.w;
            for (int x = 0; x < out.w; ++x)
                dst_row[x] = src_row[x / 2];
        }
    }
    return out;
}

inline Tensor add(const Tensor& a, const Tensor& b) {
    if (a.c != b.c || a.h != b.h || a.w != b.w)
        throw ShapeMismatch("add: tensor dims disagree");
    Tensor out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] += b.data[i];
    return out;
}

/// 2D cross-correlation with zero padding k/2. Accumulation order is fixed,
/// so the result is deterministic.
inline Tensor conv2d(const Tensor& x, const std::vector<float>& weight,
                     const std::vector<float>& bias, int c_out, int k, int stride,
                     bool apply_act) {
    const int c_in = x.c;
    if (weight.size() != static_cast<std::size_t>(c_out) * c_in * k * k)
        throw ShapeMismatch("conv2d: weight size does not match (c_out, c_in, k, k)");
    const int p = k / 2;
    const int oh = (x.h + 2 * p - k) / stride + 1;
    const int ow = (x.w + 2 * p - k) / stride + 1;
    if (oh <= 0 || ow <= 0)
        throw ShapeMismatch("conv2d: input smaller than kernel");
    Tensor out(c_out, oh, ow);
    for (int co = 0; co < c_out; ++co) {
        float* out_ch = out.channel(co);
        std::fill(out_ch, out_ch + out.plane(), bias[co]);
        for (int ci = 0; ci < c_in; ++ci) {
            const float* in_ch = x.channel(ci);
            for (int ky = 0; ky < k; ++ky) {
                const int oy0 = std::max(0, (p - ky + stride - 1) / stride);
                const int oy_last = (x.h - 1 - ky + p) / stride;
                const int oy1 = std::min(oh, oy_last + 1);
                for (int kx = 0; kx < k; ++kx) {
                    const float wv = weight[((static_cast<std::size_t>(co) * c_in + ci) * k + ky) * k + kx];
                    const int ox0 = std::max(0, (p - kx + stride - 1) / stride);
                    const int ox_last = (x.w - 1 - kx + p) / stride;
                    const int ox1 = std::min(ow, ox_last + 1);
                    for (int oy = oy0; oy < oy1; ++oy) {
                        const float* in_row = in_ch + static_cast<std::size_t>(oy * stride + ky - p) * x.w;
                        float* out_row = out_ch + static_cast<std::size_t>(oy) * ow;
                        if (stride == 1) {
                            const float* in_px = in_row + kx - p;
                            for (int ox = ox0; ox < ox1; ++ox)
                                out_row[ox] += wv * in_px[ox];
                        } else {
                            for (int ox = ox0; ox < ox1; ++ox)
                                out_row[ox] += wv * in_row[ox * stride + kx - p];
                        }
                    }
                }
            }
        }
    }
    if (apply_act)
        silu_inplace(out);
    return out;
}

} // namespace triband::net
