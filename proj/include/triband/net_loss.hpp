#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "triband/errors.hpp"
#include "triband/geometry.hpp"
#include "triband/tensor.hpp"

namespace triband::net {

/// Matched prediction/target pairs for loss evaluation. Side logits and
/// targets are expressed in DFL bin units; targets are assumed assigned.
struct LossBatch {
    std::vector<OrientedBevBox> pred_boxes;
    std::vector<OrientedBevBox> target_boxes;
    std::vector<std::array<std::vector<float>, 4>> side_logits;
    std::vector<std::array<double, 4>> target_sides;
    std::vector<std::vector<float>> class_logits;
    std::vector<int> target_classes;

    std::size_t size() const { return pred_boxes.size(); }
};

struct LossValues {
    double box = 0.0;
    double dfl = 0.0;
    double cls = 0.0;
    double total = 0.0;
};

inline constexpr double kBoxLossWeight = 7.5;
inline constexpr double kDflLossWeight = 1.5;
inline constexpr double kClsLossWeight = 0.5;

/// Distribution focal loss for one side: cross-entropy split across the two
/// bins adjacent to the continuous target.
inline double dfl_term(const std::vector<float>& logits, double target) {
    const int bins = static_cast<int>(logits.size());
    std::vector<float> p = logits;
    softmax_inplace(p.data(), p.size());
    const double t = std::clamp(target, 0.0, bins - 1 - 1e-7);
    const int lo = static_cast<int>(std::floor(t));
    const int hi = lo + 1;
    const double w_hi = t - lo;
    const double w_lo = 1.0 - w_hi;
    const double eps = 1e-12;
    double loss = -w_lo * std::log(std::max(static_cast<double>(p[lo]), eps));
    if (w_hi > 0.0)
        loss -= w_hi * std::log(std::max(static_cast<double>(p[hi]), eps));
    return loss;
}

inline double bce_with_logits(double logit, double target) {
    // stable formulation: max(x,0) - x*y + log(1 + exp(-|x|))
    return std::max(logit, 0.0) - logit * target + std::log1p(std::exp(-std::abs(logit)));
}

/// Loss value functions with the fixed 7.5 / 1.5 / 0.5 weighting:
/// box = mean(1 - rotated IoU), dfl = mean DFL over the four sides,
/// cls = mean sigmoid cross-entropy over classes.
inline LossValues loss_values(const LossBatch& batch, int n_classes = 3) {
    const std::size_t n = batch.size();
    if (n == 0)
        throw EmptyBatch("loss_values: empty batch");
    if (batch.target_boxes.size() != n || batch.side_logits.size() != n ||
        batch.target_sides.size() != n || batch.class_logits.size() != n ||
        batch.target_classes.size() != n)
        throw ShapeMismatch("loss_values: batch field sizes disagree");

    LossValues out;
    for (std::size_t i = 0; i < n; ++i) {
        out.box += 1.0 - rotated_iou(batch.pred_boxes[i], batch.target_boxes[i]);
        double dfl = 0.0;
        for (int s = 0; s < 4; ++s)
            dfl += dfl_term(batch.side_logits[i][s], batch.target_sides[i][s]);
        out.dfl += dfl / 4.0;
        if (static_cast<int>(batch.class_logits[i].size()) != n_classes)
            throw ShapeMismatch("loss_values: class logit width disagrees with n_classes");
        double cls = 0.0;
        for (int c = 0; c < n_classes; ++c)
            cls += bce_with_logits(batch.class_logits[i][c],
                                   batch.target_classes[i] == c ? 1.0 : 0.0);
        out.cls += cls / n_classes;
    }
    out.box /= static_cast<double>(n);
    out.dfl /= static_cast<double>(n);
    out.cls /= static_cast<double>(n);
    out.total = kBoxLossWeight * out.box + kDflLossWeight * out.dfl + kClsLossWeight * out.cls;
    return out;
}

} // namespace triband::net
