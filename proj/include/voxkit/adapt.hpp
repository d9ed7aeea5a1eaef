#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "voxkit/core.hpp"
#include "voxkit/errors.hpp"

namespace voxkit {

/// Per-voxel foreground probability. Stored double so threshold
/// comparisons behave exactly like the written arithmetic.
using ProbabilityVolume = Grid3<double>;

enum class PseudoLabel : std::uint8_t {
    background = 0,
    foreground = 1,
    ignore = 2,
};

using PseudoLabelVolume = Grid3<PseudoLabel>;

/// symmetric labels both tails of the probability range; foreground_only
/// leaves everything below the threshold as ignore.
enum class LabelRule { symmetric, foreground_only };

/// Threshold a probability volume into {foreground, background, ignore}:
/// foreground where p >= eta, background where 1 - p >= eta, ignore in the
/// uncertainty band between. eta must lie in (0.5, 1] so the two confident
/// regions cannot overlap.
inline PseudoLabelVolume pseudo_label(const ProbabilityVolume& probs, double eta = 0.85,
                                      LabelRule rule = LabelRule::symmetric) {
    if (!(eta > 0.5) || !(eta <= 1.0)) {
        throw InvalidInputError("pseudo-label threshold must lie in (0.5, 1]");
    }
    if (probs.empty()) {
        throw InvalidInputError("cannot pseudo-label an empty volume");
    }
    for (double p : probs) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw InvalidInputError("probabilities must lie in [0, 1]");
        }
    }
    PseudoLabelVolume labels(probs.dims(), PseudoLabel::ignore);
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = probs[i];
        if (p >= eta) {
            labels[i] = PseudoLabel::foreground;
        } else if (rule == LabelRule::symmetric && (1.0 - p) >= eta) {
            labels[i] = PseudoLabel::background;
        }
    }
    return labels;
}

/// Flat parameter list; teacher and student updates treat it opaquely.
using ParameterVector = std::vector<double>;

/// One EMA step: teacher' = momentum * teacher + (1 - momentum) * student.
inline ParameterVector ema_update(const ParameterVector& teacher,
                                  const ParameterVector& student, double momentum) {
    if (teacher.size() != student.size()) {
        throw InvalidInputError("teacher and student parameter counts differ");
    }
    if (!(momentum >= 0.0 && momentum <= 1.0)) {
        throw InvalidInputError("momentum must lie in [0, 1]");
    }
    ParameterVector out(teacher.size());
    for (std::size_t i = 0; i < teacher.size(); ++i) {
        out[i] = momentum * teacher[i] + (1.0 - momentum) * student[i];
    }
    return out;
}

/// Four feature levels, flattened; level shapes are compared by length.
struct FeatureEmbedding {
    std::array<std::vector<double>, 4> levels;
};

struct ConsistencyWeights {
    std::array<double, 4> lambda{0.2, 0.2, 0.3, 0.3};
};

/// Weighted sum over the four levels of (1 - cosine similarity) between
/// the flattened embeddings. Ranges over [0, 2 * sum(lambda)].
inline double consistency_loss(const FeatureEmbedding& a, const FeatureEmbedding& b,
                               const ConsistencyWeights& w = {}) {
    double loss = 0.0;
    for (std::size_t n = 0; n < 4; ++n) {
        if (!(w.lambda[n] >= 0.0)) {
            throw InvalidInputError("consistency weights must be >= 0");
        }
        const auto& va = a.levels[n];
        const auto& vb = b.levels[n];
        if (va.size() != vb.size()) {
            throw InvalidInputError("embedding level shapes differ");
        }
        double dot = 0.0, na2 = 0.0, nb2 = 0.0;
        for (std::size_t i = 0; i < va.size(); ++i) {
            dot += va[i] * vb[i];
            na2 += va[i] * va[i];
            nb2 += vb[i] * vb[i];
        }
        if (na2 == 0.0 || nb2 == 0.0) {
            throw InvalidInputError("cosine of a zero-norm embedding level is undefined");
        }
        const double cosine =
            std::clamp(dot / (std::sqrt(na2) * std::sqrt(nb2)), -1.0, 1.0);
        loss += w.lambda[n] * (1.0 - cosine);
    }
    return loss;
}

/// Mean binary cross-entropy over the non-ignore voxels; probabilities are
/// clamped to [1e-7, 1 - 1e-7] before the logs.
inline double masked_supervision_loss(const ProbabilityVolume& probs,
                                      const PseudoLabelVolume& labels) {
    if (probs.dims() != labels.dims()) {
        throw InvalidInputError("probability and label extents differ");
    }
    double acc = 0.0;
    std::size_t counted = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (labels[i] == PseudoLabel::ignore) {
            continue;
        }
        const double p = std::clamp(probs[i], 1e-7, 1.0 - 1e-7);
        acc += labels[i] == PseudoLabel::foreground ? -std::log(p) : -std::log(1.0 - p);
        ++counted;
    }
    if (counted == 0) {
        throw InvalidInputError("supervision loss needs at least one non-ignore voxel");
    }
    return acc / static_cast<double>(counted);
}

namespace detail {

inline void require_binary(const SegmentationMask& m) {
    for (std::uint8_t v : m) {
        if (v > 1) {
            throw InvalidInputError("segmentation masks must be binary");
        }
    }
}

inline void require_binary_pair(const SegmentationMask& a, const SegmentationMask& b) {
    if (a.dims() != b.dims()) {
        throw InvalidInputError("mask extents differ");
    }
    require_binary(a);
    require_binary(b);
}

} // namespace detail

/// Dice coefficient 2|A n B| / (|A| + |B|); two empty masks count as
/// perfect agreement (1.0).
inline double dice(const SegmentationMask& a, const SegmentationMask& b) {
    detail::require_binary_pair(a, b);
    std::size_t ca = 0, cb = 0, inter = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ca += a[i];
        cb += b[i];
        inter += static_cast<std::size_t>(a[i] & b[i]);
    }
    if (ca + cb == 0) {
        return 1.0;
    }
    return 2.0 * static_cast<double>(inter) / static_cast<double>(ca + cb);
}

/// Intersection over union for one class (foreground voxels == 1, or the
/// background complement). Both-empty convention: 1.0.
inline double iou(const SegmentationMask& a, const SegmentationMask& b, bool foreground) {
    detail::require_binary_pair(a, b);
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool in_a = foreground ? a[i] == 1 : a[i] == 0;
        const bool in_b = foreground ? b[i] == 1 : b[i] == 0;
        inter += static_cast<std::size_t>(in_a && in_b);
        uni += static_cast<std::size_t>(in_a || in_b);
    }
    if (uni == 0) {
        return 1.0;
    }
    return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Two-class mean of the foreground and background IoU.
inline double miou(const SegmentationMask& a, const SegmentationMask& b) {
    return 0.5 * (iou(a, b, true) + iou(a, b, false));
}

} // namespace voxkit
