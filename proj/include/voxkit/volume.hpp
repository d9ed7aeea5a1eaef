#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "voxkit/core.hpp"
#include "voxkit/errors.hpp"

namespace voxkit {

inline double mean(const Volume3D& vol) {
    if (vol.empty()) {
        throw InvalidInputError("mean of an empty volume is undefined");
    }
    double acc = 0.0;
    for (float v : vol) {
        acc += static_cast<double>(v);
    }
    return acc / static_cast<double>(vol.size());
}

/// Population variance (divides by N, not N-1). Two-pass for accuracy.
inline double population_variance(const Volume3D& vol) {
    if (vol.empty()) {
        throw InvalidInputError("variance of an empty volume is undefined");
    }
    const double mu = mean(vol);
    double acc = 0.0;
    for (float v : vol) {
        const double dev = static_cast<double>(v) - mu;
        acc += dev * dev;
    }
    return acc / static_cast<double>(vol.size());
}

inline std::pair<float, float> min_max(const Volume3D& vol) {
    if (vol.empty()) {
        throw InvalidInputError("min/max of an empty volume is undefined");
    }
    auto [lo, hi] = std::minmax_element(vol.begin(), vol.end());
    return {*lo, *hi};
}

inline bool all_finite(const Volume3D& vol) {
    for (float v : vol) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

namespace detail {

// Corner-aligned coordinate mapping: target index t on an axis of extent
// T samples source coordinate t * (S-1)/(T-1), so the first and last
// samples of the two axes coincide. A singleton target axis samples the
// source centre.
inline double resize_coord(std::size_t t, std::size_t target_n, std::size_t source_n) {
    if (target_n == 1) {
        return static_cast<double>(source_n - 1) / 2.0;
    }
    // t*(S-1) stays exact in double for any realistic extent, and the one
    // correctly-rounded division then lands t = T-1 exactly on S-1.
    return static_cast<double>(t) * static_cast<double>(source_n - 1) /
           static_cast<double>(target_n - 1);
}

} // namespace detail

/// Trilinear resize with corner-aligned sampling. Identity when the target
/// extents equal the source extents (bit for bit).
inline Volume3D resize_trilinear(const Volume3D& vol, Dims3 target) {
    if (vol.empty()) {
        throw InvalidInputError("cannot resize an empty volume");
    }
    if (target.depth == 0 || target.height == 0 || target.width == 0) {
        throw InvalidInputError("resize target extents must all be >= 1");
    }
    const Dims3 src = vol.dims();
    Volume3D out(target);
    for (std::size_t d = 0; d < target.depth; ++d) {
        const double zc = detail::resize_coord(d, target.depth, src.depth);
        const std::size_t z0 = static_cast<std::size_t>(zc);
        const std::size_t z1 = std::min(z0 + 1, src.depth - 1);
        const double fz = zc - static_cast<double>(z0);
        for (std::size_t h = 0; h < target.height; ++h) {
            const double yc = detail::resize_coord(h, target.height, src.height);
            const std::size_t y0 = static_cast<std::size_t>(yc);
            const std::size_t y1 = std::min(y0 + 1, src.height - 1);
            const double fy = yc - static_cast<double>(y0);
            for (std::size_t w = 0; w < target.width; ++w) {
                const double xc = detail::resize_coord(w, target.width, src.width);
                const std::size_t x0 = static_cast<std::size_t>(xc);
                const std::size_t x1 = std::min(x0 + 1, src.width - 1);
                const double fx = xc - static_cast<double>(x0);

                const double c000 = vol(z0, y0, x0);
                const double c001 = vol(z0, y0, x1);
                const double c010 = vol(z0, y1, x0);
                const double c011 = vol(z0, y1, x1);
                const double c100 = vol(z1, y0, x0);
                const double c101 = vol(z1, y0, x1);
                const double c110 = vol(z1, y1, x0);
                const double c111 = vol(z1, y1, x1);

                const double c00 = c000 * (1.0 - fx) + c001 * fx;
                const double c01 = c010 * (1.0 - fx) + c011 * fx;
                const double c10 = c100 * (1.0 - fx) + c101 * fx;
                const double c11 = c110 * (1.0 - fx) + c111 * fx;
                const double c0 = c00 * (1.0 - fy) + c01 * fy;
                const double c1 = c10 * (1.0 - fy) + c11 * fy;
                out(d, h, w) = static_cast<float>(c0 * (1.0 - fz) + c1 * fz);
            }
        }
    }
    return out;
}

/// Nearest-neighbour resize with the same corner-aligned mapping; the
/// variant to use for label volumes, where blending classes is meaningless.
/// Coordinates exactly halfway between samples round up.
template <typename T>
Grid3<T> resize_nearest(const Grid3<T>& grid, Dims3 target) {
    if (grid.empty()) {
        throw InvalidInputError("cannot resize an empty volume");
    }
    if (target.depth == 0 || target.height == 0 || target.width == 0) {
        throw InvalidInputError("resize target extents must all be >= 1");
    }
    const Dims3 src = grid.dims();
    auto nearest = [](double c, std::size_t n) {
        auto i = static_cast<std::size_t>(std::floor(c + 0.5));
        return std::min(i, n - 1);
    };
    Grid3<T> out(target);
    for (std::size_t d = 0; d < target.depth; ++d) {
        const std::size_t z = nearest(detail::resize_coord(d, target.depth, src.depth), src.depth);
        for (std::size_t h = 0; h < target.height; ++h) {
            const std::size_t y = nearest(detail::resize_coord(h, target.height, src.height), src.height);
            for (std::size_t w = 0; w < target.width; ++w) {
                const std::size_t x = nearest(detail::resize_coord(w, target.width, src.width), src.width);
                out(d, h, w) = grid(z, y, x);
            }
        }
    }
    return out;
}

/// Threshold a grey-scale annotation volume into a binary mask: voxels at
/// or above the threshold become foreground.
inline SegmentationMask binarize_mask(const Volume3D& grey, float threshold = 300.0f) {
    if (grey.empty()) {
        throw InvalidInputError("cannot binarize an empty volume");
    }
    SegmentationMask mask(grey.dims());
    for (std::size_t i = 0; i < grey.size(); ++i) {
        mask[i] = grey[i] >= threshold ? std::uint8_t{1} : std::uint8_t{0};
    }
    return mask;
}

} // namespace voxkit
