#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "voxkit/core.hpp"
#include "voxkit/errors.hpp"

namespace voxkit {

/// Out-of-range window index handling. clamp replicates the nearest edge
/// voxel; mirror reflects about the edge voxel without duplicating it
/// (index -1 maps to 1, index n to n-2).
enum class Boundary { clamp, mirror };

/// Which gradient feeds the improved filter's range kernel. `sobel` applies
/// the separable first-derivative Sobel kernels to the intensities;
/// `laplacian_difference` takes, per axis, the difference of the discrete
/// Laplacian response at the two axis neighbours.
enum class GradientMode { sobel, laplacian_difference };

struct BilateralParams {
    int window_radius = 1; // 3x3x3 window
    double sigma_d = 120.0;
    double sigma_r = 1.2;
    Boundary boundary = Boundary::clamp;
    GradientMode gradient_mode = GradientMode::sobel;
};

/// Per-voxel spatial gradient, components in (h, w, d) order.
struct Grad3 {
    double h = 0.0;
    double w = 0.0;
    double d = 0.0;

    bool operator==(const Grad3&) const = default;
};

using GradientField = Grid3<Grad3>;

/// Gaussian kernel e^{-x^2/(2 sigma^2)} / (2 pi sigma). The normalization
/// cancels inside the filter ratio but is kept so the function is a usable
/// kernel on its own.
inline double gaussian_kernel(double x, double sigma) {
    if (!(sigma > 0.0)) {
        throw InvalidInputError("gaussian kernel width must be > 0");
    }
    return std::exp(-(x * x) / (2.0 * sigma * sigma)) /
           (2.0 * std::numbers::pi * sigma);
}

namespace detail {

// Same kernel fed with an already-squared argument, so window loops skip
// the square root.
inline double gaussian_kernel_sq(double x_squared, double sigma) noexcept {
    return std::exp(-x_squared / (2.0 * sigma * sigma)) /
           (2.0 * std::numbers::pi * sigma);
}

inline std::ptrdiff_t map_index(std::ptrdiff_t i, std::ptrdiff_t n, Boundary b) noexcept {
    if (i < 0) {
        return b == Boundary::clamp ? 0 : -i;
    }
    if (i >= n) {
        return b == Boundary::clamp ? n - 1 : 2 * n - 2 - i;
    }
    return i;
}

// One 3-tap convolution pass along the given axis (0 = d, 1 = h, 2 = w).
inline Grid3<double> conv3tap(const Grid3<double>& in, int axis,
                              const double (&taps)[3], Boundary boundary) {
    const Dims3 dims = in.dims();
    const std::ptrdiff_t extent[3] = {
        static_cast<std::ptrdiff_t>(dims.depth),
        static_cast<std::ptrdiff_t>(dims.height),
        static_cast<std::ptrdiff_t>(dims.width),
    };
    Grid3<double> out(dims);
    for (std::ptrdiff_t d = 0; d < extent[0]; ++d) {
        for (std::ptrdiff_t h = 0; h < extent[1]; ++h) {
            for (std::ptrdiff_t w = 0; w < extent[2]; ++w) {
                double acc = 0.0;
                for (int t = -1; t <= 1; ++t) {
                    std::ptrdiff_t c[3] = {d, h, w};
                    c[axis] = map_index(c[axis] + t, extent[axis], boundary);
                    acc += taps[t + 1] *
                           in(static_cast<std::size_t>(c[0]),
                              static_cast<std::size_t>(c[1]),
                              static_cast<std::size_t>(c[2]));
                }
                out(static_cast<std::size_t>(d), static_cast<std::size_t>(h),
                    static_cast<std::size_t>(w)) = acc;
            }
        }
    }
    return out;
}

inline Grid3<double> to_double(const Volume3D& vol) {
    Grid3<double> out(vol.dims());
    for (std::size_t i = 0; i < vol.size(); ++i) {
        out[i] = static_cast<double>(vol[i]);
    }
    return out;
}

inline void require_min_extents(const Volume3D& vol, std::size_t n, const char* what) {
    if (vol.empty()) {
        throw InvalidInputError(std::string(what) + " requires a non-empty volume");
    }
    const Dims3 d = vol.dims();
    if (d.depth < n || d.height < n || d.width < n) {
        throw InvalidInputError(std::string(what) + " requires every extent >= " +
                                std::to_string(n));
    }
}

} // namespace detail

/// 3D Sobel gradient: derivative kernel [-1, 0, 1] along the component's
/// axis, smoothing [1, 2, 1] along the other two. Separable passes; every
/// extent must be >= 3.
inline GradientField sobel_gradient3(const Volume3D& vol,
                                     Boundary boundary = Boundary::clamp) {
    detail::require_min_extents(vol, 3, "sobel gradient");
    static constexpr double kSmooth[3] = {1.0, 2.0, 1.0};
    static constexpr double kDeriv[3] = {-1.0, 0.0, 1.0};

    const Grid3<double> base = detail::to_double(vol);
    const Grid3<double> smooth_d = detail::conv3tap(base, 0, kSmooth, boundary);
    const Grid3<double> deriv_d = detail::conv3tap(base, 0, kDeriv, boundary);

    const Grid3<double> gh =
        detail::conv3tap(detail::conv3tap(smooth_d, 1, kDeriv, boundary), 2, kSmooth, boundary);
    const Grid3<double> gw =
        detail::conv3tap(detail::conv3tap(smooth_d, 1, kSmooth, boundary), 2, kDeriv, boundary);
    const Grid3<double> gd =
        detail::conv3tap(detail::conv3tap(deriv_d, 1, kSmooth, boundary), 2, kSmooth, boundary);

    GradientField field(vol.dims());
    for (std::size_t i = 0; i < field.size(); ++i) {
        field[i] = Grad3{gh[i], gw[i], gd[i]};
    }
    return field;
}

/// Form the 6-neighbour Laplacian response L over the whole grid, then take
/// per axis the plain difference L(p + e) - L(p - e) of the two axis
/// neighbours.
inline GradientField laplacian_difference_gradient3(const Volume3D& vol,
                                                    Boundary boundary = Boundary::clamp) {
    detail::require_min_extents(vol, 3, "laplacian-difference gradient");
    const Dims3 dims = vol.dims();
    const std::ptrdiff_t D = static_cast<std::ptrdiff_t>(dims.depth);
    const std::ptrdiff_t H = static_cast<std::ptrdiff_t>(dims.height);
    const std::ptrdiff_t W = static_cast<std::ptrdiff_t>(dims.width);

    auto sample = [&](std::ptrdiff_t d, std::ptrdiff_t h, std::ptrdiff_t w) {
        return static_cast<double>(vol(
            static_cast<std::size_t>(detail::map_index(d, D, boundary)),
            static_cast<std::size_t>(detail::map_index(h, H, boundary)),
            static_cast<std::size_t>(detail::map_index(w, W, boundary))));
    };

    Grid3<double> lap(dims);
    for (std::ptrdiff_t d = 0; d < D; ++d) {
        for (std::ptrdiff_t h = 0; h < H; ++h) {
            for (std::ptrdiff_t w = 0; w < W; ++w) {
                const double c = sample(d, h, w);
                lap(static_cast<std::size_t>(d), static_cast<std::size_t>(h),
                    static_cast<std::size_t>(w)) =
                    sample(d + 1, h, w) + sample(d - 1, h, w) +
                    sample(d, h + 1, w) + sample(d, h - 1, w) +
                    sample(d, h, w + 1) + sample(d, h, w - 1) - 6.0 * c;
            }
        }
    }

    auto lap_at = [&](std::ptrdiff_t d, std::ptrdiff_t h, std::ptrdiff_t w) {
        return lap(static_cast<std::size_t>(detail::map_index(d, D, boundary)),
                   static_cast<std::size_t>(detail::map_index(h, H, boundary)),
                   static_cast<std::size_t>(detail::map_index(w, W, boundary)));
    };

    GradientField field(dims);
    for (std::ptrdiff_t d = 0; d < D; ++d) {
        for (std::ptrdiff_t h = 0; h < H; ++h) {
            for (std::ptrdiff_t w = 0; w < W; ++w) {
                field(static_cast<std::size_t>(d), static_cast<std::size_t>(h),
                      static_cast<std::size_t>(w)) = Grad3{
                    lap_at(d, h + 1, w) - lap_at(d, h - 1, w),
                    lap_at(d, h, w + 1) - lap_at(d, h, w - 1),
                    lap_at(d + 1, h, w) - lap_at(d - 1, h, w),
                };
            }
        }
    }
    return field;
}

inline GradientField gradient_field(const Volume3D& vol, GradientMode mode,
                                    Boundary boundary = Boundary::clamp) {
    return mode == GradientMode::sobel
               ? sobel_gradient3(vol, boundary)
               : laplacian_difference_gradient3(vol, boundary);
}

namespace detail {

inline void validate_bilateral(const Volume3D& vol, const BilateralParams& p) {
    if (p.window_radius < 1) {
        throw InvalidInputError("window radius must be >= 1");
    }
    if (!(p.sigma_d > 0.0) || !(p.sigma_r > 0.0)) {
        throw InvalidInputError("kernel widths must be > 0");
    }
    const auto window = static_cast<std::size_t>(2 * p.window_radius + 1);
    require_min_extents(vol, window, "bilateral filtering");
}

// Shared window engine. RangeSq maps (flat index p, flat index q) to the
// squared argument of the range kernel. When weight_sums is non-null it
// receives the per-voxel total window weight.
template <typename RangeSq>
Volume3D bilateral_engine(const Volume3D& vol, const BilateralParams& p,
                          RangeSq&& range_sq, Grid3<double>* weight_sums) {
    const Dims3 dims = vol.dims();
    const std::ptrdiff_t D = static_cast<std::ptrdiff_t>(dims.depth);
    const std::ptrdiff_t H = static_cast<std::ptrdiff_t>(dims.height);
    const std::ptrdiff_t W = static_cast<std::ptrdiff_t>(dims.width);
    const int r = p.window_radius;
    const int span = 2 * r + 1;

    std::vector<double> spatial(static_cast<std::size_t>(span * span * span));
    for (int dd = -r; dd <= r; ++dd) {
        for (int dh = -r; dh <= r; ++dh) {
            for (int dw = -r; dw <= r; ++dw) {
                const double dist2 = static_cast<double>(dd * dd + dh * dh + dw * dw);
                spatial[static_cast<std::size_t>(((dd + r) * span + (dh + r)) * span +
                                                 (dw + r))] =
                    gaussian_kernel_sq(dist2, p.sigma_d);
            }
        }
    }

    Volume3D out(dims);
    if (weight_sums != nullptr) {
        *weight_sums = Grid3<double>(dims);
    }
    for (std::ptrdiff_t d = 0; d < D; ++d) {
        for (std::ptrdiff_t h = 0; h < H; ++h) {
            for (std::ptrdiff_t w = 0; w < W; ++w) {
                const std::size_t pi = vol.index(static_cast<std::size_t>(d),
                                                 static_cast<std::size_t>(h),
                                                 static_cast<std::size_t>(w));
                double acc = 0.0;
                double norm = 0.0;
                for (int dd = -r; dd <= r; ++dd) {
                    const auto qd = static_cast<std::size_t>(
                        map_index(d + dd, D, p.boundary));
                    for (int dh = -r; dh <= r; ++dh) {
                        const auto qh = static_cast<std::size_t>(
                            map_index(h + dh, H, p.boundary));
                        for (int dw = -r; dw <= r; ++dw) {
                            const auto qw = static_cast<std::size_t>(
                                map_index(w + dw, W, p.boundary));
                            const std::size_t qi = vol.index(qd, qh, qw);
                            const double ws = spatial[static_cast<std::size_t>(
                                ((dd + r) * span + (dh + r)) * span + (dw + r))];
                            const double wr =
                                gaussian_kernel_sq(range_sq(pi, qi), p.sigma_r);
                            const double weight = ws * wr;
                            acc += weight * static_cast<double>(vol[qi]);
                            norm += weight;
                        }
                    }
                }
                if (!(norm > 0.0)) {
                    throw NumericalError("bilateral weight sum degenerated to zero");
                }
                out[pi] = static_cast<float>(acc / norm);
                if (weight_sums != nullptr) {
                    (*weight_sums)[pi] = norm;
                }
            }
        }
    }
    return out;
}

} // namespace detail

/// Classical bilateral filter: weight = G_sd(window distance) * G_sr(value
/// difference), output the normalized weighted mean over the window.
inline Volume3D bilateral_filter(const Volume3D& vol, const BilateralParams& p) {
    detail::validate_bilateral(vol, p);
    auto range_sq = [&vol](std::size_t pi, std::size_t qi) {
        const double diff = static_cast<double>(vol[qi]) - static_cast<double>(vol[pi]);
        return diff * diff;
    };
    return detail::bilateral_engine(vol, p, range_sq, nullptr);
}

namespace detail {

template <typename Out>
Out improved_bilateral_impl(const Volume3D& vol, const BilateralParams& p,
                            Grid3<double>* weight_sums) {
    validate_bilateral(vol, p);
    require_min_extents(vol, 3, "gradient computation");
    const GradientField grad = gradient_field(vol, p.gradient_mode, p.boundary);
    auto range_sq = [&grad](std::size_t pi, std::size_t qi) {
        const double dh = grad[pi].h - grad[qi].h;
        const double dw = grad[pi].w - grad[qi].w;
        const double dd = grad[pi].d - grad[qi].d;
        return dh * dh + dw * dw + dd * dd;
    };
    return bilateral_engine(vol, p, range_sq, weight_sums);
}

} // namespace detail

/// Improved bilateral filter: the range kernel compares spatial gradients
/// (Euclidean norm of the componentwise difference) instead of raw values.
/// The gradient field is computed once over the input and held fixed.
inline Volume3D improved_bilateral_filter(const Volume3D& vol, const BilateralParams& p) {
    return detail::improved_bilateral_impl<Volume3D>(vol, p, nullptr);
}

/// Per-voxel total window weight used by the improved filter. Because the
/// range kernel sees only gradients, this map is unchanged when a constant
/// is added to the volume, which is the point of the gradient range kernel.
inline Grid3<double> improved_bilateral_weight_sums(const Volume3D& vol,
                                                    const BilateralParams& p) {
    Grid3<double> sums;
    detail::improved_bilateral_impl<Volume3D>(vol, p, &sums);
    return sums;
}

} // namespace voxkit
