#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <vector>

#include "voxkit/core.hpp"
#include "voxkit/errors.hpp"
#include "voxkit/fft.hpp"
#include "voxkit/parallel.hpp"
#include "voxkit/rng.hpp"
#include "voxkit/volume.hpp"

namespace voxkit {

/// Full complex 3D spectrum of a volume, same extents, unnormalized
/// forward convention (inverse divides by the voxel count).
using ComplexSpectrum = Grid3<std::complex<double>>;

/// Radial high-pass configuration: the fraction of spectral bins to keep,
/// counted from the highest radial frequency downward.
struct HighPassSpec {
    double keep_fraction = 0.244;
};

enum class NoiseKind { gaussian, poisson, speckle };

struct NoiseModel {
    NoiseKind kind = NoiseKind::gaussian;
    double variance = 0.0; // sigma_t^2
    std::uint64_t seed = 0;
};

/// How many volumes to draw from the target split when estimating noise,
/// and with which seed.
struct SubsetSpec {
    std::size_t n_sampled = 10;
    std::uint64_t seed = 0;
};

/// Materialized high-pass mask for one grid shape. Bins on the same radial
/// shell (identical normalized frequency magnitude) are kept or dropped
/// together, so the realized fraction is the closest shell-aligned value
/// to the requested one.
struct HighPassMask {
    Grid3<std::uint8_t> keep;
    std::size_t retained = 0;
    std::size_t total = 0;
    double requested_fraction = 0.0;
    double realized_fraction = 0.0;
};

namespace detail {

// Signed DFT bin index: 0..N/2 map to themselves, the upper half to the
// negative frequencies.
inline std::int64_t signed_freq(std::size_t i, std::size_t n) noexcept {
    const auto half_up = (n + 1) / 2;
    auto k = static_cast<std::int64_t>(i);
    if (i >= half_up) {
        k -= static_cast<std::int64_t>(n);
    }
    return k;
}

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
    if (b != 0 && a > UINT64_MAX / b) {
        throw InvalidInputError("volume extents too large for spectral shell keys");
    }
    return a * b;
}

// Exact integer shell key proportional to the squared normalized radial
// frequency: key = kd^2*(H*W)^2 + kh^2*(D*W)^2 + kw^2*(D*H)^2, which is
// (fd^2 + fh^2 + fw^2) * (D*H*W)^2 for f = k/N per axis. Integer arithmetic
// means equal radii compare equal with no floating-point ties.
inline std::uint64_t shell_key(std::int64_t kd, std::int64_t kh, std::int64_t kw,
                               const Dims3& dims) {
    const auto D = static_cast<std::uint64_t>(dims.depth);
    const auto H = static_cast<std::uint64_t>(dims.height);
    const auto W = static_cast<std::uint64_t>(dims.width);
    const auto kd2 = static_cast<std::uint64_t>(kd * kd);
    const auto kh2 = static_cast<std::uint64_t>(kh * kh);
    const auto kw2 = static_cast<std::uint64_t>(kw * kw);
    const std::uint64_t td = checked_mul(kd2, checked_mul(H * W, H * W));
    const std::uint64_t th = checked_mul(kh2, checked_mul(D * W, D * W));
    const std::uint64_t tw = checked_mul(kw2, checked_mul(D * H, D * H));
    if (td > UINT64_MAX - th || td + th > UINT64_MAX - tw) {
        throw InvalidInputError("volume extents too large for spectral shell keys");
    }
    return td + th + tw;
}

} // namespace detail

/// Build the radial high-pass mask for a grid shape. keep_fraction must be
/// in [0, 1]. Whole shells are retained from the highest radius downward;
/// among the achievable bin counts, the one closest to
/// keep_fraction * total wins (ties go to the smaller count). The DC bin is
/// never retained unless keep_fraction == 1, which keeps everything.
inline HighPassMask radial_highpass_mask(Dims3 dims, double keep_fraction) {
    if (dims.depth == 0 || dims.height == 0 || dims.width == 0) {
        throw InvalidInputError("mask extents must all be >= 1");
    }
    if (!(keep_fraction >= 0.0 && keep_fraction <= 1.0)) {
        throw InvalidInputError("keep fraction must lie in [0, 1]");
    }

    HighPassMask mask;
    mask.total = dims.count();
    mask.requested_fraction = keep_fraction;
    mask.keep = Grid3<std::uint8_t>(dims, 0);

    if (keep_fraction == 1.0) {
        std::fill(mask.keep.begin(), mask.keep.end(), std::uint8_t{1});
        mask.retained = mask.total;
        mask.realized_fraction = 1.0;
        return mask;
    }
    if (keep_fraction == 0.0) {
        return mask;
    }

    std::vector<std::uint64_t> keys(mask.total);
    std::map<std::uint64_t, std::size_t> shells;
    std::size_t flat = 0;
    for (std::size_t d = 0; d < dims.depth; ++d) {
        const std::int64_t kd = detail::signed_freq(d, dims.depth);
        for (std::size_t h = 0; h < dims.height; ++h) {
            const std::int64_t kh = detail::signed_freq(h, dims.height);
            for (std::size_t w = 0; w < dims.width; ++w, ++flat) {
                const std::int64_t kw = detail::signed_freq(w, dims.width);
                const std::uint64_t key = detail::shell_key(kd, kh, kw, dims);
                keys[flat] = key;
                ++shells[key];
            }
        }
    }

    const double target = keep_fraction * static_cast<double>(mask.total);
    std::size_t cum = 0;
    std::size_t best_retained = 0;
    std::uint64_t best_cutoff = UINT64_MAX;
    double best_dist = std::abs(0.0 - target);
    // Walk shells from the outermost inward, never crossing into DC (key 0).
    for (auto it = shells.rbegin(); it != shells.rend() && it->first != 0; ++it) {
        cum += it->second;
        const double dist = std::abs(static_cast<double>(cum) - target);
        if (dist < best_dist) {
            best_dist = dist;
            best_retained = cum;
            best_cutoff = it->first;
        }
    }

    mask.retained = best_retained;
    mask.realized_fraction =
        static_cast<double>(best_retained) / static_cast<double>(mask.total);
    if (best_retained > 0) {
        for (std::size_t i = 0; i < keys.size(); ++i) {
            if (keys[i] >= best_cutoff) {
                mask.keep[i] = 1;
            }
        }
    }
    return mask;
}

/// Forward 3D DFT (unnormalized): X[k] = sum_j x[j] exp(-2 pi i <j, k/N>).
inline ComplexSpectrum dft3(const Volume3D& vol) {
    if (vol.empty()) {
        throw InvalidInputError("cannot transform an empty volume");
    }
    ComplexSpectrum spec(vol.dims());
    for (std::size_t i = 0; i < vol.size(); ++i) {
        spec[i] = std::complex<double>(static_cast<double>(vol[i]), 0.0);
    }
    detail::transform3(spec, -1);
    return spec;
}

/// Inverse 3D DFT with 1/(D*H*W) normalization. The input must be (close
/// to) Hermitian: if the largest imaginary component of the reconstruction
/// exceeds 1e-4 times the largest real magnitude, the spectrum did not
/// describe a real volume and a NumericalError is thrown.
inline Volume3D idft3(const ComplexSpectrum& spec) {
    if (spec.empty()) {
        throw InvalidInputError("cannot transform an empty spectrum");
    }
    ComplexSpectrum work = spec;
    detail::transform3(work, +1);
    const double scale = 1.0 / static_cast<double>(work.size());

    double max_real = 0.0;
    double max_imag = 0.0;
    for (auto& c : work) {
        c *= scale;
        max_real = std::max(max_real, std::abs(c.real()));
        max_imag = std::max(max_imag, std::abs(c.imag()));
    }
    if (max_imag > 1e-4 * max_real) {
        throw NumericalError("inverse transform left an imaginary residue of " +
                             std::to_string(max_imag) + " against a real peak of " +
                             std::to_string(max_real) +
                             "; the spectrum is not Hermitian");
    }

    Volume3D out(spec.dims());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<float>(work[i].real());
    }
    return out;
}

/// Zero every bin the mask drops; kept bins are copied bit for bit.
inline ComplexSpectrum apply_highpass_mask(const ComplexSpectrum& spec,
                                           const HighPassMask& mask) {
    if (spec.dims() != mask.keep.dims()) {
        throw InvalidInputError("mask extents do not match the spectrum");
    }
    ComplexSpectrum out(spec.dims());
    for (std::size_t i = 0; i < spec.size(); ++i) {
        out[i] = mask.keep[i] ? spec[i] : std::complex<double>{0.0, 0.0};
    }
    return out;
}

inline ComplexSpectrum highpass(const ComplexSpectrum& spec, const HighPassSpec& hp) {
    return apply_highpass_mask(spec, radial_highpass_mask(spec.dims(), hp.keep_fraction));
}

/// High-frequency residual of one volume: idft3(mask(dft3(x))).
inline Volume3D extract_noise(const Volume3D& vol, const HighPassSpec& hp) {
    return idft3(highpass(dft3(vol), hp));
}

/// How per-volume residuals are reduced to one variance estimate.
///   per_volume_variance : variance of each residual volume, then averaged
///                         (the default; each volume contributes equally).
///   pooled_mean_residual: voxelwise mean of the residual volumes first,
///                         then the variance of that mean volume.
enum class NoiseAveraging { per_volume_variance, pooled_mean_residual };

struct NoiseEstimate {
    double sigma_t2 = 0.0;
    std::vector<double> per_volume_variance;
    std::size_t retained_bins = 0;
    std::size_t total_bins = 0;
    double realized_fraction = 0.0;
    NoiseAveraging averaging = NoiseAveraging::per_volume_variance;
    std::vector<Volume3D> residuals; // filled only when keep_residuals
};

/// Estimate the target-domain noise variance from a batch of volumes.
/// All volumes must share one shape. Volumes are processed independently
/// (optionally in parallel); the result does not depend on worker count.
inline NoiseEstimate estimate_noise(const std::vector<Volume3D>& volumes,
                                    const HighPassSpec& hp,
                                    NoiseAveraging averaging = NoiseAveraging::per_volume_variance,
                                    unsigned workers = 1,
                                    bool keep_residuals = false) {
    if (volumes.empty()) {
        throw InvalidInputError("noise estimation requires at least one volume");
    }
    const Dims3 dims = volumes.front().dims();
    for (const auto& v : volumes) {
        if (v.dims() != dims) {
            throw InvalidInputError("noise estimation requires equal-shaped volumes");
        }
    }

    const HighPassMask mask = radial_highpass_mask(dims, hp.keep_fraction);

    NoiseEstimate est;
    est.retained_bins = mask.retained;
    est.total_bins = mask.total;
    est.realized_fraction = mask.realized_fraction;
    est.averaging = averaging;
    est.per_volume_variance.resize(volumes.size());

    std::vector<Volume3D> residuals(volumes.size());
    parallel_for_index(volumes.size(), workers, [&](std::size_t i) {
        residuals[i] = idft3(apply_highpass_mask(dft3(volumes[i]), mask));
        est.per_volume_variance[i] = population_variance(residuals[i]);
    });

    if (averaging == NoiseAveraging::per_volume_variance) {
        double acc = 0.0;
        for (double v : est.per_volume_variance) {
            acc += v;
        }
        est.sigma_t2 = acc / static_cast<double>(volumes.size());
    } else {
        Volume3D mean_residual(dims);
        std::vector<double> acc(dims.count(), 0.0);
        for (const auto& r : residuals) {
            for (std::size_t i = 0; i < acc.size(); ++i) {
                acc[i] += static_cast<double>(r[i]);
            }
        }
        const double inv = 1.0 / static_cast<double>(residuals.size());
        for (std::size_t i = 0; i < acc.size(); ++i) {
            mean_residual[i] = static_cast<float>(acc[i] * inv);
        }
        est.sigma_t2 = population_variance(mean_residual);
    }

    if (keep_residuals) {
        est.residuals = std::move(residuals);
    }
    return est;
}

inline double estimate_noise_variance(const std::vector<Volume3D>& volumes,
                                      const HighPassSpec& hp,
                                      NoiseAveraging averaging = NoiseAveraging::per_volume_variance) {
    return estimate_noise(volumes, hp, averaging).sigma_t2;
}

/// Draw a noise field of the given shape. Voxels are filled in flat
/// (depth-major) order from a single stream seeded with model.seed.
///   gaussian: i.i.d. N(0, variance)
///   poisson : Poisson(rate = sigma_t) - sigma_t per voxel, sigma_t = sqrt(variance)
///   speckle : i.i.d. N(0, variance); meant to be injected multiplicatively
/// variance == 0 yields an all-zero field for every kind.
inline Volume3D synthesize_noise(const NoiseModel& model, Dims3 dims) {
    if (!(model.variance >= 0.0) || !std::isfinite(model.variance)) {
        throw InvalidInputError("noise variance must be finite and >= 0");
    }
    Volume3D out(dims);
    if (model.variance == 0.0) {
        return out;
    }
    const double sigma = std::sqrt(model.variance);
    Rng rng(model.seed);
    switch (model.kind) {
    case NoiseKind::gaussian:
    case NoiseKind::speckle:
        for (auto& v : out) {
            v = static_cast<float>(sigma * rng.gaussian());
        }
        break;
    case NoiseKind::poisson:
        for (auto& v : out) {
            v = static_cast<float>(static_cast<double>(rng.poisson(sigma)) - sigma);
        }
        break;
    }
    return out;
}

/// Add a synthesized field to a source volume. Gaussian and Poisson noise
/// add directly; speckle scales the source (x + x * eps).
inline Volume3D inject_noise(const Volume3D& src, const NoiseModel& model,
                             const Volume3D& noise) {
    if (src.dims() != noise.dims()) {
        throw InvalidInputError("noise field extents do not match the volume");
    }
    Volume3D out(src.dims());
    if (model.kind == NoiseKind::speckle) {
        for (std::size_t i = 0; i < src.size(); ++i) {
            out[i] = src[i] + src[i] * noise[i];
        }
    } else {
        for (std::size_t i = 0; i < src.size(); ++i) {
            out[i] = src[i] + noise[i];
        }
    }
    return out;
}

} // namespace voxkit
