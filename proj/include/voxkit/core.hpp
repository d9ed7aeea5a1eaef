#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "voxkit/errors.hpp"

namespace voxkit {

/// Extents of a 3D grid, in voxels.
///
/// Axis convention used throughout the library: (depth, height, width),
/// with width varying fastest in memory. A grid read from a volume file
/// maps the file's fastest axis to width and its slowest to depth.
struct Dims3 {
    std::size_t depth = 0;
    std::size_t height = 0;
    std::size_t width = 0;

    std::size_t count() const noexcept { return depth * height * width; }
    bool operator==(const Dims3&) const noexcept = default;
};

/// Dense 3D array with depth-major layout.
///
/// Element (d, h, w) lives at flat index (d*height + h)*width + w.
/// A default-constructed grid is empty (all extents zero); any grid built
/// with explicit extents has every extent >= 1.
template <typename T>
class Grid3 {
public:
    Grid3() = default;

    explicit Grid3(Dims3 dims, T fill = T())
        : dims_(checked(dims)), data_(dims.count(), fill) {}

    Grid3(Dims3 dims, std::vector<T> data)
        : dims_(checked(dims)), data_(std::move(data)) {
        if (data_.size() != dims_.count()) {
            throw InvalidInputError("grid data size does not match extents");
        }
    }

    const Dims3& dims() const noexcept { return dims_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::size_t index(std::size_t d, std::size_t h, std::size_t w) const noexcept {
        return (d * dims_.height + h) * dims_.width + w;
    }

    T& operator()(std::size_t d, std::size_t h, std::size_t w) {
        return data_[index(d, h, w)];
    }
    const T& operator()(std::size_t d, std::size_t h, std::size_t w) const {
        return data_[index(d, h, w)];
    }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    T& at(std::size_t d, std::size_t h, std::size_t w) {
        bounds_check(d, h, w);
        return data_[index(d, h, w)];
    }
    const T& at(std::size_t d, std::size_t h, std::size_t w) const {
        bounds_check(d, h, w);
        return data_[index(d, h, w)];
    }

    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }

    std::vector<T>& values() noexcept { return data_; }
    const std::vector<T>& values() const noexcept { return data_; }

    auto begin() noexcept { return data_.begin(); }
    auto end() noexcept { return data_.end(); }
    auto begin() const noexcept { return data_.begin(); }
    auto end() const noexcept { return data_.end(); }

    bool operator==(const Grid3&) const = default;

private:
    static Dims3 checked(Dims3 dims) {
        if (dims.depth == 0 || dims.height == 0 || dims.width == 0) {
            throw InvalidInputError("grid extents must all be >= 1");
        }
        return dims;
    }

    void bounds_check(std::size_t d, std::size_t h, std::size_t w) const {
        if (d >= dims_.depth || h >= dims_.height || w >= dims_.width) {
            throw InvalidInputError("grid index out of range");
        }
    }

    Dims3 dims_{};
    std::vector<T> data_{};
};

/// Scalar density volume. Stored single precision; reductions and filter
/// arithmetic happen in double and round once on the way out.
using Volume3D = Grid3<float>;

/// Binary segmentation volume; every element is 0 or 1.
using SegmentationMask = Grid3<std::uint8_t>;

} // namespace voxkit
