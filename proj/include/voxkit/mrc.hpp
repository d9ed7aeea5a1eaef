#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "voxkit/core.hpp"
#include "voxkit/errors.hpp"
#include "voxkit/volume.hpp"

// MRC2014 container support, mode 2 (32-bit IEEE reals) only. The header
// is 1024 bytes; the fields used here, with byte offsets:
//
//   0 nx   4 ny   8 nz        extents, nx fastest on disk
//   12 mode                   2 = float32 (the only accepted mode)
//   16 nxstart 20 nystart 24 nzstart
//   28 mx  32 my  36 mz
//   40 cella (3 floats)  52 cellb (3 floats)
//   64 mapc 68 mapr 72 maps
//   76 dmin 80 dmax 84 dmean
//   88 ispg  92 nsymbt        nsymbt = extended-header bytes to skip
//   108 nversion
//   208 "MAP " magic          212 machine stamp (0x44 0x44 LE, 0x11 0x11 BE)
//   216 rms  220 nlabl  224 labels (10 x 80 chars)
//
// Files in either byte order are read (the stamp decides); writes are
// always little-endian with a fresh stamp and recomputed statistics.
// read_mrc maps nx -> width, ny -> height, nz -> depth, so the file's
// fastest axis is the grid's fastest axis and the data block is carried
// over bit for bit.

namespace voxkit {

struct MrcHeader {
    std::int32_t nx = 0, ny = 0, nz = 0;
    std::int32_t mode = 2;
    std::int32_t nxstart = 0, nystart = 0, nzstart = 0;
    std::int32_t mx = 0, my = 0, mz = 0;
    std::array<float, 3> cella{0.0f, 0.0f, 0.0f};
    std::array<float, 3> cellb{90.0f, 90.0f, 90.0f};
    std::int32_t mapc = 1, mapr = 2, maps = 3;
    float dmin = 0.0f, dmax = 0.0f, dmean = 0.0f;
    std::int32_t ispg = 1;
    std::int32_t nsymbt = 0;
    std::int32_t nversion = 20140;
    float rms = 0.0f;
    std::int32_t nlabl = 0;
    bool big_endian_source = false;
};

namespace detail {

constexpr std::size_t kMrcHeaderBytes = 1024;

inline std::uint32_t load_u32(const unsigned char* p, bool big) noexcept {
    if (big) {
        return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
               (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
    }
    return (std::uint32_t{p[3]} << 24) | (std::uint32_t{p[2]} << 16) |
           (std::uint32_t{p[1]} << 8) | std::uint32_t{p[0]};
}

inline std::int32_t load_i32(const unsigned char* p, bool big) noexcept {
    return static_cast<std::int32_t>(load_u32(p, big));
}

inline float load_f32(const unsigned char* p, bool big) noexcept {
    return std::bit_cast<float>(load_u32(p, big));
}

inline void store_u32le(unsigned char* p, std::uint32_t v) noexcept {
    p[0] = static_cast<unsigned char>(v & 0xFF);
    p[1] = static_cast<unsigned char>((v >> 8) & 0xFF);
    p[2] = static_cast<unsigned char>((v >> 16) & 0xFF);
    p[3] = static_cast<unsigned char>((v >> 24) & 0xFF);
}

inline void store_i32le(unsigned char* p, std::int32_t v) noexcept {
    store_u32le(p, static_cast<std::uint32_t>(v));
}

inline void store_f32le(unsigned char* p, float v) noexcept {
    store_u32le(p, std::bit_cast<std::uint32_t>(v));
}

inline MrcHeader parse_header(const unsigned char* h, const std::string& path) {
    if (std::memcmp(h + 208, "MAP ", 4) != 0) {
        throw FormatError(path + ": missing 'MAP ' magic at byte 208");
    }
    bool big = false;
    if (h[212] == 0x44 && (h[213] == 0x44 || h[213] == 0x41)) {
        big = false;
    } else if (h[212] == 0x11 && h[213] == 0x11) {
        big = true;
    } else {
        throw FormatError(path + ": unrecognized machine stamp at byte 212");
    }

    MrcHeader hd;
    hd.big_endian_source = big;
    hd.nx = load_i32(h + 0, big);
    hd.ny = load_i32(h + 4, big);
    hd.nz = load_i32(h + 8, big);
    hd.mode = load_i32(h + 12, big);
    hd.nxstart = load_i32(h + 16, big);
    hd.nystart = load_i32(h + 20, big);
    hd.nzstart = load_i32(h + 24, big);
    hd.mx = load_i32(h + 28, big);
    hd.my = load_i32(h + 32, big);
    hd.mz = load_i32(h + 36, big);
    for (int i = 0; i < 3; ++i) {
        hd.cella[static_cast<std::size_t>(i)] = load_f32(h + 40 + 4 * i, big);
        hd.cellb[static_cast<std::size_t>(i)] = load_f32(h + 52 + 4 * i, big);
    }
    hd.mapc = load_i32(h + 64, big);
    hd.mapr = load_i32(h + 68, big);
    hd.maps = load_i32(h + 72, big);
    hd.dmin = load_f32(h + 76, big);
    hd.dmax = load_f32(h + 80, big);
    hd.dmean = load_f32(h + 84, big);
    hd.ispg = load_i32(h + 88, big);
    hd.nsymbt = load_i32(h + 92, big);
    hd.nversion = load_i32(h + 108, big);
    hd.rms = load_f32(h + 216, big);
    hd.nlabl = load_i32(h + 220, big);

    if (hd.nx < 1 || hd.ny < 1 || hd.nz < 1) {
        throw FormatError(path + ": non-positive volume extents in header");
    }
    if (hd.mode != 2) {
        throw UnsupportedModeError(path + ": mode " + std::to_string(hd.mode) +
                                   " volumes are not supported (only mode 2)");
    }
    if (hd.nsymbt < 0) {
        throw FormatError(path + ": negative extended-header size");
    }
    return hd;
}

} // namespace detail

/// Parse and validate the header of an MRC file without loading the data.
inline MrcHeader read_mrc_header(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(path + ": cannot open for reading");
    }
    std::array<unsigned char, detail::kMrcHeaderBytes> raw{};
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
        throw CorruptionError(path + ": file too short to hold a header");
    }
    return detail::parse_header(raw.data(), path);
}

/// Load a mode-2 MRC volume. The extended header (nsymbt bytes) is
/// skipped; the data section must hold exactly nx*ny*nz values.
inline Volume3D read_mrc(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(path + ": cannot open for reading");
    }
    std::array<unsigned char, detail::kMrcHeaderBytes> raw{};
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
        throw CorruptionError(path + ": file too short to hold a header");
    }
    const MrcHeader hd = detail::parse_header(raw.data(), path);

    std::error_code ec;
    const auto file_size = std::filesystem::file_size(path, ec);
    if (ec) {
        throw IoError(path + ": cannot stat file size");
    }
    const std::uint64_t count = static_cast<std::uint64_t>(hd.nx) *
                                static_cast<std::uint64_t>(hd.ny) *
                                static_cast<std::uint64_t>(hd.nz);
    const std::uint64_t expected = detail::kMrcHeaderBytes +
                                   static_cast<std::uint64_t>(hd.nsymbt) + count * 4;
    if (file_size < expected) {
        throw CorruptionError(path + ": data section truncated (expected " +
                              std::to_string(expected) + " bytes, file has " +
                              std::to_string(file_size) + ")");
    }
    if (file_size > expected) {
        throw CorruptionError(path + ": trailing bytes after the data section");
    }

    in.seekg(static_cast<std::streamoff>(detail::kMrcHeaderBytes + static_cast<std::uint64_t>(hd.nsymbt)));
    std::vector<unsigned char> bytes(count * 4);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
        throw CorruptionError(path + ": data section truncated mid-read");
    }

    Volume3D vol(Dims3{static_cast<std::size_t>(hd.nz), static_cast<std::size_t>(hd.ny),
                       static_cast<std::size_t>(hd.nx)});
    for (std::size_t i = 0; i < vol.size(); ++i) {
        vol[i] = detail::load_f32(bytes.data() + 4 * i, hd.big_endian_source);
    }
    return vol;
}

/// Write a volume as little-endian mode-2 MRC with recomputed statistics.
/// Deterministic: identical volumes produce identical bytes.
inline void write_mrc(const Volume3D& vol, const std::string& path) {
    if (vol.empty()) {
        throw InvalidInputError("cannot write an empty volume");
    }

    double acc = 0.0;
    float dmin = vol[0], dmax = vol[0];
    for (float v : vol) {
        acc += static_cast<double>(v);
        dmin = v < dmin ? v : dmin;
        dmax = v > dmax ? v : dmax;
    }
    const double mean_v = acc / static_cast<double>(vol.size());
    double sq = 0.0;
    for (float v : vol) {
        const double dev = static_cast<double>(v) - mean_v;
        sq += dev * dev;
    }
    const auto rms = static_cast<float>(std::sqrt(sq / static_cast<double>(vol.size())));

    const Dims3 dims = vol.dims();
    std::vector<unsigned char> out(detail::kMrcHeaderBytes + vol.size() * 4, 0);
    unsigned char* h = out.data();
    detail::store_i32le(h + 0, static_cast<std::int32_t>(dims.width));
    detail::store_i32le(h + 4, static_cast<std::int32_t>(dims.height));
    detail::store_i32le(h + 8, static_cast<std::int32_t>(dims.depth));
    detail::store_i32le(h + 12, 2);
    detail::store_i32le(h + 28, static_cast<std::int32_t>(dims.width));
    detail::store_i32le(h + 32, static_cast<std::int32_t>(dims.height));
    detail::store_i32le(h + 36, static_cast<std::int32_t>(dims.depth));
    detail::store_f32le(h + 40, static_cast<float>(dims.width));
    detail::store_f32le(h + 44, static_cast<float>(dims.height));
    detail::store_f32le(h + 48, static_cast<float>(dims.depth));
    detail::store_f32le(h + 52, 90.0f);
    detail::store_f32le(h + 56, 90.0f);
    detail::store_f32le(h + 60, 90.0f);
    detail::store_i32le(h + 64, 1);
    detail::store_i32le(h + 68, 2);
    detail::store_i32le(h + 72, 3);
    detail::store_f32le(h + 76, dmin);
    detail::store_f32le(h + 80, dmax);
    detail::store_f32le(h + 84, static_cast<float>(mean_v));
    detail::store_i32le(h + 88, 1);
    detail::store_i32le(h + 92, 0);
    detail::store_i32le(h + 108, 20140);
    std::memcpy(h + 208, "MAP ", 4);
    h[212] = 0x44;
    h[213] = 0x44;
    detail::store_f32le(h + 216, rms);
    detail::store_i32le(h + 220, 1);
    static constexpr char kLabel[] = "voxkit volume";
    std::memcpy(h + 224, kLabel, sizeof(kLabel) - 1);
    for (std::size_t i = 224 + sizeof(kLabel) - 1; i < 304; ++i) {
        h[i] = ' ';
    }

    unsigned char* data = out.data() + detail::kMrcHeaderBytes;
    for (std::size_t i = 0; i < vol.size(); ++i) {
        detail::store_f32le(data + 4 * i, vol[i]);
    }

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw IoError(path + ": cannot open for writing");
    }
    os.write(reinterpret_cast<const char*>(out.data()),
             static_cast<std::streamsize>(out.size()));
    os.flush();
    if (!os) {
        throw IoError(path + ": write failed");
    }
}

} // namespace voxkit
