#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "voxkit/errors.hpp"
#include "voxkit/rng.hpp"
#include "voxkit/spectral.hpp"

// Dataset manifests: line-oriented text, one entry per line,
//
//   <split> <volume_path> [mask_path]
//
// where <split> is `source` or `target`. Tokens are whitespace-separated,
// `#` starts a comment, blank lines are skipped. Volume paths must be
// unique across the whole file. Relative paths are interpreted relative
// to the manifest's own directory (see resolve_manifest_path).

namespace voxkit {

enum class Split { source, target };

struct ManifestEntry {
    std::string volume_path;
    std::string mask_path; // empty when the entry has no mask
    Split split = Split::source;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;

    std::size_t target_count() const {
        std::size_t n = 0;
        for (const auto& e : entries) {
            n += e.split == Split::target ? 1 : 0;
        }
        return n;
    }
};

/// Parse manifest text. `origin` names the source in error messages.
inline DatasetManifest parse_manifest(std::istream& in, const std::string& origin) {
    DatasetManifest manifest;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream tokens(line);
        std::string split_tag, volume_path, mask_path, excess;
        if (!(tokens >> split_tag)) {
            continue; // blank or comment-only line
        }
        const std::string where = origin + ":" + std::to_string(line_no);
        ManifestEntry entry;
        if (split_tag == "source") {
            entry.split = Split::source;
        } else if (split_tag == "target") {
            entry.split = Split::target;
        } else {
            throw FormatError(where + ": unknown split tag '" + split_tag + "'");
        }
        if (!(tokens >> volume_path)) {
            throw FormatError(where + ": entry is missing the volume path");
        }
        if (tokens >> mask_path) {
            entry.mask_path = mask_path;
        }
        if (tokens >> excess) {
            throw FormatError(where + ": too many fields on one line");
        }
        if (!seen.insert(volume_path).second) {
            throw FormatError(where + ": duplicate volume path '" + volume_path + "'");
        }
        entry.volume_path = volume_path;
        manifest.entries.push_back(std::move(entry));
    }
    return manifest;
}

inline DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError(path + ": cannot open manifest");
    }
    return parse_manifest(in, path);
}

/// Interpret a manifest entry path relative to the manifest file.
inline std::string resolve_manifest_path(const std::string& manifest_path,
                                         const std::string& entry_path) {
    std::filesystem::path p(entry_path);
    if (p.is_absolute()) {
        return entry_path;
    }
    return (std::filesystem::path(manifest_path).parent_path() / p).string();
}

/// Sample n_sampled distinct target-split volume paths, in the order the
/// partial Fisher-Yates pass selects them. Deterministic for a fixed seed.
inline std::vector<std::string> sample_subset(const DatasetManifest& manifest,
                                              const SubsetSpec& spec) {
    if (spec.n_sampled == 0) {
        throw InvalidInputError("subset size must be >= 1");
    }
    std::vector<const ManifestEntry*> targets;
    for (const auto& e : manifest.entries) {
        if (e.split == Split::target) {
            targets.push_back(&e);
        }
    }
    if (spec.n_sampled > targets.size()) {
        throw InvalidInputError("subset size " + std::to_string(spec.n_sampled) +
                                " exceeds the " + std::to_string(targets.size()) +
                                " target entries");
    }
    const auto picks = sample_without_replacement(targets.size(), spec.n_sampled, spec.seed);
    std::vector<std::string> paths;
    paths.reserve(picks.size());
    for (std::size_t i : picks) {
        paths.push_back(targets[i]->volume_path);
    }
    return paths;
}

} // namespace voxkit
