// voxkit command line front end.
//
// Exit codes: 0 success, 2 usage, 3 invalid input, 4 format,
// 5 unsupported mode, 6 corruption, 7 io, 8 numerical, 1 internal.
// Reports go to stdout as key=value lines; see docs/MANUAL.md.

#include <array>
#include <chrono>
#include <clocale>
#include <concepts>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "voxkit/voxkit.hpp"

namespace {

using namespace voxkit;

constexpr const char* kVersion = "0.1.0";

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_dims(const Dims3& d) {
    return std::to_string(d.depth) + "x" + std::to_string(d.height) + "x" +
           std::to_string(d.width);
}

class Report {
public:
    void add(const std::string& key, const std::string& value) {
        text_ += key;
        text_ += '=';
        text_ += value;
        text_ += '\n';
    }
    void add(const std::string& key, double value) { add(key, fmt_double(value)); }
    void add(const std::string& key, std::size_t value) { add(key, std::to_string(value)); }
    void print() const { std::fwrite(text_.data(), 1, text_.size(), stdout); }

private:
    std::string text_;
};

// ---------------------------------------------------------------------------
// Config file: key=value lines, # comments. Unknown keys are rejected so a
// typo cannot silently fall back to a default.
// ---------------------------------------------------------------------------

const std::vector<std::string>& known_config_keys() {
    static const std::vector<std::string> keys = {
        "rho",       "n_sampled", "sigma_d",  "sigma_r",   "eta",
        "momentum",  "lambda",    "seed",     "workers",   "window_radius",
        "boundary",  "gradient",  "threshold", "input",    "output",
        "manifest",
    };
    return keys;
}

struct ConfigFile {
    std::map<std::string, std::string> kv;

    bool has(const std::string& key) const { return kv.count(key) != 0; }
    const std::string& get(const std::string& key) const { return kv.at(key); }
};

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return "";
    }
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

ConfigFile load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError(path + ": cannot open config file");
    }
    ConfigFile cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const std::string stripped = trim(line);
        if (stripped.empty()) {
            continue;
        }
        const std::string where = path + ":" + std::to_string(line_no);
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw FormatError(where + ": expected key=value");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) {
            throw FormatError(where + ": empty key");
        }
        const auto& known = known_config_keys();
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw FormatError(where + ": unknown config key '" + key + "'");
        }
        cfg.kv[key] = value; // later lines win
    }
    return cfg;
}

bool parse_value(const std::string& s, double& out) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') {
        return false;
    }
    out = v;
    return true;
}

template <typename T>
    requires std::unsigned_integral<T>
bool parse_value(const std::string& s, T& out) {
    if (s.empty() || s[0] == '-') {
        return false;
    }
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0' ||
        v > static_cast<unsigned long long>(std::numeric_limits<T>::max())) {
        return false;
    }
    out = static_cast<T>(v);
    return true;
}

bool parse_value(const std::string& s, int& out) {
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0') {
        return false;
    }
    out = static_cast<int>(v);
    return true;
}

bool parse_value(const std::string& s, std::string& out) {
    out = s;
    return true;
}

bool parse_value(const std::string& s, std::array<double, 4>& out) {
    std::array<double, 4> parsed{};
    std::size_t begin = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        const auto comma = s.find(',', begin);
        const bool last = i == 3;
        if (last != (comma == std::string::npos)) {
            return false;
        }
        const std::string part =
            trim(last ? s.substr(begin) : s.substr(begin, comma - begin));
        if (!parse_value(part, parsed[i])) {
            return false;
        }
        begin = comma + 1;
    }
    out = parsed;
    return true;
}

// Resolution order: explicit flag, then config file, then (workers only)
// the VOXKIT_WORKERS environment variable, then the built-in default.
class Merger {
public:
    explicit Merger(const ConfigFile& cfg) : cfg_(cfg) {}

    template <typename T>
    void apply(const CLI::Option* opt, const char* key, T& var) const {
        if (opt != nullptr && opt->count() > 0) {
            return;
        }
        if (!cfg_.has(key)) {
            return;
        }
        if (!parse_value(cfg_.get(key), var)) {
            throw FormatError(std::string("config key '") + key +
                              "': cannot parse '" + cfg_.get(key) + "'");
        }
    }

    unsigned resolve_workers(const CLI::Option* opt, unsigned flag_value) const {
        unsigned workers = flag_value;
        if (opt != nullptr && opt->count() > 0) {
            // flag already holds the value
        } else if (cfg_.has("workers")) {
            if (!parse_value(cfg_.get("workers"), workers)) {
                throw FormatError("config key 'workers': cannot parse '" +
                                  cfg_.get("workers") + "'");
            }
        } else if (const char* env = std::getenv("VOXKIT_WORKERS")) {
            if (!parse_value(std::string(env), workers)) {
                throw InvalidInputError(
                    "VOXKIT_WORKERS must be an unsigned integer, got '" +
                    std::string(env) + "'");
            }
        } else {
            workers = 1;
        }
        if (workers == 0) {
            throw InvalidInputError("worker count must be >= 1");
        }
        return workers;
    }

private:
    const ConfigFile& cfg_;
};

Boundary parse_boundary(const std::string& s) {
    if (s == "clamp") {
        return Boundary::clamp;
    }
    if (s == "mirror") {
        return Boundary::mirror;
    }
    throw InvalidInputError("boundary must be 'clamp' or 'mirror', got '" + s + "'");
}

GradientMode parse_gradient(const std::string& s) {
    if (s == "sobel") {
        return GradientMode::sobel;
    }
    if (s == "laplacian-diff") {
        return GradientMode::laplacian_difference;
    }
    throw InvalidInputError("gradient must be 'sobel' or 'laplacian-diff', got '" +
                            s + "'");
}

NoiseKind parse_kind(const std::string& s) {
    if (s == "gaussian") {
        return NoiseKind::gaussian;
    }
    if (s == "poisson") {
        return NoiseKind::poisson;
    }
    if (s == "speckle") {
        return NoiseKind::speckle;
    }
    throw InvalidInputError("noise kind must be gaussian, poisson or speckle");
}

std::string require_path(const std::string& value, const char* what) {
    if (!value.empty()) {
        return value;
    }
    throw InvalidInputError(std::string("missing ") + what +
                            " (pass it as an argument or set it in the config file)");
}

SegmentationMask mask_from_volume(const Volume3D& vol, const std::string& path) {
    SegmentationMask mask(vol.dims());
    for (std::size_t i = 0; i < vol.size(); ++i) {
        if (vol[i] == 0.0f) {
            mask[i] = 0;
        } else if (vol[i] == 1.0f) {
            mask[i] = 1;
        } else {
            throw InvalidInputError(path + ": metrics input must hold only 0 and 1 values");
        }
    }
    return mask;
}

double elapsed_ms(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     t0)
        .count();
}

// ---------------------------------------------------------------------------
// Subcommand payloads
// ---------------------------------------------------------------------------

struct ExtractNoiseArgs {
    std::string manifest;
    double rho = 0.244;
    std::size_t n_sampled = 10;
    std::uint64_t seed = 0;
    std::string averaging = "per-volume";
    std::string residual_dir;
    unsigned workers = 1;
};

int cmd_extract_noise(const ExtractNoiseArgs& a) {
    const DatasetManifest manifest = load_manifest(a.manifest);
    const SubsetSpec subset{a.n_sampled, a.seed};
    const std::vector<std::string> sampled = sample_subset(manifest, subset);

    std::vector<Volume3D> volumes(sampled.size());
    parallel_for_index(sampled.size(), a.workers, [&](std::size_t i) {
        volumes[i] = read_mrc(resolve_manifest_path(a.manifest, sampled[i]));
    });

    const NoiseAveraging averaging = a.averaging == "mean-residual"
                                         ? NoiseAveraging::pooled_mean_residual
                                         : NoiseAveraging::per_volume_variance;
    const bool keep = !a.residual_dir.empty();
    const HighPassSpec hp{a.rho};
    const NoiseEstimate est = estimate_noise(volumes, hp, averaging, a.workers, keep);

    if (keep) {
        std::filesystem::create_directories(a.residual_dir);
        parallel_for_index(est.residuals.size(), a.workers, [&](std::size_t i) {
            const std::string out = (std::filesystem::path(a.residual_dir) /
                                     ("residual_" + std::to_string(i) + ".mrc"))
                                        .string();
            write_mrc(est.residuals[i], out);
        });
    }

    Report rep;
    rep.add("command", "extract-noise");
    rep.add("manifest", a.manifest);
    rep.add("n_sampled", a.n_sampled);
    rep.add("seed", std::to_string(a.seed));
    rep.add("averaging", a.averaging);
    rep.add("rho_requested", a.rho);
    rep.add("rho_realized", est.realized_fraction);
    rep.add("retained_bins", est.retained_bins);
    rep.add("total_bins", est.total_bins);
    rep.add("sigma_t2", est.sigma_t2);
    for (std::size_t i = 0; i < sampled.size(); ++i) {
        rep.add("volume_" + std::to_string(i), sampled[i]);
        rep.add("variance_" + std::to_string(i), est.per_volume_variance[i]);
    }
    rep.print();
    return 0;
}

struct DenoiseArgs {
    std::string input;
    std::string output;
    std::string method;
    double rho = 0.244;
    double sigma_d = 120.0;
    double sigma_r = 1.2;
    int window_radius = 1;
    std::string boundary = "clamp";
    std::string gradient = "sobel";
};

int cmd_denoise(const DenoiseArgs& a) {
    const Volume3D input = read_mrc(a.input);
    Report rep;
    rep.add("command", "denoise");
    rep.add("method", a.method);
    rep.add("input", a.input);
    rep.add("output", a.output);

    Volume3D result;
    if (a.method == "ngm") {
        const HighPassMask mask = radial_highpass_mask(input.dims(), a.rho);
        const Volume3D residual = idft3(apply_highpass_mask(dft3(input), mask));
        result = Volume3D(input.dims());
        for (std::size_t i = 0; i < input.size(); ++i) {
            result[i] = input[i] - residual[i];
        }
        rep.add("rho_requested", a.rho);
        rep.add("rho_realized", mask.realized_fraction);
        rep.add("retained_bins", mask.retained);
        rep.add("total_bins", mask.total);
    } else {
        BilateralParams params;
        params.window_radius = a.window_radius;
        params.sigma_d = a.sigma_d;
        params.sigma_r = a.sigma_r;
        params.boundary = parse_boundary(a.boundary);
        params.gradient_mode = parse_gradient(a.gradient);
        result = a.method == "bf" ? bilateral_filter(input, params)
                                  : improved_bilateral_filter(input, params);
        rep.add("sigma_d", a.sigma_d);
        rep.add("sigma_r", a.sigma_r);
        rep.add("window_radius", std::to_string(a.window_radius));
        rep.add("boundary", a.boundary);
        if (a.method == "ibf") {
            rep.add("gradient", a.gradient);
        }
    }
    write_mrc(result, a.output);
    rep.add("dims", fmt_dims(input.dims()));
    rep.print();
    return 0;
}

struct InjectArgs {
    std::string input;
    std::string output;
    std::string kind = "gaussian";
    double variance = 0.0;
    std::uint64_t seed = 0;
};

int cmd_inject(const InjectArgs& a) {
    const Volume3D src = read_mrc(a.input);
    NoiseModel model;
    model.kind = parse_kind(a.kind);
    model.variance = a.variance;
    model.seed = a.seed;
    const Volume3D noise = synthesize_noise(model, src.dims());
    const Volume3D out = inject_noise(src, model, noise);
    write_mrc(out, a.output);

    Report rep;
    rep.add("command", "inject");
    rep.add("input", a.input);
    rep.add("output", a.output);
    rep.add("kind", a.kind);
    rep.add("variance", a.variance);
    rep.add("seed", std::to_string(a.seed));
    rep.add("dims", fmt_dims(src.dims()));
    rep.print();
    return 0;
}

struct PseudoLabelArgs {
    std::string input;
    std::string output;
    double eta = 0.85;
    std::string rule = "symmetric";
};

int cmd_pseudo_label(const PseudoLabelArgs& a) {
    const Volume3D probs_f = read_mrc(a.input);
    ProbabilityVolume probs(probs_f.dims());
    for (std::size_t i = 0; i < probs_f.size(); ++i) {
        probs[i] = static_cast<double>(probs_f[i]);
    }
    const LabelRule rule = a.rule == "foreground-only" ? LabelRule::foreground_only
                                                       : LabelRule::symmetric;
    const PseudoLabelVolume labels = pseudo_label(probs, a.eta, rule);

    // On disk: foreground 1, background 0, ignore -1 (mode 2 float volume).
    Volume3D encoded(labels.dims());
    std::size_t n_fg = 0, n_bg = 0, n_ignore = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        switch (labels[i]) {
        case PseudoLabel::foreground:
            encoded[i] = 1.0f;
            ++n_fg;
            break;
        case PseudoLabel::background:
            encoded[i] = 0.0f;
            ++n_bg;
            break;
        case PseudoLabel::ignore:
            encoded[i] = -1.0f;
            ++n_ignore;
            break;
        }
    }
    write_mrc(encoded, a.output);

    Report rep;
    rep.add("command", "pseudo-label");
    rep.add("input", a.input);
    rep.add("output", a.output);
    rep.add("eta", a.eta);
    rep.add("rule", a.rule);
    rep.add("foreground", n_fg);
    rep.add("background", n_bg);
    rep.add("ignored", n_ignore);
    rep.print();
    return 0;
}

struct BinarizeArgs {
    std::string input;
    std::string output;
    double threshold = 300.0;
};

int cmd_binarize(const BinarizeArgs& a) {
    const Volume3D grey = read_mrc(a.input);
    const SegmentationMask mask = binarize_mask(grey, static_cast<float>(a.threshold));
    Volume3D encoded(mask.dims());
    std::size_t fg = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        encoded[i] = static_cast<float>(mask[i]);
        fg += mask[i];
    }
    write_mrc(encoded, a.output);

    Report rep;
    rep.add("command", "binarize");
    rep.add("input", a.input);
    rep.add("output", a.output);
    rep.add("threshold", a.threshold);
    rep.add("foreground", fg);
    rep.add("background", mask.size() - fg);
    rep.print();
    return 0;
}

struct ResizeArgs {
    std::string input;
    std::string output;
    std::vector<std::size_t> dims;
    std::string method = "trilinear";
};

int cmd_resize(const ResizeArgs& a) {
    const Volume3D input = read_mrc(a.input);
    const Dims3 target{a.dims[0], a.dims[1], a.dims[2]};
    const Volume3D out = a.method == "nearest" ? resize_nearest(input, target)
                                               : resize_trilinear(input, target);
    write_mrc(out, a.output);

    Report rep;
    rep.add("command", "resize");
    rep.add("input", a.input);
    rep.add("output", a.output);
    rep.add("method", a.method);
    rep.add("dims_in", fmt_dims(input.dims()));
    rep.add("dims_out", fmt_dims(target));
    rep.print();
    return 0;
}

struct MetricsArgs {
    std::string pred;
    std::string gt;
};

int cmd_metrics(const MetricsArgs& a) {
    const Volume3D pred_vol = read_mrc(a.pred);
    const Volume3D gt_vol = read_mrc(a.gt);
    const SegmentationMask pred = mask_from_volume(pred_vol, a.pred);
    const SegmentationMask gt = mask_from_volume(gt_vol, a.gt);

    Report rep;
    rep.add("command", "metrics");
    rep.add("pred", a.pred);
    rep.add("gt", a.gt);
    rep.add("voxels", pred.size());
    rep.add("dice", dice(pred, gt));
    rep.add("miou", miou(pred, gt));
    rep.add("iou_foreground", iou(pred, gt, true));
    rep.add("iou_background", iou(pred, gt, false));
    rep.print();
    return 0;
}

struct BenchArgs {
    std::size_t dims = 32;
    std::size_t reps = 3;
    std::string method = "all";
    std::size_t batch = 0;
    unsigned workers = 1;
    std::uint64_t seed = 20240816;
};

int cmd_bench(const BenchArgs& a) {
    const Dims3 dims{a.dims, a.dims, a.dims};
    const Volume3D vol = synthesize_noise(NoiseModel{NoiseKind::gaussian, 1.0, a.seed}, dims);
    BilateralParams params;

    Report rep;
    rep.add("command", "bench");
    rep.add("dims", fmt_dims(dims));
    rep.add("reps", a.reps);

    auto run = [&](const char* name, auto&& fn) {
        double total = 0.0;
        for (std::size_t i = 0; i < a.reps; ++i) {
            const auto t0 = std::chrono::steady_clock::now();
            fn();
            const double ms = elapsed_ms(t0);
            total += ms;
            rep.add(std::string("bench_") + name + "_ms_" + std::to_string(i), ms);
        }
        rep.add(std::string("bench_") + name + "_ms_mean",
                total / static_cast<double>(a.reps));
    };

    if (a.method == "all" || a.method == "fft") {
        run("fft", [&] { (void)idft3(dft3(vol)); });
    }
    if (a.method == "all" || a.method == "bf") {
        run("bf", [&] { (void)bilateral_filter(vol, params); });
    }
    if (a.method == "all" || a.method == "ibf") {
        run("ibf", [&] { (void)improved_bilateral_filter(vol, params); });
    }

    if (a.batch > 0) {
        std::vector<Volume3D> batch(a.batch);
        for (std::size_t i = 0; i < a.batch; ++i) {
            batch[i] = synthesize_noise(
                NoiseModel{NoiseKind::gaussian, 1.0, derive_stream_seed(a.seed, i)}, dims);
        }
        std::vector<Volume3D> out(a.batch);
        const auto t0 = std::chrono::steady_clock::now();
        parallel_for_index(a.batch, 1, [&](std::size_t i) {
            out[i] = improved_bilateral_filter(batch[i], params);
        });
        const double serial_ms = elapsed_ms(t0);
        rep.add("batch_volumes", a.batch);
        rep.add("batch_serial_ms", serial_ms);
        if (a.workers > 1) {
            const auto t1 = std::chrono::steady_clock::now();
            parallel_for_index(a.batch, a.workers, [&](std::size_t i) {
                out[i] = improved_bilateral_filter(batch[i], params);
            });
            const double parallel_ms = elapsed_ms(t1);
            rep.add("batch_workers", std::to_string(a.workers));
            rep.add("batch_parallel_ms", parallel_ms);
            rep.add("batch_speedup", serial_ms / parallel_ms);
        }
    }
    rep.print();
    return 0;
}

struct ConfigArgs {
    std::string out;
};

struct EffectiveConfig {
    double rho = 0.244;
    std::size_t n_sampled = 10;
    double sigma_d = 120.0;
    double sigma_r = 1.2;
    double eta = 0.85;
    double momentum = 0.999;
    std::array<double, 4> lambda{0.2, 0.2, 0.3, 0.3};
    std::uint64_t seed = 0;
    unsigned workers = 1;
    int window_radius = 1;
    std::string boundary = "clamp";
    std::string gradient = "sobel";
    double threshold = 300.0;
    std::string input;
    std::string output;
    std::string manifest;
};

int cmd_config(const ConfigArgs& a, const ConfigFile& cfg) {
    EffectiveConfig ec;
    const Merger merge(cfg);
    merge.apply(nullptr, "rho", ec.rho);
    merge.apply(nullptr, "n_sampled", ec.n_sampled);
    merge.apply(nullptr, "sigma_d", ec.sigma_d);
    merge.apply(nullptr, "sigma_r", ec.sigma_r);
    merge.apply(nullptr, "eta", ec.eta);
    merge.apply(nullptr, "momentum", ec.momentum);
    merge.apply(nullptr, "lambda", ec.lambda);
    merge.apply(nullptr, "seed", ec.seed);
    ec.workers = merge.resolve_workers(nullptr, ec.workers);
    merge.apply(nullptr, "window_radius", ec.window_radius);
    merge.apply(nullptr, "boundary", ec.boundary);
    merge.apply(nullptr, "gradient", ec.gradient);
    merge.apply(nullptr, "threshold", ec.threshold);
    merge.apply(nullptr, "input", ec.input);
    merge.apply(nullptr, "output", ec.output);
    merge.apply(nullptr, "manifest", ec.manifest);

    std::string text;
    auto put = [&text](const std::string& key, const std::string& value) {
        text += key + "=" + value + "\n";
    };
    put("rho", fmt_double(ec.rho));
    put("n_sampled", std::to_string(ec.n_sampled));
    put("sigma_d", fmt_double(ec.sigma_d));
    put("sigma_r", fmt_double(ec.sigma_r));
    put("eta", fmt_double(ec.eta));
    put("momentum", fmt_double(ec.momentum));
    put("lambda", fmt_double(ec.lambda[0]) + "," + fmt_double(ec.lambda[1]) + "," +
                      fmt_double(ec.lambda[2]) + "," + fmt_double(ec.lambda[3]));
    put("seed", std::to_string(ec.seed));
    put("workers", std::to_string(ec.workers));
    put("window_radius", std::to_string(ec.window_radius));
    put("boundary", ec.boundary);
    put("gradient", ec.gradient);
    put("threshold", fmt_double(ec.threshold));
    put("input", ec.input);
    put("output", ec.output);
    put("manifest", ec.manifest);

    if (a.out.empty()) {
        std::fwrite(text.data(), 1, text.size(), stdout);
    } else {
        std::ofstream os(a.out, std::ios::trunc);
        if (!os) {
            throw IoError(a.out + ": cannot open for writing");
        }
        os << text;
        os.flush();
        if (!os) {
            throw IoError(a.out + ": write failed");
        }
    }
    return 0;
}

int exit_code_for(ErrorClass cls) {
    switch (cls) {
    case ErrorClass::invalid_input:
        return 3;
    case ErrorClass::format:
        return 4;
    case ErrorClass::unsupported_mode:
        return 5;
    case ErrorClass::corruption:
        return 6;
    case ErrorClass::io:
        return 7;
    case ErrorClass::numerical:
        return 8;
    }
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    std::setlocale(LC_ALL, "C");

    CLI::App app{"voxkit: volumetric noise modeling, denoising and adaptation toolkit"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "key=value config file (flags win)");
    app.set_version_flag("--version", std::string("voxkit ") + kVersion);

    // extract-noise --------------------------------------------------------
    ExtractNoiseArgs en;
    auto* sub_en = app.add_subcommand(
        "extract-noise", "estimate target noise variance from a manifest subset");
    auto* en_manifest = sub_en->add_option("manifest", en.manifest, "dataset manifest");
    auto* en_rho = sub_en->add_option("--rho", en.rho, "spectral keep fraction")
                       ->capture_default_str();
    auto* en_n = sub_en->add_option("--n-sampled", en.n_sampled, "subset size")
                     ->capture_default_str();
    auto* en_seed = sub_en->add_option("--seed", en.seed, "sampling seed")
                        ->capture_default_str();
    sub_en->add_option("--averaging", en.averaging, "per-volume | mean-residual")
        ->check(CLI::IsMember({"per-volume", "mean-residual"}))
        ->capture_default_str();
    sub_en->add_option("--write-residuals", en.residual_dir,
                       "directory for residual volumes");
    auto* en_workers = sub_en->add_option("--workers", en.workers, "worker threads");

    // denoise ---------------------------------------------------------------
    DenoiseArgs dn;
    auto* sub_dn = app.add_subcommand("denoise", "denoise one volume");
    auto* dn_input = sub_dn->add_option("input", dn.input, "input MRC volume");
    auto* dn_output = sub_dn->add_option("output", dn.output, "output MRC volume");
    sub_dn->add_option("--method", dn.method, "ngm | bf | ibf")
        ->required()
        ->check(CLI::IsMember({"ngm", "bf", "ibf"}));
    auto* dn_rho = sub_dn->add_option("--rho", dn.rho, "keep fraction (ngm)")
                       ->capture_default_str();
    auto* dn_sd = sub_dn->add_option("--sigma-d", dn.sigma_d, "domain kernel width")
                      ->capture_default_str();
    auto* dn_sr = sub_dn->add_option("--sigma-r", dn.sigma_r, "range kernel width")
                      ->capture_default_str();
    auto* dn_radius =
        sub_dn->add_option("--radius", dn.window_radius, "window radius in voxels")
            ->capture_default_str();
    auto* dn_boundary = sub_dn->add_option("--boundary", dn.boundary, "clamp | mirror")
                            ->check(CLI::IsMember({"clamp", "mirror"}))
                            ->capture_default_str();
    auto* dn_gradient =
        sub_dn->add_option("--gradient", dn.gradient, "sobel | laplacian-diff (ibf)")
            ->check(CLI::IsMember({"sobel", "laplacian-diff"}))
            ->capture_default_str();

    // inject -----------------------------------------------------------------
    InjectArgs in_args;
    auto* sub_in = app.add_subcommand("inject", "synthesize and inject noise");
    auto* in_input = sub_in->add_option("input", in_args.input, "input MRC volume");
    auto* in_output = sub_in->add_option("output", in_args.output, "output MRC volume");
    sub_in->add_option("--kind", in_args.kind, "gaussian | poisson | speckle")
        ->check(CLI::IsMember({"gaussian", "poisson", "speckle"}))
        ->capture_default_str();
    sub_in->add_option("--variance", in_args.variance, "noise variance sigma_t^2")
        ->capture_default_str();
    auto* in_seed = sub_in->add_option("--seed", in_args.seed, "noise seed")
                        ->capture_default_str();

    // pseudo-label ------------------------------------------------------------
    PseudoLabelArgs pl;
    auto* sub_pl = app.add_subcommand("pseudo-label",
                                      "threshold probabilities into pseudo-labels");
    auto* pl_input = sub_pl->add_option("input", pl.input, "probability MRC volume");
    auto* pl_output = sub_pl->add_option("output", pl.output, "label MRC volume");
    auto* pl_eta = sub_pl->add_option("--eta", pl.eta, "selection threshold")
                       ->capture_default_str();
    sub_pl->add_option("--rule", pl.rule, "symmetric | foreground-only")
        ->check(CLI::IsMember({"symmetric", "foreground-only"}))
        ->capture_default_str();

    // binarize ------------------------------------------------------------
    BinarizeArgs bz;
    auto* sub_bz = app.add_subcommand("binarize", "threshold a grey mask to binary");
    auto* bz_input = sub_bz->add_option("input", bz.input, "grey MRC volume");
    auto* bz_output = sub_bz->add_option("output", bz.output, "binary MRC volume");
    auto* bz_threshold = sub_bz->add_option("--threshold", bz.threshold,
                                            "foreground threshold")
                             ->capture_default_str();

    // resize ----------------------------------------------------------------
    ResizeArgs rs;
    auto* sub_rs = app.add_subcommand("resize", "resample a volume");
    auto* rs_input = sub_rs->add_option("input", rs.input, "input MRC volume");
    auto* rs_output = sub_rs->add_option("output", rs.output, "output MRC volume");
    sub_rs->add_option("--dims", rs.dims, "target depth,height,width")
        ->required()
        ->delimiter(',')
        ->expected(3);
    sub_rs->add_option("--method", rs.method, "trilinear | nearest")
        ->check(CLI::IsMember({"trilinear", "nearest"}))
        ->capture_default_str();

    // metrics ---------------------------------------------------------------
    MetricsArgs mt;
    auto* sub_mt = app.add_subcommand("metrics", "compare two binary masks");
    sub_mt->add_option("pred", mt.pred, "predicted mask MRC")->required();
    sub_mt->add_option("gt", mt.gt, "ground-truth mask MRC")->required();

    // bench -----------------------------------------------------------------
    BenchArgs bn;
    auto* sub_bn = app.add_subcommand("bench", "time the core kernels");
    sub_bn->add_option("--dims", bn.dims, "cubic volume extent")->capture_default_str();
    sub_bn->add_option("--reps", bn.reps, "repetitions per kernel")->capture_default_str();
    sub_bn->add_option("--method", bn.method, "all | fft | bf | ibf")
        ->check(CLI::IsMember({"all", "fft", "bf", "ibf"}))
        ->capture_default_str();
    sub_bn->add_option("--batch", bn.batch, "also time a batch of this many volumes")
        ->capture_default_str();
    auto* bn_workers = sub_bn->add_option("--workers", bn.workers, "worker threads");
    sub_bn->add_option("--seed", bn.seed, "volume synthesis seed")->capture_default_str();

    // config ----------------------------------------------------------------
    ConfigArgs cf;
    auto* sub_cf = app.add_subcommand("config", "print the effective configuration");
    sub_cf->add_option("--out", cf.out, "write to this file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        const ConfigFile cfg =
            config_path.empty() ? ConfigFile{} : load_config_file(config_path);
        const Merger merge(cfg);

        if (sub_en->parsed()) {
            merge.apply(en_manifest, "manifest", en.manifest);
            en.manifest = require_path(en.manifest, "manifest path");
            merge.apply(en_rho, "rho", en.rho);
            merge.apply(en_n, "n_sampled", en.n_sampled);
            merge.apply(en_seed, "seed", en.seed);
            en.workers = merge.resolve_workers(en_workers, en.workers);
            return cmd_extract_noise(en);
        }
        if (sub_dn->parsed()) {
            merge.apply(dn_input, "input", dn.input);
            merge.apply(dn_output, "output", dn.output);
            dn.input = require_path(dn.input, "input path");
            dn.output = require_path(dn.output, "output path");
            merge.apply(dn_rho, "rho", dn.rho);
            merge.apply(dn_sd, "sigma_d", dn.sigma_d);
            merge.apply(dn_sr, "sigma_r", dn.sigma_r);
            merge.apply(dn_radius, "window_radius", dn.window_radius);
            merge.apply(dn_boundary, "boundary", dn.boundary);
            merge.apply(dn_gradient, "gradient", dn.gradient);
            return cmd_denoise(dn);
        }
        if (sub_in->parsed()) {
            merge.apply(in_input, "input", in_args.input);
            merge.apply(in_output, "output", in_args.output);
            in_args.input = require_path(in_args.input, "input path");
            in_args.output = require_path(in_args.output, "output path");
            merge.apply(in_seed, "seed", in_args.seed);
            return cmd_inject(in_args);
        }
        if (sub_pl->parsed()) {
            merge.apply(pl_input, "input", pl.input);
            merge.apply(pl_output, "output", pl.output);
            pl.input = require_path(pl.input, "input path");
            pl.output = require_path(pl.output, "output path");
            merge.apply(pl_eta, "eta", pl.eta);
            return cmd_pseudo_label(pl);
        }
        if (sub_bz->parsed()) {
            merge.apply(bz_input, "input", bz.input);
            merge.apply(bz_output, "output", bz.output);
            bz.input = require_path(bz.input, "input path");
            bz.output = require_path(bz.output, "output path");
            merge.apply(bz_threshold, "threshold", bz.threshold);
            return cmd_binarize(bz);
        }
        if (sub_rs->parsed()) {
            merge.apply(rs_input, "input", rs.input);
            merge.apply(rs_output, "output", rs.output);
            rs.input = require_path(rs.input, "input path");
            rs.output = require_path(rs.output, "output path");
            return cmd_resize(rs);
        }
        if (sub_mt->parsed()) {
            return cmd_metrics(mt);
        }
        if (sub_bn->parsed()) {
            bn.workers = merge.resolve_workers(bn_workers, bn.workers);
            return cmd_bench(bn);
        }
        if (sub_cf->parsed()) {
            return cmd_config(cf, cfg);
        }
        std::fprintf(stderr, "voxkit: no subcommand selected\n");
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "voxkit: error: %s\n", e.what());
        return exit_code_for(e.error_class());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "voxkit: internal error: %s\n", e.what());
        return 1;
    }
}
