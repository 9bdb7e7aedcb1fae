#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "nlss/noise.hpp"
#include "nlss/pipeline.hpp"

namespace nlss {

/// One named denoiser entry in an experiment. `identity` marks a pass-through
/// method (the noisy input is scored directly). `fixed_sigma < 0` means the
/// input noise level is taken from the synthetic corruption (or estimated for
/// paired data); a nonnegative value pins it, which is how low/medium/high
/// denoising modes are expressed.
struct MethodSpec {
    std::string name;
    bool identity = false;
    bool auto_color = true;  // opponent + luminance when the item has 3 channels
    double fixed_sigma = -1.0;
    DenoiseConfig cfg;
};

struct ExperimentConfig {
    enum class Kind { image2d, volume3d };
    enum class Mode { synthetic, paired };

    std::string dataset_path;
    Kind kind = Kind::image2d;
    Mode mode = Mode::synthetic;

    NoiseKind noise_kind = NoiseKind::awgn;
    std::vector<double> sigmas;        // absolute intensity units
    std::vector<double> sigmas_pct;    // percent of each item's peak
    bool clip_noisy = false;

    std::vector<MethodSpec> methods;
    bool metric_sam = false;
    bool metric_ergas = false;

    std::string output_dir = "report_out";
    bool save_outputs = false;
    std::uint64_t seed = 0;
    int workers = 1;
};

/// Minimal TOML reader covering what experiment configs use: comments,
/// [table] / [table.sub] headers, and key = string | number | bool | array
/// of scalars. Throws std::runtime_error with a line number on bad input.
namespace toml {

using Value = std::variant<std::string, double, std::int64_t, bool,
                           std::vector<std::variant<std::string, double, std::int64_t, bool>>>;
using Table = std::map<std::string, Value>;

std::map<std::string, Table> parse_file(const std::string& path);
std::map<std::string, Table> parse_text(const std::string& text);

}  // namespace toml

/// Loads and validates an experiment description (see README for the schema).
ExperimentConfig load_experiment_config(const std::string& path);

}  // namespace nlss
