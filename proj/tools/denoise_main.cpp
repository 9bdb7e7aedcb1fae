#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <iostream>
#include <string>

#include "nlss/config.hpp"
#include "nlss/experiment.hpp"
#include "nlss/image_io.hpp"
#include "nlss/metrics.hpp"
#include "nlss/noise.hpp"
#include "nlss/pipeline.hpp"
#include "nlss/synth.hpp"

namespace {

bool is_volume_path(const std::string& path) {
    return path.size() >= 4 && path.compare(path.size() - 4, 4, ".vol") == 0;
}

struct LoadedInput {
    nlss::DenseTensor tensor;
    double peak = 255.0;
    bool volume = false;
};

LoadedInput load_input(const std::string& path) {
    LoadedInput in;
    if (is_volume_path(path)) {
        nlss::Volume vol = nlss::load_volume(path);
        in.tensor = std::move(vol.tensor);
        in.peak = vol.peak;
        in.volume = true;
    } else {
        in.tensor = nlss::load_image(path);
        in.peak = 255.0;
    }
    return in;
}

void save_output(const nlss::DenseTensor& t, double peak, const std::string& path) {
    if (is_volume_path(path))
        nlss::save_volume(t, peak, path);
    else
        nlss::save_image(t, path);
}

bool parse_size(const std::string& text, std::size_t& h, std::size_t& w) {
    const auto x = text.find('x');
    if (x == std::string::npos) return false;
    try {
        h = std::stoul(text.substr(0, x));
        w = std::stoul(text.substr(x + 1));
    } catch (const std::exception&) {
        return false;
    }
    return h > 0 && w > 0;
}

int cmd_run(const std::string& config_path, std::int64_t seed, int workers, bool clip) {
    nlss::ExperimentConfig cfg;
    try {
        cfg = nlss::load_experiment_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (workers > 0) cfg.workers = workers;
    if (clip) cfg.clip_noisy = true;

    try {
        nlss::MetricReport report = nlss::run_experiment(cfg);
        std::cout << "wrote " << cfg.output_dir << "/report.csv and report.json ("
                  << report.rows.size() << " rows)\n";
        for (const auto& a : report.best)
            std::cout << "best " << a.method << ": sigma=" << nlss::format_metric(a.sigma)
                      << " psnr=" << nlss::format_metric(a.psnr)
                      << " ssim=" << nlss::format_metric(a.ssim) << "\n";
        if (report.any_failed) {
            std::cerr << "some items failed; see the report for details\n";
            return 1;
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_one(const std::string& in_path, const std::string& out_path, double sigma,
            double sigma_pct, const std::string& method, double lambda, std::size_t patch,
            std::size_t group_size, std::size_t radius, std::size_t stride, bool rician,
            int workers, bool clip) {
    LoadedInput in = load_input(in_path);

    double sigma_abs = sigma;
    if (sigma_pct > 0.0) sigma_abs = sigma_pct / 100.0 * in.peak;
    if (sigma_abs <= 0.0) {
        sigma_abs = nlss::estimate_sigma_mad(in.tensor);
        std::cout << "estimated sigma: " << nlss::format_metric(sigma_abs) << "\n";
        if (sigma_abs <= 0.0) {
            std::cerr << "error: estimated noise level is zero; pass --sigma\n";
            return 1;
        }
    }

    const std::size_t channels = in.tensor.order() == 3 ? in.tensor.extent(3) : 1;
    nlss::DenoiseConfig cfg = in.volume ? nlss::DenoiseConfig::volume3d_defaults()
                                        : nlss::DenoiseConfig::image2d_defaults(channels);
    if (method == "msvd") cfg.filter.family = nlss::FilterFamily::msvd;
    else if (method == "hosvd4d") cfg.filter.family = nlss::FilterFamily::hosvd4d;
    else {
        std::cerr << "error: unknown method '" << method << "'\n";
        return 2;
    }
    if (patch > 0) cfg.grouping.patch_h = cfg.grouping.patch_w = patch;
    if (group_size > 0) cfg.grouping.group_size = group_size;
    if (radius > 0) cfg.grouping.search_radius = radius;
    if (stride > 0) cfg.grouping.ref_stride = stride;
    if (lambda > 0.0) cfg.filter.lambda = lambda;
    cfg.filter.sigma = sigma_abs;
    cfg.peak = in.peak;
    cfg.clip_output = clip;
    cfg.workers = workers > 0 ? workers : 1;

    try {
        const auto t0 = std::chrono::steady_clock::now();
        nlss::DenseTensor out = rician ? nlss::denoise_rician(in.tensor, sigma_abs, cfg)
                                       : nlss::denoise(in.tensor, cfg);
        const auto t1 = std::chrono::steady_clock::now();
        save_output(out, in.peak, out_path);
        std::cout << "denoised " << in_path << " -> " << out_path << " (sigma="
                  << nlss::format_metric(sigma_abs) << ", "
                  << nlss::format_metric(std::chrono::duration<double>(t1 - t0).count())
                  << " s)\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_metrics(const std::string& ref_path, const std::string& test_path) {
    try {
        LoadedInput ref = load_input(ref_path);
        LoadedInput test = load_input(test_path);

        std::cout << "psnr: " << nlss::format_metric(nlss::psnr(ref.tensor, test.tensor, ref.peak))
                  << "\n";
        nlss::MetricParams mp;
        mp.peak = ref.peak;
        std::cout << "ssim: " << nlss::format_metric(nlss::ssim(ref.tensor, test.tensor, mp))
                  << "\n";
        if (ref.volume)
            std::cout << "psnr_foreground: "
                      << nlss::format_metric(
                             nlss::psnr_foreground(ref.tensor, test.tensor, ref.peak))
                      << "\n";
        if (ref.tensor.order() == 3 && ref.tensor.extent(3) >= 2) {
            std::cout << "sam: " << nlss::format_metric(nlss::sam(ref.tensor, test.tensor))
                      << "\n";
            std::cout << "ergas: "
                      << nlss::format_metric(nlss::ergas(ref.tensor, test.tensor, mp)) << "\n";
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_synth(const std::string& kind, const std::string& size, std::size_t channels,
              const std::string& out_path, std::int64_t seed) {
    std::size_t h = 0, w = 0;
    if (!parse_size(size, h, w)) {
        std::cerr << "error: --size must look like 128x128\n";
        return 2;
    }
    try {
        nlss::DenseTensor img = nlss::make_synthetic(nlss::parse_synth_kind(kind), h, w, channels,
                                                     seed >= 0 ? static_cast<std::uint64_t>(seed)
                                                               : 0);
        nlss::save_image(img, out_path);
        std::cout << "wrote " << out_path << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Patch-based nonlocal image denoising benchmark"};
    app.require_subcommand(1);
    app.fallthrough();

    std::int64_t seed = -1;
    int workers = 0;
    bool clip = false;
    app.add_option("--seed", seed, "Override the RNG seed");
    app.add_option("--workers", workers, "Worker thread count");
    app.add_flag("--clip", clip, "Clip intensities to [0, peak]");

    auto* run = app.add_subcommand("run", "Run an experiment described by a TOML config");
    std::string config_path;
    run->add_option("config", config_path, "Experiment config file")->required();

    auto* one = app.add_subcommand("one", "Denoise a single image or volume");
    std::string in_path, out_path, method = "msvd";
    double sigma = 0.0, sigma_pct = 0.0, lambda = 0.0;
    std::size_t patch = 0, group_size = 0, radius = 0, stride = 0;
    bool rician = false;
    one->add_option("--in", in_path, "Input .png/.pgm/.vol")->required();
    one->add_option("--out", out_path, "Output path")->required();
    one->add_option("--sigma", sigma, "Noise std in intensity units (omit to estimate)");
    one->add_option("--sigma-pct", sigma_pct, "Noise std as percent of the peak intensity");
    one->add_option("--method", method, "msvd | hosvd4d");
    one->add_option("--lambda", lambda, "Hard-threshold multiplier");
    one->add_option("--patch", patch, "Patch side length");
    one->add_option("--group-size", group_size, "Similar patches per group (K)");
    one->add_option("--radius", radius, "Search window half-width");
    one->add_option("--stride", stride, "Reference grid stride");
    one->add_flag("--rician", rician, "Treat input as Rician magnitude data");

    auto* metrics = app.add_subcommand("metrics", "Compare two images or volumes");
    std::string ref_path, test_path;
    metrics->add_option("--ref", ref_path, "Reference image/volume")->required();
    metrics->add_option("--test", test_path, "Image/volume under test")->required();

    auto* synth = app.add_subcommand("synth", "Generate a synthetic test image");
    std::string kind = "piecewise", size = "128x128", synth_out;
    std::size_t channels = 1;
    synth->add_option("--kind", kind, "flat | piecewise | gradient");
    synth->add_option("--size", size, "HxW");
    synth->add_option("--channels", channels, "1 or 3");
    synth->add_option("--out", synth_out, "Output image path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (run->parsed()) return cmd_run(config_path, seed, workers, clip);
    if (one->parsed())
        return cmd_one(in_path, out_path, sigma, sigma_pct, method, lambda, patch, group_size,
                       radius, stride, rician, workers, clip);
    if (metrics->parsed()) return cmd_metrics(ref_path, test_path);
    if (synth->parsed()) return cmd_synth(kind, size, channels, synth_out, seed);
    return 2;
}
