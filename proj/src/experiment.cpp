#include "nlss/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "nlss/image_io.hpp"
#include "nlss/metrics.hpp"
#include "nlss/noise.hpp"
#include "nlss/pipeline.hpp"

namespace fs = std::filesystem;

namespace nlss {

namespace {

struct Item {
    std::string name;
    DenseTensor clean;
    DenseTensor noisy;  // paired mode only
    double peak = 255.0;
    bool has_noisy = false;
};

bool is_image_file(const fs::path& p) {
    return p.extension() == ".png" || p.extension() == ".pgm";
}

bool is_volume_file(const fs::path& p) { return p.extension() == ".vol"; }

std::vector<fs::path> list_dataset(const std::string& root, ExperimentConfig::Kind kind) {
    fs::path base(root);
    if (!fs::exists(base)) throw std::runtime_error("dataset path does not exist: " + root);
    auto accepts = [&](const fs::path& p) {
        return kind == ExperimentConfig::Kind::image2d ? is_image_file(p) : is_volume_file(p);
    };
    std::vector<fs::path> files;
    if (fs::is_regular_file(base)) {
        if (!accepts(base)) throw std::runtime_error("unsupported dataset file: " + root);
        files.push_back(base);
    } else {
        for (const auto& entry : fs::directory_iterator(base))
            if (entry.is_regular_file() && accepts(entry.path())) files.push_back(entry.path());
        std::sort(files.begin(), files.end());
    }
    if (files.empty()) throw std::runtime_error("no dataset items under: " + root);
    return files;
}

DenseTensor load_any(const fs::path& path, ExperimentConfig::Kind kind, double& peak) {
    if (kind == ExperimentConfig::Kind::image2d) {
        peak = 255.0;
        return load_image(path.string());
    }
    Volume vol = load_volume(path.string());
    peak = vol.peak;
    return std::move(vol.tensor);
}

Item load_item(const fs::path& path, const ExperimentConfig& cfg) {
    Item item;
    item.name = path.filename().string();
    item.clean = load_any(path, cfg.kind, item.peak);
    if (cfg.mode == ExperimentConfig::Mode::paired) {
        fs::path noisy_path = fs::path(cfg.dataset_path) / "noisy" / path.filename();
        double ignored;
        item.noisy = load_any(noisy_path, cfg.kind, ignored);
        if (!item.noisy.same_shape(item.clean))
            throw std::runtime_error("paired shapes differ for item: " + item.name);
        item.has_noisy = true;
    }
    return item;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = seed ^ (a * 0x9E3779B97F4A7C15ULL) ^ (b * 0xC2B2AE3D27D4EB4FULL);
    x ^= x >> 33;
    x *= 0xFF51AFD7ED558CCDULL;
    x ^= x >> 33;
    return x;
}

// Per-item resolution of the "auto" choices a method leaves open.
DenoiseConfig resolve_config(const MethodSpec& spec, const ExperimentConfig& cfg,
                             const Item& item, int workers) {
    DenoiseConfig out = spec.cfg;
    const std::size_t channels = item.clean.order() == 3 ? item.clean.extent(3) : 1;

    if (cfg.kind == ExperimentConfig::Kind::image2d) {
        out.grouping.patch_depth = channels;
        if (spec.auto_color) {
            out.filter.color_mode = channels == 3 ? ColorMode::opponent : ColorMode::none;
            out.grouping.distance_channel =
                channels == 3 ? DistanceChannel::luminance : DistanceChannel::all_channels;
        }
    } else if (spec.auto_color) {
        out.filter.color_mode = ColorMode::none;
        out.grouping.distance_channel = DistanceChannel::all_channels;
    }
    out.peak = item.peak;
    out.workers = workers;
    return out;
}

struct Task {
    std::size_t item_index;
    std::size_t sigma_index;
};

void append_metrics(ReportRow& row, const ExperimentConfig& cfg, const Item& item,
                    const DenseTensor& denoised) {
    if (cfg.noise_kind == NoiseKind::rician)
        row.psnr = psnr_foreground(item.clean, denoised, item.peak);
    else
        row.psnr = psnr(item.clean, denoised, item.peak);

    MetricParams mp;
    mp.peak = item.peak;
    row.ssim = ssim(item.clean, denoised, mp);

    const bool multiband = item.clean.order() == 3 && item.clean.extent(3) >= 2;
    if (cfg.metric_sam && multiband) row.sam = sam(item.clean, denoised);
    if (cfg.metric_ergas) row.ergas = ergas(item.clean, denoised, mp);
}

void save_denoised(const ExperimentConfig& cfg, const Item& item, const ReportRow& row,
                   const DenseTensor& denoised) {
    fs::path dir = fs::path(cfg.output_dir) / "denoised";
    fs::create_directories(dir);
    std::ostringstream name;
    name << fs::path(item.name).stem().string() << "__" << row.method << "__"
         << format_metric(row.sigma);
    if (cfg.kind == ExperimentConfig::Kind::image2d) {
        name << fs::path(item.name).extension().string();
        save_image(denoised, (dir / name.str()).string());
    } else {
        name << ".vol";
        save_volume(denoised, item.peak, (dir / name.str()).string());
    }
}

}  // namespace

std::string format_metric(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(4);
    out << v;
    return out.str();
}

MetricReport run_experiment(const ExperimentConfig& cfg) {
    const std::string listing_root = cfg.mode == ExperimentConfig::Mode::paired
                                         ? (fs::path(cfg.dataset_path) / "clean").string()
                                         : cfg.dataset_path;
    const auto files = list_dataset(listing_root, cfg.kind);

    MetricReport report;
    std::mutex report_mu;

    // One unit of work = one (item, sigma) pair; methods share its noisy input.
    std::vector<Task> tasks;
    const std::size_t sigma_count =
        cfg.mode == ExperimentConfig::Mode::synthetic ? cfg.sigmas.size() + cfg.sigmas_pct.size()
                                                      : 1;
    for (std::size_t i = 0; i < files.size(); ++i)
        for (std::size_t s = 0; s < sigma_count; ++s) tasks.push_back({i, s});

    std::atomic<std::size_t> next{0};
    const int workers = std::max(1, cfg.workers);

    auto run_task = [&](const Task& task) {
        Item item;
        try {
            item = load_item(files[task.item_index], cfg);
        } catch (const std::exception& e) {
            ReportRow row;
            row.item = files[task.item_index].filename().string();
            row.method = "*";
            row.failed = true;
            row.error = e.what();
            std::lock_guard<std::mutex> lk(report_mu);
            report.rows.push_back(std::move(row));
            report.any_failed = true;
            return;
        }

        double sigma_abs = 0.0;
        DenseTensor noisy;
        if (cfg.mode == ExperimentConfig::Mode::synthetic) {
            if (task.sigma_index < cfg.sigmas.size())
                sigma_abs = cfg.sigmas[task.sigma_index];
            else
                sigma_abs =
                    cfg.sigmas_pct[task.sigma_index - cfg.sigmas.size()] / 100.0 * item.peak;

            NoiseSpec spec;
            spec.kind = cfg.noise_kind;
            spec.sigma = sigma_abs;
            spec.seed = mix_seed(cfg.seed, task.item_index + 1, task.sigma_index + 1);
            noisy = cfg.noise_kind == NoiseKind::awgn ? add_awgn(item.clean, spec)
                                                      : add_rician(item.clean, spec);
            if (cfg.clip_noisy)
                for (double& v : noisy.values()) v = std::clamp(v, 0.0, item.peak);
        } else {
            noisy = item.noisy;
        }

        for (const MethodSpec& method : cfg.methods) {
            ReportRow row;
            row.item = item.name;
            row.method = method.name;
            try {
                double sigma_use = method.fixed_sigma >= 0.0 ? method.fixed_sigma : sigma_abs;
                if (cfg.mode == ExperimentConfig::Mode::paired && method.fixed_sigma < 0.0)
                    sigma_use = estimate_sigma_mad(noisy);
                row.sigma = cfg.mode == ExperimentConfig::Mode::synthetic ? sigma_abs : sigma_use;

                DenseTensor denoised;
                const auto t0 = std::chrono::steady_clock::now();
                if (method.identity) {
                    denoised = noisy;
                } else {
                    DenoiseConfig dc = resolve_config(method, cfg, item, 1);
                    dc.filter.sigma = sigma_use;
                    denoised = cfg.noise_kind == NoiseKind::rician
                                   ? denoise_rician(noisy, sigma_use, dc)
                                   : denoise(noisy, dc);
                }
                const auto t1 = std::chrono::steady_clock::now();
                row.seconds = std::chrono::duration<double>(t1 - t0).count();
                append_metrics(row, cfg, item, denoised);
                if (cfg.save_outputs) save_denoised(cfg, item, row, denoised);
            } catch (const std::exception& e) {
                row.failed = true;
                row.error = e.what();
            }
            std::lock_guard<std::mutex> lk(report_mu);
            if (row.failed) report.any_failed = true;
            report.rows.push_back(std::move(row));
        }
    };

    if (workers == 1 || tasks.size() <= 1) {
        for (const Task& t : tasks) run_task(t);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t)
            pool.emplace_back([&] {
                while (true) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= tasks.size()) return;
                    run_task(tasks[i]);
                }
            });
        for (auto& t : pool) t.join();
    }

    std::sort(report.rows.begin(), report.rows.end(), [](const ReportRow& a, const ReportRow& b) {
        if (a.item != b.item) return a.item < b.item;
        if (a.method != b.method) return a.method < b.method;
        return a.sigma < b.sigma;
    });

    // Aggregate means per (method, sigma), in row order for reproducible sums.
    struct Key {
        std::string method;
        double sigma;
        bool operator<(const Key& o) const {
            if (method != o.method) return method < o.method;
            return sigma < o.sigma;
        }
    };
    std::map<Key, AggregateRow> agg;
    for (const ReportRow& row : report.rows) {
        if (row.failed) continue;
        AggregateRow& a = agg[{row.method, row.sigma}];
        a.method = row.method;
        a.sigma = row.sigma;
        ++a.count;
        a.psnr += row.psnr;
        a.ssim += row.ssim;
        a.seconds += row.seconds;
        if (row.sam) a.sam = a.sam.value_or(0.0) + *row.sam;
        if (row.ergas) a.ergas = a.ergas.value_or(0.0) + *row.ergas;
    }
    for (auto& [key, a] : agg) {
        const double n = static_cast<double>(a.count);
        a.psnr /= n;
        a.ssim /= n;
        a.seconds /= n;
        if (a.sam) a.sam = *a.sam / n;
        if (a.ergas) a.ergas = *a.ergas / n;
        report.aggregates.push_back(a);
    }

    // Best row per method: the noise-level setting with the highest mean PSNR.
    std::map<std::string, AggregateRow> best;
    for (const AggregateRow& a : report.aggregates) {
        auto it = best.find(a.method);
        if (it == best.end() || a.psnr > it->second.psnr) best[a.method] = a;
    }
    for (auto& [name, a] : best) report.best.push_back(a);

    fs::create_directories(cfg.output_dir);
    write_csv_report(report, (fs::path(cfg.output_dir) / "report.csv").string());
    write_json_report(cfg, report, (fs::path(cfg.output_dir) / "report.json").string());
    return report;
}

void write_csv_report(const MetricReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << "item,method,sigma,psnr,ssim,sam,ergas,seconds\n";
    for (const ReportRow& row : report.rows) {
        out << row.item << ',' << row.method << ',' << format_metric(row.sigma) << ',';
        if (!row.failed) {
            out << format_metric(row.psnr) << ',' << format_metric(row.ssim) << ',';
            out << (row.sam ? format_metric(*row.sam) : "") << ',';
            out << (row.ergas ? format_metric(*row.ergas) : "") << ',';
            out << format_metric(row.seconds);
        } else {
            out << ",,,,";
        }
        out << '\n';
    }
}

namespace {

nlohmann::json aggregate_to_json(const AggregateRow& a) {
    nlohmann::json j;
    j["method"] = a.method;
    j["sigma"] = a.sigma;
    j["count"] = a.count;
    j["psnr"] = format_metric(a.psnr);
    j["ssim"] = format_metric(a.ssim);
    if (a.sam) j["sam"] = format_metric(*a.sam);
    if (a.ergas) j["ergas"] = format_metric(*a.ergas);
    j["seconds"] = format_metric(a.seconds);
    return j;
}

}  // namespace

void write_json_report(const ExperimentConfig& cfg, const MetricReport& report,
                       const std::string& path) {
    nlohmann::json j;
    j["dataset"] = cfg.dataset_path;
    j["kind"] = cfg.kind == ExperimentConfig::Kind::image2d ? "image2d" : "volume3d";
    j["mode"] = cfg.mode == ExperimentConfig::Mode::synthetic ? "synthetic" : "paired";
    j["noise"] = cfg.noise_kind == NoiseKind::awgn ? "awgn" : "rician";
    j["psnr_variant"] = cfg.noise_kind == NoiseKind::rician ? "foreground" : "full";
    j["seed"] = cfg.seed;
    j["any_failed"] = report.any_failed;

    nlohmann::json rows = nlohmann::json::array();
    for (const ReportRow& row : report.rows) {
        nlohmann::json r;
        r["item"] = row.item;
        r["method"] = row.method;
        r["sigma"] = format_metric(row.sigma);
        if (row.failed) {
            r["error"] = row.error;
        } else {
            r["psnr"] = format_metric(row.psnr);
            r["ssim"] = format_metric(row.ssim);
            if (row.sam) r["sam"] = format_metric(*row.sam);
            if (row.ergas) r["ergas"] = format_metric(*row.ergas);
            r["seconds"] = format_metric(row.seconds);
        }
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);

    nlohmann::json aggs = nlohmann::json::array();
    for (const AggregateRow& a : report.aggregates) aggs.push_back(aggregate_to_json(a));
    j["aggregates"] = std::move(aggs);

    nlohmann::json bests = nlohmann::json::array();
    for (const AggregateRow& a : report.best) bests.push_back(aggregate_to_json(a));
    j["best"] = std::move(bests);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << j.dump(2) << '\n';
}

}  // namespace nlss
