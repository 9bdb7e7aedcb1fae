#include "nlss/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <exception>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace nlss {

namespace {

// Fixed chunking of the reference grid keeps the floating-point merge order
// independent of the worker count.
constexpr std::size_t kChunkRefs = 256;

struct Shape3 {
    std::size_t h, w, c;
};

Shape3 normalized_shape(const DenseTensor& image) {
    if (image.order() < 2 || image.order() > 3)
        throw std::invalid_argument("denoise expects an order-2 or order-3 tensor");
    return {image.extent(1), image.extent(2), image.order() == 3 ? image.extent(3) : 1};
}

double group_weight(WeightMode mode, std::size_t retained) {
    return mode == WeightMode::uniform ? 1.0
                                       : 1.0 / (1.0 + static_cast<double>(retained));
}

// Sub-box accumulator one chunk of reference patches scatters into.
struct CanvasDelta {
    std::size_t r0 = 0, r1 = 0, c0 = 0, c1 = 0, z0 = 0, z1 = 0;  // half-open
    std::vector<double> value;
    std::vector<double> weight;

    std::size_t bh() const { return r1 - r0; }
    std::size_t bw() const { return c1 - c0; }

    void scatter(const PatchGroup& group, double w) {
        const std::size_t ph = group.data.extent(1);
        const std::size_t pw = group.data.extent(2);
        const std::size_t pd = group.data.extent(3);
        const std::size_t k = group.data.extent(4);
        const double* src = group.data.data();
        const std::size_t box_h = bh(), box_w = bw();
        for (std::size_t i = 0; i < k; ++i) {
            const Coord& at = group.coords[i];
            for (std::size_t z = 0; z < pd; ++z) {
                for (std::size_t c = 0; c < pw; ++c) {
                    const double* col = src + ph * (c + pw * (z + pd * i));
                    std::size_t dst = (at.row - r0) +
                                      box_h * ((at.col + c - c0) + box_w * (at.depth + z - z0));
                    for (std::size_t r = 0; r < ph; ++r) {
                        value[dst + r] += w * col[r];
                        weight[dst + r] += w;
                    }
                }
            }
        }
    }
};

struct PipelineContext {
    const PatchSearcher* searcher;
    const std::vector<Coord>* refs;
    FilterParams filter;
    WeightMode weight_mode;
    Shape3 dims;
    GroupingParams grouping;
};

CanvasDelta process_chunk(const PipelineContext& ctx, std::size_t begin, std::size_t end) {
    const auto& refs = *ctx.refs;
    const GroupingParams& gp = ctx.grouping;
    const std::size_t radius = gp.search_radius;

    CanvasDelta delta;
    delta.r0 = ctx.dims.h;
    delta.c0 = ctx.dims.w;
    delta.z0 = ctx.dims.c;
    for (std::size_t i = begin; i < end; ++i) {
        const Coord& ref = refs[i];
        delta.r0 = std::min(delta.r0, ref.row > radius ? ref.row - radius : 0);
        delta.c0 = std::min(delta.c0, ref.col > radius ? ref.col - radius : 0);
        delta.z0 = std::min(delta.z0, ref.depth > radius ? ref.depth - radius : 0);
        delta.r1 = std::max(delta.r1, std::min(ctx.dims.h, ref.row + radius + gp.patch_h));
        delta.c1 = std::max(delta.c1, std::min(ctx.dims.w, ref.col + radius + gp.patch_w));
        delta.z1 = std::max(delta.z1, std::min(ctx.dims.c, ref.depth + radius + gp.patch_depth));
    }
    delta.value.assign((delta.r1 - delta.r0) * (delta.c1 - delta.c0) * (delta.z1 - delta.z0), 0.0);
    delta.weight.assign(delta.value.size(), 0.0);

    for (std::size_t i = begin; i < end; ++i) {
        PatchGroup group = ctx.searcher->search(refs[i]);
        FilterResult filtered = filter_group(group, ctx.filter);
        delta.scatter(filtered.group, group_weight(ctx.weight_mode, filtered.retained));
    }
    return delta;
}

void merge_delta(const CanvasDelta& delta, double* value, double* weight, const Shape3& dims) {
    const std::size_t plane = dims.h * dims.w;
    const std::size_t run = delta.bh();
    for (std::size_t z = delta.z0; z < delta.z1; ++z) {
        for (std::size_t c = delta.c0; c < delta.c1; ++c) {
            const std::size_t src =
                (c - delta.c0) * run + (z - delta.z0) * run * delta.bw();
            const std::size_t dst = delta.r0 + c * dims.h + z * plane;
            for (std::size_t r = 0; r < run; ++r) {
                value[dst + r] += delta.value[src + r];
                weight[dst + r] += delta.weight[src + r];
            }
        }
    }
}

}  // namespace

DenoiseConfig DenoiseConfig::image2d_defaults(std::size_t channels) {
    DenoiseConfig cfg;
    cfg.grouping.patch_h = 8;
    cfg.grouping.patch_w = 8;
    cfg.grouping.patch_depth = channels;
    cfg.grouping.group_size = 32;
    cfg.grouping.search_radius = 19;
    cfg.grouping.ref_stride = 4;
    cfg.grouping.distance_channel =
        channels == 3 ? DistanceChannel::luminance : DistanceChannel::all_channels;
    cfg.filter.family = FilterFamily::msvd;
    cfg.filter.color_mode = channels == 3 ? ColorMode::opponent : ColorMode::none;
    return cfg;
}

DenoiseConfig DenoiseConfig::volume3d_defaults() {
    DenoiseConfig cfg;
    cfg.grouping.patch_h = 4;
    cfg.grouping.patch_w = 4;
    cfg.grouping.patch_depth = 4;
    cfg.grouping.group_size = 16;
    cfg.grouping.search_radius = 5;
    cfg.grouping.ref_stride = 3;
    cfg.grouping.distance_channel = DistanceChannel::all_channels;
    cfg.filter.family = FilterFamily::msvd;
    cfg.filter.color_mode = ColorMode::none;
    return cfg;
}

AggregationCanvas::AggregationCanvas(const std::vector<std::size_t>& image_shape, WeightMode mode)
    : mode_(mode), original_shape_(image_shape) {
    if (image_shape.size() < 2 || image_shape.size() > 3)
        throw std::invalid_argument("AggregationCanvas expects a 2D or 3D shape");
    std::vector<std::size_t> shape3 = image_shape;
    if (shape3.size() == 2) shape3.push_back(1);
    value_ = DenseTensor(shape3);
    weight_ = DenseTensor(shape3);
}

void AggregationCanvas::scatter_group(const PatchGroup& filtered, std::size_t retained_count) {
    const double w = group_weight(mode_, retained_count);
    const std::size_t ph = filtered.data.extent(1);
    const std::size_t pw = filtered.data.extent(2);
    const std::size_t pd = filtered.data.extent(3);
    const std::size_t k = filtered.data.extent(4);
    const std::size_t h = value_.extent(1), wdt = value_.extent(2), ch = value_.extent(3);
    const std::size_t plane = h * wdt;
    const double* src = filtered.data.data();
    double* val = value_.data();
    double* wgt = weight_.data();

    for (std::size_t i = 0; i < k; ++i) {
        const Coord& at = filtered.coords[i];
        if (at.row + ph > h || at.col + pw > wdt || at.depth + pd > ch)
            throw std::invalid_argument("scatter_group: footprint out of bounds");
        for (std::size_t z = 0; z < pd; ++z) {
            for (std::size_t c = 0; c < pw; ++c) {
                const double* col = src + ph * (c + pw * (z + pd * i));
                std::size_t dst = at.row + (at.col + c) * h + (at.depth + z) * plane;
                for (std::size_t r = 0; r < ph; ++r) {
                    val[dst + r] += w * col[r];
                    wgt[dst + r] += w;
                }
            }
        }
    }
}

DenseTensor AggregationCanvas::finalize() const {
    DenseTensor out(value_.shape());
    const double* val = value_.data();
    const double* wgt = weight_.data();
    double* dst = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (wgt[i] <= 0.0)
            throw std::runtime_error("AggregationCanvas::finalize: uncovered pixel");
        dst[i] = val[i] / wgt[i];
    }
    if (original_shape_.size() == 2) return DenseTensor(original_shape_, out.values());
    return out;
}

DenseTensor denoise(const DenseTensor& image, const DenoiseConfig& cfg) {
    Shape3 dims = normalized_shape(image);
    if (!image.all_finite()) throw std::invalid_argument("denoise: input has non-finite values");
    if (!(cfg.filter.sigma > 0.0)) throw std::invalid_argument("denoise: sigma must be positive");
    if (cfg.filter.color_mode == ColorMode::opponent &&
        (dims.c != 3 || cfg.grouping.patch_depth != 3))
        throw std::invalid_argument("denoise: opponent color mode needs 3-channel data/patches");

    DenseTensor image3 = image.order() == 3
                             ? image
                             : DenseTensor({dims.h, dims.w, 1}, image.values());

    PatchSearcher searcher(image3, cfg.grouping);
    const std::vector<Coord> refs = reference_grid(image3.shape(), cfg.grouping);

    PipelineContext ctx{&searcher, &refs, cfg.filter, cfg.weight_mode, dims, cfg.grouping};

    const std::size_t nchunks = (refs.size() + kChunkRefs - 1) / kChunkRefs;
    const int workers = std::max(1, cfg.workers);
    const std::size_t window = std::max<std::size_t>(4, 2 * static_cast<std::size_t>(workers));

    DenseTensor value({dims.h, dims.w, dims.c});
    DenseTensor weight({dims.h, dims.w, dims.c});

    std::mutex mu;
    std::condition_variable slot_ready, space_free;
    std::vector<std::unique_ptr<CanvasDelta>> slots(nchunks);
    std::size_t merged = 0;
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    bool failed = false;

    auto worker_loop = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= nchunks) return;
            {
                std::unique_lock<std::mutex> lk(mu);
                space_free.wait(lk, [&] { return failed || i < merged + window; });
                if (failed) return;
            }
            try {
                auto delta = std::make_unique<CanvasDelta>(
                    process_chunk(ctx, i * kChunkRefs,
                                  std::min(refs.size(), (i + 1) * kChunkRefs)));
                std::lock_guard<std::mutex> lk(mu);
                slots[i] = std::move(delta);
                slot_ready.notify_all();
            } catch (...) {
                std::lock_guard<std::mutex> lk(mu);
                if (!error) error = std::current_exception();
                failed = true;
                slot_ready.notify_all();
                space_free.notify_all();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker_loop);

    // Merge strictly in chunk order so the result is worker-count independent.
    for (std::size_t i = 0; i < nchunks; ++i) {
        std::unique_ptr<CanvasDelta> delta;
        {
            std::unique_lock<std::mutex> lk(mu);
            slot_ready.wait(lk, [&] { return failed || slots[i] != nullptr; });
            if (failed) break;
            delta = std::move(slots[i]);
        }
        merge_delta(*delta, value.data(), weight.data(), dims);
        {
            std::lock_guard<std::mutex> lk(mu);
            merged = i + 1;
            space_free.notify_all();
        }
    }

    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);

    DenseTensor out({dims.h, dims.w, dims.c});
    for (std::size_t i = 0; i < out.size(); ++i) {
        double wgt = weight[i];
        if (wgt <= 0.0) throw std::runtime_error("denoise: internal error, uncovered pixel");
        out[i] = value[i] / wgt;
    }

    if (cfg.clip_output)
        for (double& v : out.values()) v = std::clamp(v, 0.0, cfg.peak);
    if (!out.all_finite()) throw std::runtime_error("denoise: internal error, non-finite output");

    if (image.order() == 2) return DenseTensor({dims.h, dims.w}, out.values());
    return out;
}

DenseTensor denoise_volume(const DenseTensor& volume, const DenoiseConfig& cfg) {
    if (volume.order() != 3)
        throw std::invalid_argument("denoise_volume: expects an order-3 tensor");
    return denoise(volume, cfg);
}

std::pair<DenseTensor, double> MagnitudeBiasCorrection::forward(const DenseTensor& noisy,
                                                                double sigma) const {
    return {noisy, sigma};
}

DenseTensor MagnitudeBiasCorrection::inverse(const DenseTensor& denoised, double sigma) const {
    DenseTensor out = denoised;
    const double floor2 = 2.0 * sigma * sigma;
    for (double& v : out.values()) v = std::sqrt(std::max(v * v - floor2, 0.0));
    return out;
}

DenseTensor denoise_rician(const DenseTensor& volume, double sigma, const DenoiseConfig& cfg,
                           const RicianStabilizer* stabilizer) {
    if (!(sigma > 0.0)) throw std::invalid_argument("denoise_rician: sigma must be positive");
    for (double v : volume.values())
        if (v < 0.0) throw std::invalid_argument("denoise_rician: input must be nonnegative");

    static const MagnitudeBiasCorrection default_stabilizer;
    const RicianStabilizer& st = stabilizer ? *stabilizer : default_stabilizer;

    auto [stabilized, sigma_vst] = st.forward(volume, sigma);
    DenoiseConfig gaussian_cfg = cfg;
    gaussian_cfg.filter.sigma = sigma_vst;
    DenseTensor denoised = denoise(stabilized, gaussian_cfg);
    DenseTensor out = st.inverse(denoised, sigma);
    for (double& v : out.values()) v = std::max(v, 0.0);
    return out;
}

}  // namespace nlss
