#include "nlss/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace nlss {

namespace {

void check_same_shape(const DenseTensor& x, const DenseTensor& y) {
    if (!x.same_shape(y)) throw std::invalid_argument("metric inputs must have the same shape");
}

double mse_over(const double* a, const double* b, const std::size_t* idx, std::size_t n) {
    double sum = 0.0;
    if (idx) {
        for (std::size_t i = 0; i < n; ++i) {
            double d = a[idx[i]] - b[idx[i]];
            sum += d * d;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            double d = a[i] - b[i];
            sum += d * d;
        }
    }
    return sum / static_cast<double>(n);
}

double psnr_from_mse(double mse, double peak) {
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

// Separable Gaussian filtering of a plane, valid region only.
struct SsimFilter {
    std::vector<double> kernel;
    std::size_t window;

    SsimFilter(std::size_t win, double sigma) : window(win) {
        kernel.resize(win);
        const double half = (static_cast<double>(win) - 1.0) / 2.0;
        double sum = 0.0;
        for (std::size_t i = 0; i < win; ++i) {
            double d = static_cast<double>(i) - half;
            kernel[i] = std::exp(-d * d / (2.0 * sigma * sigma));
            sum += kernel[i];
        }
        for (double& v : kernel) v /= sum;
    }

    // in: h x w column-major; out: (h-win+1) x (w-win+1)
    std::vector<double> apply(const double* in, std::size_t h, std::size_t w) const {
        const std::size_t oh = h - window + 1;
        std::vector<double> tmp(oh * w);  // filtered along rows
        for (std::size_t c = 0; c < w; ++c) {
            const double* col = in + c * h;
            for (std::size_t r = 0; r < oh; ++r) {
                double acc = 0.0;
                for (std::size_t t = 0; t < window; ++t) acc += kernel[t] * col[r + t];
                tmp[r + c * oh] = acc;
            }
        }
        const std::size_t ow = w - window + 1;
        std::vector<double> out(oh * ow);
        for (std::size_t c = 0; c < ow; ++c) {
            for (std::size_t r = 0; r < oh; ++r) {
                double acc = 0.0;
                for (std::size_t t = 0; t < window; ++t) acc += kernel[t] * tmp[r + (c + t) * oh];
                out[r + c * oh] = acc;
            }
        }
        return out;
    }
};

double ssim_plane(const double* x, const double* y, std::size_t h, std::size_t w,
                  const MetricParams& p) {
    const SsimFilter filter(p.ssim_window, p.ssim_sigma);
    const std::size_t n = h * w;

    std::vector<double> xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }

    auto mu_x = filter.apply(x, h, w);
    auto mu_y = filter.apply(y, h, w);
    auto m_xx = filter.apply(xx.data(), h, w);
    auto m_yy = filter.apply(yy.data(), h, w);
    auto m_xy = filter.apply(xy.data(), h, w);

    const double c1 = (p.k1 * p.peak) * (p.k1 * p.peak);
    const double c2 = (p.k2 * p.peak) * (p.k2 * p.peak);

    double total = 0.0;
    for (std::size_t i = 0; i < mu_x.size(); ++i) {
        double mx = mu_x[i], my = mu_y[i];
        double vx = m_xx[i] - mx * mx;
        double vy = m_yy[i] - my * my;
        double cv = m_xy[i] - mx * my;
        double value = ((2.0 * mx * my + c1) * (2.0 * cv + c2)) /
                       ((mx * mx + my * my + c1) * (vx + vy + c2));
        total += value;
    }
    return total / static_cast<double>(mu_x.size());
}

}  // namespace

double psnr(const DenseTensor& x, const DenseTensor& y, double peak) {
    check_same_shape(x, y);
    if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be positive");
    return psnr_from_mse(mse_over(x.data(), y.data(), nullptr, x.size()), peak);
}

double psnr_foreground(const DenseTensor& x, const DenseTensor& y, double peak) {
    check_same_shape(x, y);
    if (!(peak > 0.0)) throw std::invalid_argument("psnr_foreground: peak must be positive");

    const double threshold = 10.0 * peak / 255.0;
    std::vector<std::size_t> idx;
    idx.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] > threshold) idx.push_back(i);
    if (idx.empty()) throw std::domain_error("psnr_foreground: empty foreground");

    return psnr_from_mse(mse_over(x.data(), y.data(), idx.data(), idx.size()), peak);
}

double ssim(const DenseTensor& x, const DenseTensor& y, const MetricParams& params) {
    check_same_shape(x, y);
    if (params.ssim_window < 3 || params.ssim_window % 2 == 0)
        throw std::invalid_argument("ssim: window must be odd and >= 3");
    if (x.order() < 2 || x.order() > 3)
        throw std::invalid_argument("ssim: expects an order-2 or order-3 tensor");

    const std::size_t h = x.extent(1);
    const std::size_t w = x.extent(2);
    if (h < params.ssim_window || w < params.ssim_window)
        throw std::invalid_argument("ssim: image smaller than window");

    const std::size_t channels = x.order() == 3 ? x.extent(3) : 1;
    const std::size_t plane = h * w;
    double total = 0.0;
    for (std::size_t c = 0; c < channels; ++c)
        total += ssim_plane(x.data() + c * plane, y.data() + c * plane, h, w, params);
    return total / static_cast<double>(channels);
}

double sam(const DenseTensor& x, const DenseTensor& y, std::size_t* skipped) {
    check_same_shape(x, y);
    if (x.order() != 3 || x.extent(3) < 2)
        throw std::invalid_argument("sam: expects an order-3 tensor with >= 2 bands");

    const std::size_t h = x.extent(1);
    const std::size_t w = x.extent(2);
    const std::size_t bands = x.extent(3);
    const std::size_t plane = h * w;

    double total = 0.0;
    std::size_t used = 0, skip = 0;
    for (std::size_t i = 0; i < plane; ++i) {
        double dot = 0.0, nx = 0.0, ny = 0.0;
        for (std::size_t b = 0; b < bands; ++b) {
            double xv = x[i + b * plane];
            double yv = y[i + b * plane];
            dot += xv * yv;
            nx += xv * xv;
            ny += yv * yv;
        }
        if (nx == 0.0 || ny == 0.0) {
            ++skip;
            continue;
        }
        double cosine = dot / (std::sqrt(nx) * std::sqrt(ny));
        cosine = std::clamp(cosine, -1.0, 1.0);
        total += std::acos(cosine);
        ++used;
    }
    if (skipped) *skipped = skip;
    if (used == 0) throw std::domain_error("sam: every pixel has a zero-norm spectrum");
    return total / static_cast<double>(used);
}

double ergas(const DenseTensor& x, const DenseTensor& y, const MetricParams& params) {
    check_same_shape(x, y);
    if (!(params.ergas_scale_ratio > 0.0))
        throw std::invalid_argument("ergas: scale ratio must be positive");

    const std::size_t bands = x.order() >= 3 ? x.extent(3) : 1;
    const std::size_t plane = x.size() / bands;

    double acc = 0.0;
    for (std::size_t b = 0; b < bands; ++b) {
        const double* xb = x.data() + b * plane;
        const double* yb = y.data() + b * plane;
        double mean = 0.0, err = 0.0;
        for (std::size_t i = 0; i < plane; ++i) {
            mean += xb[i];
            double d = xb[i] - yb[i];
            err += d * d;
        }
        mean /= static_cast<double>(plane);
        if (mean == 0.0) throw std::domain_error("ergas: zero band mean in reference");
        double rmse = std::sqrt(err / static_cast<double>(plane));
        double ratio = rmse / mean;
        acc += ratio * ratio;
    }
    return 100.0 * params.ergas_scale_ratio * std::sqrt(acc / static_cast<double>(bands));
}

double psnr_frame_mean(const DenseTensor& x, const DenseTensor& y, double peak) {
    check_same_shape(x, y);
    if (x.order() != 3) throw std::invalid_argument("psnr_frame_mean: expects an order-3 tensor");
    const std::size_t frames = x.extent(3);
    const std::size_t plane = x.extent(1) * x.extent(2);
    double total = 0.0;
    for (std::size_t f = 0; f < frames; ++f)
        total += psnr_from_mse(mse_over(x.data() + f * plane, y.data() + f * plane, nullptr, plane),
                               peak);
    return total / static_cast<double>(frames);
}

double ssim_frame_mean(const DenseTensor& x, const DenseTensor& y, const MetricParams& params) {
    check_same_shape(x, y);
    if (x.order() != 3) throw std::invalid_argument("ssim_frame_mean: expects an order-3 tensor");
    const std::size_t frames = x.extent(3);
    const std::size_t h = x.extent(1), w = x.extent(2);
    const std::size_t plane = h * w;
    if (h < params.ssim_window || w < params.ssim_window)
        throw std::invalid_argument("ssim_frame_mean: frame smaller than window");
    double total = 0.0;
    for (std::size_t f = 0; f < frames; ++f)
        total += ssim_plane(x.data() + f * plane, y.data() + f * plane, h, w, params);
    return total / static_cast<double>(frames);
}

}  // namespace nlss
