#include "evsr/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace evsr {

double charbonnier(const Tensor &pred, const Tensor &target, double eps2) {
    if (!pred.same_shape(target))
        throw std::invalid_argument("charbonnier: shapes " + pred.shape_string() + " and " +
                                    target.shape_string() + " differ");
    double sum = 0.0;
    for (std::int64_t i = 0; i < pred.numel(); ++i) {
        const double d = static_cast<double>(pred[i]) - target[i];
        sum += std::sqrt(d * d + eps2);
    }
    return sum / static_cast<double>(pred.numel());
}

Tensor luma(const Tensor &frame) {
    if (frame.rank() != 3 || frame.extent(0) != 3)
        throw std::invalid_argument("luma: frame must be (3,H,W), got " + frame.shape_string());
    const int h = frame.extent(1), w = frame.extent(2);
    Tensor y({h, w});
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            y.at(i, j) = static_cast<float>(0.299 * frame.at(0, i, j) + 0.587 * frame.at(1, i, j) +
                                            0.114 * frame.at(2, i, j));
    return y;
}

double psnr_y(const Tensor &pred, const Tensor &target) {
    if (!pred.same_shape(target))
        throw std::invalid_argument("psnr: shapes " + pred.shape_string() + " and " + target.shape_string() +
                                    " differ");
    Tensor yp = luma(pred), yt = luma(target);
    double mse = 0.0;
    for (std::int64_t i = 0; i < yp.numel(); ++i) {
        const double d = static_cast<double>(yp[i]) - yt[i];
        mse += d * d;
    }
    mse /= static_cast<double>(yp.numel());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

namespace {

std::vector<double> gaussian_taps(int radius, double sigma) {
    std::vector<double> taps(static_cast<size_t>(2 * radius + 1));
    for (int i = -radius; i <= radius; ++i)
        taps[static_cast<size_t>(i + radius)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    return taps;
}

} // namespace

double ssim_y(const Tensor &pred, const Tensor &target) {
    if (!pred.same_shape(target))
        throw std::invalid_argument("ssim: shapes " + pred.shape_string() + " and " + target.shape_string() +
                                    " differ");
    Tensor yp = luma(pred), yt = luma(target);
    const int h = yp.extent(0), w = yp.extent(1);

    constexpr int radius = 5; // 11x11 window
    constexpr double sigma = 1.5;
    constexpr double c1 = (0.01 * 1.0) * (0.01 * 1.0);
    constexpr double c2 = (0.03 * 1.0) * (0.03 * 1.0);
    const std::vector<double> taps = gaussian_taps(radius, sigma);

    double total = 0.0;
    for (int cy = 0; cy < h; ++cy)
        for (int cx = 0; cx < w; ++cx) {
            double wsum = 0.0, mu_p = 0.0, mu_t = 0.0;
            for (int dy = -radius; dy <= radius; ++dy) {
                const int y = cy + dy;
                if (y < 0 || y >= h) continue;
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int x = cx + dx;
                    if (x < 0 || x >= w) continue;
                    const double wt = taps[static_cast<size_t>(dy + radius)] * taps[static_cast<size_t>(dx + radius)];
                    wsum += wt;
                    mu_p += wt * yp.at(y, x);
                    mu_t += wt * yt.at(y, x);
                }
            }
            mu_p /= wsum;
            mu_t /= wsum;
            double var_p = 0.0, var_t = 0.0, cov = 0.0;
            for (int dy = -radius; dy <= radius; ++dy) {
                const int y = cy + dy;
                if (y < 0 || y >= h) continue;
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int x = cx + dx;
                    if (x < 0 || x >= w) continue;
                    const double wt = taps[static_cast<size_t>(dy + radius)] * taps[static_cast<size_t>(dx + radius)];
                    const double dp = yp.at(y, x) - mu_p, dt = yt.at(y, x) - mu_t;
                    var_p += wt * dp * dp;
                    var_t += wt * dt * dt;
                    cov += wt * dp * dt;
                }
            }
            var_p /= wsum;
            var_t /= wsum;
            cov /= wsum;
            total += ((2.0 * mu_p * mu_t + c1) * (2.0 * cov + c2)) /
                     ((mu_p * mu_p + mu_t * mu_t + c1) * (var_p + var_t + c2));
        }
    return total / (static_cast<double>(h) * w);
}

} // namespace evsr
