#ifndef SPLITGS_EVAL_HPP
#define SPLITGS_EVAL_HPP

#include "splitgs/common.hpp"
#include "splitgs/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace splitgs {

/// PSNR reported for identical images.
inline constexpr double kPsnrCap = 99.0;

template <typename T>
inline void require_same_shape(const Image<T>& a, const Image<T>& b, const char* what) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(what) + ": " + shape_str(a.height, a.width) + "x" + std::to_string(a.channels) +
                         " vs " + shape_str(b.height, b.width) + "x" + std::to_string(b.channels));
    }
}

template <typename T>
double mse(const Image<T>& a, const Image<T>& b) {
    require_same_shape(a, b, "mse");
    double acc = 0.0;
    for (std::size_t k = 0; k < a.data.size(); ++k) {
        const double d = double(a.data[k]) - double(b.data[k]);
        acc += d * d;
    }
    return a.data.empty() ? 0.0 : acc / double(a.data.size());
}

inline double psnr_from_mse(double m) {
    if (!(m > 0.0)) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / m));
}

/// 10 log10(1 / MSE) for [0,1] images, capped at 99 dB.
template <typename T>
double psnr(const Image<T>& a, const Image<T>& b) {
    return psnr_from_mse(mse(a, b));
}

/// Mean SSIM over channels with an 11x11 Gaussian window (sigma 1.5), valid positions only.
template <typename T>
double ssim(const Image<T>& a, const Image<T>& b) {
    require_same_shape(a, b, "ssim");
    constexpr int kWin = 11;
    constexpr double kSigma = 1.5;
    constexpr double C1 = 0.01 * 0.01;
    constexpr double C2 = 0.03 * 0.03;
    if (a.height < kWin || a.width < kWin) {
        throw ShapeError("ssim: image " + shape_str(a.height, a.width) + " smaller than the 11x11 window");
    }
    std::vector<double> w(kWin);
    double sum = 0.0;
    for (int i = 0; i < kWin; ++i) {
        const double d = i - kWin / 2;
        w[i] = std::exp(-0.5 * d * d / (kSigma * kSigma));
        sum += w[i];
    }
    for (auto& v : w) v /= sum;

    const int H = a.height, W = a.width, C = a.channels;
    const int oh = H - kWin + 1, ow = W - kWin + 1;
    double total = 0.0;
    for (int c = 0; c < C; ++c) {
        // Separable filtering of x, y, x^2, y^2, xy: horizontal pass then vertical pass.
        std::vector<std::array<double, 5>> horiz(static_cast<std::size_t>(H) * ow);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < ow; ++x) {
                std::array<double, 5> acc{};
                for (int k = 0; k < kWin; ++k) {
                    const double va = a.at(y, x + k, c), vb = b.at(y, x + k, c);
                    acc[0] += w[k] * va;
                    acc[1] += w[k] * vb;
                    acc[2] += w[k] * va * va;
                    acc[3] += w[k] * vb * vb;
                    acc[4] += w[k] * va * vb;
                }
                horiz[static_cast<std::size_t>(y) * ow + x] = acc;
            }
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                std::array<double, 5> m{};
                for (int k = 0; k < kWin; ++k)
                    for (int q = 0; q < 5; ++q) m[q] += w[k] * horiz[static_cast<std::size_t>(y + k) * ow + x][q];
                const double va = m[2] - m[0] * m[0];
                const double vb = m[3] - m[1] * m[1];
                const double cov = m[4] - m[0] * m[1];
                total += ((2 * m[0] * m[1] + C1) * (2 * cov + C2)) /
                         ((m[0] * m[0] + m[1] * m[1] + C1) * (va + vb + C2));
            }
    }
    return total / (double(C) * oh * ow);
}

struct MaskedMetrics {
    double psnr = 0.0;
    double ssim = 0.0;
};

/// Metrics over the foreground: pixels outside the mask are zeroed in both images, which are
/// then cropped to the mask's bounding box (grown to the SSIM window where the image allows).
template <typename T>
MaskedMetrics masked_metrics(const Image<T>& a, const Image<T>& b, const Mask& mask) {
    require_same_shape(a, b, "masked_metrics");
    if (mask.height != a.height || mask.width != a.width) {
        throw ShapeError("masked_metrics: mask " + shape_str(mask.height, mask.width) + " vs image " +
                         shape_str(a.height, a.width));
    }
    int y0 = mask.height, y1 = -1, x0 = mask.width, x1 = -1;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(y, x)) {
                y0 = std::min(y0, y);
                y1 = std::max(y1, y);
                x0 = std::min(x0, x);
                x1 = std::max(x1, x);
            }
    if (y1 < 0) throw PreconditionError("masked_metrics: empty mask");

    auto crop = [&](const Image<T>& img, int cy0, int cy1, int cx0, int cx1) {
        Image<T> out(cy1 - cy0 + 1, cx1 - cx0 + 1, img.channels);
        for (int y = cy0; y <= cy1; ++y)
            for (int x = cx0; x <= cx1; ++x)
                for (int c = 0; c < img.channels; ++c)
                    out.at(y - cy0, x - cx0, c) = mask.at(y, x) ? img.at(y, x, c) : T(0);
        return out;
    };
    MaskedMetrics m;
    m.psnr = psnr(crop(a, y0, y1, x0, x1), crop(b, y0, y1, x0, x1));

    constexpr int kWin = 11;
    auto grow = [](int& lo, int& hi, int limit) {
        while (hi - lo + 1 < kWin && (lo > 0 || hi < limit - 1)) {
            if (hi < limit - 1) ++hi;
            if (hi - lo + 1 < kWin && lo > 0) --lo;
        }
    };
    int sy0 = y0, sy1 = y1, sx0 = x0, sx1 = x1;
    grow(sy0, sy1, a.height);
    grow(sx0, sx1, a.width);
    m.ssim = (sy1 - sy0 + 1 >= kWin && sx1 - sx0 + 1 >= kWin)
                 ? ssim(crop(a, sy0, sy1, sx0, sx1), crop(b, sy0, sy1, sx0, sx1))
                 : std::numeric_limits<double>::quiet_NaN();
    return m;
}

/// Intersection over union of two binary masks.
inline double mask_iou(const Mask& a, const Mask& b) {
    if (a.height != b.height || a.width != b.width) throw ShapeError("mask_iou: mask sizes differ");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        inter += a.data[i] && b.data[i];
        uni += a.data[i] || b.data[i];
    }
    return uni == 0 ? 1.0 : double(inter) / double(uni);
}

/// Mask of alpha > threshold.
template <typename T>
Mask threshold_alpha(const Image<T>& alpha, double threshold = 0.5) {
    Mask m(alpha.height, alpha.width);
    for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = double(alpha.data[i]) > threshold ? 1 : 0;
    return m;
}

} // namespace splitgs

#endif // SPLITGS_EVAL_HPP
