#ifndef SPLITGS_LOSSES_HPP
#define SPLITGS_LOSSES_HPP

#include "splitgs/common.hpp"
#include "splitgs/image.hpp"

#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace splitgs {

enum class LossNorm { L1, L2 };

/// Scalar loss plus gradients with respect to the rendered colour and alpha.
template <typename T>
struct ImageLoss {
    double value = 0.0;
    Image<T> d_rgb;   // H x W x 3
    Image<T> d_alpha; // H x W x 1 (zero when the loss does not read alpha)
};

/// Named loss components and their weighted total.
struct LossReport {
    std::map<std::string, double> components;
    std::map<std::string, double> weights;

    void add(const std::string& name, double value, double weight = 1.0) {
        components[name] += value;
        weights[name] = weight;
    }
    double total() const {
        double t = 0.0;
        for (const auto& [k, v] : components) t += weights.at(k) * v;
        return t;
    }
};

namespace detail {

/// Per-element residual penalty and its derivative with respect to the prediction.
template <typename T>
inline double penalty(T pred, T target, LossNorm norm, T& d) {
    const T r = pred - target;
    if (norm == LossNorm::L2) {
        d = T(2) * r;
        return double(r) * double(r);
    }
    d = sign0(r);
    return std::abs(double(r));
}

template <typename T>
inline void require_shape(const Image<T>& a, int h, int w, int c, const char* what) {
    if (a.height != h || a.width != w || a.channels != c) {
        throw ShapeError(std::string(what) + ": expected " + shape_str(h, w) + "x" + std::to_string(c) +
                         ", got " + shape_str(a.height, a.width) + "x" + std::to_string(a.channels));
    }
}

} // namespace detail

/// Separable, normalised Gaussian blur with edge clamping.
template <typename T>
Image<T> gaussian_blur(const Image<T>& img, int radius, double sigma) {
    if (radius <= 0 || sigma <= 0.0) return img;
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += k[i + radius];
    }
    for (auto& v : k) v /= sum;
    const int H = img.height, W = img.width, C = img.channels;
    Image<T> tmp(H, W, C);
    Image<T> out(H, W, C);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < C; ++c) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i)
                    acc += k[i + radius] * double(img.at(y, std::clamp(x + i, 0, W - 1), c));
                tmp.at(y, x, c) = T(acc);
            }
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < C; ++c) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i)
                    acc += k[i + radius] * double(tmp.at(std::clamp(y + i, 0, H - 1), x, c));
                out.at(y, x, c) = T(acc);
            }
    return out;
}

/// Blur radius for an image width: 9 px at 1600 px, scaled linearly, at least 1.
inline int default_blur_radius(int width) {
    return std::max(1, static_cast<int>(std::lround(9.0 * width / 1600.0)));
}

/// Foreground blended loss. The render is premultiplied (rgb = alpha * I_f), so the
/// prediction composited over B is rgb + (1 - alpha) B; the target is M I* + (1 - M) B.
template <typename T>
ImageLoss<T> foreground_loss(const Image<T>& target, const Mask& mask, const Image<T>& rgb,
                             const Image<T>& alpha, const Vec3<T>& background, LossNorm norm = LossNorm::L1) {
    const int H = target.height, W = target.width;
    detail::require_shape(target, H, W, 3, "foreground_loss target");
    detail::require_shape(rgb, H, W, 3, "foreground_loss render");
    detail::require_shape(alpha, H, W, 1, "foreground_loss alpha");
    if (mask.height != H || mask.width != W) {
        throw ShapeError("foreground_loss: mask is " + shape_str(mask.height, mask.width) + ", image is " +
                         shape_str(H, W));
    }
    ImageLoss<T> out{0.0, Image<T>(H, W, 3), Image<T>(H, W, 1)};
    const double scale = 1.0 / (3.0 * H * W);
    for (std::size_t p = 0; p < target.pixels(); ++p) {
        const T m = mask.data[p] ? T(1) : T(0);
        const T a = alpha.data[p];
        T da = T(0);
        for (int c = 0; c < 3; ++c) {
            const T tgt = m * target.data[3 * p + c] + (T(1) - m) * background[c];
            const T pred = rgb.data[3 * p + c] + (T(1) - a) * background[c];
            T d;
            out.value += detail::penalty(pred, tgt, norm, d);
            const T g = T(d * scale);
            out.d_rgb.data[3 * p + c] = g;
            da -= g * background[c];
        }
        out.d_alpha.data[p] = da;
    }
    out.value *= scale;
    return out;
}

/// Target of the background loss: outside the mask the image itself, inside the mask the
/// blurred masked-out image, which bleeds background colour across the mask edge.
template <typename T>
Image<T> background_target(const Image<T>& target, const Mask& mask, int blur_radius, double blur_sigma) {
    const int H = target.height, W = target.width;
    detail::require_shape(target, H, W, 3, "background_target image");
    if (mask.height != H || mask.width != W) {
        throw ShapeError("background_target: mask is " + shape_str(mask.height, mask.width) + ", image is " +
                         shape_str(H, W));
    }
    Image<T> outside(H, W, 3);
    for (std::size_t p = 0; p < target.pixels(); ++p)
        for (int c = 0; c < 3; ++c) outside.data[3 * p + c] = mask.data[p] ? T(0) : target.data[3 * p + c];
    const Image<T> blurred = gaussian_blur(outside, blur_radius, blur_sigma);
    Image<T> out(H, W, 3);
    for (std::size_t p = 0; p < target.pixels(); ++p)
        for (int c = 0; c < 3; ++c) out.data[3 * p + c] = mask.data[p] ? blurred.data[3 * p + c] : outside.data[3 * p + c];
    return out;
}

/// Plain image reconstruction loss mean|I* - I| (or mean squared error).
template <typename T>
ImageLoss<T> panoptic_loss(const Image<T>& target, const Image<T>& rgb, LossNorm norm = LossNorm::L1) {
    const int H = target.height, W = target.width;
    detail::require_shape(target, H, W, 3, "panoptic_loss target");
    detail::require_shape(rgb, H, W, 3, "panoptic_loss render");
    ImageLoss<T> out{0.0, Image<T>(H, W, 3), Image<T>(H, W, 1)};
    const double scale = 1.0 / (3.0 * H * W);
    for (std::size_t k = 0; k < target.data.size(); ++k) {
        T d;
        out.value += detail::penalty(rgb.data[k], target.data[k], norm, d);
        out.d_rgb.data[k] = T(d * scale);
    }
    out.value *= scale;
    return out;
}

/// Background edge loss against a precomputed background_target.
template <typename T>
ImageLoss<T> background_loss(const Image<T>& bg_target, const Image<T>& rgb, LossNorm norm = LossNorm::L1) {
    return panoptic_loss(bg_target, rgb, norm);
}

/// Convenience overload computing the blurred target in place.
template <typename T>
ImageLoss<T> background_loss(const Image<T>& target, const Mask& mask, const Image<T>& rgb, int blur_radius,
                             double blur_sigma, LossNorm norm = LossNorm::L1) {
    return panoptic_loss(background_target(target, mask, blur_radius, blur_sigma), rgb, norm);
}

inline constexpr double kLambdaPeakOpacity = 0.1;
inline constexpr double kLambdaBandwidth = 1.0;

template <typename T>
struct RegularizerResult {
    double value = 0.0;
    std::vector<T> d_peak_opacity;
    std::vector<T> d_bandwidth;
};

/// lambda_h mean|1 - h| + lambda_w mean|w|, pulling points toward dense, time-constant opacity.
template <typename T>
RegularizerResult<T> opacity_regularizer(const std::vector<T>& h, const std::vector<T>& omega,
                                         double lambda_h = kLambdaPeakOpacity,
                                         double lambda_w = kLambdaBandwidth) {
    if (h.size() != omega.size()) throw ShapeError("opacity_regularizer: h and omega differ in length");
    RegularizerResult<T> r;
    r.d_peak_opacity.assign(h.size(), T(0));
    r.d_bandwidth.assign(h.size(), T(0));
    if (h.empty()) return r;
    const double inv_n = 1.0 / static_cast<double>(h.size());
    double sum_h = 0.0, sum_w = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        sum_h += std::abs(1.0 - double(h[i]));
        sum_w += std::abs(double(omega[i]));
        r.d_peak_opacity[i] = T(-lambda_h * inv_n * double(sign0(T(1) - h[i])));
        r.d_bandwidth[i] = T(lambda_w * inv_n * double(sign0(omega[i])));
    }
    r.value = lambda_h * sum_h * inv_n + lambda_w * sum_w * inv_n;
    return r;
}

} // namespace splitgs

#endif // SPLITGS_LOSSES_HPP
