#ifndef SPLITGS_RASTERIZER_HPP
#define SPLITGS_RASTERIZER_HPP

#include "splitgs/camera.hpp"
#include "splitgs/gaussians.hpp"
#include "splitgs/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

namespace splitgs {

struct RenderSettings {
    int tile_size = 16;
    /// Splats are binned to every tile their unclamped alpha can exceed this value in.
    double alpha_cutoff = 1e-6;
    /// Per-pixel blending stops once transmittance falls below this value.
    double min_transmittance = 1e-4;
    OpacityModel opacity_model = OpacityModel::Squared;
};

/// Forward render result plus the state the backward pass replays.
template <typename T>
struct RenderOutput {
    Image<T> rgb;   // H x W x 3
    Image<T> alpha; // H x W x 1

    Camera camera;
    T time{};
    RenderSettings settings;
    Gaussians<T> gaussians;
    std::vector<Splat2D<T>> splats;
    int tiles_x = 0;
    int tiles_y = 0;
    std::vector<std::vector<std::uint32_t>> tile_lists; // front-to-back per tile
    std::vector<T> final_transmittance;                 // per pixel
    std::vector<std::uint32_t> n_contrib;               // per pixel: list entries blended
};

template <typename T>
struct RenderGrads {
    Gaussians<T> params;        // congruent with the rendered Gaussians
    std::vector<T> screen_grad; // N x 2, dL/d(u, v)
};

/// Pixel-space radius beyond which sigma_t * falloff < cutoff; 0 when the splat never reaches it.
template <typename T>
inline T splat_radius(const Splat2D<T>& s, double cutoff) {
    if (!(double(s.opacity) > cutoff)) return T(0);
    const T a = s.cov2d(0, 0), b = s.cov2d(0, 1), c = s.cov2d(1, 1);
    const T mid = T(0.5) * (a + c);
    const T lambda_max = mid + std::sqrt(std::max(T(0), mid * mid - (a * c - b * b)));
    return std::sqrt(lambda_max) * T(std::sqrt(2.0 * std::log(double(s.opacity) / cutoff)));
}

/// Depth order with ties broken by index.
template <typename T>
inline std::vector<std::uint32_t> depth_order(const std::vector<Splat2D<T>>& splats) {
    std::vector<std::uint32_t> order;
    order.reserve(splats.size());
    for (std::uint32_t i = 0; i < splats.size(); ++i) {
        if (splats[i].valid) order.push_back(i);
    }
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (splats[a].depth != splats[b].depth) return splats[a].depth < splats[b].depth;
        return a < b;
    });
    return order;
}

/// Tile-binned, front-to-back alpha compositing of all Gaussians at time t.
template <typename T>
RenderOutput<T> render(const Gaussians<T>& g, const Camera& cam, T t, const RenderSettings& settings = {}) {
    RenderOutput<T> out;
    out.camera = cam;
    out.time = t;
    out.settings = settings;
    out.gaussians = g;
    const int W = cam.width;
    const int H = cam.height;
    const int ts = settings.tile_size;
    out.rgb = Image<T>(H, W, 3);
    out.alpha = Image<T>(H, W, 1);
    out.final_transmittance.assign(static_cast<std::size_t>(H) * W, T(1));
    out.n_contrib.assign(static_cast<std::size_t>(H) * W, 0);
    out.tiles_x = (W + ts - 1) / ts;
    out.tiles_y = (H + ts - 1) / ts;
    out.tile_lists.assign(static_cast<std::size_t>(out.tiles_x) * out.tiles_y, {});

    const std::size_t n = g.size();
    out.splats.resize(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        out.splats[i] = project_gaussian(g, static_cast<std::size_t>(i), cam, t, settings.opacity_model);
    }

    for (std::uint32_t i : depth_order(out.splats)) {
        const Splat2D<T>& s = out.splats[i];
        const T r = splat_radius(s, settings.alpha_cutoff);
        if (!(r > T(0))) continue;
        const T x0 = s.center.x() - r, x1 = s.center.x() + r;
        const T y0 = s.center.y() - r, y1 = s.center.y() + r;
        if (x1 < T(0) || y1 < T(0) || x0 > T(W - 1) || y0 > T(H - 1)) continue;
        const int tx0 = std::max(0, static_cast<int>(std::floor(x0 / T(ts))));
        const int tx1 = std::min(out.tiles_x - 1, static_cast<int>(std::floor(x1 / T(ts))));
        const int ty0 = std::max(0, static_cast<int>(std::floor(y0 / T(ts))));
        const int ty1 = std::min(out.tiles_y - 1, static_cast<int>(std::floor(y1 / T(ts))));
        for (int ty = ty0; ty <= ty1; ++ty)
            for (int tx = tx0; tx <= tx1; ++tx) out.tile_lists[static_cast<std::size_t>(ty) * out.tiles_x + tx].push_back(i);
    }

    const T min_T = T(settings.min_transmittance);
    const std::ptrdiff_t num_tiles = static_cast<std::ptrdiff_t>(out.tile_lists.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t tile = 0; tile < num_tiles; ++tile) {
        const auto& list = out.tile_lists[tile];
        const int tx = static_cast<int>(tile % out.tiles_x);
        const int ty = static_cast<int>(tile / out.tiles_x);
        for (int py = ty * ts; py < std::min(H, (ty + 1) * ts); ++py) {
            for (int px = tx * ts; px < std::min(W, (tx + 1) * ts); ++px) {
                T trans = T(1);
                T c0 = 0, c1 = 0, c2 = 0;
                std::uint32_t count = 0;
                for (std::size_t k = 0; k < list.size(); ++k) {
                    const Splat2D<T>& s = out.splats[list[k]];
                    const T dx = T(px) - s.center.x();
                    const T dy = T(py) - s.center.y();
                    const T a = std::min(T(kMaxAlpha), s.opacity * splat_falloff(s.conic, dx, dy));
                    const T w = a * trans;
                    c0 += s.color[0] * w;
                    c1 += s.color[1] * w;
                    c2 += s.color[2] * w;
                    trans *= T(1) - a;
                    count = static_cast<std::uint32_t>(k + 1);
                    if (trans < min_T) break;
                }
                const std::size_t pix = static_cast<std::size_t>(py) * W + px;
                out.rgb.data[3 * pix] = c0;
                out.rgb.data[3 * pix + 1] = c1;
                out.rgb.data[3 * pix + 2] = c2;
                out.alpha.data[pix] = T(1) - trans;
                out.final_transmittance[pix] = trans;
                out.n_contrib[pix] = count;
            }
        }
    }
    return out;
}

/// Adjoint of render: gradients of a loss with respect to every natural parameter.
/// Tiles accumulate locally and are reduced in tile order, so results do not depend on
/// the thread count.
template <typename T>
RenderGrads<T> render_backward(const RenderOutput<T>& out, const Image<T>& d_rgb, const Image<T>& d_alpha) {
    const int W = out.camera.width;
    const int H = out.camera.height;
    if (d_rgb.height != H || d_rgb.width != W || d_rgb.channels != 3 || d_alpha.height != H ||
        d_alpha.width != W || d_alpha.channels != 1) {
        throw ShapeError("render_backward: gradient images must be " + shape_str(H, W) + " (3 and 1 channels)");
    }
    const int ts = out.settings.tile_size;
    const std::size_t n = out.gaussians.size();
    const std::ptrdiff_t num_tiles = static_cast<std::ptrdiff_t>(out.tile_lists.size());
    std::vector<std::vector<SplatGrad<T>>> local(out.tile_lists.size());

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t tile = 0; tile < num_tiles; ++tile) {
        const auto& list = out.tile_lists[tile];
        auto& acc = local[tile];
        acc.assign(list.size(), SplatGrad<T>{});
        const int tx = static_cast<int>(tile % out.tiles_x);
        const int ty = static_cast<int>(tile / out.tiles_x);
        for (int py = ty * ts; py < std::min(H, (ty + 1) * ts); ++py) {
            for (int px = tx * ts; px < std::min(W, (tx + 1) * ts); ++px) {
                const std::size_t pix = static_cast<std::size_t>(py) * W + px;
                const Vec3<T> dC(d_rgb.data[3 * pix], d_rgb.data[3 * pix + 1], d_rgb.data[3 * pix + 2]);
                const T dA = d_alpha.data[pix];
                if (dC.isZero() && dA == T(0)) continue;
                const T t_final = out.final_transmittance[pix];
                T trans = t_final;
                Vec3<T> behind = Vec3<T>::Zero();
                for (std::size_t k = out.n_contrib[pix]; k-- > 0;) {
                    const Splat2D<T>& s = out.splats[list[k]];
                    const T dx = T(px) - s.center.x();
                    const T dy = T(py) - s.center.y();
                    const T falloff = splat_falloff(s.conic, dx, dy);
                    const T raw = s.opacity * falloff;
                    const T a = std::min(T(kMaxAlpha), raw);
                    const T one_minus = T(1) - a;
                    const T t_i = trans / one_minus;
                    T d_a = t_i * dC.dot(s.color - behind) + dA * t_final / one_minus;
                    SplatGrad<T>& gk = acc[k];
                    gk.color += dC * (a * t_i);
                    behind = a * s.color + one_minus * behind;
                    trans = t_i;
                    if (raw > T(kMaxAlpha)) continue;
                    gk.opacity += d_a * falloff;
                    const T d_power = d_a * raw;
                    gk.conic[0] += d_power * T(-0.5) * dx * dx;
                    gk.conic[1] += d_power * (-dx * dy);
                    gk.conic[2] += d_power * T(-0.5) * dy * dy;
                    gk.center.x() += d_power * (s.conic[0] * dx + s.conic[1] * dy);
                    gk.center.y() += d_power * (s.conic[1] * dx + s.conic[2] * dy);
                }
            }
        }
    }

    std::vector<SplatGrad<T>> per_splat(n);
    for (std::size_t tile = 0; tile < out.tile_lists.size(); ++tile) {
        const auto& list = out.tile_lists[tile];
        for (std::size_t k = 0; k < list.size(); ++k) {
            SplatGrad<T>& d = per_splat[list[k]];
            const SplatGrad<T>& s = local[tile][k];
            d.center += s.center;
            d.conic += s.conic;
            d.opacity += s.opacity;
            d.color += s.color;
        }
    }

    RenderGrads<T> grads;
    grads.params = Gaussians<T>::zeros(n);
    grads.screen_grad.assign(2 * n, T(0));
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        if (!out.splats[i].valid) continue;
        const SplatGrad<T>& gs = per_splat[i];
        grads.screen_grad[2 * i] = gs.center.x();
        grads.screen_grad[2 * i + 1] = gs.center.y();
        project_gaussian_backward(out.gaussians, i, out.camera, out.time, out.splats[i], gs, grads.params,
                                  out.settings.opacity_model);
    }
    return grads;
}

/// Oracle renderer: evaluates every splat at every pixel in global depth order with
/// double accumulation, no tiling and no early termination.
template <typename T>
RenderOutput<double> render_reference(const Gaussians<T>& g_in, const Camera& cam, double t,
                                      OpacityModel model = OpacityModel::Squared) {
    Gaussians<double> g;
    auto cv = [](const std::vector<T>& v) { return std::vector<double>(v.begin(), v.end()); };
    g.position = cv(g_in.position);
    g.rotation = cv(g_in.rotation);
    g.log_scale = cv(g_in.log_scale);
    g.color = cv(g_in.color);
    g.peak_opacity = cv(g_in.peak_opacity);
    g.bandwidth = cv(g_in.bandwidth);
    g.temporal_center = cv(g_in.temporal_center);

    RenderOutput<double> out;
    out.camera = cam;
    out.time = t;
    out.settings.opacity_model = model;
    out.rgb = Image<double>(cam.height, cam.width, 3);
    out.alpha = Image<double>(cam.height, cam.width, 1);
    out.splats.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) out.splats[i] = project_gaussian(g, i, cam, t, model);
    const auto order = depth_order(out.splats);
    for (int py = 0; py < cam.height; ++py) {
        for (int px = 0; px < cam.width; ++px) {
            double trans = 1.0;
            Vec3<double> c = Vec3<double>::Zero();
            for (std::uint32_t i : order) {
                const Splat2D<double>& s = out.splats[i];
                const double a = std::min(kMaxAlpha, s.opacity * splat_falloff(s.conic, px - s.center.x(),
                                                                                py - s.center.y()));
                c += s.color * (a * trans);
                trans *= 1.0 - a;
            }
            for (int k = 0; k < 3; ++k) out.rgb.at(py, px, k) = c[k];
            out.alpha.at(py, px) = 1.0 - trans;
        }
    }
    out.gaussians = std::move(g);
    return out;
}

} // namespace splitgs

#endif // SPLITGS_RASTERIZER_HPP
