#ifndef SPLITGS_DENSIFY_HPP
#define SPLITGS_DENSIFY_HPP

#include "splitgs/gaussians.hpp"
#include "splitgs/hexplane.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace splitgs {

/// Number of uniformly spaced time samples used to measure point motion.
inline constexpr int kDisplacementSamples = 10;

/// Mean distance of each deformed position from its temporal mean, over
/// t = 0, 1/9, ..., 1.
template <typename T>
std::vector<T> displacement_stats(const DeformationField<T>& field, const GaussianSet<T>& g) {
    if (field.variant != Representation::Foreground) {
        throw PreconditionError("displacement_stats: needs the foreground field");
    }
    const Gaussians<T> view = g.view();
    const std::size_t n = g.size();
    std::vector<std::vector<Vec3<double>>> pos(kDisplacementSamples, std::vector<Vec3<double>>(n));
    for (int k = 0; k < kDisplacementSamples; ++k) {
        const T t = T(double(k) / (kDisplacementSamples - 1));
        const Gaussians<T> d = deform(field, view, t);
        for (std::size_t i = 0; i < n; ++i) pos[k][i] = d.pos(i).template cast<double>();
    }
    std::vector<T> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        Vec3<double> mean = Vec3<double>::Zero();
        for (int k = 0; k < kDisplacementSamples; ++k) mean += pos[k][i];
        mean /= kDisplacementSamples;
        double acc = 0.0;
        for (int k = 0; k < kDisplacementSamples; ++k) acc += (pos[k][i] - mean).norm();
        out[i] = T(acc / kDisplacementSamples);
    }
    return out;
}

/// ceil(N / 10): points added by one dynamic densification event.
inline std::uint64_t dynamic_increment(std::uint64_t n) { return (n + 9) / 10; }

/// Indices of the k largest scores; ties go to the lower index.
template <typename T>
std::vector<std::size_t> top_k(const std::vector<T>& scores, std::size_t k) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    idx.resize(std::min(k, n));
    std::sort(idx.begin(), idx.end());
    return idx;
}

/// Appends a copy of each selected row with position jitter uniform in +-exp(s)/2 per axis.
template <typename T>
void duplicate_rows(GaussianSet<T>& g, const std::vector<std::size_t>& rows, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    const GaussianSet<T> src = g;
    for (std::size_t i : rows) {
        g.append_row(src, i);
        const std::size_t j = g.size() - 1;
        for (int a = 0; a < 3; ++a) {
            const double s = std::exp(double(src.log_scale[3 * i + a]));
            g.position[3 * j + a] = T(double(src.position[3 * i + a]) + u(rng) * s);
        }
    }
}

/// Reference-free densification: duplicates the top 10% of points by displacement.
/// Returns the duplicated source indices.
template <typename T>
std::vector<std::size_t> densify_dynamic(GaussianSet<T>& g, const std::vector<T>& displacement,
                                         std::mt19937_64& rng) {
    if (g.size() < 10) throw PreconditionError("densify_dynamic: needs at least 10 points");
    if (displacement.size() != g.size()) throw ShapeError("densify_dynamic: one displacement per point required");
    auto rows = top_k(displacement, dynamic_increment(g.size()));
    duplicate_rows(g, rows, rng);
    return rows;
}

/// Canonical-stage densification: every point is duplicated once (N -> 2N).
template <typename T>
void densify_canonical(GaussianSet<T>& g, std::mt19937_64& rng) {
    std::vector<std::size_t> all(g.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    duplicate_rows(g, all, rng);
}

/// Foreground count after n_c canonical doublings followed by n_d dynamic events, each
/// adding ceil(0.1 N) points. Matches the realised count of the two densify operations.
inline std::uint64_t estimate_final_count(std::uint64_t n_start, unsigned n_c, unsigned n_d) {
    std::uint64_t n = n_start << n_c;
    for (unsigned k = 0; k < n_d; ++k) {
        n += dynamic_increment(n);
    }
    return n;
}

/// Removes points whose peak opacity is below `threshold`. Returns the number removed.
template <typename T>
std::size_t prune_low_opacity(GaussianSet<T>& g, double threshold) {
    GaussianSet<T> kept;
    kept.tag = g.tag;
    std::size_t removed = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (double(g.peak_opacity(i)) < threshold) {
            ++removed;
            continue;
        }
        kept.append_row(g, i);
    }
    g = std::move(kept);
    return removed;
}

/// Running mean of screen-space positional gradient norms, for gradient-threshold densification.
template <typename T>
struct GradientStats {
    std::vector<double> sum;
    std::vector<std::uint32_t> count;

    void resize(std::size_t n) {
        sum.resize(n, 0.0);
        count.resize(n, 0);
    }
    void reset(std::size_t n) {
        sum.assign(n, 0.0);
        count.assign(n, 0);
    }
    /// screen_grad is N x 2; rows with zero gradient were not visible and are not counted.
    void accumulate(const std::vector<T>& screen_grad, std::size_t first = 0) {
        for (std::size_t i = 0; 2 * i + 1 < screen_grad.size(); ++i) {
            const double gx = screen_grad[2 * i], gy = screen_grad[2 * i + 1];
            if (gx == 0.0 && gy == 0.0) continue;
            sum[first + i] += std::sqrt(gx * gx + gy * gy);
            ++count[first + i];
        }
    }
};

/// Clone/split densification driven by accumulated positional gradients: points above
/// `threshold` are cloned when small (max scale <= dense_fraction * extent) and split into
/// two shrunken samples otherwise.
template <typename T>
std::size_t densify_by_gradient(GaussianSet<T>& g, const GradientStats<T>& stats, double threshold,
                                double scene_extent, std::mt19937_64& rng, double dense_fraction = 0.01) {
    std::vector<std::size_t> clone, split;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (stats.count[i] == 0 || stats.sum[i] / stats.count[i] < threshold) continue;
        const double smax = std::exp(double(std::max({g.log_scale[3 * i], g.log_scale[3 * i + 1], g.log_scale[3 * i + 2]})));
        (smax <= dense_fraction * scene_extent ? clone : split).push_back(i);
    }
    const std::size_t before = g.size();
    const GaussianSet<T> src = g;
    for (std::size_t i : clone) g.append_row(src, i);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (std::size_t i : split) {
        const Mat3<double> R = quaternion_to_rotation<double>(Vec4<double>(
            src.rotation[4 * i], src.rotation[4 * i + 1], src.rotation[4 * i + 2], src.rotation[4 * i + 3]));
        for (int copy = 0; copy < 2; ++copy) {
            const std::size_t row = copy == 0 ? i : g.size();
            if (copy == 1) g.append_row(src, i);
            Vec3<double> offset;
            for (int a = 0; a < 3; ++a) offset[a] = nd(rng) * std::exp(double(src.log_scale[3 * i + a]));
            const Vec3<double> p = Vec3<double>(src.position[3 * i], src.position[3 * i + 1], src.position[3 * i + 2]) +
                                   R * offset;
            for (int a = 0; a < 3; ++a) {
                g.position[3 * row + a] = T(p[a]);
                g.log_scale[3 * row + a] = T(double(src.log_scale[3 * i + a]) - std::log(1.6));
            }
        }
    }
    return g.size() - before;
}

} // namespace splitgs

#endif // SPLITGS_DENSIFY_HPP
