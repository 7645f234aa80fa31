#ifndef SPLITGS_SEGMENTATION_HPP
#define SPLITGS_SEGMENTATION_HPP

#include "splitgs/camera.hpp"
#include "splitgs/image.hpp"
#include "splitgs/point_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

namespace splitgs {

struct SplitResult {
    PointCloud foreground;
    PointCloud background;
    std::vector<std::size_t> foreground_indices;
    std::vector<std::size_t> background_indices;
};

/// A point is foreground when it lands on mask value 1 in every camera whose image it
/// projects into (nearest pixel), and it projects into at least one image.
inline SplitResult split_point_cloud(const PointCloud& pc, std::span<const Camera> cams,
                                     std::span<const Mask> masks) {
    if (cams.empty() || masks.empty()) throw PreconditionError("split_point_cloud: no masks supplied");
    if (cams.size() != masks.size()) {
        throw ShapeError("split_point_cloud: " + std::to_string(cams.size()) + " cameras but " +
                         std::to_string(masks.size()) + " masks");
    }
    for (std::size_t c = 0; c < cams.size(); ++c) {
        if (masks[c].width != cams[c].width || masks[c].height != cams[c].height) {
            throw ShapeError("split_point_cloud: mask " + shape_str(masks[c].height, masks[c].width) +
                             " does not match camera " + std::to_string(cams[c].id) + " " +
                             shape_str(cams[c].height, cams[c].width));
        }
    }
    std::vector<std::uint8_t> is_fg(pc.size(), 0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(pc.size()); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        bool observed = false;
        bool all_fg = true;
        for (std::size_t c = 0; c < cams.size() && all_fg; ++c) {
            const auto p = project_point(cams[c], pc.position(i));
            if (!p.in_frustum) continue;
            const long px = std::lround(p.u);
            const long py = std::lround(p.v);
            if (px < 0 || py < 0 || px >= cams[c].width || py >= cams[c].height) continue;
            observed = true;
            if (!masks[c].at(static_cast<int>(py), static_cast<int>(px))) all_fg = false;
        }
        is_fg[i] = observed && all_fg;
    }
    SplitResult r;
    for (std::size_t i = 0; i < pc.size(); ++i) {
        if (is_fg[i]) {
            r.foreground.push_back(pc.position(i), pc.color(i));
            r.foreground_indices.push_back(i);
        } else {
            r.background.push_back(pc.position(i), pc.color(i));
            r.background_indices.push_back(i);
        }
    }
    return r;
}

/// One centroid (position and colour) per occupied voxel of edge `edge`, grid offset by
/// `offset` (in voxel units). Output is ordered by first occurrence in the input.
inline PointCloud voxel_downsample(const PointCloud& pc, double edge, const Vec3<double>& offset = Vec3<double>::Zero()) {
    const auto [lo, hi] = pc.bounds();
    struct Acc {
        Vec3<double> p = Vec3<double>::Zero();
        Vec3<double> c = Vec3<double>::Zero();
        std::size_t n = 0;
    };
    std::unordered_map<std::uint64_t, std::size_t> slot;
    std::vector<Acc> acc;
    slot.reserve(pc.size());
    for (std::size_t i = 0; i < pc.size(); ++i) {
        const Vec3<double> rel = (pc.position(i) - lo) / edge + offset;
        const auto key_of = [](double v) { return static_cast<std::uint64_t>(std::max(0.0, std::floor(v))) & 0x1FFFFF; };
        const std::uint64_t key = key_of(rel.x()) | (key_of(rel.y()) << 21) | (key_of(rel.z()) << 42);
        auto [it, inserted] = slot.try_emplace(key, acc.size());
        if (inserted) acc.emplace_back();
        Acc& a = acc[it->second];
        a.p += pc.position(i);
        a.c += pc.color(i);
        ++a.n;
    }
    PointCloud out;
    for (const Acc& a : acc) out.push_back(a.p / double(a.n), a.c / double(a.n));
    return out;
}

/// Resamples a cloud to within +-5% of `target_count` points: voxel-grid downsampling with a
/// bisected edge length, or duplication with half-voxel jitter when the cloud is too small.
inline PointCloud voxel_resample(const PointCloud& pc, std::size_t target_count, std::mt19937_64& rng) {
    if (target_count < 1) throw PreconditionError("voxel_resample: target_count must be >= 1");
    if (pc.empty()) throw PreconditionError("voxel_resample: empty point cloud");
    const double tol = 0.05 * static_cast<double>(target_count);
    auto within = [&](std::size_t n) { return std::abs(double(n) - double(target_count)) <= tol; };
    if (within(pc.size())) return pc;

    const auto [lo, hi] = pc.bounds();
    const double extent = (hi - lo).maxCoeff();

    if (pc.size() > target_count) {
        if (!(extent > 0.0)) {
            PointCloud one;
            one.push_back(pc.position(0), pc.color(0));
            if (within(1)) return one;
            throw PreconditionError("voxel_resample: degenerate cloud cannot reach the target count");
        }
        PointCloud best;
        double best_err = std::numeric_limits<double>::infinity();
        // Counts jump as the edge changes; several grid offsets give the search more chances.
        static const Vec3<double> offsets[] = {{0.0, 0.0, 0.0}, {0.5, 0.5, 0.5}, {0.25, 0.75, 0.5},
                                               {0.75, 0.25, 0.25}, {0.1, 0.6, 0.85}, {0.4, 0.2, 0.7}};
        for (const auto& off : offsets) {
            double a = extent * 1e-9;
            double b = extent * 2.0;
            for (int it = 0; it < 80; ++it) {
                const double mid = std::sqrt(a * b);
                PointCloud d = voxel_downsample(pc, mid, off);
                const std::size_t n = d.size();
                const double err = std::abs(double(n) - double(target_count));
                if (err < best_err) {
                    best_err = err;
                    best = std::move(d);
                    if (within(n)) return best;
                }
                // larger edge -> fewer points
                if (n > target_count) a = mid;
                else b = mid;
                if (b / a < 1.0 + 1e-12) break;
            }
        }
        return best;
    }

    // Upsample: duplicate points with uniform jitter of half a voxel edge.
    const Vec3<double> span = (hi - lo);
    double volume = 1.0;
    int dims = 0;
    for (int a = 0; a < 3; ++a) {
        if (span[a] > 0.0) {
            volume *= span[a];
            ++dims;
        }
    }
    if (dims == 0) throw PreconditionError("voxel_resample: all points identical, cannot upsample by jitter");
    // The edge is the coarsest grid that still keeps 95% of the points apart, capped by the
    // mean spacing, so a few outliers cannot stretch the jitter of dense regions.
    double edge = std::pow(volume / double(pc.size()), 1.0 / dims);
    if (pc.size() > 1) {
        double a = extent * 1e-9, b = edge;
        for (int it = 0; it < 60 && b / a > 1.0 + 1e-9; ++it) {
            const double mid = std::sqrt(a * b);
            if (double(voxel_downsample(pc, mid, Vec3<double>::Zero()).size()) >= 0.95 * double(pc.size())) a = mid;
            else b = mid;
        }
        edge = a;
    }
    std::uniform_real_distribution<double> jitter(-0.5 * edge, 0.5 * edge);
    PointCloud out = pc;
    std::size_t src = 0;
    while (out.size() < target_count) {
        const Vec3<double> p = pc.position(src) + Vec3<double>(jitter(rng), jitter(rng), jitter(rng));
        out.push_back(p, pc.color(src));
        src = (src + 1) % pc.size();
    }
    return out;
}

} // namespace splitgs

#endif // SPLITGS_SEGMENTATION_HPP
