#ifndef SPLITGS_SYNTH_HPP
#define SPLITGS_SYNTH_HPP

#include "splitgs/camera.hpp"
#include "splitgs/eval.hpp"
#include "splitgs/gaussians.hpp"
#include "splitgs/image.hpp"
#include "splitgs/point_cloud.hpp"
#include "splitgs/rasterizer.hpp"
#include "splitgs/scene.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace splitgs {

/// One ground-truth Gaussian in natural parameters.
struct GtGaussian {
    Vec3<double> position = Vec3<double>::Zero();
    Vec4<double> rotation = Vec4<double>(1, 0, 0, 0);
    Vec3<double> log_scale = Vec3<double>::Zero();
    Vec3<double> color = Vec3<double>::Constant(0.5);
    double peak_opacity = 1.0;
    double bandwidth = 0.0;
    double temporal_center = 0.5;
};

/// Rigid motion of a blob: a circle of `radius` in the xz plane, `turns` revolutions over t in [0,1].
struct BlobMotion {
    double radius = 0.0;
    double turns = 0.0;
    double phase = 0.0;

    Vec3<double> offset(double t) const {
        if (radius == 0.0 || turns == 0.0) return Vec3<double>::Zero();
        const double a = 2.0 * std::numbers::pi * turns * t + phase;
        return {radius * (std::cos(a) - std::cos(phase)), 0.0, radius * (std::sin(a) - std::sin(phase))};
    }
};

struct Blob {
    std::vector<GtGaussian> members;
    BlobMotion motion;
};

struct SceneRecipe {
    std::string name;
    std::vector<Blob> foreground;
    std::vector<GtGaussian> background; // static shell
    int width = 64;
    int height = 64;
    int train_cameras = 8;
    int frames = 30;
    double ring_radius = 2.5;
    double ring_height = 0.6;
    double fx = 68.6;

    void validate() const {
        if (width < 1 || height < 1 || train_cameras < 1 || frames < 1) {
            throw PreconditionError("recipe '" + name + "': sizes must be positive");
        }
        if (!(ring_radius > 0.0) || !(fx > 0.0)) throw PreconditionError("recipe '" + name + "': bad camera ring");
        std::size_t n = background.size();
        for (const auto& b : foreground) n += b.members.size();
        if (n == 0) throw PreconditionError("recipe '" + name + "': no Gaussians");
    }
};

inline Gaussians<double> to_gaussians(const std::vector<GtGaussian>& src, const Vec3<double>& offset = Vec3<double>::Zero()) {
    Gaussians<double> g;
    for (const auto& s : src) {
        const Vec3<double> p = s.position + offset;
        g.position.insert(g.position.end(), {p.x(), p.y(), p.z()});
        g.rotation.insert(g.rotation.end(), {s.rotation[0], s.rotation[1], s.rotation[2], s.rotation[3]});
        g.log_scale.insert(g.log_scale.end(), {s.log_scale.x(), s.log_scale.y(), s.log_scale.z()});
        g.color.insert(g.color.end(), {s.color.x(), s.color.y(), s.color.z()});
        g.peak_opacity.push_back(s.peak_opacity);
        g.bandwidth.push_back(s.bandwidth);
        g.temporal_center.push_back(s.temporal_center);
    }
    return g;
}

/// Foreground Gaussians at time t with every blob moved along its path.
inline Gaussians<double> foreground_at(const SceneRecipe& r, double t) {
    Gaussians<double> g;
    for (const auto& b : r.foreground) g.append(to_gaussians(b.members, b.motion.offset(t)));
    return g;
}

inline Gaussians<double> background_of(const SceneRecipe& r) { return to_gaussians(r.background); }

/// K training cameras evenly spaced on a ring around the origin, then one test camera
/// halfway between the first two.
inline std::vector<Camera> ring_cameras(const SceneRecipe& r) {
    std::vector<Camera> cams;
    auto at = [&](int id, double angle) {
        const Eigen::Vector3d eye(r.ring_radius * std::cos(angle), r.ring_height, r.ring_radius * std::sin(angle));
        return Camera::look_at(id, r.width, r.height, r.fx, r.fx, eye, Eigen::Vector3d::Zero());
    };
    const double step = 2.0 * std::numbers::pi / r.train_cameras;
    for (int k = 0; k < r.train_cameras; ++k) cams.push_back(at(k, k * step));
    cams.push_back(at(r.train_cameras, 0.5 * step));
    return cams;
}

namespace detail {

inline Vec4<double> random_quaternion(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Vec4<double> q(n(rng), n(rng), n(rng), n(rng));
    return q / q.norm();
}

/// Roughly uniform directions on the unit sphere.
inline std::vector<Vec3<double>> fibonacci_sphere(int n) {
    std::vector<Vec3<double>> out;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
        const double y = 1.0 - 2.0 * (i + 0.5) / n;
        const double r = std::sqrt(1.0 - y * y);
        out.emplace_back(r * std::cos(golden * i), y, r * std::sin(golden * i));
    }
    return out;
}

/// Static shell of large Gaussians with a smooth colour pattern.
inline std::vector<GtGaussian> background_shell(int n, double radius, double sigma, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ph(0.0, 2.0 * std::numbers::pi);
    const double p0 = ph(rng), p1 = ph(rng), p2 = ph(rng);
    std::vector<GtGaussian> out;
    for (const auto& d : fibonacci_sphere(n)) {
        GtGaussian g;
        g.position = radius * d;
        g.rotation = random_quaternion(rng);
        g.log_scale = Vec3<double>::Constant(std::log(sigma));
        g.color = Vec3<double>(0.5 + 0.3 * std::sin(1.5 * d.x() + p0), 0.5 + 0.3 * std::sin(1.5 * d.y() + p1),
                               0.5 + 0.3 * std::sin(1.5 * d.z() + p2));
        g.peak_opacity = 1.0;
        out.push_back(g);
    }
    return out;
}

/// A cluster of `count` Gaussians around `center`.
inline Blob make_blob(const Vec3<double>& center, double spread, double scale, const Vec3<double>& color, int count,
                      std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Blob b;
    for (int k = 0; k < count; ++k) {
        GtGaussian g;
        g.position = center + spread * Vec3<double>(u(rng), u(rng), u(rng));
        g.rotation = random_quaternion(rng);
        g.log_scale = Vec3<double>(std::log(scale * (1.0 + 0.3 * u(rng))), std::log(scale * (1.0 + 0.3 * u(rng))),
                                   std::log(scale * (1.0 + 0.3 * u(rng))));
        g.color = (color + 0.08 * Vec3<double>(u(rng), u(rng), u(rng))).cwiseMax(0.02).cwiseMin(0.98);
        g.peak_opacity = 0.95;
        b.members.push_back(g);
    }
    return b;
}

} // namespace detail

/// One blob circling the origin plus two static blobs, inside a static shell.
inline SceneRecipe orbit_recipe(std::uint64_t seed = 0) {
    std::mt19937_64 rng(seed);
    SceneRecipe r;
    r.name = "orbit";
    Blob orbiter = detail::make_blob({0.45, 0.05, 0.0}, 0.08, 0.07, {0.85, 0.25, 0.2}, 10, rng);
    // Starts at angle 0 of a circle of radius 0.45 about the vertical axis.
    orbiter.motion = {0.45, 1.0, 0.0};
    r.foreground.push_back(orbiter);
    r.foreground.push_back(detail::make_blob({0.0, -0.15, 0.0}, 0.12, 0.09, {0.2, 0.35, 0.85}, 14, rng));
    r.foreground.push_back(detail::make_blob({0.0, 0.3, 0.0}, 0.07, 0.07, {0.25, 0.8, 0.3}, 8, rng));
    r.background = detail::background_shell(150, 20.0, 3.2, rng);
    return r;
}

/// The orbit recipe without motion: every frame is identical.
inline SceneRecipe static_recipe(std::uint64_t seed = 0) {
    SceneRecipe r = orbit_recipe(seed);
    r.name = "static";
    for (auto& b : r.foreground) b.motion = {};
    return r;
}

/// Short-lived opacity pulses (large bandwidth, staggered centres) around a steady core
/// above a static pan.
inline SceneRecipe flame_recipe(std::uint64_t seed = 0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SceneRecipe r;
    r.name = "flame";
    Blob pan = detail::make_blob({0.0, -0.25, 0.0}, 0.0, 0.1, {0.3, 0.3, 0.32}, 10, rng);
    for (std::size_t k = 0; k < pan.members.size(); ++k) {
        const double a = 2.0 * std::numbers::pi * double(k) / double(pan.members.size());
        pan.members[k].position = Vec3<double>(0.22 * std::cos(a), -0.25, 0.22 * std::sin(a));
        pan.members[k].rotation = Vec4<double>(1, 0, 0, 0);
        pan.members[k].log_scale = Vec3<double>(std::log(0.1), std::log(0.02), std::log(0.1));
    }
    r.foreground.push_back(pan);
    Blob core = detail::make_blob({0.0, 0.0, 0.0}, 0.04, 0.07, {0.95, 0.8, 0.2}, 4, rng);
    r.foreground.push_back(core);
    Blob pulses;
    const int n_pulses = 16;
    for (int k = 0; k < n_pulses; ++k) {
        GtGaussian g;
        g.position = Vec3<double>(0.06 * u(rng), 0.05 + 0.06 * u(rng), 0.06 * u(rng));
        g.rotation = Vec4<double>(1, 0, 0, 0);
        g.log_scale = Vec3<double>(std::log(0.1 + 0.03 * u(rng)), std::log(0.22 + 0.05 * u(rng)),
                                   std::log(0.1 + 0.03 * u(rng)));
        g.color = Vec3<double>(0.95, 0.35 + 0.15 * u(rng), 0.08);
        g.peak_opacity = 0.95;
        g.bandwidth = 8.0 + 2.0 * u(rng);
        // Two bursts of activity; the start of the sequence shows only the core.
        g.temporal_center = (k % 2 == 0 ? 0.35 : 0.75) + 0.06 * u(rng);
        pulses.members.push_back(g);
    }
    r.foreground.push_back(pulses);
    r.background = detail::background_shell(150, 20.0, 3.2, rng);
    return r;
}

inline SceneRecipe recipe_by_name(const std::string& name, std::uint64_t seed = 0) {
    if (name == "orbit") return orbit_recipe(seed);
    if (name == "flame") return flame_recipe(seed);
    if (name == "static") return static_recipe(seed);
    throw std::invalid_argument("unknown recipe '" + name + "' (expected orbit, flame or static)");
}

/// Rendered ground truth for every camera and frame.
struct SyntheticScene {
    SceneRecipe recipe;
    std::vector<Camera> cameras; // train cameras, then the test camera
    std::vector<double> times;
    std::vector<std::vector<Image<double>>> images;   // [camera][frame]
    std::vector<std::vector<Mask>> foreground_masks;  // [camera][frame], foreground-only alpha > 0.5
    PointCloud initial_points;

    int test_camera() const { return static_cast<int>(cameras.size()) - 1; }
    const Mask& t0_mask(int cam) const { return foreground_masks[cam][0]; }
};

/// Initial cloud: ground-truth centres with Gaussian noise of 5% of each part's extent, plus
/// 20% spurious points (inside the foreground box, or on the background shell).
inline PointCloud noisy_initial_cloud(const SceneRecipe& r, std::mt19937_64& rng) {
    PointCloud pc;
    const Gaussians<double> fg = foreground_at(r, 0.0);
    const Gaussians<double> bg = background_of(r);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto extent_of = [](const Gaussians<double>& g) {
        Vec3<double> lo = Vec3<double>::Constant(1e300), hi = -lo;
        for (std::size_t i = 0; i < g.size(); ++i) {
            lo = lo.cwiseMin(g.pos(i));
            hi = hi.cwiseMax(g.pos(i));
        }
        return std::make_pair(lo, hi);
    };
    auto add_noisy = [&](const Gaussians<double>& g) {
        if (g.size() == 0) return;
        const auto [lo, hi] = extent_of(g);
        const double sd = 0.05 * (hi - lo).maxCoeff();
        for (std::size_t i = 0; i < g.size(); ++i) {
            pc.push_back(g.pos(i) + sd * Vec3<double>(n(rng), n(rng), n(rng)), g.col(i));
        }
    };
    add_noisy(fg);
    add_noisy(bg);
    if (fg.size()) {
        const auto [lo, hi] = extent_of(fg);
        const std::size_t extra = (fg.size() + 4) / 5;
        for (std::size_t k = 0; k < extra; ++k) {
            const Vec3<double> p(lo.x() + u(rng) * (hi.x() - lo.x()), lo.y() + u(rng) * (hi.y() - lo.y()),
                                 lo.z() + u(rng) * (hi.z() - lo.z()));
            pc.push_back(p, Vec3<double>(u(rng), u(rng), u(rng)));
        }
    }
    if (bg.size()) {
        double radius = 0.0;
        for (std::size_t i = 0; i < bg.size(); ++i) radius += bg.pos(i).norm();
        radius /= double(bg.size());
        const std::size_t extra = (bg.size() + 4) / 5;
        for (std::size_t k = 0; k < extra; ++k) {
            Vec3<double> d(n(rng), n(rng), n(rng));
            d.normalize();
            pc.push_back(radius * d, Vec3<double>(u(rng), u(rng), u(rng)));
        }
    }
    return pc;
}

/// Renders every camera and frame with the reference renderer.
inline SyntheticScene make_scene(const SceneRecipe& recipe, std::uint64_t seed) {
    recipe.validate();
    SyntheticScene s;
    s.recipe = recipe;
    s.cameras = ring_cameras(recipe);
    for (int f = 0; f < recipe.frames; ++f) s.times.push_back(recipe.frames == 1 ? 0.0 : double(f) / (recipe.frames - 1));
    const std::size_t nc = s.cameras.size();
    const std::size_t nf = s.times.size();
    s.images.assign(nc, std::vector<Image<double>>(nf));
    s.foreground_masks.assign(nc, std::vector<Mask>(nf));
    const Gaussians<double> bg = background_of(recipe);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t job = 0; job < static_cast<std::ptrdiff_t>(nc * nf); ++job) {
        const std::size_t c = static_cast<std::size_t>(job) / nf;
        const std::size_t f = static_cast<std::size_t>(job) % nf;
        const double t = s.times[f];
        const Gaussians<double> fg = foreground_at(recipe, t);
        Gaussians<double> all = bg;
        all.append(fg);
        s.images[c][f] = render_reference(all, s.cameras[c], t).rgb;
        s.foreground_masks[c][f] = threshold_alpha(render_reference(fg, s.cameras[c], t).alpha, 0.5);
    }
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    s.initial_points = noisy_initial_cloud(recipe, rng);
    return s;
}

/// Writes cameras.json, 8-bit PNG frames, t = 0 masks, per-frame evaluation masks for the
/// test camera, and points.ply.
inline void write_scene(const SyntheticScene& s, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "masks");
    SceneIndex index;
    index.root = dir;
    char name[64];
    for (std::size_t c = 0; c < s.cameras.size(); ++c) {
        CameraEntry e;
        e.camera = s.cameras[c];
        e.role = static_cast<int>(c) == s.test_camera() ? CameraRole::Test : CameraRole::Train;
        for (std::size_t f = 0; f < s.times.size(); ++f) {
            Frame fr;
            fr.time = s.times[f];
            std::snprintf(name, sizeof name, "images/cam%02zu_f%03zu.png", c, f);
            fr.image = name;
            write_png((dir / fr.image).string(), s.images[c][f]);
            if (e.role == CameraRole::Train && f == 0) {
                std::snprintf(name, sizeof name, "masks/cam%02zu.png", c);
                fr.mask = name;
                write_mask_png((dir / *fr.mask).string(), s.foreground_masks[c][f]);
            }
            if (e.role == CameraRole::Test) {
                std::snprintf(name, sizeof name, "masks/eval_cam%02zu_f%03zu.png", c, f);
                fr.eval_mask = name;
                write_mask_png((dir / *fr.eval_mask).string(), s.foreground_masks[c][f]);
            }
            e.frames.push_back(std::move(fr));
        }
        index.entries.push_back(std::move(e));
    }
    save_scene_index(dir / "cameras.json", index);
    save_point_cloud((dir / "points.ply").string(), s.initial_points);
}

} // namespace splitgs

#endif // SPLITGS_SYNTH_HPP
