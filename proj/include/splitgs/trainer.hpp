#ifndef SPLITGS_TRAINER_HPP
#define SPLITGS_TRAINER_HPP

#include "splitgs/checkpoint.hpp"
#include "splitgs/config.hpp"
#include "splitgs/densify.hpp"
#include "splitgs/eval.hpp"
#include "splitgs/gaussians.hpp"
#include "splitgs/hexplane.hpp"
#include "splitgs/losses.hpp"
#include "splitgs/optimizer.hpp"
#include "splitgs/rasterizer.hpp"
#include "splitgs/scene.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace splitgs {

enum class Stage { Initialized, Canonical, Dynamic };

inline const char* to_string(Stage s) {
    switch (s) {
    case Stage::Initialized: return "initialized";
    case Stage::Canonical: return "canonical";
    case Stage::Dynamic: return "dynamic";
    }
    return "?";
}

inline Stage stage_from_string(const std::string& s) {
    if (s == "initialized") return Stage::Initialized;
    if (s == "canonical") return Stage::Canonical;
    if (s == "dynamic") return Stage::Dynamic;
    throw ParseError("checkpoint: unknown stage '" + s + "'");
}

struct DensifyEvent {
    Stage stage = Stage::Canonical;
    int iteration = 0;
    std::size_t fg_before = 0, fg_after = 0;
    std::size_t bg_before = 0, bg_after = 0;
};

struct StageReport {
    std::vector<double> losses; // total loss per iteration
    std::vector<DensifyEvent> events;
};

/// Everything training mutates. In unified mode `field_fg` is the single field over the
/// merged set and `field_bg` is unused.
struct TrainState {
    TrainConfig config;
    std::vector<Camera> cameras;
    GaussianSet<float> fg;
    GaussianSet<float> bg;
    DeformationField<float> field_fg;
    DeformationField<float> field_bg;
    Adam<float> adam;
    std::mt19937_64 rng;
    Stage stage = Stage::Initialized;
    int canonical_iterations = 0;
    int dynamic_iterations = 0;
    double scene_extent = 1.0;
    std::size_t initial_bg_count = 0;

    bool unified() const { return config.unified_field; }
};

/// Radius of the camera centres around their mean, padded by 10%.
inline double camera_extent(const std::vector<Camera>& cams) {
    if (cams.empty()) return 1.0;
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& c : cams) mean += c.center();
    mean /= double(cams.size());
    double r = 0.0;
    for (const auto& c : cams) r = std::max(r, (c.center() - mean).norm());
    return r > 0.0 ? 1.1 * r : 1.0;
}

namespace detail {

inline std::pair<Vec3<double>, Vec3<double>> union_box(const std::pair<Vec3<double>, Vec3<double>>& a,
                                                       const std::pair<Vec3<double>, Vec3<double>>& b) {
    return {a.first.cwiseMin(b.first), a.second.cwiseMax(b.second)};
}

inline void freeze_opacity(GaussianSet<float>& g) {
    // sigmoid(20) rounds to exactly 1 in single precision.
    std::fill(g.opacity_logit.begin(), g.opacity_logit.end(), 20.0f);
    std::fill(g.bandwidth.begin(), g.bandwidth.end(), 0.0f);
}

/// Foreground positions that land on the mask in at least two canonical views. Points seen
/// by a single camera pass the segmentation rule but are often background behind the subject.
inline std::vector<float> confirmed_foreground(const GaussianSet<float>& fg, const LoadedScene& scene) {
    std::vector<float> out;
    for (std::size_t i = 0; i < fg.size(); ++i) {
        const Vec3<double> x(fg.position[3 * i], fg.position[3 * i + 1], fg.position[3 * i + 2]);
        int hits = 0;
        for (const View& v : scene.canonical) {
            const auto p = project_point(*v.camera, x);
            if (!p.in_frustum) continue;
            const long px = std::lround(p.u), py = std::lround(p.v);
            if (px < 0 || py < 0 || px >= v.camera->width || py >= v.camera->height) continue;
            if (v.mask->at(static_cast<int>(py), static_cast<int>(px))) ++hits;
        }
        if (hits >= 2) out.insert(out.end(), fg.position.begin() + 3 * i, fg.position.begin() + 3 * i + 3);
    }
    return out;
}

/// Fits the field boxes to the current canonical positions. The foreground box spans the
/// confirmed foreground points when there are at least four of them.
inline void fit_boxes(TrainState& s, const LoadedScene& scene) {
    const std::vector<float> confirmed = confirmed_foreground(s.fg, scene);
    const auto bf = DeformationField<float>::bounds_of(confirmed.size() >= 12 ? confirmed : s.fg.position);
    const auto bb = DeformationField<float>::bounds_of(s.bg.position);
    auto set_box = [](DeformationField<float>& f, const std::pair<Vec3<double>, Vec3<double>>& b) {
        f.box_min = b.first;
        f.box_max = b.second;
        for (int a = 0; a < 3; ++a) {
            if (!(f.box_max[a] - f.box_min[a] > 1e-6)) {
                const double mid = 0.5 * (f.box_min[a] + f.box_max[a]);
                f.box_min[a] = mid - 0.5e-3;
                f.box_max[a] = mid + 0.5e-3;
            }
        }
    };
    if (s.unified()) {
        set_box(s.field_fg, union_box(bf, bb));
    } else {
        set_box(s.field_fg, bf);
        set_box(s.field_bg, bb);
    }
}

inline double position_lr(const TrainConfig& c, double extent, int it, int total) {
    const double p = total > 1 ? std::clamp(double(it) / double(total - 1), 0.0, 1.0) : 0.0;
    return extent * std::exp((1.0 - p) * std::log(c.lr_position) + p * std::log(c.lr_position_final));
}

struct StepOptions {
    bool rotation = true;
    bool color = true;
    bool opacity = true; // peak opacity and bandwidth
    bool temporal_center = true;
};

inline void step_set(TrainState& s, GaussianSet<float>& g, const GaussianSet<float>& grad, const std::string& prefix,
                     double lr_pos, const StepOptions& opt) {
    const TrainConfig& c = s.config;
    s.adam.step(prefix + ".position", g.position, grad.position, lr_pos);
    if (opt.rotation) s.adam.step(prefix + ".rotation", g.rotation, grad.rotation, c.lr_rotation);
    s.adam.step(prefix + ".log_scale", g.log_scale, grad.log_scale, c.lr_scale);
    if (opt.color) s.adam.step(prefix + ".color_logit", g.color_logit, grad.color_logit, c.lr_color);
    if (opt.opacity) {
        s.adam.step(prefix + ".opacity_logit", g.opacity_logit, grad.opacity_logit, c.lr_opacity);
        s.adam.step(prefix + ".bandwidth", g.bandwidth, grad.bandwidth, c.lr_opacity);
    }
    if (opt.temporal_center) {
        s.adam.step(prefix + ".temporal_center", g.temporal_center, grad.temporal_center, c.lr_opacity);
    }
    g.sanitize(opt.rotation);
}

inline void step_field(TrainState& s, DeformationField<float>& f, DeformationField<float>& grad,
                       const std::string& prefix) {
    std::vector<std::vector<float>*> grads;
    grad.for_each_array([&](const std::string&, std::vector<float>& v) { grads.push_back(&v); });
    std::size_t k = 0;
    f.for_each_array([&](const std::string& name, std::vector<float>& v) {
        const double lr = name.rfind("plane_", 0) == 0 ? s.config.lr_plane : s.config.lr_head;
        s.adam.step(prefix + "." + name, v, *grads[k++], lr);
    });
}

/// Adds the opacity regularizer gradient to natural-domain gradients; returns its value.
/// Points with peak opacity below the prune threshold are left alone so that points the
/// photometric loss has emptied are not pulled back to full opacity.
inline double add_regularizer(const TrainConfig& c, const Gaussians<float>& view, Gaussians<float>& grad) {
    if (view.size() == 0) return 0.0;
    const auto r = opacity_regularizer(view.peak_opacity, view.bandwidth, c.lambda_h, c.lambda_omega);
    for (std::size_t i = 0; i < view.size(); ++i) {
        if (double(view.peak_opacity[i]) < c.prune_threshold) continue;
        grad.peak_opacity[i] += r.d_peak_opacity[i];
        grad.bandwidth[i] += r.d_bandwidth[i];
    }
    return r.value;
}

inline RenderSettings settings_for(const TrainConfig& c) {
    RenderSettings rs;
    rs.opacity_model = c.opacity_model();
    return rs;
}

inline std::vector<int> event_iterations(const std::vector<double>& fractions, int iters) {
    std::vector<int> out;
    if (iters <= 0) return out;
    for (double f : fractions) out.push_back(std::clamp(static_cast<int>(std::lround(f * iters)), 1, iters));
    std::sort(out.begin(), out.end());
    return out;
}

inline void log_metrics(std::ostream* log, int it, double loss, double psnr_db, std::size_t nf, std::size_t nb) {
    if (!log) return;
    std::ostringstream line;
    line.setf(std::ios::fixed);
    line.precision(6);
    line << it << '\t' << loss << '\t';
    line.precision(3);
    line << psnr_db << '\t' << nf << '\t' << nb << '\n';
    *log << line.str() << std::flush;
}

inline void log_event(std::ostream* log, const DensifyEvent& e, const char* kind) {
    if (!log) return;
    *log << "# densify " << kind << " iter " << e.iteration << " fg " << e.fg_before << " -> " << e.fg_after
         << " bg " << e.bg_before << " -> " << e.bg_after << '\n';
}

} // namespace detail

/// Builds the initial state from segmented point clouds. Fields are created here so the
/// canonical stage can be checked not to touch them.
inline TrainState initialize_training(const std::vector<Camera>& cameras, const PointCloud& fg_cloud,
                                      const PointCloud& bg_cloud, const TrainConfig& config) {
    config.validate();
    if (fg_cloud.empty()) throw PreconditionError("initialize_training: empty foreground point cloud");
    TrainState s;
    s.config = config;
    s.cameras = cameras;
    s.rng.seed(config.seed);
    s.fg = GaussianSet<float>::from_point_cloud(fg_cloud, Representation::Foreground);
    s.bg = GaussianSet<float>::from_point_cloud(bg_cloud, Representation::Background);
    if (config.freeze_background_opacity) detail::freeze_opacity(s.bg);
    s.initial_bg_count = s.bg.size();
    s.scene_extent = camera_extent(cameras);
    const auto bf = DeformationField<float>::bounds_of(s.fg.position);
    const auto bb = s.bg.size() ? DeformationField<float>::bounds_of(s.bg.position) : bf;
    if (config.unified_field) {
        const auto u = detail::union_box(bf, bb);
        s.field_fg = DeformationField<float>::create(Representation::Foreground, u.first, u.second, config.field, s.rng);
    } else {
        s.field_fg = DeformationField<float>::create(Representation::Foreground, bf.first, bf.second, config.field, s.rng);
        s.field_bg = DeformationField<float>::create(Representation::Background, bb.first, bb.second, config.field, s.rng);
    }
    return s;
}

/// Deformed foreground and background at time t (natural domain).
inline std::pair<Gaussians<float>, Gaussians<float>> deformed_sets(const TrainState& s, float t) {
    const Gaussians<float> fv = s.fg.view();
    const Gaussians<float> bv = s.bg.view();
    if (s.unified()) return {deform(s.field_fg, fv, t), deform(s.field_fg, bv, t)};
    return {deform(s.field_fg, s.fg, t), deform(s.field_bg, s.bg, t)};
}

/// Merged deformed set at time t, background rows first.
inline Gaussians<float> merged_at(const TrainState& s, float t) {
    auto [f, b] = deformed_sets(s, t);
    b.append(f);
    return b;
}

inline RenderOutput<float> render_state(const TrainState& s, const Camera& cam, float t) {
    return render(merged_at(s, t), cam, t, detail::settings_for(s.config));
}

inline RenderOutput<float> render_foreground(const TrainState& s, const Camera& cam, float t) {
    return render(deformed_sets(s, t).first, cam, t, detail::settings_for(s.config));
}

/// Canonical stage: anchored at t = 0 with the t = 0 masks. Each iteration takes one
/// foreground step (random-background blended loss) and one background step (edge-bleed
/// loss), or a single joint step when legacy_canonical is set.
inline StageReport train_canonical(TrainState& s, const LoadedScene& scene, std::ostream* log = nullptr) {
    const TrainConfig& c = s.config;
    StageReport report;
    if (scene.canonical.empty()) throw PreconditionError("train_canonical: no t = 0 views with masks");
    for (const auto& v : scene.canonical) {
        if (!v.mask) throw PreconditionError("train_canonical: t = 0 view without mask");
    }
    const int iters = c.canonical_iters;
    const RenderSettings rs = detail::settings_for(c);

    std::vector<Image<float>> bg_targets;
    if (!c.legacy_canonical) {
        for (const auto& v : scene.canonical) {
            const int radius = c.blur_radius > 0 ? c.blur_radius : default_blur_radius(v.camera->width);
            bg_targets.push_back(background_target(v.image, *v.mask, radius, radius / 3.0));
        }
    }
    const auto events = detail::event_iterations(c.canonical_densify_at, iters);
    std::size_t next_event = 0;
    std::uniform_int_distribution<std::size_t> pick(0, scene.canonical.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const bool bg_opacity = !c.freeze_background_opacity;
    const detail::StepOptions fg_opt{true, true, true, false};
    const detail::StepOptions bg_opt{true, true, bg_opacity, false};

    for (int it = 0; it < iters; ++it) {
        const std::size_t vi = pick(s.rng);
        const View& view = scene.canonical[vi];
        const double lr_pos = detail::position_lr(c, s.scene_extent, it, iters);
        double total = 0.0;

        if (c.legacy_canonical) {
            Gaussians<float> merged = s.bg.view();
            const std::size_t nb = s.bg.size();
            const Gaussians<float> fv = s.fg.view();
            merged.append(fv);
            const auto out = render(merged, *view.camera, 0.0f, rs);
            const auto loss = panoptic_loss(view.image, out.rgb, c.loss_norm);
            auto grads = render_backward(out, loss.d_rgb, loss.d_alpha);
            Gaussians<float> gb = grads.params.slice(0, nb);
            Gaussians<float> gf = grads.params.slice(nb, s.fg.size());
            const Gaussians<float> bv = merged.slice(0, nb);
            total = loss.value + detail::add_regularizer(c, fv, gf);
            if (bg_opacity) total += detail::add_regularizer(c, bv, gb);
            detail::step_set(s, s.fg, s.fg.storage_gradient(gf), "fg", lr_pos, fg_opt);
            if (nb) detail::step_set(s, s.bg, s.bg.storage_gradient(gb), "bg", lr_pos, bg_opt);
        } else {
            const Vec3<float> B(float(unit(s.rng)), float(unit(s.rng)), float(unit(s.rng)));
            {
                const Gaussians<float> fv = s.fg.view();
                const auto out = render(fv, *view.camera, 0.0f, rs);
                const auto loss = foreground_loss(view.image, *view.mask, out.rgb, out.alpha, B, c.loss_norm);
                auto grads = render_backward(out, loss.d_rgb, loss.d_alpha);
                total += loss.value + detail::add_regularizer(c, fv, grads.params);
                detail::step_set(s, s.fg, s.fg.storage_gradient(grads.params), "fg", lr_pos, fg_opt);
            }
            if (s.bg.size()) {
                const Gaussians<float> bv = s.bg.view();
                const auto out = render(bv, *view.camera, 0.0f, rs);
                const auto loss = background_loss(bg_targets[vi], out.rgb, c.loss_norm);
                auto grads = render_backward(out, loss.d_rgb, loss.d_alpha);
                total += loss.value;
                if (bg_opacity) total += detail::add_regularizer(c, bv, grads.params);
                detail::step_set(s, s.bg, s.bg.storage_gradient(grads.params), "bg", lr_pos, bg_opt);
            }
        }
        report.losses.push_back(total);
        s.canonical_iterations = it + 1;

        while (next_event < events.size() && events[next_event] == it + 1) {
            DensifyEvent e{Stage::Canonical, it + 1, s.fg.size(), 0, s.bg.size(), s.bg.size()};
            densify_canonical(s.fg, s.rng);
            if (c.prune) {
                std::vector<std::size_t> rows;
                for (std::size_t i = 0; i < s.fg.size(); ++i)
                    if (double(s.fg.peak_opacity(i)) >= c.prune_threshold) rows.push_back(i);
                if (rows.size() != s.fg.size()) {
                    prune_low_opacity(s.fg, c.prune_threshold);
                    s.fg.for_each_array([&](const char* name, std::vector<float>&, std::size_t w) {
                        s.adam.remap_rows(std::string("fg.") + name, w, rows);
                    });
                }
            }
            e.fg_after = s.fg.size();
            report.events.push_back(e);
            detail::log_event(log, e, "canonical");
            ++next_event;
        }

        if (log && c.log_every > 0 && ((it + 1) % c.log_every == 0 || it + 1 == iters)) {
            const auto out = render_state(s, *view.camera, 0.0f);
            detail::log_metrics(log, it + 1, total, psnr(out.rgb, view.image), s.fg.size(), s.bg.size());
        }
    }
    s.stage = Stage::Canonical;
    return report;
}

/// Dynamic stage: both sets are deformed by their fields, merged, rendered and fitted with the
/// panoptic loss over all training frames.
inline StageReport train_dynamic(TrainState& s, const LoadedScene& scene, std::ostream* log = nullptr) {
    if (s.stage == Stage::Initialized) throw PreconditionError("train_dynamic: canonical stage not run");
    const TrainConfig& c = s.config;
    StageReport report;
    if (scene.train.empty()) throw PreconditionError("train_dynamic: no training views");
    const int iters = c.dynamic_iters;
    const RenderSettings rs = detail::settings_for(c);
    if (s.stage == Stage::Canonical && s.dynamic_iterations == 0) detail::fit_boxes(s, scene);
    s.stage = Stage::Dynamic;

    std::vector<double> fractions;
    for (int k = 1; k <= c.dynamic_densify_events; ++k) fractions.push_back(double(k) / (c.dynamic_densify_events + 1));
    const auto events = detail::event_iterations(fractions, iters);
    std::size_t next_event = 0;

    const bool bg_opacity = !c.freeze_background_opacity;
    const detail::StepOptions fg_opt{true, true, true, true};
    // Canonical background colour and rotation stay fixed; the background field has no heads for them.
    const detail::StepOptions bg_opt{false, false, bg_opacity, bg_opacity};

    GradientStats<float> stats_fg, stats_bg;
    stats_fg.reset(s.fg.size());
    stats_bg.reset(s.bg.size());

    std::vector<std::size_t> order(scene.train.size());
    std::size_t cursor = order.size();
    for (int it = 0; it < iters; ++it) {
        if (cursor == order.size()) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::shuffle(order.begin(), order.end(), s.rng);
            cursor = 0;
        }
        const View& view = scene.train[order[cursor++]];
        const float t = float(view.time);
        const double lr_pos = detail::position_lr(c, s.scene_extent, it, iters);

        const Gaussians<float> fv = s.fg.view();
        const Gaussians<float> bv = s.bg.view();
        const std::size_t nb = s.bg.size(), nf = s.fg.size();
        const DeformationField<float>& ffield = s.field_fg;
        const DeformationField<float>& bfield = s.unified() ? s.field_fg : s.field_bg;
        const Gaussians<float> df = deform(ffield, fv, t);
        Gaussians<float> merged = deform(bfield, bv, t);
        merged.append(df);

        const auto out = render(merged, *view.camera, t, rs);
        const auto loss = panoptic_loss(view.image, out.rgb, c.loss_norm);
        const auto grads = render_backward(out, loss.d_rgb, loss.d_alpha);
        const Gaussians<float> gb_out = grads.params.slice(0, nb);
        const Gaussians<float> gf_out = grads.params.slice(nb, nf);

        if (c.legacy_densify) {
            std::vector<float> sb(grads.screen_grad.begin(), grads.screen_grad.begin() + 2 * nb);
            std::vector<float> sf(grads.screen_grad.begin() + 2 * nb, grads.screen_grad.end());
            stats_bg.accumulate(sb);
            stats_fg.accumulate(sf);
        }

        FieldGrads<float> grad_ffield = ffield.zeros_like();
        FieldGrads<float> grad_bfield = s.unified() ? FieldGrads<float>{} : bfield.zeros_like();
        Gaussians<float> gf = deform_backward(ffield, fv, t, gf_out, grad_ffield);
        Gaussians<float> gb = deform_backward(bfield, bv, t, gb_out, s.unified() ? grad_ffield : grad_bfield);

        double total = loss.value + detail::add_regularizer(c, fv, gf);
        if (bg_opacity) total += detail::add_regularizer(c, bv, gb);

        detail::step_set(s, s.fg, s.fg.storage_gradient(gf), "fg", lr_pos, fg_opt);
        if (nb) detail::step_set(s, s.bg, s.bg.storage_gradient(gb), "bg", lr_pos, bg_opt);
        detail::step_field(s, s.field_fg, grad_ffield, "field_fg");
        if (!s.unified()) detail::step_field(s, s.field_bg, grad_bfield, "field_bg");

        report.losses.push_back(total);
        s.dynamic_iterations = it + 1;

        while (next_event < events.size() && events[next_event] == it + 1) {
            DensifyEvent e{Stage::Dynamic, it + 1, s.fg.size(), 0, s.bg.size(), 0};
            if (c.legacy_densify) {
                densify_by_gradient(s.fg, stats_fg, c.gradient_threshold, s.scene_extent, s.rng);
                densify_by_gradient(s.bg, stats_bg, c.gradient_threshold, s.scene_extent, s.rng);
                stats_fg.reset(s.fg.size());
                stats_bg.reset(s.bg.size());
            } else if (s.fg.size() >= 10) {
                densify_dynamic(s.fg, displacement_stats(s.field_fg, s.fg), s.rng);
            }
            if (c.prune) {
                std::vector<std::size_t> rows;
                for (std::size_t i = 0; i < s.fg.size(); ++i)
                    if (double(s.fg.peak_opacity(i)) >= c.prune_threshold) rows.push_back(i);
                if (rows.size() != s.fg.size()) {
                    prune_low_opacity(s.fg, c.prune_threshold);
                    s.fg.for_each_array([&](const char* name, std::vector<float>&, std::size_t w) {
                        s.adam.remap_rows(std::string("fg.") + name, w, rows);
                    });
                    if (c.legacy_densify) stats_fg.reset(s.fg.size());
                }
            }
            e.fg_after = s.fg.size();
            e.bg_after = s.bg.size();
            report.events.push_back(e);
            detail::log_event(log, e, "dynamic");
            ++next_event;
        }

        if (log && c.log_every > 0 && ((it + 1) % c.log_every == 0 || it + 1 == iters)) {
            detail::log_metrics(log, it + 1, total, psnr(out.rgb, view.image), s.fg.size(), s.bg.size());
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace detail {

inline void put_set(ArrayContainer& c, const std::string& prefix, const GaussianSet<float>& g) {
    g.for_each_array([&](const char* name, const std::vector<float>& v, std::size_t w) {
        c.put_f32(prefix + "." + name, {g.size(), w}, v);
    });
}

inline GaussianSet<float> get_set(const ArrayContainer& c, const std::string& prefix, Representation tag) {
    GaussianSet<float> g;
    g.tag = tag;
    std::size_t n = 0;
    bool first = true;
    g.for_each_array([&](const char* name, std::vector<float>& v, std::size_t w) {
        v = c.get_f32(prefix + "." + name);
        if (v.size() % w != 0) throw ParseError("checkpoint: array '" + prefix + "." + name + "' has a bad size");
        if (first) n = v.size() / w;
        else if (v.size() / w != n) throw ParseError("checkpoint: set '" + prefix + "' has inconsistent rows");
        first = false;
    });
    return g;
}

inline nlohmann::json field_meta(const DeformationField<float>& f) {
    nlohmann::json j;
    j["variant"] = to_string(f.variant);
    j["box_min"] = {f.box_min.x(), f.box_min.y(), f.box_min.z()};
    j["box_max"] = {f.box_max.x(), f.box_max.y(), f.box_max.z()};
    j["features"] = f.features;
    j["hidden"] = f.hidden;
    nlohmann::json planes = nlohmann::json::array();
    for (const auto& p : f.planes) planes.push_back({p.rows, p.cols});
    j["planes"] = planes;
    nlohmann::json heads = nlohmann::json::array();
    for (const auto& h : f.heads) heads.push_back({h.name, h.outputs});
    j["heads"] = heads;
    return j;
}

inline void put_field(ArrayContainer& c, const std::string& prefix, const DeformationField<float>& f) {
    f.for_each_array([&](const std::string& name, const std::vector<float>& v) {
        c.put_f32(prefix + "." + name, {v.size()}, v);
    });
}

inline DeformationField<float> get_field(const ArrayContainer& c, const std::string& prefix, const nlohmann::json& j) {
    DeformationField<float> f;
    f.variant = j.at("variant").get<std::string>() == "foreground" ? Representation::Foreground
                                                                    : Representation::Background;
    const auto lo = j.at("box_min").get<std::vector<double>>();
    const auto hi = j.at("box_max").get<std::vector<double>>();
    f.box_min = Vec3<double>(lo.at(0), lo.at(1), lo.at(2));
    f.box_max = Vec3<double>(hi.at(0), hi.at(1), hi.at(2));
    f.features = j.at("features").get<int>();
    f.hidden = j.at("hidden").get<int>();
    const auto& planes = j.at("planes");
    for (int p = 0; p < 6; ++p) {
        f.planes[p].id = kPlaneIds[p];
        f.planes[p].rows = planes.at(p).at(0).get<int>();
        f.planes[p].cols = planes.at(p).at(1).get<int>();
        f.planes[p].features = f.features;
    }
    for (const auto& h : j.at("heads")) {
        DecoderHead<float> head;
        head.name = h.at(0).get<std::string>();
        head.outputs = h.at(1).get<int>();
        f.heads.push_back(std::move(head));
    }
    f.for_each_array([&](const std::string& name, std::vector<float>& v) { v = c.get_f32(prefix + "." + name); });
    for (const auto& p : f.planes) {
        if (p.values.size() != static_cast<std::size_t>(p.rows) * p.cols * p.features) {
            throw ParseError("checkpoint: plane size mismatch in '" + prefix + "'");
        }
    }
    if (f.trunk_weight.size() != static_cast<std::size_t>(f.hidden) * f.features) {
        throw ParseError("checkpoint: trunk size mismatch in '" + prefix + "'");
    }
    return f;
}

} // namespace detail

inline void save_checkpoint(const TrainState& s, const std::filesystem::path& path) {
    ArrayContainer c;
    c.put_text("config", s.config.to_text());
    nlohmann::json cams = nlohmann::json::array();
    for (const auto& cam : s.cameras) cams.push_back(camera_to_json(cam));
    c.put_text("cameras", cams.dump());
    detail::put_set(c, "fg", s.fg);
    detail::put_set(c, "bg", s.bg);
    detail::put_field(c, "field_fg", s.field_fg);
    if (!s.unified()) detail::put_field(c, "field_bg", s.field_bg);

    nlohmann::json meta;
    meta["stage"] = to_string(s.stage);
    meta["canonical_iterations"] = s.canonical_iterations;
    meta["dynamic_iterations"] = s.dynamic_iterations;
    meta["scene_extent"] = s.scene_extent;
    meta["initial_bg_count"] = s.initial_bg_count;
    meta["field_fg"] = detail::field_meta(s.field_fg);
    if (!s.unified()) meta["field_bg"] = detail::field_meta(s.field_bg);
    nlohmann::json steps;
    for (const auto& [name, slot] : s.adam.slots()) {
        steps[name] = slot.step;
        c.put_f32("adam." + name + ".m", {slot.m.size()}, slot.m);
        c.put_f32("adam." + name + ".v", {slot.v.size()}, slot.v);
    }
    meta["adam_steps"] = steps;
    std::ostringstream rng;
    rng << s.rng;
    meta["rng"] = rng.str();
    c.put_text("meta", meta.dump());
    c.write(path);
}

inline TrainState load_checkpoint(const std::filesystem::path& path) {
    const ArrayContainer c = ArrayContainer::read(path);
    TrainState s;
    try {
        s.config.apply_text(c.get_text("config"));
        for (const auto& j : nlohmann::json::parse(c.get_text("cameras"))) s.cameras.push_back(camera_from_json(j));
        const nlohmann::json meta = nlohmann::json::parse(c.get_text("meta"));
        s.stage = stage_from_string(meta.at("stage").get<std::string>());
        s.canonical_iterations = meta.at("canonical_iterations").get<int>();
        s.dynamic_iterations = meta.at("dynamic_iterations").get<int>();
        s.scene_extent = meta.at("scene_extent").get<double>();
        s.initial_bg_count = meta.at("initial_bg_count").get<std::size_t>();
        s.fg = detail::get_set(c, "fg", Representation::Foreground);
        s.bg = detail::get_set(c, "bg", Representation::Background);
        s.field_fg = detail::get_field(c, "field_fg", meta.at("field_fg"));
        if (!s.unified()) s.field_bg = detail::get_field(c, "field_bg", meta.at("field_bg"));
        for (const auto& [name, step] : meta.at("adam_steps").items()) {
            AdamSlot<float>& slot = s.adam.slots()[name];
            slot.step = step.get<std::uint64_t>();
            slot.m = c.get_f32("adam." + name + ".m");
            slot.v = c.get_f32("adam." + name + ".v");
        }
        std::istringstream rng(meta.at("rng").get<std::string>());
        rng >> s.rng;
        if (!rng) throw ParseError("checkpoint: bad generator state");
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return s;
}

// ---------------------------------------------------------------------------
// Evaluation

struct FrameMetrics {
    int frame = 0;
    int camera = 0;
    double time = 0.0;
    double psnr = 0.0;
    double ssim = 0.0;
    double psnr_mask = std::numeric_limits<double>::quiet_NaN();
    double ssim_mask = std::numeric_limits<double>::quiet_NaN();
};

/// Full and masked metrics of the merged render for each view. Views without a mask, or with
/// an empty one, get NaN masked metrics.
inline std::vector<FrameMetrics> evaluate_views(const TrainState& s, const std::vector<View>& views) {
    std::vector<FrameMetrics> out;
    std::map<int, int> frame_of_camera;
    for (const View& v : views) {
        FrameMetrics m;
        m.camera = v.camera->id;
        m.frame = frame_of_camera[m.camera]++;
        m.time = v.time;
        const auto r = render_state(s, *v.camera, float(v.time));
        m.psnr = psnr(r.rgb, v.image);
        m.ssim = ssim(r.rgb, v.image);
        if (v.mask && v.mask->count() > 0) {
            const MaskedMetrics mm = masked_metrics(r.rgb, v.image, *v.mask);
            m.psnr_mask = mm.psnr;
            m.ssim_mask = mm.ssim;
        }
        out.push_back(m);
    }
    return out;
}

/// IoU of the thresholded foreground alpha (alpha > 0.5) at t = 0 against a mask.
inline double segmentation_iou(const TrainState& s, const Camera& cam, const Mask& mask) {
    return mask_iou(threshold_alpha(render_foreground(s, cam, 0.0f).alpha, 0.5), mask);
}

} // namespace splitgs

#endif // SPLITGS_TRAINER_HPP
