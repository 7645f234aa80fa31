// splitgs command-line tool: synth, segment, train-canonical, train-dynamic, render, evaluate.

#include "splitgs/segmentation.hpp"
#include "splitgs/synth.hpp"
#include "splitgs/trainer.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace splitgs;

namespace {

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;

/// Input error that should be reported with usage text and exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

fs::path cameras_json(const std::string& scene) {
    fs::path p(scene);
    if (fs::is_directory(p)) p /= "cameras.json";
    if (!fs::exists(p)) throw UsageError("scene not found: " + p.string());
    return p;
}

void require_file(const std::string& path, const char* what) {
    if (!fs::is_regular_file(path)) throw UsageError(std::string(what) + " not found: " + path);
}

TrainConfig build_config(TrainConfig base, const std::string& config_path, const std::vector<std::string>& sets) {
    if (!config_path.empty()) {
        require_file(config_path, "config file");
        base.apply_file(config_path);
    }
    for (const auto& s : sets) base.apply(s);
    base.validate();
    return base;
}

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse-view dynamic Gaussian splatting with foreground/background separation", "splitgs"};
    app.require_subcommand(1);
    app.fallthrough();

    int threads = 0;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string config_path;
    std::vector<std::string> sets;
    app.add_option("--threads", threads, "Worker threads (default: all logical cores)")->check(CLI::NonNegativeNumber);
    app.add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t v) { seed = v, seed_given = true; }, "Random seed");
    app.add_option("--config", config_path, "Training config file (key = value lines)");
    app.add_option("--set", sets, "Config override key=value (repeatable)");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic scene directory");
    std::string recipe = "orbit", out_dir;
    synth->add_option("--recipe", recipe, "orbit | flame | static")->check(CLI::IsMember({"orbit", "flame", "static"}));
    synth->add_option("--out", out_dir, "Output directory")->required();

    // segment
    auto* segment = app.add_subcommand("segment", "Split a point cloud into foreground/background with t=0 masks");
    std::string scene_path, points_path, fg_out, bg_out;
    std::size_t fg_target = 50000, bg_target = 50000;
    bool no_resample = false;
    segment->add_option("--scene", scene_path, "Scene directory or cameras.json")->required();
    segment->add_option("--points", points_path, "Input point cloud (PLY)")->required();
    segment->add_option("--fg-out", fg_out, "Foreground PLY")->required();
    segment->add_option("--bg-out", bg_out, "Background PLY")->required();
    segment->add_option("--fg-target", fg_target, "Foreground point count after resampling")->check(CLI::PositiveNumber);
    segment->add_option("--bg-target", bg_target, "Background point count after resampling")->check(CLI::PositiveNumber);
    segment->add_flag("--no-resample", no_resample, "Keep the split clouds as they are");

    // train-canonical
    auto* train_c = app.add_subcommand("train-canonical", "Canonical stage anchored at t=0");
    std::string fg_in, bg_in, ckpt_out;
    train_c->add_option("--scene", scene_path, "Scene directory or cameras.json")->required();
    train_c->add_option("--fg", fg_in, "Foreground PLY")->required();
    train_c->add_option("--bg", bg_in, "Background PLY")->required();
    train_c->add_option("--out", ckpt_out, "Output checkpoint")->required();

    // train-dynamic
    auto* train_d = app.add_subcommand("train-dynamic", "Dynamic stage over all frames");
    std::string ckpt_in;
    train_d->add_option("--scene", scene_path, "Scene directory or cameras.json")->required();
    train_d->add_option("--checkpoint", ckpt_in, "Canonical checkpoint")->required();
    train_d->add_option("--out", ckpt_out, "Output checkpoint")->required();

    // render
    auto* render_cmd = app.add_subcommand("render", "Render a checkpoint to PNG");
    int camera_id = 0;
    double time = 0.0;
    std::string png_out;
    render_cmd->add_option("--checkpoint", ckpt_in, "Checkpoint")->required();
    render_cmd->add_option("--camera", camera_id, "Camera id")->required();
    render_cmd->add_option("--t", time, "Time in [0,1]")->check(CLI::Range(0.0, 1.0));
    render_cmd->add_option("--out", png_out, "Output PNG")->required();

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Per-frame metrics on the test cameras as CSV");
    std::string csv_out;
    evaluate->add_option("--checkpoint", ckpt_in, "Checkpoint")->required();
    evaluate->add_option("--scene", scene_path, "Scene directory or cameras.json")->required();
    evaluate->add_option("--out", csv_out, "CSV path (default: standard output)");

    auto usage_exit = [&](const std::string& msg) {
        std::cerr << "error: " << msg << "\n" << app.help();
        return kUsageError;
    };

    if (argc <= 1) {
        std::cerr << app.help();
        return kUsageError;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        std::string msg = e.what();
        for (auto& ch : msg)
            if (ch == '\n') ch = ' ';
        return usage_exit(msg);
    }

    if (threads > 0) omp_set_num_threads(threads);

    try {
        if (*synth) {
            const SceneRecipe r = recipe_by_name(recipe, seed);
            const SyntheticScene s = make_scene(r, seed);
            write_scene(s, out_dir);
            std::cout << "wrote " << recipe << " scene to " << out_dir << " (" << s.cameras.size() << " cameras, "
                      << s.times.size() << " frames, " << s.initial_points.size() << " points)\n";
        } else if (*segment) {
            const fs::path cj = cameras_json(scene_path);
            require_file(points_path, "point cloud");
            const SceneIndex index = load_scene_index(cj);
            std::vector<Camera> cams;
            std::vector<Mask> masks;
            for (const auto* e : index.with_role(CameraRole::Train)) {
                for (const auto& f : e->frames) {
                    if (f.mask) {
                        cams.push_back(e->camera);
                        masks.push_back(load_mask(index.resolve(*f.mask).string(), e->camera.width, e->camera.height));
                    }
                }
            }
            const PointCloud pc = load_point_cloud(points_path);
            SplitResult split = split_point_cloud(pc, cams, masks);
            std::mt19937_64 rng(seed);
            PointCloud fg = split.foreground, bg = split.background;
            if (!no_resample) {
                if (!fg.empty()) fg = voxel_resample(fg, fg_target, rng);
                if (!bg.empty()) bg = voxel_resample(bg, bg_target, rng);
            }
            save_point_cloud(fg_out, fg);
            save_point_cloud(bg_out, bg);
            std::cout << "foreground " << split.foreground.size() << " -> " << fg.size() << ", background "
                      << split.background.size() << " -> " << bg.size() << "\n";
        } else if (*train_c) {
            const fs::path cj = cameras_json(scene_path);
            require_file(fg_in, "foreground cloud");
            require_file(bg_in, "background cloud");
            TrainConfig base;
            if (seed_given) base.seed = seed;
            const TrainConfig cfg = build_config(base, config_path, sets);
            const LoadedScene scene = load_scene(cj);
            TrainState state = initialize_training(scene.cameras(), load_point_cloud(fg_in), load_point_cloud(bg_in), cfg);
            std::cout << "iter\tloss\tpsnr\tn_fg\tn_bg\n";
            train_canonical(state, scene, &std::cout);
            save_checkpoint(state, ckpt_out);
        } else if (*train_d) {
            const fs::path cj = cameras_json(scene_path);
            require_file(ckpt_in, "checkpoint");
            TrainState state = load_checkpoint(ckpt_in);
            const bool structural = state.config.unified_field;
            state.config = build_config(state.config, config_path, sets);
            if (state.config.unified_field != structural) {
                throw UsageError("unified_field cannot change after initialization");
            }
            if (state.config.freeze_background_opacity) detail::freeze_opacity(state.bg);
            const LoadedScene scene = load_scene(cj);
            std::cout << "iter\tloss\tpsnr\tn_fg\tn_bg\n";
            train_dynamic(state, scene, &std::cout);
            save_checkpoint(state, ckpt_out);
        } else if (*render_cmd) {
            require_file(ckpt_in, "checkpoint");
            const TrainState state = load_checkpoint(ckpt_in);
            const Camera* cam = nullptr;
            for (const auto& c : state.cameras)
                if (c.id == camera_id) cam = &c;
            if (!cam) throw UsageError("no camera with id " + std::to_string(camera_id) + " in checkpoint");
            write_png(png_out, render_state(state, *cam, float(time)).rgb);
        } else if (*evaluate) {
            require_file(ckpt_in, "checkpoint");
            const fs::path cj = cameras_json(scene_path);
            const TrainState state = load_checkpoint(ckpt_in);
            const LoadedScene scene = load_scene(cj);
            if (scene.test.empty()) throw PreconditionError("scene has no test cameras");
            const auto rows = evaluate_views(state, scene.test);
            std::ofstream file;
            if (!csv_out.empty()) {
                file.open(csv_out);
                if (!file) throw std::runtime_error(csv_out + ": cannot open for writing");
            }
            std::ostream& out = csv_out.empty() ? std::cout : file;
            out << "frame,camera,psnr,ssim,psnr_mask,ssim_mask\n";
            double sums[4] = {0, 0, 0, 0};
            int counts[4] = {0, 0, 0, 0};
            for (const auto& m : rows) {
                out << m.frame << ',' << m.camera << ',' << fmt(m.psnr) << ',' << fmt(m.ssim) << ','
                    << fmt(m.psnr_mask) << ',' << fmt(m.ssim_mask) << '\n';
                const double v[4] = {m.psnr, m.ssim, m.psnr_mask, m.ssim_mask};
                for (int k = 0; k < 4; ++k)
                    if (!std::isnan(v[k])) sums[k] += v[k], ++counts[k];
            }
            out << "mean,all";
            for (int k = 0; k < 4; ++k) out << ',' << fmt(counts[k] ? sums[k] / counts[k] : std::nan(""));
            out << '\n';
        }
    } catch (const UsageError& e) {
        return usage_exit(e.what());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
    return 0;
}
