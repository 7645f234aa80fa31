#ifndef SPLITGS_SCENE_HPP
#define SPLITGS_SCENE_HPP

#include "splitgs/camera.hpp"
#include "splitgs/image.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace splitgs {

struct Frame {
    double time = 0.0;
    std::string image;
    std::optional<std::string> mask;      // segmentation mask, t = 0 only
    std::optional<std::string> eval_mask; // per-frame foreground mask for masked metrics
};

enum class CameraRole { Train, Test };

/// One camera entry of cameras.json.
struct CameraEntry {
    Camera camera;
    CameraRole role = CameraRole::Train;
    std::vector<Frame> frames; // strictly increasing in time
};

/// Parsed cameras.json; paths in frames are resolved against `root`.
struct SceneIndex {
    std::filesystem::path root;
    std::vector<CameraEntry> entries;

    const CameraEntry& entry(int camera_id) const {
        for (const auto& e : entries) {
            if (e.camera.id == camera_id) return e;
        }
        throw std::out_of_range("no camera with id " + std::to_string(camera_id));
    }

    std::vector<const CameraEntry*> with_role(CameraRole role) const {
        std::vector<const CameraEntry*> out;
        for (const auto& e : entries) {
            if (e.role == role) out.push_back(&e);
        }
        return out;
    }

    std::filesystem::path resolve(const std::string& p) const { return root / p; }
};

inline nlohmann::json camera_to_json(const Camera& c) {
    nlohmann::json j;
    j["id"] = c.id;
    j["width"] = c.width;
    j["height"] = c.height;
    j["fx"] = c.fx;
    j["fy"] = c.fy;
    j["cx"] = c.cx;
    j["cy"] = c.cy;
    std::vector<double> R(9);
    for (int r = 0; r < 3; ++r)
        for (int k = 0; k < 3; ++k) R[3 * r + k] = c.rotation(r, k);
    j["R"] = R;
    j["t"] = {c.translation.x(), c.translation.y(), c.translation.z()};
    return j;
}

inline Camera camera_from_json(const nlohmann::json& j) {
    Camera c;
    c.id = j.at("id").get<int>();
    c.width = j.at("width").get<int>();
    c.height = j.at("height").get<int>();
    c.fx = j.at("fx").get<double>();
    c.fy = j.at("fy").get<double>();
    c.cx = j.at("cx").get<double>();
    c.cy = j.at("cy").get<double>();
    const auto R = j.at("R").get<std::vector<double>>();
    const auto t = j.at("t").get<std::vector<double>>();
    if (R.size() != 9 || t.size() != 3) {
        throw ParseError("camera " + std::to_string(c.id) + ": R needs 9 values and t needs 3");
    }
    for (int r = 0; r < 3; ++r)
        for (int k = 0; k < 3; ++k) c.rotation(r, k) = R[3 * r + k];
    c.translation = Eigen::Vector3d(t[0], t[1], t[2]);
    c.validate();
    return c;
}

inline nlohmann::json scene_to_json(const SceneIndex& scene) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : scene.entries) {
        nlohmann::json j = camera_to_json(e.camera);
        j["split"] = e.role == CameraRole::Train ? "train" : "test";
        nlohmann::json frames = nlohmann::json::array();
        for (const auto& f : e.frames) {
            nlohmann::json fj;
            fj["t"] = f.time;
            fj["image"] = f.image;
            if (f.mask) fj["mask"] = *f.mask;
            if (f.eval_mask) fj["eval_mask"] = *f.eval_mask;
            frames.push_back(std::move(fj));
        }
        j["frames"] = std::move(frames);
        arr.push_back(std::move(j));
    }
    return arr;
}

inline SceneIndex scene_from_json(const nlohmann::json& arr, const std::filesystem::path& root) {
    if (!arr.is_array()) throw ParseError("cameras.json: top level must be an array");
    SceneIndex scene;
    scene.root = root;
    for (const auto& j : arr) {
        CameraEntry e;
        e.camera = camera_from_json(j);
        const std::string split = j.value("split", std::string("train"));
        if (split == "train") e.role = CameraRole::Train;
        else if (split == "test") e.role = CameraRole::Test;
        else throw ParseError("camera " + std::to_string(e.camera.id) + ": unknown split '" + split + "'");
        for (const auto& fj : j.value("frames", nlohmann::json::array())) {
            Frame f;
            f.time = fj.at("t").get<double>();
            f.image = fj.at("image").get<std::string>();
            if (fj.contains("mask")) f.mask = fj.at("mask").get<std::string>();
            if (fj.contains("eval_mask")) f.eval_mask = fj.at("eval_mask").get<std::string>();
            if (!(f.time >= 0.0 && f.time <= 1.0)) {
                throw ParseError("camera " + std::to_string(e.camera.id) + ": frame time outside [0,1]");
            }
            if (f.mask && f.time != 0.0) {
                throw ParseError("camera " + std::to_string(e.camera.id) + ": mask given for t != 0");
            }
            if (!e.frames.empty() && !(f.time > e.frames.back().time)) {
                throw ParseError("camera " + std::to_string(e.camera.id) +
                                 ": frame times must be strictly increasing");
            }
            e.frames.push_back(std::move(f));
        }
        scene.entries.push_back(std::move(e));
    }
    return scene;
}

inline SceneIndex load_scene_index(const std::filesystem::path& cameras_json) {
    std::ifstream in(cameras_json);
    if (!in) throw ParseError(cameras_json.string() + ": cannot open file");
    nlohmann::json arr;
    try {
        arr = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(cameras_json.string() + ": " + e.what());
    }
    try {
        return scene_from_json(arr, cameras_json.parent_path());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(cameras_json.string() + ": " + e.what());
    }
}

inline void save_scene_index(const std::filesystem::path& cameras_json, const SceneIndex& scene) {
    std::ofstream out(cameras_json);
    if (!out) throw std::runtime_error(cameras_json.string() + ": cannot open for writing");
    out << scene_to_json(scene).dump(2) << "\n";
}

/// One decoded training or evaluation view.
struct View {
    const Camera* camera = nullptr;
    double time = 0.0;
    Image<float> image;
    std::optional<Mask> mask;
};

/// Scene images decoded into memory, grouped by camera role.
struct LoadedScene {
    SceneIndex index;
    std::vector<View> train;     // every (train camera, frame)
    std::vector<View> canonical; // t = 0 frames of train cameras, with masks
    std::vector<View> test;      // every (test camera, frame), eval_mask when available

    // Views point into `index`, so copies would dangle.
    LoadedScene() = default;
    LoadedScene(LoadedScene&&) = default;
    LoadedScene& operator=(LoadedScene&&) = default;
    LoadedScene(const LoadedScene&) = delete;
    LoadedScene& operator=(const LoadedScene&) = delete;

    std::vector<Camera> cameras() const {
        std::vector<Camera> out;
        for (const auto& e : index.entries) out.push_back(e.camera);
        return out;
    }
};

inline Image<float> load_view_image(const SceneIndex& s, const CameraEntry& e, const Frame& f) {
    Image<float> img = read_png_rgb(s.resolve(f.image).string());
    if (img.width != e.camera.width || img.height != e.camera.height) {
        throw ShapeError(f.image + ": image is " + std::to_string(img.width) + "x" +
                         std::to_string(img.height) + " but camera is " +
                         std::to_string(e.camera.width) + "x" + std::to_string(e.camera.height));
    }
    return img;
}

inline LoadedScene load_scene(const std::filesystem::path& cameras_json) {
    LoadedScene ls;
    ls.index = load_scene_index(cameras_json);
    for (const auto& e : ls.index.entries) {
        for (const auto& f : e.frames) {
            View v;
            v.camera = &e.camera;
            v.time = f.time;
            v.image = load_view_image(ls.index, e, f);
            if (e.role == CameraRole::Train) {
                if (f.mask) {
                    View c = v;
                    c.mask = load_mask(ls.index.resolve(*f.mask).string(), e.camera.width, e.camera.height);
                    ls.canonical.push_back(std::move(c));
                }
                ls.train.push_back(std::move(v));
            } else {
                if (f.eval_mask) {
                    v.mask = load_mask(ls.index.resolve(*f.eval_mask).string(), e.camera.width,
                                       e.camera.height);
                }
                ls.test.push_back(std::move(v));
            }
        }
    }
    return ls;
}

} // namespace splitgs

#endif // SPLITGS_SCENE_HPP
