#ifndef SPLITGS_CONFIG_HPP
#define SPLITGS_CONFIG_HPP

#include "splitgs/common.hpp"
#include "splitgs/hexplane.hpp"
#include "splitgs/losses.hpp"

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace splitgs {

/// Training configuration. Every field is addressable as a `key = value` line in a config
/// file or through `--set key=value`; see README for the key list.
struct TrainConfig {
    std::uint64_t seed = 0;
    int canonical_iters = 3000;
    int dynamic_iters = 7000;

    // Learning rates. Positions are scaled by the scene extent and decay exponentially
    // to lr_position_final over the run.
    double lr_position = 1.6e-4;
    double lr_position_final = 1.6e-6;
    double lr_rotation = 1e-3;
    double lr_scale = 5e-3;
    double lr_color = 2.5e-3;
    double lr_opacity = 5e-2; // peak opacity, bandwidth and temporal centre
    double lr_plane = 1.6e-2;
    double lr_head = 1.6e-3;

    double lambda_h = kLambdaPeakOpacity;
    double lambda_omega = kLambdaBandwidth;
    LossNorm loss_norm = LossNorm::L1;
    int blur_radius = 0; // 0 = scale with image width

    // Densification schedule (fractions of the respective stage).
    std::vector<double> canonical_densify_at{0.4, 0.8};
    int dynamic_densify_events = 3;
    bool prune = false;
    double prune_threshold = 0.005;
    double gradient_threshold = 2e-4;

    // Ablation switches.
    bool unified_field = false;
    bool legacy_canonical = false;
    bool legacy_densify = false;
    bool legacy_opacity = false;
    bool freeze_background_opacity = false;

    FieldConfig field;

    int log_every = 100;

    using Setter = std::function<void(TrainConfig&, const std::string&)>;

    static const std::map<std::string, std::pair<Setter, std::function<std::string(const TrainConfig&)>>>& keys() {
        static const auto table = [] {
            std::map<std::string, std::pair<Setter, std::function<std::string(const TrainConfig&)>>> t;
            auto num = [](const std::string& v) {
                std::size_t used = 0;
                const double d = std::stod(v, &used);
                if (used != v.size()) throw std::invalid_argument("not a number: " + v);
                return d;
            };
            auto integer = [](const std::string& v) {
                std::size_t used = 0;
                const long long d = std::stoll(v, &used);
                if (used != v.size()) throw std::invalid_argument("not an integer: " + v);
                return d;
            };
            auto boolean = [](const std::string& v) {
                if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
                if (v == "0" || v == "false" || v == "off" || v == "no") return false;
                throw std::invalid_argument("not a boolean: " + v);
            };
            auto fmt = [](double d) {
                std::ostringstream s;
                s.precision(17);
                s << d;
                return s.str();
            };
#define SPLITGS_DOUBLE(key, member)                                                                 \
    t[key] = {[=](TrainConfig& c, const std::string& v) { c.member = num(v); },                     \
              [=](const TrainConfig& c) { return fmt(c.member); }}
#define SPLITGS_INT(key, member)                                                                    \
    t[key] = {[=](TrainConfig& c, const std::string& v) { c.member = static_cast<decltype(c.member)>(integer(v)); }, \
              [](const TrainConfig& c) { return std::to_string(c.member); }}
#define SPLITGS_BOOL(key, member)                                                                   \
    t[key] = {[=](TrainConfig& c, const std::string& v) { c.member = boolean(v); },                 \
              [](const TrainConfig& c) { return std::string(c.member ? "true" : "false"); }}
            SPLITGS_INT("seed", seed);
            SPLITGS_INT("canonical_iters", canonical_iters);
            SPLITGS_INT("dynamic_iters", dynamic_iters);
            SPLITGS_DOUBLE("lr_position", lr_position);
            SPLITGS_DOUBLE("lr_position_final", lr_position_final);
            SPLITGS_DOUBLE("lr_rotation", lr_rotation);
            SPLITGS_DOUBLE("lr_scale", lr_scale);
            SPLITGS_DOUBLE("lr_color", lr_color);
            SPLITGS_DOUBLE("lr_opacity", lr_opacity);
            SPLITGS_DOUBLE("lr_plane", lr_plane);
            SPLITGS_DOUBLE("lr_head", lr_head);
            SPLITGS_DOUBLE("lambda_h", lambda_h);
            SPLITGS_DOUBLE("lambda_omega", lambda_omega);
            SPLITGS_INT("blur_radius", blur_radius);
            SPLITGS_INT("dynamic_densify_events", dynamic_densify_events);
            SPLITGS_BOOL("prune", prune);
            SPLITGS_DOUBLE("prune_threshold", prune_threshold);
            SPLITGS_DOUBLE("gradient_threshold", gradient_threshold);
            SPLITGS_BOOL("unified_field", unified_field);
            SPLITGS_BOOL("legacy_canonical", legacy_canonical);
            SPLITGS_BOOL("legacy_densify", legacy_densify);
            SPLITGS_BOOL("legacy_opacity", legacy_opacity);
            SPLITGS_BOOL("freeze_background_opacity", freeze_background_opacity);
            SPLITGS_INT("field_spatial_resolution", field.spatial_resolution);
            SPLITGS_INT("field_temporal_resolution", field.temporal_resolution);
            SPLITGS_INT("field_features", field.features);
            SPLITGS_INT("field_hidden", field.hidden);
            SPLITGS_DOUBLE("field_temporal_noise", field.temporal_noise);
            SPLITGS_INT("log_every", log_every);
#undef SPLITGS_DOUBLE
#undef SPLITGS_INT
#undef SPLITGS_BOOL
            t["loss_norm"] = {[](TrainConfig& c, const std::string& v) {
                                  if (v == "l1") c.loss_norm = LossNorm::L1;
                                  else if (v == "l2") c.loss_norm = LossNorm::L2;
                                  else throw std::invalid_argument("loss_norm must be l1 or l2");
                              },
                              [](const TrainConfig& c) { return std::string(c.loss_norm == LossNorm::L1 ? "l1" : "l2"); }};
            t["canonical_densify_at"] = {
                [num](TrainConfig& c, const std::string& v) {
                    c.canonical_densify_at.clear();
                    std::stringstream ss(v);
                    std::string item;
                    while (std::getline(ss, item, ',')) {
                        if (!item.empty()) c.canonical_densify_at.push_back(num(item));
                    }
                },
                [fmt](const TrainConfig& c) {
                    std::string s;
                    for (std::size_t k = 0; k < c.canonical_densify_at.size(); ++k) {
                        if (k) s += ",";
                        s += fmt(c.canonical_densify_at[k]);
                    }
                    return s;
                }};
            return t;
        }();
        return table;
    }

    void set(const std::string& key, const std::string& value) {
        const auto& k = keys();
        auto it = k.find(key);
        if (it == k.end()) throw std::invalid_argument("unknown config key '" + key + "'");
        try {
            it->second.first(*this, value);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("config key '" + key + "': " + e.what());
        } catch (const std::out_of_range&) {
            throw std::invalid_argument("config key '" + key + "': value out of range");
        }
    }

    /// Applies one `key=value` assignment.
    void apply(const std::string& assignment) {
        const auto eq = assignment.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("expected key=value, got '" + assignment + "'");
        set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
    }

    /// Parses `key = value` lines; blank lines and lines starting with '#' are ignored.
    void apply_text(const std::string& text) {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.resize(hash);
            line = trim(line);
            if (!line.empty()) apply(line);
        }
    }

    void apply_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ParseError(path + ": cannot open config file");
        std::stringstream ss;
        ss << in.rdbuf();
        apply_text(ss.str());
    }

    std::string to_text() const {
        std::string out;
        for (const auto& [key, fns] : keys()) out += key + " = " + fns.second(*this) + "\n";
        return out;
    }

    void validate() const {
        if (canonical_iters < 0 || dynamic_iters < 0) throw std::invalid_argument("iteration counts must be >= 0");
        for (double lr : {lr_position, lr_position_final, lr_rotation, lr_scale, lr_color, lr_opacity, lr_plane, lr_head}) {
            if (!(lr > 0.0)) throw std::invalid_argument("learning rates must be positive");
        }
        for (double f : canonical_densify_at) {
            if (!(f >= 0.0 && f < 1.0)) throw std::invalid_argument("canonical_densify_at entries must lie in [0,1)");
        }
        if (dynamic_densify_events < 0) throw std::invalid_argument("dynamic_densify_events must be >= 0");
    }

    OpacityModel opacity_model() const { return legacy_opacity ? OpacityModel::Legacy : OpacityModel::Squared; }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return {};
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }
};

} // namespace splitgs

#endif // SPLITGS_CONFIG_HPP
