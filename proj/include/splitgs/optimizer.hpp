#ifndef SPLITGS_OPTIMIZER_HPP
#define SPLITGS_OPTIMIZER_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace splitgs {

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-15;
};

/// First/second moment buffers of one parameter array.
template <typename T>
struct AdamSlot {
    std::vector<T> m;
    std::vector<T> v;
    std::uint64_t step = 0;
};

/// Adaptive moment estimation over named parameter arrays. Arrays may grow between steps
/// (densification); new entries start with zero moments.
template <typename T>
class Adam {
public:
    explicit Adam(AdamParams p = {}) : params_(p) {}

    void step(const std::string& name, std::vector<T>& values, const std::vector<T>& grads, double lr) {
        AdamSlot<T>& s = slots_[name];
        if (s.m.size() != values.size()) {
            s.m.resize(values.size(), T(0));
            s.v.resize(values.size(), T(0));
        }
        ++s.step;
        const double bc1 = 1.0 - std::pow(params_.beta1, double(s.step));
        const double bc2 = 1.0 - std::pow(params_.beta2, double(s.step));
        const T b1 = T(params_.beta1), b2 = T(params_.beta2);
        const T step_size = T(lr / bc1);
        const T inv_bc2 = T(1.0 / bc2);
        const T eps = T(params_.eps);
        for (std::size_t k = 0; k < values.size(); ++k) {
            const T g = grads[k];
            s.m[k] = b1 * s.m[k] + (T(1) - b1) * g;
            s.v[k] = b2 * s.v[k] + (T(1) - b2) * g * g;
            values[k] -= step_size * s.m[k] / (std::sqrt(s.v[k] * inv_bc2) + eps);
        }
    }

    /// Row k of the moments becomes old row rows[k] (row width `width`); used after pruning.
    void remap_rows(const std::string& name, std::size_t width, const std::vector<std::size_t>& rows) {
        auto it = slots_.find(name);
        if (it == slots_.end()) return;
        auto pick = [&](const std::vector<T>& src) {
            std::vector<T> out;
            out.reserve(rows.size() * width);
            for (std::size_t r : rows)
                for (std::size_t k = 0; k < width; ++k) {
                    const std::size_t j = r * width + k;
                    out.push_back(j < src.size() ? src[j] : T(0)); // rows added since the last step
                }
            return out;
        };
        it->second.m = pick(it->second.m);
        it->second.v = pick(it->second.v);
    }

    std::map<std::string, AdamSlot<T>>& slots() { return slots_; }
    const std::map<std::string, AdamSlot<T>>& slots() const { return slots_; }
    const AdamParams& params() const { return params_; }

private:
    AdamParams params_;
    std::map<std::string, AdamSlot<T>> slots_;
};

} // namespace splitgs

#endif // SPLITGS_OPTIMIZER_HPP
