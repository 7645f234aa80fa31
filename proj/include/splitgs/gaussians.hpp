#ifndef SPLITGS_GAUSSIANS_HPP
#define SPLITGS_GAUSSIANS_HPP

#include "splitgs/camera.hpp"
#include "splitgs/common.hpp"
#include "splitgs/point_cloud.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace splitgs {

enum class Representation { Foreground, Background };

inline const char* to_string(Representation r) {
    return r == Representation::Foreground ? "foreground" : "background";
}

/// Screen-space dilation added to the projected covariance diagonal.
inline constexpr double kCovarianceDilation = 0.3;
/// Upper clamp of a per-pixel splat alpha.
inline constexpr double kMaxAlpha = 0.99;

// Initial values for new Gaussians.
inline constexpr double kInitPeakOpacity = 0.1;
inline constexpr double kInitBandwidth = 0.0;
inline constexpr double kInitTemporalCenter = 0.5;

/// Natural-domain Gaussian parameters, the form consumed by the rasterizer:
/// colours in [0,1], peak opacity in (0,1], rotations as (possibly unnormalised)
/// w-x-y-z quaternions, log scales. Also used for gradients of the same layout.
template <typename T>
struct Gaussians {
    std::vector<T> position;        // N x 3
    std::vector<T> rotation;        // N x 4
    std::vector<T> log_scale;       // N x 3
    std::vector<T> color;           // N x 3
    std::vector<T> peak_opacity;    // N
    std::vector<T> bandwidth;       // N
    std::vector<T> temporal_center; // N

    std::size_t size() const { return peak_opacity.size(); }

    void resize(std::size_t n, T fill = T(0)) {
        position.assign(3 * n, fill);
        rotation.assign(4 * n, fill);
        log_scale.assign(3 * n, fill);
        color.assign(3 * n, fill);
        peak_opacity.assign(n, fill);
        bandwidth.assign(n, fill);
        temporal_center.assign(n, fill);
    }

    static Gaussians zeros(std::size_t n) {
        Gaussians g;
        g.resize(n);
        return g;
    }

    void append(const Gaussians& o) {
        position.insert(position.end(), o.position.begin(), o.position.end());
        rotation.insert(rotation.end(), o.rotation.begin(), o.rotation.end());
        log_scale.insert(log_scale.end(), o.log_scale.begin(), o.log_scale.end());
        color.insert(color.end(), o.color.begin(), o.color.end());
        peak_opacity.insert(peak_opacity.end(), o.peak_opacity.begin(), o.peak_opacity.end());
        bandwidth.insert(bandwidth.end(), o.bandwidth.begin(), o.bandwidth.end());
        temporal_center.insert(temporal_center.end(), o.temporal_center.begin(), o.temporal_center.end());
    }

    /// Rows [first, first + count).
    Gaussians slice(std::size_t first, std::size_t count) const {
        Gaussians g;
        auto cut = [&](const std::vector<T>& src, std::vector<T>& dst, std::size_t w) {
            dst.assign(src.begin() + static_cast<std::ptrdiff_t>(w * first),
                       src.begin() + static_cast<std::ptrdiff_t>(w * (first + count)));
        };
        cut(position, g.position, 3);
        cut(rotation, g.rotation, 4);
        cut(log_scale, g.log_scale, 3);
        cut(color, g.color, 3);
        cut(peak_opacity, g.peak_opacity, 1);
        cut(bandwidth, g.bandwidth, 1);
        cut(temporal_center, g.temporal_center, 1);
        return g;
    }

    Vec3<T> pos(std::size_t i) const { return {position[3 * i], position[3 * i + 1], position[3 * i + 2]}; }
    Vec4<T> rot(std::size_t i) const {
        return {rotation[4 * i], rotation[4 * i + 1], rotation[4 * i + 2], rotation[4 * i + 3]};
    }
    Vec3<T> scale(std::size_t i) const { return {log_scale[3 * i], log_scale[3 * i + 1], log_scale[3 * i + 2]}; }
    Vec3<T> col(std::size_t i) const { return {color[3 * i], color[3 * i + 1], color[3 * i + 2]}; }

    template <typename F>
    void for_each_array(F&& f) {
        f("position", position, 3);
        f("rotation", rotation, 4);
        f("log_scale", log_scale, 3);
        f("color", color, 3);
        f("peak_opacity", peak_opacity, 1);
        f("bandwidth", bandwidth, 1);
        f("temporal_center", temporal_center, 1);
    }
};

/// Trainable Gaussian set in its storage domain. Colours and peak opacity are
/// stored as logits, scales as logs, so unconstrained optimiser steps stay valid.
template <typename T>
struct GaussianSet {
    Representation tag = Representation::Foreground;
    std::vector<T> position;        // N x 3
    std::vector<T> rotation;        // N x 4, w x y z
    std::vector<T> log_scale;       // N x 3
    std::vector<T> color_logit;     // N x 3
    std::vector<T> opacity_logit;   // N
    std::vector<T> bandwidth;       // N
    std::vector<T> temporal_center; // N

    std::size_t size() const { return opacity_logit.size(); }

    template <typename F>
    void for_each_array(F&& f) {
        f("position", position, 3);
        f("rotation", rotation, 4);
        f("log_scale", log_scale, 3);
        f("color_logit", color_logit, 3);
        f("opacity_logit", opacity_logit, 1);
        f("bandwidth", bandwidth, 1);
        f("temporal_center", temporal_center, 1);
    }
    template <typename F>
    void for_each_array(F&& f) const {
        const_cast<GaussianSet*>(this)->for_each_array(
            [&](const char* name, const std::vector<T>& v, std::size_t w) { f(name, v, w); });
    }

    T peak_opacity(std::size_t i) const { return sigmoid(opacity_logit[i]); }

    /// Decodes to the natural domain.
    Gaussians<T> view() const {
        Gaussians<T> g;
        g.position = position;
        g.rotation = rotation;
        g.log_scale = log_scale;
        g.color.resize(color_logit.size());
        std::transform(color_logit.begin(), color_logit.end(), g.color.begin(), [](T v) { return sigmoid(v); });
        g.peak_opacity.resize(opacity_logit.size());
        std::transform(opacity_logit.begin(), opacity_logit.end(), g.peak_opacity.begin(),
                       [](T v) { return sigmoid(v); });
        g.bandwidth = bandwidth;
        g.temporal_center.resize(temporal_center.size());
        std::transform(temporal_center.begin(), temporal_center.end(), g.temporal_center.begin(),
                       [](T v) { return std::clamp(v, T(0), T(1)); });
        return g;
    }

    /// Maps natural-domain gradients onto the storage arrays (same layout as this set).
    GaussianSet storage_gradient(const Gaussians<T>& grad) const {
        GaussianSet out;
        out.tag = tag;
        out.position = grad.position;
        out.rotation = grad.rotation;
        out.log_scale = grad.log_scale;
        out.color_logit.resize(color_logit.size());
        for (std::size_t k = 0; k < color_logit.size(); ++k) {
            const T c = sigmoid(color_logit[k]);
            out.color_logit[k] = grad.color[k] * c * (T(1) - c);
        }
        out.opacity_logit.resize(opacity_logit.size());
        for (std::size_t i = 0; i < opacity_logit.size(); ++i) {
            const T h = sigmoid(opacity_logit[i]);
            out.opacity_logit[i] = grad.peak_opacity[i] * h * (T(1) - h);
        }
        out.bandwidth = grad.bandwidth;
        out.temporal_center = grad.temporal_center;
        return out;
    }

    void append_row(const GaussianSet& src, std::size_t i) {
        auto copy = [&](std::vector<T>& dst, const std::vector<T>& s, std::size_t w) {
            dst.insert(dst.end(), s.begin() + static_cast<std::ptrdiff_t>(w * i),
                       s.begin() + static_cast<std::ptrdiff_t>(w * (i + 1)));
        };
        copy(position, src.position, 3);
        copy(rotation, src.rotation, 4);
        copy(log_scale, src.log_scale, 3);
        copy(color_logit, src.color_logit, 3);
        copy(opacity_logit, src.opacity_logit, 1);
        copy(bandwidth, src.bandwidth, 1);
        copy(temporal_center, src.temporal_center, 1);
    }

    /// Renormalizes rotations (when `rotations` is set) and clamps temporal centres to [0,1].
    void sanitize(bool rotations = true) {
        for (std::size_t i = 0; i < size(); ++i) {
            temporal_center[i] = std::clamp(temporal_center[i], T(0), T(1));
            if (!rotations) continue;
            T* q = &rotation[4 * i];
            const T n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
            if (n > T(0)) {
                for (int k = 0; k < 4; ++k) q[k] /= n;
            } else {
                q[0] = T(1);
            }
        }
    }

    /// Builds a set from points: identity rotation, scale from the mean distance to the
    /// three nearest neighbours, colour from the cloud, default temporal opacity.
    static GaussianSet from_point_cloud(const PointCloud& pc, Representation tag) {
        GaussianSet g;
        g.tag = tag;
        const std::size_t n = pc.size();
        std::vector<double> nn(n, 0.0);
        constexpr int kNeighbours = 3;
        for (std::size_t i = 0; i < n; ++i) {
            double best[kNeighbours];
            std::fill(best, best + kNeighbours, std::numeric_limits<double>::infinity());
            const Vec3<double> p = pc.position(i);
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double d = (pc.position(j) - p).squaredNorm();
                if (d < best[kNeighbours - 1]) {
                    int k = kNeighbours - 1;
                    while (k > 0 && best[k - 1] > d) {
                        best[k] = best[k - 1];
                        --k;
                    }
                    best[k] = d;
                }
            }
            double sum = 0.0;
            int cnt = 0;
            for (double b : best) {
                if (std::isfinite(b)) {
                    sum += b;
                    ++cnt;
                }
            }
            nn[i] = cnt > 0 ? sum / cnt : 0.0;
        }
        double fallback = 1e-2;
        if (n > 1) {
            const auto [lo, hi] = pc.bounds();
            fallback = std::max(1e-4, 0.01 * (hi - lo).maxCoeff());
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double d2 = nn[i] > 1e-14 ? nn[i] : fallback * fallback;
            const double s = std::log(std::sqrt(d2));
            g.position.insert(g.position.end(), {T(pc.positions[3 * i]), T(pc.positions[3 * i + 1]),
                                                 T(pc.positions[3 * i + 2])});
            g.rotation.insert(g.rotation.end(), {T(1), T(0), T(0), T(0)});
            g.log_scale.insert(g.log_scale.end(), {T(s), T(s), T(s)});
            for (int c = 0; c < 3; ++c) {
                const double v = std::clamp(pc.colors[3 * i + c], 1e-3, 1.0 - 1e-3);
                g.color_logit.push_back(T(logit(v)));
            }
            g.opacity_logit.push_back(T(logit(kInitPeakOpacity)));
            g.bandwidth.push_back(T(kInitBandwidth));
            g.temporal_center.push_back(T(kInitTemporalCenter));
        }
        return g;
    }

    PointCloud to_point_cloud() const {
        PointCloud pc;
        for (std::size_t i = 0; i < size(); ++i) {
            pc.push_back({double(position[3 * i]), double(position[3 * i + 1]), double(position[3 * i + 2])},
                         {double(sigmoid(color_logit[3 * i])), double(sigmoid(color_logit[3 * i + 1])),
                          double(sigmoid(color_logit[3 * i + 2]))});
        }
        return pc;
    }

    template <typename U>
    GaussianSet<U> cast() const {
        GaussianSet<U> g;
        g.tag = tag;
        auto cv = [](const std::vector<T>& v) { return std::vector<U>(v.begin(), v.end()); };
        g.position = cv(position);
        g.rotation = cv(rotation);
        g.log_scale = cv(log_scale);
        g.color_logit = cv(color_logit);
        g.opacity_logit = cv(opacity_logit);
        g.bandwidth = cv(bandwidth);
        g.temporal_center = cv(temporal_center);
        return g;
    }
};

// ---------------------------------------------------------------------------
// Covariance

/// Rotation matrix of the normalised quaternion (w, x, y, z).
template <typename T>
inline Mat3<T> quaternion_to_rotation(const Vec4<T>& q_in) {
    const Vec4<T> q = q_in / q_in.norm();
    const T w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3<T> R;
    R << T(1) - T(2) * (y * y + z * z), T(2) * (x * y - w * z), T(2) * (x * z + w * y),
         T(2) * (x * y + w * z), T(1) - T(2) * (x * x + z * z), T(2) * (y * z - w * x),
         T(2) * (x * z - w * y), T(2) * (y * z + w * x), T(1) - T(2) * (x * x + y * y);
    return R;
}

/// Adjoint of quaternion_to_rotation including the normalisation step.
template <typename T>
inline Vec4<T> quaternion_to_rotation_backward(const Vec4<T>& q_in, const Mat3<T>& G) {
    const T len = q_in.norm();
    const Vec4<T> q = q_in / len;
    const T w = q[0], x = q[1], y = q[2], z = q[3];
    Vec4<T> d;
    d[0] = T(2) * (-z * G(0, 1) + y * G(0, 2) + z * G(1, 0) - x * G(1, 2) - y * G(2, 0) + x * G(2, 1));
    d[1] = T(2) * (y * G(0, 1) + z * G(0, 2) + y * G(1, 0) - w * G(1, 2) + z * G(2, 0) + w * G(2, 1)) -
           T(4) * x * (G(1, 1) + G(2, 2));
    d[2] = T(2) * (x * G(0, 1) + w * G(0, 2) + x * G(1, 0) + z * G(1, 2) - w * G(2, 0) + z * G(2, 1)) -
           T(4) * y * (G(0, 0) + G(2, 2));
    d[3] = T(2) * (-w * G(0, 1) + x * G(0, 2) + w * G(1, 0) + y * G(1, 2) + x * G(2, 0) + y * G(2, 1)) -
           T(4) * z * (G(0, 0) + G(1, 1));
    return (d - q * q.dot(d)) / len;
}

/// Sigma = R diag(exp(s))^2 R^T.
template <typename T>
inline Mat3<T> build_covariance(const Vec4<T>& q, const Vec3<T>& log_scale) {
    const Mat3<T> R = quaternion_to_rotation(q);
    const Vec3<T> e = log_scale.array().exp();
    const Mat3<T> M = R * e.asDiagonal();
    return M * M.transpose();
}

/// Given dL/dSigma (any 3x3, not necessarily symmetric) returns dL/dq and dL/ds.
template <typename T>
inline void build_covariance_backward(const Vec4<T>& q, const Vec3<T>& log_scale, const Mat3<T>& dSigma,
                                      Vec4<T>& dq, Vec3<T>& ds) {
    const Mat3<T> R = quaternion_to_rotation(q);
    const Vec3<T> e = log_scale.array().exp();
    const Mat3<T> M = R * e.asDiagonal();
    const Mat3<T> dM = (dSigma + dSigma.transpose()) * M;
    Mat3<T> dR;
    for (int i = 0; i < 3; ++i) {
        dR.col(i) = dM.col(i) * e[i];
        ds[i] = dM.col(i).dot(R.col(i)) * e[i];
    }
    dq = quaternion_to_rotation_backward(q, dR);
}

/// Lateral limit of x/z and y/z at which the covariance Jacobian is evaluated: 1.3 times the
/// half field of view. Without it, Gaussians at grazing depth far off-screen project to
/// unbounded footprints.
inline constexpr double kJacobianFovMargin = 1.3;

/// Camera point used for the covariance Jacobian; `clamped_x/y` report -1, 0 or +1.
template <typename T>
inline Vec3<T> jacobian_point(const Camera& cam, const Vec3<T>& xc, int* clamped_x = nullptr, int* clamped_y = nullptr) {
    const T lim_x = T(kJacobianFovMargin * 0.5 * cam.width / cam.fx);
    const T lim_y = T(kJacobianFovMargin * 0.5 * cam.height / cam.fy);
    Vec3<T> out = xc;
    auto clamp_axis = [&](int axis, T lim, int* flag) {
        const T r = xc[axis] / xc.z();
        int f = 0;
        if (r > lim) f = 1;
        else if (r < -lim) f = -1;
        if (f != 0) out[axis] = T(f) * lim * xc.z();
        if (flag) *flag = f;
    };
    clamp_axis(0, lim_x, clamped_x);
    clamp_axis(1, lim_y, clamped_y);
    return out;
}

/// Sigma' = J W Sigma W^T J^T + dilation * I. Requires the point inside the frustum.
template <typename T>
inline Mat2<T> project_covariance(const Camera& cam, const Vec3<T>& x, const Mat3<T>& sigma) {
    const Vec3<T> xc = to_camera(cam, x);
    const Mat23<T> T_ = projection_jacobian(cam, jacobian_point(cam, xc)) * rotation_as<T>(cam);
    Mat2<T> s2 = T_ * sigma * T_.transpose();
    s2(0, 0) += T(kCovarianceDilation);
    s2(1, 1) += T(kCovarianceDilation);
    return s2;
}

// ---------------------------------------------------------------------------
// Temporal opacity

enum class OpacityModel {
    Squared, // h * exp(-w^2 |t - mu|^2)
    Legacy   // h * exp(w |t - mu|^2)
};

template <typename T>
inline T temporal_opacity(T h, T omega, T mu, T t, OpacityModel model = OpacityModel::Squared) {
    const T dt = t - mu;
    if (model == OpacityModel::Legacy) return h * std::exp(omega * dt * dt);
    return h * std::exp(-omega * omega * dt * dt);
}

/// Partial derivatives of temporal_opacity with respect to (h, omega, mu).
template <typename T>
inline Vec3<T> temporal_opacity_grad(T h, T omega, T mu, T t, OpacityModel model = OpacityModel::Squared) {
    const T dt = t - mu;
    if (model == OpacityModel::Legacy) {
        const T e = std::exp(omega * dt * dt);
        return {e, h * e * dt * dt, -T(2) * h * e * omega * dt};
    }
    const T e = std::exp(-omega * omega * dt * dt);
    return {e, -T(2) * h * e * omega * dt * dt, T(2) * h * e * omega * omega * dt};
}

// ---------------------------------------------------------------------------
// Splats

/// Unclamped Gaussian falloff exp(-1/2 d^T conic d), conic = inverse 2-D covariance.
template <typename T>
inline T splat_falloff(const Vec3<T>& conic, T dx, T dy) {
    const T power = T(-0.5) * (conic[0] * dx * dx + conic[2] * dy * dy) - conic[1] * dx * dy;
    return std::exp(power);
}

template <typename T>
inline Vec3<T> conic_of(const Mat2<T>& cov2d) {
    const T det = cov2d(0, 0) * cov2d(1, 1) - cov2d(0, 1) * cov2d(1, 0);
    if (!(det > T(0))) {
        throw std::logic_error("splat covariance is not positive definite");
    }
    return {cov2d(1, 1) / det, -cov2d(0, 1) / det, cov2d(0, 0) / det};
}

/// alpha = sigma_t * exp(-1/2 d^T Sigma'^-1 d), clamped to [0, 0.99].
template <typename T>
inline T splat_alpha(T sigma_t, const Mat2<T>& cov2d, const Vec2<T>& d) {
    const Vec3<T> conic = conic_of(cov2d);
    return std::min(T(kMaxAlpha), sigma_t * splat_falloff(conic, d.x(), d.y()));
}

/// A Gaussian projected to the image plane at a given time.
template <typename T>
struct Splat2D {
    Vec2<T> center = Vec2<T>::Zero();
    Mat2<T> cov2d = Mat2<T>::Identity();
    Vec3<T> conic = Vec3<T>::Zero(); // (a, b, c) of the inverse covariance
    T depth{};
    Vec3<T> color = Vec3<T>::Zero();
    T opacity{}; // sigma(t)
    bool valid = false;
};

template <typename T>
inline Splat2D<T> project_gaussian(const Gaussians<T>& g, std::size_t i, const Camera& cam, T t,
                                   OpacityModel model = OpacityModel::Squared) {
    Splat2D<T> s;
    const Vec3<T> x = g.pos(i);
    const Projection<T> p = project_point(cam, x);
    if (!p.in_frustum) return s;
    const Mat3<T> sigma = build_covariance(g.rot(i), g.scale(i));
    s.cov2d = project_covariance(cam, x, sigma);
    s.conic = conic_of(s.cov2d);
    s.center = Vec2<T>(p.u, p.v);
    s.depth = p.depth;
    s.color = g.col(i);
    s.opacity = temporal_opacity(g.peak_opacity[i], g.bandwidth[i], g.temporal_center[i], t, model);
    s.valid = std::isfinite(s.center.x()) && std::isfinite(s.center.y());
    return s;
}

/// Gradients with respect to one Splat2D's screen-space quantities.
template <typename T>
struct SplatGrad {
    Vec2<T> center = Vec2<T>::Zero();
    Vec3<T> conic = Vec3<T>::Zero(); // d/da, d/db (b counted once), d/dc
    T opacity{};
    Vec3<T> color = Vec3<T>::Zero();
};

/// Chain rule from screen-space splat gradients to the natural parameters of Gaussian i.
/// Accumulates into `out` at row i.
template <typename T>
inline void project_gaussian_backward(const Gaussians<T>& g, std::size_t i, const Camera& cam, T t,
                                      const Splat2D<T>& s, const SplatGrad<T>& gs, Gaussians<T>& out,
                                      OpacityModel model = OpacityModel::Squared) {
    const Vec3<T> x = g.pos(i);
    const Vec4<T> q = g.rot(i);
    const Vec3<T> ls = g.scale(i);
    const Mat3<T> W = rotation_as<T>(cam);
    const Vec3<T> xc = to_camera(cam, x);
    int clamp_x = 0, clamp_y = 0;
    const Vec3<T> xj = jacobian_point(cam, xc, &clamp_x, &clamp_y);
    const Mat23<T> J = projection_jacobian(cam, xj);
    const Mat23<T> TJ = J * W;
    const Mat3<T> sigma = build_covariance(q, ls);

    // conic -> cov2d:  dL/dSigma' = -A G_A A
    Mat2<T> A;
    A << s.conic[0], s.conic[1], s.conic[1], s.conic[2];
    Mat2<T> GA;
    GA << gs.conic[0], T(0.5) * gs.conic[1], T(0.5) * gs.conic[1], gs.conic[2];
    const Mat2<T> G2 = -(A * GA * A);

    // cov2d -> Sigma, T
    const Mat3<T> dSigma = TJ.transpose() * G2 * TJ;
    const Mat23<T> dT = (G2 + G2.transpose()) * TJ * sigma;
    const Mat23<T> dJ = dT * W.transpose();

    const T fx = T(cam.fx), fy = T(cam.fy);
    const T iz = T(1) / xc.z();
    const T iz2 = iz * iz;
    const T iz3 = iz2 * iz;
    // J entries: J00 = fx/z, J02 = -fx x/z^2, J11 = fy/z, J12 = -fy y/z^2, at the clamped point.
    Vec3<T> dxj;
    dxj.x() = dJ(0, 2) * (-fx * iz2);
    dxj.y() = dJ(1, 2) * (-fy * iz2);
    dxj.z() = dJ(0, 0) * (-fx * iz2) + dJ(0, 2) * (T(2) * fx * xj.x() * iz3) + dJ(1, 1) * (-fy * iz2) +
              dJ(1, 2) * (T(2) * fy * xj.y() * iz3);
    Vec3<T> dxc(T(0), T(0), dxj.z());
    if (clamp_x == 0) dxc.x() += dxj.x();
    else dxc.z() += dxj.x() * xj.x() / xc.z();
    if (clamp_y == 0) dxc.y() += dxj.y();
    else dxc.z() += dxj.y() * xj.y() / xc.z();
    // centre
    dxc.x() += gs.center.x() * fx * iz;
    dxc.y() += gs.center.y() * fy * iz;
    dxc.z() += -gs.center.x() * fx * xc.x() * iz2 - gs.center.y() * fy * xc.y() * iz2;
    const Vec3<T> dx = W.transpose() * dxc;

    Vec4<T> dq;
    Vec3<T> ds;
    build_covariance_backward(q, ls, dSigma, dq, ds);

    const Vec3<T> dop = temporal_opacity_grad(g.peak_opacity[i], g.bandwidth[i], g.temporal_center[i], t, model);

    for (int k = 0; k < 3; ++k) {
        out.position[3 * i + k] += dx[k];
        out.log_scale[3 * i + k] += ds[k];
        out.color[3 * i + k] += gs.color[k];
    }
    for (int k = 0; k < 4; ++k) out.rotation[4 * i + k] += dq[k];
    out.peak_opacity[i] += gs.opacity * dop[0];
    out.bandwidth[i] += gs.opacity * dop[1];
    out.temporal_center[i] += gs.opacity * dop[2];
}

} // namespace splitgs

#endif // SPLITGS_GAUSSIANS_HPP
