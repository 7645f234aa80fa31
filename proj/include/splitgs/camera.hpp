#ifndef SPLITGS_CAMERA_HPP
#define SPLITGS_CAMERA_HPP

#include "splitgs/common.hpp"

#include <Eigen/Dense>

#include <string>

namespace splitgs {

/// Pinhole camera with a world-to-camera pose (x_cam = R * x_world + t).
struct Camera {
    int id = 0;
    int width = 0;
    int height = 0;
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    /// Throws PreconditionError when intrinsics or the rotation are invalid.
    void validate() const {
        const double err = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity())
                               .cwiseAbs()
                               .maxCoeff();
        if (!(err < 1e-6)) {
            throw PreconditionError("camera " + std::to_string(id) + ": rotation is not orthonormal");
        }
        if (!(fx > 0.0 && fy > 0.0)) {
            throw PreconditionError("camera " + std::to_string(id) + ": focal lengths must be positive");
        }
        if (width <= 0 || height <= 0) {
            throw PreconditionError("camera " + std::to_string(id) + ": empty image size");
        }
        if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
            throw PreconditionError("camera " + std::to_string(id) +
                                    ": principal point outside the image");
        }
    }

    /// Camera centre in world coordinates.
    Eigen::Vector3d center() const { return -rotation.transpose() * translation; }

    /// Builds a camera at `eye` looking at `target`; +y points down in the image.
    static Camera look_at(int id, int width, int height, double fx, double fy,
                          const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                          const Eigen::Vector3d& up = Eigen::Vector3d(0, 1, 0)) {
        const Eigen::Vector3d forward = (target - eye).normalized();
        const Eigen::Vector3d right = forward.cross(up).normalized();
        const Eigen::Vector3d down = forward.cross(right);
        Camera cam;
        cam.id = id;
        cam.width = width;
        cam.height = height;
        cam.fx = fx;
        cam.fy = fy;
        cam.cx = 0.5 * (width - 1);
        cam.cy = 0.5 * (height - 1);
        cam.rotation.row(0) = right.transpose();
        cam.rotation.row(1) = down.transpose();
        cam.rotation.row(2) = forward.transpose();
        cam.translation = -cam.rotation * eye;
        return cam;
    }
};

template <typename T>
struct Projection {
    T u{};
    T v{};
    T depth{};
    Vec3<T> camera_point = Vec3<T>::Zero();
    bool in_frustum = false;
};

template <typename T>
inline Mat3<T> rotation_as(const Camera& cam) {
    return cam.rotation.cast<T>();
}

template <typename T>
inline Vec3<T> to_camera(const Camera& cam, const Vec3<T>& x) {
    return cam.rotation.cast<T>() * x + cam.translation.cast<T>();
}

/// Pinhole projection; points at or in front of the near plane are flagged, not rejected.
template <typename T>
inline Projection<T> project_point(const Camera& cam, const Vec3<T>& x) {
    Projection<T> p;
    p.camera_point = to_camera(cam, x);
    p.depth = p.camera_point.z();
    p.in_frustum = p.depth > T(kNearPlane);
    if (p.in_frustum) {
        p.u = T(cam.fx) * p.camera_point.x() / p.depth + T(cam.cx);
        p.v = T(cam.fy) * p.camera_point.y() / p.depth + T(cam.cy);
    }
    return p;
}

/// Jacobian of (u, v) with respect to the camera-space point.
template <typename T>
inline Mat23<T> projection_jacobian(const Camera& cam, const Vec3<T>& xc) {
    if (!(xc.z() > T(kNearPlane))) {
        throw PreconditionError("projection_jacobian: depth at or before the near plane");
    }
    const T fx = T(cam.fx);
    const T fy = T(cam.fy);
    const T iz = T(1) / xc.z();
    const T iz2 = iz * iz;
    Mat23<T> J;
    J << fx * iz, T(0), -fx * xc.x() * iz2,
         T(0), fy * iz, -fy * xc.y() * iz2;
    return J;
}

} // namespace splitgs

#endif // SPLITGS_CAMERA_HPP
