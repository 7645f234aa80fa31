#ifndef SPLITGS_COMMON_HPP
#define SPLITGS_COMMON_HPP

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace splitgs {

template <typename T> using Vec2 = Eigen::Matrix<T, 2, 1>;
template <typename T> using Vec3 = Eigen::Matrix<T, 3, 1>;
template <typename T> using Vec4 = Eigen::Matrix<T, 4, 1, Eigen::DontAlign>;
template <typename T> using Mat2 = Eigen::Matrix<T, 2, 2, Eigen::DontAlign>;
template <typename T> using Mat3 = Eigen::Matrix<T, 3, 3>;
template <typename T> using Mat23 = Eigen::Matrix<T, 2, 3>;

/// Camera-space depth below which a point is treated as outside the frustum.
inline constexpr double kNearPlane = 0.01;

/// Errors raised while reading an external file (PLY, PNG, JSON, checkpoint).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two inputs that must agree in size do not.
class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A documented precondition was violated by the caller.
class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

template <typename T>
inline T sigmoid(T x) {
    return T(1) / (T(1) + std::exp(-x));
}

template <typename T>
inline T logit(T p) {
    return std::log(p / (T(1) - p));
}

/// Sign with sign(0) = 0; used as the L1 subgradient.
template <typename T>
inline T sign0(T x) {
    return T((x > T(0)) - (x < T(0)));
}

inline std::string shape_str(std::size_t h, std::size_t w) {
    return std::to_string(h) + "x" + std::to_string(w);
}

} // namespace splitgs

#endif // SPLITGS_COMMON_HPP
