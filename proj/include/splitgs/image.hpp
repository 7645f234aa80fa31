#ifndef SPLITGS_IMAGE_HPP
#define SPLITGS_IMAGE_HPP

#include "splitgs/common.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace splitgs {

/// Row-major H x W x C float image. Values are linear [0,1] for colour images.
template <typename T = float>
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<T> data;

    Image() = default;
    Image(int h, int w, int c, T fill = T(0))
        : height(h), width(w), channels(c),
          data(static_cast<std::size_t>(h) * w * c, fill) {}

    std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
    std::size_t size() const { return data.size(); }
    bool same_shape(const Image& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }

    T& at(int y, int x, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    const T& at(int y, int x, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    template <typename U>
    Image<U> cast() const {
        Image<U> out(height, width, channels);
        std::transform(data.begin(), data.end(), out.data.begin(),
                       [](T v) { return static_cast<U>(v); });
        return out;
    }
};

/// Binary H x W mask stored as 0/1 bytes; 1 marks foreground.
struct Mask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data;

    Mask() = default;
    Mask(int h, int w, std::uint8_t fill = 0)
        : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

    std::uint8_t& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::size_t count() const {
        return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t{1}));
    }

    template <typename T>
    Image<T> as_image() const {
        Image<T> out(height, width, 1);
        for (std::size_t i = 0; i < data.size(); ++i) {
            out.data[i] = data[i] ? T(1) : T(0);
        }
        return out;
    }
};

namespace detail {

struct PngImage {
    png_image image{};
    PngImage() {
        std::memset(&image, 0, sizeof(image));
        image.version = PNG_IMAGE_VERSION;
    }
    ~PngImage() { png_image_free(&image); }
    PngImage(const PngImage&) = delete;
    PngImage& operator=(const PngImage&) = delete;
};

inline std::vector<std::uint8_t> read_png_raw(const std::string& path, png_uint_32 format,
                                              int& width, int& height) {
    PngImage png;
    if (!png_image_begin_read_from_file(&png.image, path.c_str())) {
        throw ParseError(path + ": " + png.image.message);
    }
    png.image.format = format;
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(png.image));
    if (!png_image_finish_read(&png.image, nullptr, buf.data(), 0, nullptr)) {
        throw ParseError(path + ": " + png.image.message);
    }
    width = static_cast<int>(png.image.width);
    height = static_cast<int>(png.image.height);
    return buf;
}

} // namespace detail

/// Reads an 8-bit PNG as a 3-channel linear [0,1] image (no gamma conversion).
inline Image<float> read_png_rgb(const std::string& path) {
    int w = 0;
    int h = 0;
    const auto buf = detail::read_png_raw(path, PNG_FORMAT_RGB, w, h);
    Image<float> img(h, w, 3);
    for (std::size_t i = 0; i < buf.size(); ++i) {
        img.data[i] = static_cast<float>(buf[i]) / 255.0f;
    }
    return img;
}

/// Reads a PNG mask; pixel > 127 in the gray conversion is foreground.
/// Pass expected dimensions (> 0) to check the mask against its camera.
inline Mask load_mask(const std::string& path, int expected_width = 0, int expected_height = 0) {
    int w = 0;
    int h = 0;
    const auto buf = detail::read_png_raw(path, PNG_FORMAT_GRAY, w, h);
    if (expected_width > 0 && (w != expected_width || h != expected_height)) {
        throw ShapeError(path + ": mask is " + std::to_string(w) + "x" + std::to_string(h) +
                         " but camera is " + std::to_string(expected_width) + "x" +
                         std::to_string(expected_height));
    }
    Mask m(h, w);
    for (std::size_t i = 0; i < buf.size(); ++i) {
        m.data[i] = buf[i] > 127 ? 1 : 0;
    }
    return m;
}

inline std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

/// Writes a 1- or 3-channel [0,1] image as an 8-bit PNG.
template <typename T>
inline void write_png(const std::string& path, const Image<T>& img) {
    if (img.channels != 1 && img.channels != 3) {
        throw ShapeError("write_png: expected 1 or 3 channels, got " + std::to_string(img.channels));
    }
    std::vector<std::uint8_t> buf(img.data.size());
    for (std::size_t i = 0; i < buf.size(); ++i) {
        buf[i] = to_byte(static_cast<double>(img.data[i]));
    }
    detail::PngImage png;
    png.image.width = static_cast<png_uint_32>(img.width);
    png.image.height = static_cast<png_uint_32>(img.height);
    png.image.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&png.image, path.c_str(), 0, buf.data(), 0, nullptr)) {
        throw std::runtime_error(path + ": " + png.image.message);
    }
}

inline void write_mask_png(const std::string& path, const Mask& m) {
    Image<float> img = m.as_image<float>();
    write_png(path, img);
}

} // namespace splitgs

#endif // SPLITGS_IMAGE_HPP
