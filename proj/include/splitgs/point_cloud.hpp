#ifndef SPLITGS_POINT_CLOUD_HPP
#define SPLITGS_POINT_CLOUD_HPP

#include "splitgs/common.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace splitgs {

/// Positions and [0,1] colours, stored as N x 3 row-major arrays.
struct PointCloud {
    std::vector<double> positions;
    std::vector<double> colors;

    std::size_t size() const { return positions.size() / 3; }
    bool empty() const { return positions.empty(); }

    Vec3<double> position(std::size_t i) const {
        return {positions[3 * i], positions[3 * i + 1], positions[3 * i + 2]};
    }
    Vec3<double> color(std::size_t i) const {
        return {colors[3 * i], colors[3 * i + 1], colors[3 * i + 2]};
    }

    void push_back(const Vec3<double>& p, const Vec3<double>& c) {
        positions.insert(positions.end(), {p.x(), p.y(), p.z()});
        colors.insert(colors.end(), {c.x(), c.y(), c.z()});
    }

    /// Axis-aligned bounds; returns {min, max}.
    std::pair<Vec3<double>, Vec3<double>> bounds() const {
        Vec3<double> lo = Vec3<double>::Constant(std::numeric_limits<double>::infinity());
        Vec3<double> hi = -lo;
        for (std::size_t i = 0; i < size(); ++i) {
            lo = lo.cwiseMin(position(i));
            hi = hi.cwiseMax(position(i));
        }
        return {lo, hi};
    }
};

namespace ply {

enum class Format { Ascii, BinaryLittleEndian, BinaryBigEndian };

enum class Type : std::uint8_t { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

inline std::optional<Type> parse_type(const std::string& s) {
    if (s == "char" || s == "int8") return Type::Int8;
    if (s == "uchar" || s == "uint8") return Type::UInt8;
    if (s == "short" || s == "int16") return Type::Int16;
    if (s == "ushort" || s == "uint16") return Type::UInt16;
    if (s == "int" || s == "int32") return Type::Int32;
    if (s == "uint" || s == "uint32") return Type::UInt32;
    if (s == "float" || s == "float32") return Type::Float32;
    if (s == "double" || s == "float64") return Type::Float64;
    return std::nullopt;
}

inline std::size_t type_size(Type t) {
    static constexpr std::array<std::size_t, 8> sizes{1, 1, 2, 2, 4, 4, 4, 8};
    return sizes[static_cast<std::size_t>(t)];
}

struct Property {
    std::string name;
    Type type = Type::Float32;
    bool is_list = false;
    Type count_type = Type::UInt8;
};

struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<Property> properties;
};

template <typename U>
inline U load_scalar(const unsigned char* p, bool swap) {
    std::array<unsigned char, sizeof(U)> b;
    std::memcpy(b.data(), p, sizeof(U));
    if (swap) std::reverse(b.begin(), b.end());
    U v;
    std::memcpy(&v, b.data(), sizeof(U));
    return v;
}

inline double decode(const unsigned char* p, Type t, bool swap) {
    switch (t) {
    case Type::Int8: return static_cast<double>(load_scalar<std::int8_t>(p, swap));
    case Type::UInt8: return static_cast<double>(load_scalar<std::uint8_t>(p, swap));
    case Type::Int16: return static_cast<double>(load_scalar<std::int16_t>(p, swap));
    case Type::UInt16: return static_cast<double>(load_scalar<std::uint16_t>(p, swap));
    case Type::Int32: return static_cast<double>(load_scalar<std::int32_t>(p, swap));
    case Type::UInt32: return static_cast<double>(load_scalar<std::uint32_t>(p, swap));
    case Type::Float32: return static_cast<double>(load_scalar<float>(p, swap));
    case Type::Float64: return load_scalar<double>(p, swap);
    }
    return 0.0;
}

inline bool is_integer(Type t) { return t != Type::Float32 && t != Type::Float64; }

} // namespace ply

/// Reads the vertex element of an ASCII or binary PLY file.
/// Colour properties (red/green/blue or r/g/b) are optional; integer colours are scaled by 1/255.
inline PointCloud load_point_cloud(const std::string& path) {
    using namespace ply;
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError(path + ": cannot open file");
    }
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::size_t pos = 0;
    int line_no = 0;
    auto next_line = [&](std::string& line) -> bool {
        if (pos >= bytes.size()) return false;
        const std::size_t end = bytes.find('\n', pos);
        const std::size_t stop = end == std::string::npos ? bytes.size() : end;
        line.assign(bytes, pos, stop - pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        pos = end == std::string::npos ? bytes.size() : end + 1;
        ++line_no;
        return true;
    };
    auto fail = [&](const std::string& what) -> ParseError {
        return ParseError(path + ": line " + std::to_string(line_no) + ": " + what);
    };

    std::string line;
    if (!next_line(line) || line != "ply") {
        throw fail("missing 'ply' magic");
    }
    std::optional<Format> format;
    std::vector<Element> elements;
    bool header_done = false;
    while (next_line(line)) {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key.empty() || key == "comment" || key == "obj_info") continue;
        if (key == "format") {
            std::string f;
            std::string version;
            ls >> f >> version;
            if (f == "ascii") format = Format::Ascii;
            else if (f == "binary_little_endian") format = Format::BinaryLittleEndian;
            else if (f == "binary_big_endian") format = Format::BinaryBigEndian;
            else throw fail("unknown format '" + f + "'");
        } else if (key == "element") {
            Element e;
            long long count = -1;
            ls >> e.name >> count;
            if (e.name.empty() || count < 0) throw fail("malformed element declaration");
            e.count = static_cast<std::size_t>(count);
            elements.push_back(std::move(e));
        } else if (key == "property") {
            if (elements.empty()) throw fail("property before any element");
            Property p;
            std::string type;
            ls >> type;
            if (type == "list") {
                std::string count_type;
                std::string item_type;
                ls >> count_type >> item_type >> p.name;
                auto ct = parse_type(count_type);
                auto it = parse_type(item_type);
                if (!ct || !it || !is_integer(*ct)) throw fail("malformed list property");
                p.is_list = true;
                p.count_type = *ct;
                p.type = *it;
            } else {
                auto t = parse_type(type);
                if (!t) throw fail("unknown property type '" + type + "'");
                p.type = *t;
                ls >> p.name;
            }
            if (p.name.empty()) throw fail("property without a name");
            elements.back().properties.push_back(std::move(p));
        } else if (key == "end_header") {
            header_done = true;
            break;
        } else {
            throw fail("unexpected header keyword '" + key + "'");
        }
    }
    if (!header_done) throw fail("header not terminated by end_header");
    if (!format) throw fail("missing format line");

    PointCloud pc;
    bool seen_vertex = false;
    const bool swap = (*format == Format::BinaryBigEndian) == (std::endian::native == std::endian::little);

    for (const Element& e : elements) {
        const bool is_vertex = e.name == "vertex";
        int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
        for (std::size_t k = 0; k < e.properties.size(); ++k) {
            const auto& n = e.properties[k].name;
            const int kk = static_cast<int>(k);
            if (n == "x") ix = kk;
            else if (n == "y") iy = kk;
            else if (n == "z") iz = kk;
            else if (n == "red" || n == "r") ir = kk;
            else if (n == "green" || n == "g") ig = kk;
            else if (n == "blue" || n == "b") ib = kk;
        }
        if (is_vertex) {
            if (ix < 0 || iy < 0 || iz < 0) throw ParseError(path + ": vertex element lacks x, y, z");
            seen_vertex = true;
            pc.positions.reserve(3 * e.count);
            pc.colors.reserve(3 * e.count);
        }
        const bool has_color = ir >= 0 && ig >= 0 && ib >= 0;
        std::vector<double> values(e.properties.size());

        for (std::size_t row = 0; row < e.count; ++row) {
            const std::size_t row_offset = pos;
            if (*format == Format::Ascii) {
                do {
                    if (!next_line(line)) throw fail("unexpected end of file in element '" + e.name + "'");
                } while (line.find_first_not_of(" \t") == std::string::npos);
                std::istringstream ls(line);
                for (std::size_t k = 0; k < e.properties.size(); ++k) {
                    const Property& p = e.properties[k];
                    std::string tok;
                    if (p.is_list) {
                        long long n = 0;
                        if (!(ls >> n) || n < 0) throw fail("malformed list count");
                        for (long long j = 0; j < n; ++j) ls >> tok;
                        continue;
                    }
                    if (!(ls >> tok)) throw fail("too few values in element '" + e.name + "'");
                    char* end = nullptr;
                    values[k] = std::strtod(tok.c_str(), &end);
                    if (end == tok.c_str() || *end != '\0') throw fail("bad number '" + tok + "'");
                }
            } else {
                for (std::size_t k = 0; k < e.properties.size(); ++k) {
                    const Property& p = e.properties[k];
                    auto need = [&](std::size_t n) {
                        if (pos + n > bytes.size()) {
                            throw ParseError(path + ": byte offset " + std::to_string(pos) +
                                             ": unexpected end of binary data");
                        }
                    };
                    const auto* base = reinterpret_cast<const unsigned char*>(bytes.data());
                    if (p.is_list) {
                        need(type_size(p.count_type));
                        const double n = decode(base + pos, p.count_type, swap);
                        pos += type_size(p.count_type);
                        const std::size_t skip = static_cast<std::size_t>(n) * type_size(p.type);
                        need(skip);
                        pos += skip;
                        continue;
                    }
                    need(type_size(p.type));
                    values[k] = decode(base + pos, p.type, swap);
                    pos += type_size(p.type);
                }
            }
            if (!is_vertex) continue;
            const Vec3<double> xyz(values[ix], values[iy], values[iz]);
            if (!xyz.allFinite()) {
                if (*format == Format::Ascii) throw fail("non-finite vertex coordinate");
                throw ParseError(path + ": byte offset " + std::to_string(row_offset) +
                                 ": non-finite vertex coordinate");
            }
            Vec3<double> rgb = Vec3<double>::Constant(0.5);
            if (has_color) {
                for (int c = 0; c < 3; ++c) {
                    const int idx = c == 0 ? ir : (c == 1 ? ig : ib);
                    const double v = values[idx];
                    rgb[c] = is_integer(e.properties[idx].type) ? v / 255.0 : v;
                }
                rgb = rgb.cwiseMax(0.0).cwiseMin(1.0);
            }
            pc.push_back(xyz, rgb);
        }
    }
    if (!seen_vertex) throw ParseError(path + ": no vertex element");
    if (pc.empty()) throw ParseError(path + ": vertex element is empty");
    return pc;
}

/// Writes a binary little-endian PLY with float positions and uchar colours.
inline void save_point_cloud(const std::string& path, const PointCloud& pc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << "ply\nformat binary_little_endian 1.0\n"
        << "element vertex " << pc.size() << "\n"
        << "property float x\nproperty float y\nproperty float z\n"
        << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
        << "end_header\n";
    static_assert(std::endian::native == std::endian::little, "big-endian hosts unsupported");
    for (std::size_t i = 0; i < pc.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            const float v = static_cast<float>(pc.positions[3 * i + c]);
            out.write(reinterpret_cast<const char*>(&v), sizeof v);
        }
        for (int c = 0; c < 3; ++c) {
            const double v = std::clamp(pc.colors[3 * i + c], 0.0, 1.0);
            const auto b = static_cast<std::uint8_t>(std::lround(v * 255.0));
            out.write(reinterpret_cast<const char*>(&b), 1);
        }
    }
    if (!out) throw std::runtime_error(path + ": write failed");
}

} // namespace splitgs

#endif // SPLITGS_POINT_CLOUD_HPP
