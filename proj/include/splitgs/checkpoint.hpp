#ifndef SPLITGS_CHECKPOINT_HPP
#define SPLITGS_CHECKPOINT_HPP

#include "splitgs/common.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace splitgs {

/// Binary array container:
///
///   magic    8 bytes  "SPLITGS\0"
///   version  u32
///   count    u32
///   count descriptors:
///     name_len u16, name bytes, dtype u8, ndim u8, dims u64[ndim], offset u64, nbytes u64
///   payloads (offsets are absolute file positions)
///
/// All integers and floats are little-endian.
class ArrayContainer {
public:
    static constexpr char kMagic[8] = {'S', 'P', 'L', 'I', 'T', 'G', 'S', '\0'};
    static constexpr std::uint32_t kVersion = 1;

    enum class DType : std::uint8_t { F32 = 0, I64 = 1, U8 = 2 };

    struct Array {
        DType dtype = DType::F32;
        std::vector<std::uint64_t> shape;
        std::vector<std::uint8_t> bytes;
    };

    void put_f32(const std::string& name, std::vector<std::uint64_t> shape, std::span<const float> v) {
        put(name, DType::F32, std::move(shape), v.data(), v.size_bytes());
    }
    void put_i64(const std::string& name, std::span<const std::int64_t> v) {
        put(name, DType::I64, {v.size()}, v.data(), v.size_bytes());
    }
    void put_text(const std::string& name, const std::string& text) {
        put(name, DType::U8, {text.size()}, text.data(), text.size());
    }

    bool contains(const std::string& name) const { return arrays_.count(name) > 0; }
    const std::map<std::string, Array>& arrays() const { return arrays_; }

    std::vector<float> get_f32(const std::string& name) const {
        const Array& a = get(name, DType::F32);
        std::vector<float> v(a.bytes.size() / sizeof(float));
        std::memcpy(v.data(), a.bytes.data(), a.bytes.size());
        return v;
    }
    std::vector<std::int64_t> get_i64(const std::string& name) const {
        const Array& a = get(name, DType::I64);
        std::vector<std::int64_t> v(a.bytes.size() / sizeof(std::int64_t));
        std::memcpy(v.data(), a.bytes.data(), a.bytes.size());
        return v;
    }
    std::string get_text(const std::string& name) const {
        const Array& a = get(name, DType::U8);
        return std::string(a.bytes.begin(), a.bytes.end());
    }

    std::vector<std::uint8_t> serialize() const {
        std::vector<std::uint8_t> out;
        auto put_raw = [&](const void* p, std::size_t n) {
            const auto* b = static_cast<const std::uint8_t*>(p);
            out.insert(out.end(), b, b + n);
        };
        auto put_u = [&](auto v) { put_raw(&v, sizeof v); };
        put_raw(kMagic, sizeof kMagic);
        put_u(kVersion);
        put_u(static_cast<std::uint32_t>(arrays_.size()));
        std::size_t header = out.size();
        for (const auto& [name, a] : arrays_) header += 2 + name.size() + 2 + 8 * a.shape.size() + 16;
        std::uint64_t offset = header;
        for (const auto& [name, a] : arrays_) {
            put_u(static_cast<std::uint16_t>(name.size()));
            put_raw(name.data(), name.size());
            put_u(static_cast<std::uint8_t>(a.dtype));
            put_u(static_cast<std::uint8_t>(a.shape.size()));
            for (auto d : a.shape) put_u(d);
            put_u(offset);
            put_u(static_cast<std::uint64_t>(a.bytes.size()));
            offset += a.bytes.size();
        }
        for (const auto& [name, a] : arrays_) put_raw(a.bytes.data(), a.bytes.size());
        return out;
    }

    /// Writes to a temporary sibling file, then renames it over `path`.
    void write(const std::filesystem::path& path) const {
        const auto bytes = serialize();
        const std::filesystem::path tmp = path.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw std::runtime_error(tmp.string() + ": cannot open for writing");
            out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
            if (!out) throw std::runtime_error(tmp.string() + ": write failed");
        }
        std::filesystem::rename(tmp, path);
    }

    static ArrayContainer parse(std::span<const std::uint8_t> bytes, const std::string& origin = "checkpoint") {
        std::size_t pos = 0;
        auto need = [&](std::size_t n) {
            if (pos + n > bytes.size()) {
                throw ParseError(origin + ": truncated at byte " + std::to_string(pos));
            }
        };
        auto get_u = [&](auto& v) {
            need(sizeof v);
            std::memcpy(&v, bytes.data() + pos, sizeof v);
            pos += sizeof v;
        };
        need(sizeof kMagic);
        if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
            throw ParseError(origin + ": bad magic, not a splitgs checkpoint");
        }
        pos += sizeof kMagic;
        std::uint32_t version = 0, count = 0;
        get_u(version);
        if (version != kVersion) {
            throw ParseError(origin + ": unsupported checkpoint version " + std::to_string(version) + " (expected " +
                             std::to_string(kVersion) + ")");
        }
        get_u(count);
        ArrayContainer c;
        for (std::uint32_t k = 0; k < count; ++k) {
            std::uint16_t len = 0;
            get_u(len);
            need(len);
            std::string name(reinterpret_cast<const char*>(bytes.data() + pos), len);
            pos += len;
            std::uint8_t dtype = 0, ndim = 0;
            get_u(dtype);
            get_u(ndim);
            if (dtype > 2) throw ParseError(origin + ": array '" + name + "' has unknown dtype");
            Array a;
            a.dtype = static_cast<DType>(dtype);
            a.shape.resize(ndim);
            for (auto& d : a.shape) get_u(d);
            std::uint64_t offset = 0, nbytes = 0;
            get_u(offset);
            get_u(nbytes);
            if (offset > bytes.size() || nbytes > bytes.size() - offset) {
                throw ParseError(origin + ": truncated payload for array '" + name + "'");
            }
            a.bytes.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                           bytes.begin() + static_cast<std::ptrdiff_t>(offset + nbytes));
            c.arrays_[name] = std::move(a);
        }
        return c;
    }

    static ArrayContainer read(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ParseError(path.string() + ": cannot open file");
        std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return parse(bytes, path.string());
    }

private:
    static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

    void put(const std::string& name, DType dtype, std::vector<std::uint64_t> shape, const void* data,
             std::size_t nbytes) {
        if (name.size() > 0xFFFF) throw std::invalid_argument("array name too long");
        Array a;
        a.dtype = dtype;
        a.shape = std::move(shape);
        a.bytes.resize(nbytes);
        if (nbytes) std::memcpy(a.bytes.data(), data, nbytes);
        arrays_[name] = std::move(a);
    }

    const Array& get(const std::string& name, DType dtype) const {
        auto it = arrays_.find(name);
        if (it == arrays_.end()) throw ParseError("checkpoint: missing array '" + name + "'");
        if (it->second.dtype != dtype) throw ParseError("checkpoint: array '" + name + "' has unexpected dtype");
        return it->second;
    }

    std::map<std::string, Array> arrays_;
};

} // namespace splitgs

#endif // SPLITGS_CHECKPOINT_HPP
