#ifndef SPLITGS_HEXPLANE_HPP
#define SPLITGS_HEXPLANE_HPP

#include "splitgs/common.hpp"
#include "splitgs/gaussians.hpp"

#include <array>
#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace splitgs {

enum class PlaneId { XY, XZ, YZ, XT, YT, ZT };

inline constexpr std::array<PlaneId, 6> kPlaneIds{PlaneId::XY, PlaneId::XZ, PlaneId::YZ,
                                                  PlaneId::XT, PlaneId::YT, PlaneId::ZT};

/// Coordinate axes (0=x, 1=y, 2=z, 3=t) spanned by a plane.
inline constexpr std::array<int, 2> plane_axes(PlaneId id) {
    switch (id) {
    case PlaneId::XY: return {0, 1};
    case PlaneId::XZ: return {0, 2};
    case PlaneId::YZ: return {1, 2};
    case PlaneId::XT: return {0, 3};
    case PlaneId::YT: return {1, 3};
    case PlaneId::ZT: return {2, 3};
    }
    return {0, 0};
}

inline const char* plane_name(PlaneId id) {
    static constexpr const char* names[] = {"xy", "xz", "yz", "xt", "yt", "zt"};
    return names[static_cast<int>(id)];
}

/// J x K x L feature grid over the unit square of two coordinates.
template <typename T>
struct PlaneGrid {
    PlaneId id = PlaneId::XY;
    int rows = 2;     // resolution along the first axis
    int cols = 2;     // resolution along the second axis
    int features = 1; // L
    std::vector<T> values;

    T& at(int j, int k, int l) { return values[(static_cast<std::size_t>(j) * cols + k) * features + l]; }
    const T& at(int j, int k, int l) const {
        return values[(static_cast<std::size_t>(j) * cols + k) * features + l];
    }
};

/// Bilinear cell lookup for a coordinate pair in [0,1]^2.
struct BilinearCell {
    int j0 = 0;
    int k0 = 0;
    double wu = 0.0;
    double wv = 0.0;
};

inline BilinearCell bilinear_cell(int rows, int cols, double u, double v) {
    const double fu = u * (rows - 1);
    const double fv = v * (cols - 1);
    BilinearCell c;
    c.j0 = std::clamp(static_cast<int>(std::floor(fu)), 0, rows - 2);
    c.k0 = std::clamp(static_cast<int>(std::floor(fv)), 0, cols - 2);
    c.wu = fu - c.j0;
    c.wv = fv - c.k0;
    return c;
}

/// Which per-point deltas a field decodes.
struct DeltaHeads {
    bool position = true;
    bool rotation = false;
    bool color = false;

    static DeltaHeads for_variant(Representation v) {
        return v == Representation::Foreground ? DeltaHeads{true, true, true} : DeltaHeads{true, false, false};
    }
};

struct FieldConfig {
    int spatial_resolution = 64;
    int temporal_resolution = 32;
    int features = 16;
    int hidden = 64;
    double temporal_noise = 1e-2;
};

/// One linear decoder head: out = W h + b.
template <typename T>
struct DecoderHead {
    std::string name; // "dx", "dr" or "dc"
    int outputs = 0;
    std::vector<T> weight; // outputs x hidden
    std::vector<T> bias;   // outputs
};

/// Hex-plane deformation field: six feature planes whose bilinear samples multiply,
/// decoded by a one-hidden-layer trunk and one linear head per delta.
template <typename T>
struct DeformationField {
    Representation variant = Representation::Foreground;
    std::array<PlaneGrid<T>, 6> planes;
    Vec3<double> box_min = Vec3<double>::Zero();
    Vec3<double> box_max = Vec3<double>::Ones();
    int features = 0;
    int hidden = 0;
    std::vector<T> trunk_weight; // hidden x features
    std::vector<T> trunk_bias;   // hidden
    std::vector<DecoderHead<T>> heads;

    const DecoderHead<T>* head(const std::string& name) const {
        for (const auto& h : heads)
            if (h.name == name) return &h;
        return nullptr;
    }

    /// Visits every trainable array as (name, values).
    template <typename F>
    void for_each_array(F&& f) {
        for (auto& p : planes) f(std::string("plane_") + plane_name(p.id), p.values);
        f(std::string("trunk_weight"), trunk_weight);
        f(std::string("trunk_bias"), trunk_bias);
        for (auto& h : heads) {
            f(h.name + "_weight", h.weight);
            f(h.name + "_bias", h.bias);
        }
    }
    template <typename F>
    void for_each_array(F&& f) const {
        const_cast<DeformationField*>(this)->for_each_array(
            [&](const std::string& name, const std::vector<T>& v) { f(name, v); });
    }

    /// Same structure, every trainable value zero.
    DeformationField zeros_like() const {
        DeformationField z = *this;
        z.for_each_array([](const std::string&, std::vector<T>& v) { std::fill(v.begin(), v.end(), T(0)); });
        return z;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for_each_array([&](const std::string&, const std::vector<T>& v) { n += v.size(); });
        return n;
    }

    /// Maps a world point and time to the unit 4-cube, clamping outside the box.
    std::array<double, 4> normalize(const Vec3<T>& x, T t) const {
        std::array<double, 4> q{};
        for (int a = 0; a < 3; ++a) {
            q[a] = std::clamp((double(x[a]) - box_min[a]) / (box_max[a] - box_min[a]), 0.0, 1.0);
        }
        q[3] = std::clamp(double(t), 0.0, 1.0);
        return q;
    }

    static DeformationField create(Representation variant, const Vec3<double>& lo, const Vec3<double>& hi,
                                   const FieldConfig& cfg, std::mt19937_64& rng) {
        return create(variant, DeltaHeads::for_variant(variant), lo, hi, cfg, rng);
    }

    /// Background fields may only decode position deltas.
    static DeformationField create(Representation variant, DeltaHeads heads, const Vec3<double>& lo,
                                   const Vec3<double>& hi, const FieldConfig& cfg, std::mt19937_64& rng) {
        if (variant == Representation::Background && (heads.rotation || heads.color)) {
            throw PreconditionError("background deformation field decodes position deltas only");
        }
        if (!heads.position) throw PreconditionError("deformation field needs a position head");
        if (cfg.spatial_resolution < 2 || cfg.temporal_resolution < 2 || cfg.features < 1 || cfg.hidden < 1) {
            throw PreconditionError("deformation field: resolutions must be >= 2 and sizes >= 1");
        }
        DeformationField f;
        f.variant = variant;
        f.features = cfg.features;
        f.hidden = cfg.hidden;
        f.box_min = lo;
        f.box_max = hi;
        for (int a = 0; a < 3; ++a) {
            if (!(f.box_max[a] - f.box_min[a] > 1e-6)) {
                const double mid = 0.5 * (f.box_min[a] + f.box_max[a]);
                f.box_min[a] = mid - 0.5e-3;
                f.box_max[a] = mid + 0.5e-3;
            }
        }
        std::uniform_real_distribution<double> noise(-cfg.temporal_noise, cfg.temporal_noise);
        for (int p = 0; p < 6; ++p) {
            PlaneGrid<T>& g = f.planes[p];
            g.id = kPlaneIds[p];
            const auto ax = plane_axes(g.id);
            g.rows = ax[0] == 3 ? cfg.temporal_resolution : cfg.spatial_resolution;
            g.cols = ax[1] == 3 ? cfg.temporal_resolution : cfg.spatial_resolution;
            g.features = cfg.features;
            g.values.assign(static_cast<std::size_t>(g.rows) * g.cols * g.features, T(1));
            if (ax[1] == 3) {
                for (auto& v : g.values) v = T(1.0 + noise(rng));
            }
        }
        const double bound = std::sqrt(6.0 / (cfg.features + cfg.hidden));
        std::uniform_real_distribution<double> w(-bound, bound);
        f.trunk_weight.resize(static_cast<std::size_t>(cfg.hidden) * cfg.features);
        for (auto& v : f.trunk_weight) v = T(w(rng));
        f.trunk_bias.assign(cfg.hidden, T(0));
        auto add_head = [&](const char* name, int outputs) {
            DecoderHead<T> h;
            h.name = name;
            h.outputs = outputs;
            h.weight.assign(static_cast<std::size_t>(outputs) * cfg.hidden, T(0));
            h.bias.assign(outputs, T(0));
            f.heads.push_back(std::move(h));
        };
        add_head("dx", 3);
        if (heads.rotation) add_head("dr", 4);
        if (heads.color) add_head("dc", 3);
        return f;
    }

    /// Box spanning the positions of `g`.
    static std::pair<Vec3<double>, Vec3<double>> bounds_of(const std::vector<T>& positions) {
        Vec3<double> lo = Vec3<double>::Constant(std::numeric_limits<double>::infinity());
        Vec3<double> hi = -lo;
        for (std::size_t i = 0; i + 2 < positions.size(); i += 3) {
            const Vec3<double> p(positions[i], positions[i + 1], positions[i + 2]);
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        if (positions.empty()) {
            lo.setZero();
            hi.setOnes();
        }
        return {lo, hi};
    }
};

template <typename T>
using FieldGrads = DeformationField<T>;

/// Per-plane sample of one point, kept for the backward pass.
struct PlaneSample {
    BilinearCell cell;
    bool inside_u = true; // first coordinate not clamped
    bool inside_v = true;
};

/// Multiplied bilinear plane features at (x, t); length L.
template <typename T>
std::vector<T> sample_feature(const DeformationField<T>& field, const Vec3<T>& x, T t,
                              std::array<std::vector<T>, 6>* per_plane = nullptr,
                              std::array<PlaneSample, 6>* samples = nullptr) {
    const auto q = field.normalize(x, t);
    const int L = field.features;
    std::vector<T> f(L, T(1));
    for (int p = 0; p < 6; ++p) {
        const PlaneGrid<T>& g = field.planes[p];
        const auto ax = plane_axes(g.id);
        const BilinearCell c = bilinear_cell(g.rows, g.cols, q[ax[0]], q[ax[1]]);
        const T w00 = T((1 - c.wu) * (1 - c.wv)), w01 = T((1 - c.wu) * c.wv);
        const T w10 = T(c.wu * (1 - c.wv)), w11 = T(c.wu * c.wv);
        const T* v00 = &g.at(c.j0, c.k0, 0);
        const T* v01 = &g.at(c.j0, c.k0 + 1, 0);
        const T* v10 = &g.at(c.j0 + 1, c.k0, 0);
        const T* v11 = &g.at(c.j0 + 1, c.k0 + 1, 0);
        if (per_plane) (*per_plane)[p].resize(L);
        for (int l = 0; l < L; ++l) {
            const T b = w00 * v00[l] + w01 * v01[l] + w10 * v10[l] + w11 * v11[l];
            f[l] *= b;
            if (per_plane) (*per_plane)[p][l] = b;
        }
        if (samples) {
            (*samples)[p].cell = c;
            auto inside = [&](int axis) {
                if (axis == 3) return true; // time is not a function of x
                const double raw = (double(x[axis]) - field.box_min[axis]) / (field.box_max[axis] - field.box_min[axis]);
                return raw > 0.0 && raw < 1.0;
            };
            (*samples)[p].inside_u = inside(ax[0]);
            (*samples)[p].inside_v = inside(ax[1]);
        }
    }
    return f;
}

/// Per-point deltas decoded from the field, laid out as dx(3), dr(4), dc(3) (missing heads are zero).
template <typename T>
struct PointDeltas {
    Vec3<T> dx = Vec3<T>::Zero();
    Vec4<T> dr = Vec4<T>::Zero();
    Vec3<T> dc = Vec3<T>::Zero();
};

template <typename T>
PointDeltas<T> decode_deltas(const DeformationField<T>& field, const std::vector<T>& f,
                             std::vector<T>* pre_activation = nullptr) {
    const int H = field.hidden;
    const int L = field.features;
    std::vector<T> h(H);
    for (int k = 0; k < H; ++k) {
        T z = field.trunk_bias[k];
        const T* w = &field.trunk_weight[static_cast<std::size_t>(k) * L];
        for (int l = 0; l < L; ++l) z += w[l] * f[l];
        if (pre_activation) (*pre_activation)[k] = z;
        h[k] = z > T(0) ? z : T(0);
    }
    PointDeltas<T> d;
    for (const auto& head : field.heads) {
        T* dst = head.name == "dx" ? d.dx.data() : (head.name == "dr" ? d.dr.data() : d.dc.data());
        for (int o = 0; o < head.outputs; ++o) {
            T v = head.bias[o];
            const T* w = &head.weight[static_cast<std::size_t>(o) * H];
            for (int k = 0; k < H; ++k) v += w[k] * h[k];
            dst[o] = v;
        }
    }
    return d;
}

/// Deformed natural parameters at time t: x' = x + dx, r' = r + dr (normalised where it is
/// consumed), c' = clamp(c + dc, 0, 1). Other parameters pass through.
template <typename T>
Gaussians<T> deform(const DeformationField<T>& field, const Gaussians<T>& g, T t) {
    Gaussians<T> out = g;
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(g.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        const std::vector<T> f = sample_feature(field, g.pos(i), t);
        const PointDeltas<T> d = decode_deltas(field, f);
        for (int k = 0; k < 3; ++k) out.position[3 * i + k] = g.position[3 * i + k] + d.dx[k];
        if (field.head("dr"))
            for (int k = 0; k < 4; ++k) out.rotation[4 * i + k] = g.rotation[4 * i + k] + d.dr[k];
        if (field.head("dc"))
            for (int k = 0; k < 3; ++k)
                out.color[3 * i + k] = std::clamp(g.color[3 * i + k] + d.dc[k], T(0), T(1));
    }
    return out;
}

/// Checks the set/field pairing, then deforms the natural view of `set`.
template <typename T>
Gaussians<T> deform(const DeformationField<T>& field, const GaussianSet<T>& set, T t) {
    if (set.tag != field.variant) {
        throw PreconditionError(std::string("deform: ") + to_string(set.tag) + " set with " +
                                to_string(field.variant) + " field");
    }
    return deform(field, set.view(), t);
}

/// Adjoint of deform. `d_out` holds gradients with respect to the deformed parameters.
/// Field gradients are added to `field_grad`; gradients with respect to the undeformed
/// natural parameters are returned. Reductions run in a fixed order independent of threads.
template <typename T>
Gaussians<T> deform_backward(const DeformationField<T>& field, const Gaussians<T>& g, T t,
                             const Gaussians<T>& d_out, FieldGrads<T>& field_grad) {
    const std::size_t n = g.size();
    const int L = field.features;
    const int H = field.hidden;
    Gaussians<T> d_in = d_out;

    // Per-point plane contributions, scattered serially afterwards.
    struct PointRecord {
        std::array<BilinearCell, 6> cells;
        std::vector<T> d_plane; // 6 x L
    };
    std::vector<PointRecord> records(n);

    constexpr std::size_t kChunk = 64;
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    std::vector<FieldGrads<T>> chunk_grads(chunks);

    const DecoderHead<T>* head_dr = field.head("dr");
    const DecoderHead<T>* head_dc = field.head("dc");

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t cc = 0; cc < static_cast<std::ptrdiff_t>(chunks); ++cc) {
        FieldGrads<T> local;
        local.trunk_weight.assign(field.trunk_weight.size(), T(0));
        local.trunk_bias.assign(field.trunk_bias.size(), T(0));
        local.heads = field.heads;
        for (auto& h : local.heads) {
            std::fill(h.weight.begin(), h.weight.end(), T(0));
            std::fill(h.bias.begin(), h.bias.end(), T(0));
        }
        std::array<std::vector<T>, 6> per_plane;
        std::array<PlaneSample, 6> samples;
        std::vector<T> pre(H);
        std::vector<T> dh(H);
        std::vector<T> df(L);
        const std::size_t begin = static_cast<std::size_t>(cc) * kChunk;
        const std::size_t end = std::min(n, begin + kChunk);
        for (std::size_t i = begin; i < end; ++i) {
            const Vec3<T> x = g.pos(i);
            const std::vector<T> f = sample_feature(field, x, t, &per_plane, &samples);
            const PointDeltas<T> d = decode_deltas(field, f, &pre);

            // Gradients with respect to each delta.
            PointDeltas<T> gd;
            for (int k = 0; k < 3; ++k) gd.dx[k] = d_out.position[3 * i + k];
            if (head_dr)
                for (int k = 0; k < 4; ++k) gd.dr[k] = d_out.rotation[4 * i + k];
            if (head_dc) {
                for (int k = 0; k < 3; ++k) {
                    const T v = g.color[3 * i + k] + d.dc[k];
                    const bool pass = v >= T(0) && v <= T(1);
                    gd.dc[k] = pass ? d_out.color[3 * i + k] : T(0);
                    d_in.color[3 * i + k] = gd.dc[k];
                }
            }

            std::fill(dh.begin(), dh.end(), T(0));
            for (std::size_t hh = 0; hh < field.heads.size(); ++hh) {
                const auto& head = field.heads[hh];
                auto& lh = local.heads[hh];
                const T* go = head.name == "dx" ? gd.dx.data() : (head.name == "dr" ? gd.dr.data() : gd.dc.data());
                for (int o = 0; o < head.outputs; ++o) {
                    if (go[o] == T(0)) continue;
                    lh.bias[o] += go[o];
                    const T* w = &head.weight[static_cast<std::size_t>(o) * H];
                    T* gw = &lh.weight[static_cast<std::size_t>(o) * H];
                    for (int k = 0; k < H; ++k) {
                        const T hk = pre[k] > T(0) ? pre[k] : T(0);
                        gw[k] += go[o] * hk;
                        dh[k] += go[o] * w[k];
                    }
                }
            }
            std::fill(df.begin(), df.end(), T(0));
            for (int k = 0; k < H; ++k) {
                if (!(pre[k] > T(0)) || dh[k] == T(0)) continue;
                local.trunk_bias[k] += dh[k];
                T* gw = &local.trunk_weight[static_cast<std::size_t>(k) * L];
                const T* w = &field.trunk_weight[static_cast<std::size_t>(k) * L];
                for (int l = 0; l < L; ++l) {
                    gw[l] += dh[k] * f[l];
                    df[l] += dh[k] * w[l];
                }
            }

            PointRecord& rec = records[i];
            rec.d_plane.assign(6 * static_cast<std::size_t>(L), T(0));
            Vec3<T> dxq = Vec3<T>::Zero();
            for (int p = 0; p < 6; ++p) {
                rec.cells[p] = samples[p].cell;
                const PlaneGrid<T>& pg = field.planes[p];
                const auto ax = plane_axes(pg.id);
                const BilinearCell& c = samples[p].cell;
                T du = T(0), dv = T(0);
                for (int l = 0; l < L; ++l) {
                    T others = T(1);
                    for (int o = 0; o < 6; ++o)
                        if (o != p) others *= per_plane[o][l];
                    const T db = df[l] * others;
                    rec.d_plane[static_cast<std::size_t>(p) * L + l] = db;
                    const T v00 = pg.at(c.j0, c.k0, l), v01 = pg.at(c.j0, c.k0 + 1, l);
                    const T v10 = pg.at(c.j0 + 1, c.k0, l), v11 = pg.at(c.j0 + 1, c.k0 + 1, l);
                    du += db * T((1 - c.wv) * double(v10 - v00) + c.wv * double(v11 - v01));
                    dv += db * T((1 - c.wu) * double(v01 - v00) + c.wu * double(v11 - v10));
                }
                if (ax[0] < 3 && samples[p].inside_u)
                    dxq[ax[0]] += du * T((pg.rows - 1) / (field.box_max[ax[0]] - field.box_min[ax[0]]));
                if (ax[1] < 3 && samples[p].inside_v)
                    dxq[ax[1]] += dv * T((pg.cols - 1) / (field.box_max[ax[1]] - field.box_min[ax[1]]));
            }
            for (int k = 0; k < 3; ++k) d_in.position[3 * i + k] += dxq[k];
        }
        chunk_grads[cc] = std::move(local);
    }

    if (field_grad.trunk_weight.empty()) field_grad = field.zeros_like();
    for (const auto& cg : chunk_grads) {
        for (std::size_t k = 0; k < cg.trunk_weight.size(); ++k) field_grad.trunk_weight[k] += cg.trunk_weight[k];
        for (std::size_t k = 0; k < cg.trunk_bias.size(); ++k) field_grad.trunk_bias[k] += cg.trunk_bias[k];
        for (std::size_t hh = 0; hh < cg.heads.size(); ++hh) {
            for (std::size_t k = 0; k < cg.heads[hh].weight.size(); ++k)
                field_grad.heads[hh].weight[k] += cg.heads[hh].weight[k];
            for (std::size_t k = 0; k < cg.heads[hh].bias.size(); ++k)
                field_grad.heads[hh].bias[k] += cg.heads[hh].bias[k];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const PointRecord& rec = records[i];
        for (int p = 0; p < 6; ++p) {
            PlaneGrid<T>& pg = field_grad.planes[p];
            const BilinearCell& c = rec.cells[p];
            const T w00 = T((1 - c.wu) * (1 - c.wv)), w01 = T((1 - c.wu) * c.wv);
            const T w10 = T(c.wu * (1 - c.wv)), w11 = T(c.wu * c.wv);
            const T* db = &rec.d_plane[static_cast<std::size_t>(p) * L];
            T* g00 = &pg.at(c.j0, c.k0, 0);
            T* g01 = &pg.at(c.j0, c.k0 + 1, 0);
            T* g10 = &pg.at(c.j0 + 1, c.k0, 0);
            T* g11 = &pg.at(c.j0 + 1, c.k0 + 1, 0);
            for (int l = 0; l < L; ++l) {
                if (db[l] == T(0)) continue;
                g00[l] += w00 * db[l];
                g01[l] += w01 * db[l];
                g10[l] += w10 * db[l];
                g11[l] += w11 * db[l];
            }
        }
    }
    return d_in;
}

} // namespace splitgs

#endif // SPLITGS_HEXPLANE_HPP
