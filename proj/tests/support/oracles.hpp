#pragma once

// Independent reference implementations used to check the library.

#include "hoa/volume.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <vector>

namespace oracle {

using hoa::Label;
using hoa::LabelVolume;
using hoa::Vec3;

inline double dice(const LabelVolume& p, const LabelVolume& g, Label l)
{
    long a = 0, b = 0, both = 0;
    for (std::size_t v = 0; v < p.size(); ++v) {
        const bool x = p.data()[v] == l, y = g.data()[v] == l;
        a += x;
        b += y;
        both += x && y;
    }
    return a + b == 0 ? 1.0 : 2.0 * double(both) / double(a + b);
}

/// Mean over `from` of the distance to the nearest point of `to`, by double loop.
inline double mean_nearest(const std::vector<Vec3>& from, const std::vector<Vec3>& to)
{
    double sum = 0.0;
    for (const Vec3& p : from) {
        double best = INFINITY;
        for (const Vec3& q : to) best = std::min(best, std::hypot(p.x - q.x, p.y - q.y, p.z - q.z));
        sum += best;
    }
    return sum / double(from.size());
}

inline double mae(const std::vector<double>& pred, const std::vector<double>& gt)
{
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += std::fabs(pred[i] - gt[i]);
    return s / double(pred.size());
}

/// Two-pass population standard deviation in long double.
inline double population_sd(const std::vector<double>& y)
{
    long double m = 0.0L;
    for (double v : y) m += v;
    m /= static_cast<long double>(y.size());
    long double s = 0.0L;
    for (double v : y) s += (v - m) * (v - m);
    return double(std::sqrt(s / static_cast<long double>(y.size())));
}

/// Two-sided signed-rank p-value by enumerating every sign assignment of the ranked |d|.
inline double wilcoxon_enumerated(std::vector<double> d)
{
    d.erase(std::remove(d.begin(), d.end(), 0.0), d.end());
    const std::size_t n = d.size();
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n; ++i) {
        double less = 0, equal = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (std::fabs(d[j]) < std::fabs(d[i])) ++less;
            if (std::fabs(d[j]) == std::fabs(d[i])) ++equal;
        }
        ranks[i] = less + (equal + 1) / 2.0;
    }
    double observed = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (d[i] > 0) observed += ranks[i];
    std::uint64_t le = 0, ge = 0;
    const std::uint64_t total = std::uint64_t(1) << n;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
        double w = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1u) w += ranks[i];
        le += w <= observed + 1e-9;
        ge += w >= observed - 1e-9;
    }
    return std::min(1.0, 2.0 * double(std::min(le, ge)) / double(total));
}

/// Cyclic Jacobi eigenvalues of a symmetric matrix (row-major n x n), sorted descending.
inline std::vector<double> jacobi_eigenvalues(std::vector<double> a, int n)
{
    auto at = [&](int r, int c) -> double& { return a[std::size_t(r) * std::size_t(n) + std::size_t(c)]; };
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += at(p, q) * at(p, q);
        if (off < 1e-30) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                if (std::fabs(at(p, q)) < 1e-300) continue;
                const double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = at(k, p), akq = at(k, q);
                    at(k, p) = c * akp - s * akq;
                    at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = at(p, k), aqk = at(q, k);
                    at(p, k) = c * apk - s * aqk;
                    at(q, k) = s * apk + c * aqk;
                }
            }
    }
    std::vector<double> ev(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ev[std::size_t(i)] = at(i, i);
    std::sort(ev.rbegin(), ev.rend());
    return ev;
}

/// World position by explicit matrix product.
inline Vec3 world(const LabelVolume& v, int i, int j, int k)
{
    const auto& r = v.affine().rows();
    Vec3 w;
    for (int a = 0; a < 3; ++a)
        w[a] = r[std::size_t(a)][0] * i + r[std::size_t(a)][1] * j + r[std::size_t(a)][2] * k + r[std::size_t(a)][3];
    return w;
}

/// Plane-aligned surface distance on a canonical grid: GT voxels of `label` on slice `plane + offset`
/// against predicted voxels of `label` with j >= plane (posterior) or j <= plane (anterior).
inline double plane_pasd(const LabelVolume& gt, const LabelVolume& pred, Label label, long plane, int offset,
                         bool posterior)
{
    std::vector<Vec3> surface, side;
    const auto& d = gt.dims();
    for (int k = 0; k < d[2]; ++k)
        for (int j = 0; j < d[1]; ++j)
            for (int i = 0; i < d[0]; ++i) {
                if (j == plane + offset && gt.data()[gt.index(i, j, k)] == label) surface.push_back(world(gt, i, j, k));
                const bool on_side = posterior ? j >= plane : j <= plane;
                if (on_side && pred.data()[pred.index(i, j, k)] == label) side.push_back(world(pred, i, j, k));
            }
    if (surface.empty() || side.empty()) return NAN;
    return mean_nearest(surface, side);
}

/// Per row, index along the scan axis of the first `b` that follows some `a`; -1 when absent.
inline std::vector<int> first_b_after_a(const LabelVolume& v, int slice_axis, int slice, Label a, Label b,
                                        int scan_axis, bool reverse)
{
    int row_axis = 0;
    while (row_axis == slice_axis || row_axis == scan_axis) ++row_axis;
    const int rows = v.dims()[row_axis], len = v.dims()[scan_axis];
    std::vector<int> out(std::size_t(rows), -1);
    for (int r = 0; r < rows; ++r) {
        std::vector<Label> line;
        for (int s = 0; s < len; ++s) {
            int ijk[3];
            ijk[slice_axis] = slice;
            ijk[row_axis] = r;
            ijk[scan_axis] = s;
            line.push_back(v.at(ijk[0], ijk[1], ijk[2]));
        }
        if (reverse) std::reverse(line.begin(), line.end());
        const auto first_a = std::find(line.begin(), line.end(), a);
        if (first_a == line.end()) continue;
        const auto hit = std::find(first_a, line.end(), b);
        if (hit == line.end()) continue;
        const int pos = int(hit - line.begin());
        out[std::size_t(r)] = reverse ? len - 1 - pos : pos;
    }
    return out;
}

/// Minimal NIfTI-1 single-file header writer with explicit field offsets.
class HeaderBuilder {
public:
    explicit HeaderBuilder(bool big_endian) : big_(big_endian), bytes_(352, 0)
    {
        i32(0, 348);
        f32(108, 352.0f);
        f32(112, 0.0f);
        std::memcpy(bytes_.data() + 344, "n+1\0", 4);
    }
    HeaderBuilder& dims(std::initializer_list<int> d)
    {
        i16(40, std::int16_t(d.size()));
        int k = 1;
        for (int v : d) i16(40 + 2 * k++, std::int16_t(v));
        for (; k < 8; ++k) i16(40 + 2 * k, 1);
        return *this;
    }
    HeaderBuilder& datatype(int code, int bitpix)
    {
        i16(70, std::int16_t(code));
        i16(72, std::int16_t(bitpix));
        return *this;
    }
    HeaderBuilder& pixdim(float qfac, float x, float y, float z)
    {
        f32(76, qfac);
        f32(80, x);
        f32(84, y);
        f32(88, z);
        return *this;
    }
    HeaderBuilder& scaling(float slope, float inter)
    {
        f32(112, slope);
        f32(116, inter);
        return *this;
    }
    HeaderBuilder& sform(const float (&rows)[3][4])
    {
        i16(254, 1);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 4; ++c) f32(280 + 16 * r + 4 * c, rows[r][c]);
        return *this;
    }
    HeaderBuilder& qform(float b, float c, float d, float x, float y, float z)
    {
        i16(252, 1);
        f32(256, b);
        f32(260, c);
        f32(264, d);
        f32(268, x);
        f32(272, y);
        f32(276, z);
        return *this;
    }
    HeaderBuilder& magic(const char* m)
    {
        std::memcpy(bytes_.data() + 344, m, 4);
        return *this;
    }
    template <typename T>
    HeaderBuilder& payload(const std::vector<T>& values)
    {
        for (T v : values) {
            std::uint8_t raw[sizeof(T)];
            std::memcpy(raw, &v, sizeof(T));
            if (big_) std::reverse(raw, raw + sizeof(T));
            bytes_.insert(bytes_.end(), raw, raw + sizeof(T));
        }
        return *this;
    }
    std::vector<std::uint8_t> bytes() const { return bytes_; }

private:
    template <typename T>
    void put(std::size_t off, T v)
    {
        std::uint8_t raw[sizeof(T)];
        std::memcpy(raw, &v, sizeof(T));
        if (big_) std::reverse(raw, raw + sizeof(T));
        std::memcpy(bytes_.data() + off, raw, sizeof(T));
    }
    void i16(std::size_t off, std::int16_t v) { put(off, v); }
    void i32(std::size_t off, std::int32_t v) { put(off, v); }
    void f32(std::size_t off, float v) { put(off, v); }

    bool big_;
    std::vector<std::uint8_t> bytes_;
};

inline LabelVolume random_labels(std::mt19937_64& rng, hoa::Dims dims, Label max_label, double fill)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<Label> lab(1, max_label);
    std::vector<Label> data(dims.voxel_count());
    for (auto& v : data) v = u(rng) < fill ? lab(rng) : 0;
    return LabelVolume(dims, {1.0, 1.0, 1.0}, hoa::Affine::identity(), std::move(data));
}

} // namespace oracle
