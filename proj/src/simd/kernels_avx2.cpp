#include "hoa/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <algorithm>
#include <limits>

// Functions carry target attributes instead of a per-file -mavx2 so inline
// helpers from shared headers never get compiled with AVX2 encodings.
#define HOA_AVX2 __attribute__((target("avx2,popcnt")))

namespace hoa::simd {
namespace {

HOA_AVX2 LabelRange label_range(std::span<const Label> in)
{
    if (in.empty()) return {};
    const std::size_t n = in.size();
    std::size_t v = 0;
    LabelRange r{in[0], in[0]};
    if (n >= 8) {
        __m256i lo = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(in.data()));
        __m256i hi = lo;
        for (v = 8; v + 8 <= n; v += 8) {
            const __m256i x = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(in.data() + v));
            lo = _mm256_min_epi32(lo, x);
            hi = _mm256_max_epi32(hi, x);
        }
        alignas(32) Label lo_lanes[8], hi_lanes[8];
        _mm256_store_si256(reinterpret_cast<__m256i*>(lo_lanes), lo);
        _mm256_store_si256(reinterpret_cast<__m256i*>(hi_lanes), hi);
        for (int l = 0; l < 8; ++l) {
            r.min = lo_lanes[l] < r.min ? lo_lanes[l] : r.min;
            r.max = hi_lanes[l] > r.max ? hi_lanes[l] : r.max;
        }
    }
    for (; v < n; ++v) {
        r.min = in[v] < r.min ? in[v] : r.min;
        r.max = in[v] > r.max ? in[v] : r.max;
    }
    return r;
}

HOA_AVX2 void map_labels(std::span<const Label> in, std::span<Label> out, std::span<const Label> lut)
{
    const std::size_t n = in.size();
    std::size_t v = 0;
    for (; v + 8 <= n; v += 8) {
        const __m256i idx = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(in.data() + v));
        const __m256i mapped = _mm256_i32gather_epi32(lut.data(), idx, 4);
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(out.data() + v), mapped);
    }
    for (; v < n; ++v) out[v] = lut[std::size_t(in[v])];
}

HOA_AVX2 OverlapCounts overlap_counts(std::span<const Label> pred, std::span<const Label> gt, Label label)
{
    const std::size_t n = pred.size();
    const __m256i want = _mm256_set1_epi32(label);
    OverlapCounts c;
    std::size_t v = 0;
    for (; v + 8 <= n; v += 8) {
        const __m256i p = _mm256_cmpeq_epi32(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(pred.data() + v)), want);
        const __m256i g = _mm256_cmpeq_epi32(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(gt.data() + v)), want);
        const unsigned pm = unsigned(_mm256_movemask_ps(_mm256_castsi256_ps(p)));
        const unsigned gm = unsigned(_mm256_movemask_ps(_mm256_castsi256_ps(g)));
        c.pred += unsigned(_mm_popcnt_u32(pm));
        c.gt += unsigned(_mm_popcnt_u32(gm));
        c.both += unsigned(_mm_popcnt_u32(pm & gm));
    }
    for (; v < n; ++v) {
        const bool p = pred[v] == label;
        const bool g = gt[v] == label;
        c.pred += p;
        c.gt += g;
        c.both += p && g;
    }
    return c;
}

HOA_AVX2 void classify_row(double slope, double offset, std::span<std::uint8_t> out)
{
    const std::size_t n = out.size();
    const __m256d s = _mm256_set1_pd(slope);
    const __m256d o = _mm256_set1_pd(offset);
    const __m256d zero = _mm256_setzero_pd();
    const __m256d four = _mm256_set1_pd(4.0);
    __m256d idx = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_add_pd(_mm256_mul_pd(idx, s), o);
        const int mask = _mm256_movemask_pd(_mm256_cmp_pd(d, zero, _CMP_GE_OQ));
        out[i + 0] = std::uint8_t(mask & 1);
        out[i + 1] = std::uint8_t((mask >> 1) & 1);
        out[i + 2] = std::uint8_t((mask >> 2) & 1);
        out[i + 3] = std::uint8_t((mask >> 3) & 1);
        idx = _mm256_add_pd(idx, four);
    }
    for (; i < n; ++i) out[i] = double(i) * slope + offset >= 0.0;
}

HOA_AVX2 double min_sq_distance(Vec3 p, const SoaPoints& cloud)
{
    const std::size_t n = cloud.size();
    double best = std::numeric_limits<double>::infinity();
    std::size_t q = 0;
    if (n >= 4) {
        const __m256d px = _mm256_set1_pd(p.x), py = _mm256_set1_pd(p.y), pz = _mm256_set1_pd(p.z);
        __m256d acc = _mm256_set1_pd(best);
        for (; q + 4 <= n; q += 4) {
            const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(cloud.x.data() + q), px);
            const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(cloud.y.data() + q), py);
            const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(cloud.z.data() + q), pz);
            const __m256d d2 = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)),
                                             _mm256_mul_pd(dz, dz));
            acc = _mm256_min_pd(acc, d2);
        }
        alignas(32) double lanes[4];
        _mm256_store_pd(lanes, acc);
        for (double l : lanes) best = l < best ? l : best;
    }
    for (; q < n; ++q) {
        const double dx = cloud.x[q] - p.x;
        const double dy = cloud.y[q] - p.y;
        const double dz = cloud.z[q] - p.z;
        const double d2 = (dx * dx + dy * dy) + dz * dz;
        best = d2 < best ? d2 : best;
    }
    return best;
}

} // namespace

const KernelTable& avx2_table()
{
    static const KernelTable table{Isa::Avx2, label_range, map_labels, overlap_counts, classify_row, min_sq_distance};
    return table;
}

} // namespace hoa::simd

#endif
