#include "hoa/simd/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <limits>

namespace hoa::simd {
namespace {

LabelRange label_range(std::span<const Label> in)
{
    if (in.empty()) return {};
    const std::size_t n = in.size();
    std::size_t v = 0;
    LabelRange r{in[0], in[0]};
    if (n >= 4) {
        int32x4_t lo = vld1q_s32(in.data());
        int32x4_t hi = lo;
        for (v = 4; v + 4 <= n; v += 4) {
            const int32x4_t x = vld1q_s32(in.data() + v);
            lo = vminq_s32(lo, x);
            hi = vmaxq_s32(hi, x);
        }
        const Label lo_all = vminvq_s32(lo), hi_all = vmaxvq_s32(hi);
        r.min = lo_all < r.min ? lo_all : r.min;
        r.max = hi_all > r.max ? hi_all : r.max;
    }
    for (; v < n; ++v) {
        r.min = in[v] < r.min ? in[v] : r.min;
        r.max = in[v] > r.max ? in[v] : r.max;
    }
    return r;
}

// No gather on NEON; the table lookup stays scalar.
void map_labels(std::span<const Label> in, std::span<Label> out, std::span<const Label> lut)
{
    for (std::size_t v = 0; v < in.size(); ++v) out[v] = lut[std::size_t(in[v])];
}

OverlapCounts overlap_counts(std::span<const Label> pred, std::span<const Label> gt, Label label)
{
    const std::size_t n = pred.size();
    const int32x4_t want = vdupq_n_s32(label);
    const uint32x4_t one = vdupq_n_u32(1);
    uint32x4_t cp = vdupq_n_u32(0), cg = cp, cb = cp;
    OverlapCounts c;
    std::size_t v = 0;
    // Lane counters are flushed before they can overflow.
    std::size_t since_flush = 0;
    auto flush = [&] {
        c.pred += vaddvq_u32(cp);
        c.gt += vaddvq_u32(cg);
        c.both += vaddvq_u32(cb);
        cp = cg = cb = vdupq_n_u32(0);
        since_flush = 0;
    };
    for (; v + 4 <= n; v += 4) {
        const uint32x4_t p = vceqq_s32(vld1q_s32(pred.data() + v), want);
        const uint32x4_t g = vceqq_s32(vld1q_s32(gt.data() + v), want);
        cp = vaddq_u32(cp, vandq_u32(p, one));
        cg = vaddq_u32(cg, vandq_u32(g, one));
        cb = vaddq_u32(cb, vandq_u32(vandq_u32(p, g), one));
        if (++since_flush == (1u << 30)) flush();
    }
    flush();
    for (; v < n; ++v) {
        const bool p = pred[v] == label;
        const bool g = gt[v] == label;
        c.pred += p;
        c.gt += g;
        c.both += p && g;
    }
    return c;
}

void classify_row(double slope, double offset, std::span<std::uint8_t> out)
{
    const std::size_t n = out.size();
    const float64x2_t s = vdupq_n_f64(slope);
    const float64x2_t o = vdupq_n_f64(offset);
    const float64x2_t two = vdupq_n_f64(2.0);
    const double start[2] = {0.0, 1.0};
    float64x2_t idx = vld1q_f64(start);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        // Separate multiply and add: a fused vfmaq would round differently from the scalar path.
        const float64x2_t d = vaddq_f64(vmulq_f64(idx, s), o);
        const uint64x2_t ge = vcgezq_f64(d);
        out[i] = std::uint8_t(vgetq_lane_u64(ge, 0) & 1);
        out[i + 1] = std::uint8_t(vgetq_lane_u64(ge, 1) & 1);
        idx = vaddq_f64(idx, two);
    }
    for (; i < n; ++i) out[i] = double(i) * slope + offset >= 0.0;
}

double min_sq_distance(Vec3 p, const SoaPoints& cloud)
{
    const std::size_t n = cloud.size();
    double best = std::numeric_limits<double>::infinity();
    std::size_t q = 0;
    if (n >= 2) {
        const float64x2_t px = vdupq_n_f64(p.x), py = vdupq_n_f64(p.y), pz = vdupq_n_f64(p.z);
        float64x2_t acc = vdupq_n_f64(best);
        for (; q + 2 <= n; q += 2) {
            const float64x2_t dx = vsubq_f64(vld1q_f64(cloud.x.data() + q), px);
            const float64x2_t dy = vsubq_f64(vld1q_f64(cloud.y.data() + q), py);
            const float64x2_t dz = vsubq_f64(vld1q_f64(cloud.z.data() + q), pz);
            const float64x2_t d2 = vaddq_f64(vaddq_f64(vmulq_f64(dx, dx), vmulq_f64(dy, dy)), vmulq_f64(dz, dz));
            acc = vminq_f64(acc, d2);
        }
        best = vminvq_f64(acc);
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

const KernelTable& neon_table()
{
    static const KernelTable table{Isa::Neon, label_range, map_labels, overlap_counts, classify_row, min_sq_distance};
    return table;
}

} // namespace hoa::simd

#endif
