#include "hoa/simd/kernels.hpp"

#include <algorithm>
#include <limits>

namespace hoa::simd {
namespace {

LabelRange label_range(std::span<const Label> in)
{
    if (in.empty()) return {};
    LabelRange r{in[0], in[0]};
    for (Label v : in) {
        r.min = std::min(r.min, v);
        r.max = std::max(r.max, v);
    }
    return r;
}

void map_labels(std::span<const Label> in, std::span<Label> out, std::span<const Label> lut)
{
    for (std::size_t v = 0; v < in.size(); ++v) out[v] = lut[std::size_t(in[v])];
}

OverlapCounts overlap_counts(std::span<const Label> pred, std::span<const Label> gt, Label label)
{
    OverlapCounts c;
    for (std::size_t v = 0; v < pred.size(); ++v) {
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
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = double(i) * slope + offset >= 0.0;
}

double min_sq_distance(Vec3 p, const SoaPoints& cloud)
{
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < cloud.size(); ++n) {
        const double dx = cloud.x[n] - p.x;
        const double dy = cloud.y[n] - p.y;
        const double dz = cloud.z[n] - p.z;
        const double d2 = (dx * dx + dy * dy) + dz * dz;
        best = std::min(best, d2);
    }
    return best;
}

} // namespace

const KernelTable& scalar_table()
{
    static const KernelTable table{Isa::Scalar, label_range, map_labels, overlap_counts, classify_row, min_sq_distance};
    return table;
}

} // namespace hoa::simd
