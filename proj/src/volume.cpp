#include "hoa/volume.hpp"

#include <cmath>

namespace hoa {

ScalarVolume zscore_normalize(const ScalarVolume& vol, const LabelVolume* mask)
{
    if (mask && mask->dims() != vol.dims()) throw ValidationError("z-score mask dimensions do not match volume");

    const auto src = vol.data();
    auto selected = [&](std::size_t v) { return mask == nullptr || mask->data()[v] != 0; };

    std::size_t count = 0;
    double sum = 0.0;
    for (std::size_t v = 0; v < src.size(); ++v) {
        if (!selected(v)) continue;
        if (!std::isfinite(src[v])) throw ValidationError("z-score input contains non-finite values");
        sum += src[v];
        ++count;
    }
    if (count < 2) throw ValidationError("z-score needs at least two voxels");
    const double mean = sum / double(count);

    // Two-pass variance; the population form.
    double ss = 0.0;
    for (std::size_t v = 0; v < src.size(); ++v)
        if (selected(v)) ss += (src[v] - mean) * (src[v] - mean);
    const double sd = std::sqrt(ss / double(count));
    if (!(sd > 0.0)) throw ValidationError("z-score input has zero variance");

    ScalarVolume out = ScalarVolume::like(vol, 0.0);
    auto dst = out.data();
    for (std::size_t v = 0; v < src.size(); ++v)
        if (selected(v)) dst[v] = (src[v] - mean) / sd;
    return out;
}

CanonicalFrame CanonicalFrame::inverse() const
{
    CanonicalFrame inv;
    for (int a = 0; a < 3; ++a) {
        inv.source_axis[source_axis[a]] = a;
        inv.flip[source_axis[a]] = flip[a];
    }
    return inv;
}

CanonicalFrame canonical_frame_of(const Affine& affine)
{
    if (!affine.invertible()) throw ValidationError("affine is singular; orientation undefined");
    CanonicalFrame frame;
    std::array<bool, 3> taken{false, false, false};
    for (int c = 0; c < 3; ++c) {
        const Vec3 col = affine.column(c);
        int best = 0;
        for (int r = 1; r < 3; ++r)
            if (std::abs(col[r]) > std::abs(col[best])) best = r;
        if (taken[best])
            throw ValidationError("ambiguous orientation: two voxel axes map to the same world axis");
        taken[best] = true;
        frame.source_axis[best] = c;
        frame.flip[best] = col[best] < 0.0;
    }
    return frame;
}

template <typename T>
Volume<T> apply_frame(const Volume<T>& vol, const CanonicalFrame& frame)
{
    const Dims& in = vol.dims();
    Dims out_dims;
    Vec3 spacing;
    Affine::Rows rows{};
    Vec3 t = vol.affine().translation();
    for (int a = 0; a < 3; ++a) {
        const int src = frame.source_axis[a];
        out_dims.n[a] = in[src];
        spacing[a] = vol.spacing()[src];
        Vec3 col = vol.affine().column(src);
        if (frame.flip[a]) {
            t = t + double(in[src] - 1) * col;
            col = -1.0 * col;
        }
        for (int r = 0; r < 3; ++r) rows[r][a] = col[r];
    }
    for (int r = 0; r < 3; ++r) rows[r][3] = t[r];

    std::vector<T> data(vol.size());
    // Stride of each output axis within the input buffer.
    const std::array<std::ptrdiff_t, 3> in_stride{1, in[0], std::ptrdiff_t(in[0]) * in[1]};
    std::array<std::ptrdiff_t, 3> step{};
    std::ptrdiff_t base = 0;
    for (int a = 0; a < 3; ++a) {
        const int src = frame.source_axis[a];
        step[a] = frame.flip[a] ? -in_stride[src] : in_stride[src];
        if (frame.flip[a]) base += in_stride[src] * (in[src] - 1);
    }
    const auto src_data = vol.data();
    std::size_t o = 0;
    for (int k = 0; k < out_dims[2]; ++k)
        for (int j = 0; j < out_dims[1]; ++j) {
            std::ptrdiff_t p = base + step[1] * j + step[2] * k;
            for (int i = 0; i < out_dims[0]; ++i, p += step[0]) data[o++] = src_data[std::size_t(p)];
        }
    return Volume<T>(out_dims, spacing, Affine(rows), std::move(data));
}

template LabelVolume apply_frame(const LabelVolume&, const CanonicalFrame&);
template ScalarVolume apply_frame(const ScalarVolume&, const CanonicalFrame&);

} // namespace hoa
