#pragma once

#include "hoa/error.hpp"
#include "hoa/geometry.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hoa {

using Label = std::int32_t;

struct Dims {
    std::array<int, 3> n{1, 1, 1};

    int operator[](int a) const { return n[static_cast<std::size_t>(a)]; }
    std::size_t voxel_count() const
    {
        return static_cast<std::size_t>(n[0]) * static_cast<std::size_t>(n[1]) * static_cast<std::size_t>(n[2]);
    }
    friend bool operator==(const Dims&, const Dims&) = default;
};

/// Dense 3D grid with the i index varying fastest.
template <typename T>
class Volume {
public:
    using value_type = T;

    Volume() = default;

    Volume(Dims dims, Vec3 spacing, Affine affine, std::vector<T> data)
        : dims_(dims), spacing_(spacing), affine_(affine), data_(std::move(data))
    {
        for (int a = 0; a < 3; ++a) {
            if (dims_[a] <= 0) throw ValidationError("volume dimensions must be positive");
            if (!(spacing_[a] > 0.0)) throw ValidationError("voxel spacing must be positive");
        }
        if (data_.size() != dims_.voxel_count())
            throw ValidationError("volume data length " + std::to_string(data_.size()) + " does not match dims");
    }

    /// Zero-filled volume sharing another volume's geometry.
    template <typename U>
    static Volume like(const Volume<U>& other, T fill = T{})
    {
        return Volume(other.dims(), other.spacing(), other.affine(),
                      std::vector<T>(other.dims().voxel_count(), fill));
    }

    const Dims& dims() const { return dims_; }
    const Vec3& spacing() const { return spacing_; }
    const Affine& affine() const { return affine_; }
    std::size_t size() const { return data_.size(); }

    std::span<const T> data() const { return data_; }
    std::span<T> data() { return data_; }
    std::vector<T>& storage() { return data_; }

    std::size_t index(int i, int j, int k) const
    {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims_[0]) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_[1]) * static_cast<std::size_t>(k));
    }
    bool contains(long i, long j, long k) const
    {
        return i >= 0 && j >= 0 && k >= 0 && i < dims_[0] && j < dims_[1] && k < dims_[2];
    }

    const T& at(int i, int j, int k) const { return data_[index(i, j, k)]; }
    T& at(int i, int j, int k) { return data_[index(i, j, k)]; }

    Vec3 voxel_to_world(Vec3 ijk) const { return affine_.apply(ijk); }
    Vec3 voxel_to_world(int i, int j, int k) const { return affine_.apply({double(i), double(j), double(k)}); }
    Vec3 world_to_voxel(Vec3 xyz) const { return affine_.apply_inverse(xyz); }

    bool same_grid(const auto& other) const
    {
        return dims_ == other.dims() && affine_ == other.affine();
    }

private:
    Dims dims_;
    Vec3 spacing_{1.0, 1.0, 1.0};
    Affine affine_;
    std::vector<T> data_;
};

using LabelVolume = Volume<Label>;
using ScalarVolume = Volume<double>;

/// Free-function forms of the coordinate maps.
template <typename T>
Vec3 voxel_to_world(const Volume<T>& vol, Vec3 ijk) { return vol.voxel_to_world(ijk); }
template <typename T>
Vec3 world_to_voxel(const Volume<T>& vol, Vec3 xyz) { return vol.world_to_voxel(xyz); }

/// Per-volume z-score over the mask (or every voxel when no mask is given).
/// Voxels outside the mask are set to 0. Throws ValidationError on zero variance
/// or when fewer than two voxels are selected.
ScalarVolume zscore_normalize(const ScalarVolume& vol, const LabelVolume* mask = nullptr);

/// Orientation bookkeeping for the RAS canonical frame.
/// Output axis `a` takes input axis `source_axis[a]`, reversed when `flip[a]` is set.
struct CanonicalFrame {
    std::array<int, 3> source_axis{0, 1, 2};
    std::array<bool, 3> flip{false, false, false};

    bool is_identity() const
    {
        return source_axis == std::array<int, 3>{0, 1, 2} && flip == std::array<bool, 3>{false, false, false};
    }
    CanonicalFrame inverse() const;
    friend bool operator==(const CanonicalFrame&, const CanonicalFrame&) = default;
};

/// Nearest-axis orientation of an affine. Throws ValidationError when two voxel
/// axes share the same dominant world axis.
CanonicalFrame canonical_frame_of(const Affine& affine);

/// Permutes and flips voxel data (and adjusts the affine) according to `frame`.
/// World positions of corresponding voxels are preserved.
template <typename T>
Volume<T> apply_frame(const Volume<T>& vol, const CanonicalFrame& frame);

template <typename T>
Volume<T> reorient_to_canonical(const Volume<T>& vol, CanonicalFrame* applied = nullptr)
{
    const CanonicalFrame frame = canonical_frame_of(vol.affine());
    if (applied) *applied = frame;
    if (frame.is_identity()) return vol;
    return apply_frame(vol, frame);
}

extern template LabelVolume apply_frame(const LabelVolume&, const CanonicalFrame&);
extern template ScalarVolume apply_frame(const ScalarVolume&, const CanonicalFrame&);

} // namespace hoa
