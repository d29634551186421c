#include "hoa/labels.hpp"

#include "hoa/simd/kernels.hpp"

#include <stdexcept>
#include <string>

namespace hoa {
namespace {

using L = Laterality;

constexpr std::array<FineLabel, kFineLabelCount> kFine{{
    {1, "LV_L", L::Left, fused::LV_IH},
    {2, "LV_R", L::Right, fused::LV_IH},
    {3, "CSF", L::Midline, fused::CSF},
    {4, "3V", L::Midline, fused::V3},
    {5, "4V", L::Midline, fused::V4},
    {6, "NAcc_L", L::Left, fused::NAcc_Put},
    {7, "NAcc_R", L::Right, fused::NAcc_Put},
    {8, "CAU_L", L::Left, fused::CAU},
    {9, "CAU_R", L::Right, fused::CAU},
    {10, "Put_L", L::Left, fused::NAcc_Put},
    {11, "Put_R", L::Right, fused::NAcc_Put},
    {12, "GP_L", L::Left, fused::GP},
    {13, "GP_R", L::Right, fused::GP},
    {14, "Brainstem", L::Midline, fused::Brainstem},
    {15, "TH_L", L::Left, fused::TH},
    {16, "TH_R", L::Right, fused::TH},
    {17, "IH_L", L::Left, fused::LV_IH},
    {18, "IH_R", L::Right, fused::LV_IH},
    {19, "HF_L", L::Left, fused::HF},
    {20, "HF_R", L::Right, fused::HF},
    {21, "AMY_L", L::Left, fused::AMY},
    {22, "AMY_R", L::Right, fused::AMY},
    {fine::VDC_A_L, "VDC_A_L", L::Left, fused::VDC},
    {fine::VDC_A_R, "VDC_A_R", L::Right, fused::VDC},
    {fine::VDC_P_L, "VDC_P_L", L::Left, fused::VDC},
    {fine::VDC_P_R, "VDC_P_R", L::Right, fused::VDC},
}};

constexpr std::array<FusedLabel, kFusedLabelCount> kFused{{
    {1, "LV+IH", true},
    {2, "CSF", false},
    {3, "3V", false},
    {4, "4V", false},
    {5, "NAcc+Put", true},
    {6, "CAU", true},
    {7, "GP", true},
    {8, "Brainstem", false},
    {9, "TH", true},
    {10, "HF", true},
    {11, "AMY", true},
    {12, "VDC", true},
}};

constexpr bool catalog_sorted()
{
    for (int i = 0; i < kFineLabelCount; ++i)
        if (kFine[std::size_t(i)].id != i + 1) return false;
    return true;
}
static_assert(catalog_sorted(), "fine catalog must be indexed by id");

} // namespace

std::string_view to_string(Hemisphere h)
{
    switch (h) {
    case Hemisphere::Left: return "left";
    case Hemisphere::Right: return "right";
    case Hemisphere::None: break;
    }
    return "midline";
}

std::span<const FineLabel, kFineLabelCount> fine_labels() { return kFine; }
std::span<const FusedLabel, kFusedLabelCount> fused_labels() { return kFused; }

const FineLabel& fine_label(Label id)
{
    if (id < 1 || id > kFineLabelCount) throw ValidationError("fine label id out of range: " + std::to_string(id));
    return kFine[std::size_t(id - 1)];
}

const FusedLabel& fused_label(Label id)
{
    if (id < 1 || id > kFusedLabelCount) throw ValidationError("fused label id out of range: " + std::to_string(id));
    return kFused[std::size_t(id - 1)];
}

Label fused_of(Label fine_id) { return fine_label(fine_id).fused; }

Label lateral_variant(Label left_id, Hemisphere h)
{
    // Every bilateral pair is stored as (left, left + 1).
    if (fine_label(left_id).laterality != Laterality::Left)
        throw std::logic_error("lateral_variant expects a left-hemisphere id");
    return h == Hemisphere::Right ? left_id + 1 : left_id;
}

void check_catalog_partition()
{
    std::array<int, kFineLabelCount + 1> seen{};
    for (const auto& f : kFine) {
        if (f.fused < 1 || f.fused > kFusedLabelCount) throw std::logic_error("fine label maps outside fused range");
        ++seen[std::size_t(f.id)];
    }
    for (int id = 1; id <= kFineLabelCount; ++id)
        if (seen[std::size_t(id)] != 1) throw std::logic_error("fine id " + std::to_string(id) + " not covered exactly once");
    for (const auto& g : kFused) {
        bool has_left = false, has_right = false, has_mid = false;
        for (const auto& f : kFine) {
            if (f.fused != g.id) continue;
            has_left |= f.laterality == Laterality::Left;
            has_right |= f.laterality == Laterality::Right;
            has_mid |= f.laterality == Laterality::Midline;
        }
        if (g.bilateral != (has_left && has_right) || (g.bilateral && has_mid))
            throw std::logic_error("fused label laterality mismatch for " + std::string(g.name));
    }
}

LabelVolume fuse_labels(const LabelVolume& vol26)
{
    const auto& k = simd::kernels();
    const auto range = k.label_range(vol26.data());
    if (range.min < 0 || range.max > kFineLabelCount)
        throw ValidationError("label " + std::to_string(range.min < 0 ? range.min : range.max) +
                              " is outside the 26-label taxonomy");
    std::array<Label, kFineLabelCount + 1> lut{};
    for (const auto& f : kFine) lut[std::size_t(f.id)] = f.fused;
    LabelVolume out = LabelVolume::like(vol26);
    k.map_labels(vol26.data(), out.data(), lut);
    return out;
}

void check_fused_volume(const LabelVolume& vol12)
{
    const auto range = simd::kernels().label_range(vol12.data());
    if (range.min < 0 || range.max > kFusedLabelCount)
        throw ValidationError("label " + std::to_string(range.min < 0 ? range.min : range.max) +
                              " is outside the 12-label fused taxonomy");
}

} // namespace hoa
