#pragma once

#include "hoa/volume.hpp"

#include <array>
#include <optional>
#include <span>
#include <string_view>

namespace hoa {

enum class Hemisphere : std::uint8_t { None = 0, Left = 1, Right = 2 };

std::string_view to_string(Hemisphere h);

/// Laterality of a catalog entry. Midline entries never carry a hemisphere tag.
enum class Laterality : std::uint8_t { Midline, Left, Right };

struct FineLabel {
    Label id;
    std::string_view name;
    Laterality laterality;
    Label fused;
};

struct FusedLabel {
    Label id;
    std::string_view name;
    bool bilateral;
};

inline constexpr int kFineLabelCount = 26;
inline constexpr int kFusedLabelCount = 12;

/// Fine structure ids.
namespace fine {
inline constexpr Label LV_L = 1, LV_R = 2, CSF = 3, V3 = 4, V4 = 5, NAcc_L = 6, NAcc_R = 7, CAU_L = 8, CAU_R = 9,
                       Put_L = 10, Put_R = 11, GP_L = 12, GP_R = 13, Brainstem = 14, TH_L = 15, TH_R = 16,
                       IH_L = 17, IH_R = 18, HF_L = 19, HF_R = 20, AMY_L = 21, AMY_R = 22;
// Sub-label order of the ventral diencephalon. Change here if a dataset orders them differently.
inline constexpr Label VDC_A_L = 23, VDC_A_R = 24, VDC_P_L = 25, VDC_P_R = 26;
} // namespace fine

/// Fused (coarse) ids.
namespace fused {
inline constexpr Label LV_IH = 1, CSF = 2, V3 = 3, V4 = 4, NAcc_Put = 5, CAU = 6, GP = 7, Brainstem = 8, TH = 9,
                       HF = 10, AMY = 11, VDC = 12;
} // namespace fused

std::span<const FineLabel, kFineLabelCount> fine_labels();
std::span<const FusedLabel, kFusedLabelCount> fused_labels();

/// Throws ValidationError for ids outside 1..26.
const FineLabel& fine_label(Label id);
const FusedLabel& fused_label(Label id);
Label fused_of(Label fine_id);

/// Picks the left or right member of a bilateral pair: lateral_variant(fine::Put_L, Hemisphere::Right) == fine::Put_R.
Label lateral_variant(Label left_id, Hemisphere h);

/// Maps every voxel through the 26 -> 12 partition. Throws ValidationError on labels outside 0..26.
LabelVolume fuse_labels(const LabelVolume& vol26);

/// Throws ValidationError on labels outside 0..12.
void check_fused_volume(const LabelVolume& vol12);

/// Verifies the fused member sets partition 1..26; throws std::logic_error otherwise.
void check_catalog_partition();

} // namespace hoa
