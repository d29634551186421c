#pragma once

#include "hoa/labels.hpp"
#include "hoa/landmarks.hpp"
#include "hoa/volume.hpp"

#include <map>
#include <string>

namespace hoa {

/// Oriented plane; signed distance is positive on the side the normal points to.
struct Plane {
    Vec3 point;
    Vec3 normal; // unit length

    double signed_distance(Vec3 p) const { return dot(p - point, normal); }
};

/// Plane through AC (#10), PC (#15) and PPF (#16) with the normal pointing toward subject-right (+x).
/// Throws ValidationError if a landmark is missing, RuleError if the three points are collinear.
Plane build_midsagittal_plane(const LandmarkSet& lms);

/// How the NAcc/putamen separator x is placed on slices between the contact landmarks.
enum class SeparatorMode { Linear, ConstantAnterior, ConstantPosterior };

struct RefinementConfig {
    /// Shift each coronal slice's midline by up to `slice_adjust_radius` voxels to agree with the
    /// previous (more posterior) slice.
    bool slice_adjust = false;
    int slice_adjust_radius = 2;

    SeparatorMode separator_mode = SeparatorMode::Linear;

    /// Hemisphere given to voxel centers exactly on the midsagittal plane.
    Hemisphere midline_tie = Hemisphere::Right;
    /// When set, voxels on a truncation landmark's slice are truncated as well (the three coronal truncations).
    bool truncation_inclusive = false;
    /// When set, VDC voxels on the mammillary slice become anterior instead of posterior.
    bool vdc_plane_anterior = false;

    bool rule_putamen_anterior = true;
    bool rule_nacc_posterior = true;
    bool rule_3v_anterior = true;
    bool rule_vdc_split = true;
    bool rule_ih_split = true;

    /// Fine label given to third-ventricle voxels excluded by the third-ventricle truncation.
    Label v3_exclusion_target = fine::CSF;

    /// Skip rules whose landmarks are missing instead of failing. The midline triple is always required.
    bool partial_rules = false;

    /// Worker threads for slice-independent passes. Output does not depend on it.
    int threads = 1;

    friend bool operator==(const RefinementConfig&, const RefinementConfig&) = default;
};

/// Flat key/value view of a config, used for manifests and config files.
std::map<std::string, std::string> to_key_values(const RefinementConfig& cfg);
/// Applies recognized keys over `cfg`; throws ValidationError on unknown keys or bad values.
void apply_key_values(RefinementConfig& cfg, const std::map<std::string, std::string>& kv);
/// Parses `key = value` lines; '#' starts a comment.
std::map<std::string, std::string> parse_key_value_text(std::string_view text);

using HemisphereVolume = Volume<Hemisphere>;

/// Coronal slice index of a world point: round-half-away-from-zero of its voxel j coordinate.
long coronal_slice(const LabelVolume& vol, Vec3 world);

/// Tags every voxel of a bilateral fused label Left or Right of the plane; midline labels and
/// background stay None. `vol12` must already be in the canonical frame.
HemisphereVolume split_hemispheres(const LabelVolume& vol12, const Plane& plane, const RefinementConfig& cfg = {});

/// Separator x on coronal slice `j` for one hemisphere, interpolated between the contact landmarks.
double nacc_putamen_separator_x(const LabelVolume& vol, const LandmarkSet& lms, Hemisphere h, long j,
                                SeparatorMode mode);

/// Working 26-label volume: ids written by the steps below, 0 where no step has assigned one yet.
/// Fused NAcc+Put voxels become NAcc (medial of the separator) or Put. Writes into `fine26`.
void separate_nacc_putamen(const LabelVolume& vol12, const LandmarkSet& lms, const HemisphereVolume& hemi,
                           LabelVolume& fine26, const RefinementConfig& cfg = {});

/// Putamen, NAcc and third-ventricle truncations on a working fine-label volume. Idempotent.
void apply_coronal_extents(LabelVolume& fine26, const LandmarkSet& lms, const RefinementConfig& cfg = {});

/// VDC anterior/posterior split at the per-hemisphere mammillary slice.
void split_vdc(const LabelVolume& vol12, const LandmarkSet& lms, const HemisphereVolume& hemi, LabelVolume& fine26,
               const RefinementConfig& cfg = {});

/// Inferior horn vs lateral ventricle by seeded per-slice connected components anterior
/// to the #13/#14 slice.
void split_lv_ih(const LabelVolume& vol12, const LandmarkSet& lms, const HemisphereVolume& hemi, LabelVolume& fine26,
                 const RefinementConfig& cfg = {});

/// Full 12 -> 26 refinement. The result is on the input's grid and orientation.
LabelVolume refine_full(const LabelVolume& vol12, const LandmarkSet& lms, const RefinementConfig& cfg = {});

} // namespace hoa
