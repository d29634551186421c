#pragma once

#include "hoa/labels.hpp"
#include "hoa/landmarks.hpp"
#include "hoa/volume.hpp"

#include <cstdint>
#include <string>

namespace hoa {

/// Axis-aligned primitive in layout coordinates (inclusive bounds).
/// For bilateral structures u is the lateral offset from the midline column on either side;
/// for midline structures u is the signed i offset from the center column.
struct Box {
    int u0 = 0, u1 = 0;
    int j0 = 0, j1 = 0;
    int k0 = 0, k1 = 0;
    bool ellipsoid = false;
};

/// Geometry of the default 96^3 phantom. Landmark slices are given separately from the boxes so a
/// layout can be made deliberately inconsistent.
struct PhantomLayout {
    Box lv_body, lv_bridge, lv_atrium, ih_tube;
    Box nacc_body, nacc_cap, put_body, put_ext;
    Box cau, gp, th, hf, amy, vdc_a, vdc_p;
    Box csf, v3, v4, brainstem;

    int put_first_j = 0;    // #1/#2
    int contact_ant_j = 0;  // #3/#4
    int contact_post_j = 0; // #5/#6
    int nacc_last_j = 0;    // #7/#8
    int v3_first_j = 0;     // #9
    int mammillary_j = 0;   // #11/#12
    int ih_first_j = 0;     // #13/#14
    int separator_u = 0;    // first putamen column; NAcc/putamen boundary lies between separator_u - 1 and it

    int ac_j = 0, ac_k = 0;
    int pc_j = 0, pc_k = 0;
    int ppf_j = 0, ppf_k = 0;
};

PhantomLayout default_layout();

struct PhantomSpec {
    Dims dims{{96, 96, 96}};
    double spacing = 0.7;
    std::uint64_t seed = 0;
    /// Per-hemisphere shifts, landmark sub-voxel offsets and midline tilt drawn from the seed.
    bool jitter = true;
    PhantomLayout layout = default_layout();
};

struct Phantom {
    LabelVolume labels; // 26-label
    LandmarkSet landmarks;
};

/// Deterministic for a given PhantomSpec. Throws ValidationError if primitives overlap, leave the grid, or the
/// result breaks a protocol rule.
Phantom generate_phantom(const PhantomSpec& spec);

/// Throws ValidationError naming the first protocol rule the labels/landmarks violate.
void check_phantom_rules(const LabelVolume& vol26, const LandmarkSet& lms);

enum class DegradeMode { None, BoundaryNoise, Erosion, LandmarkJitter };

std::string_view to_string(DegradeMode m);
DegradeMode parse_degrade_mode(std::string_view name);

struct DegradeSpec {
    DegradeMode mode = DegradeMode::None;
    double sigma_mm = 0.0;      // landmark jitter, per axis
    double flip_fraction = 0.1; // boundary noise: share of interface voxels relabelled
    std::uint64_t seed = 0;
};

struct Degraded {
    LabelVolume fused; // 12-label
    LandmarkSet landmarks;
};

/// Fuses to 12 labels, then applies one perturbation. Boundary noise only touches voxels with a
/// 6-neighbour of another fused label; erosion clears foreground voxels with a background 6-neighbour.
Degraded degrade_phantom(const LabelVolume& vol26, const LandmarkSet& lms, const DegradeSpec& spec);

/// 64-bit FNV-1a over dims, label data and landmark coordinates.
std::uint64_t phantom_hash(const LabelVolume& vol, const LandmarkSet& lms);

} // namespace hoa
