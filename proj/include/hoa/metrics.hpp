#pragma once

#include "hoa/labels.hpp"
#include "hoa/landmarks.hpp"
#include "hoa/volume.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hoa {

/// 2|P and G| / (|P| + |G|) for one label. Both masks empty gives 1.0.
/// Throws ValidationError when the dims differ.
double dice(const LabelVolume& pred, const LabelVolume& gt, Label label);

enum class SurfaceDirection { Anterior, Posterior, Lateral };

std::string_view to_string(SurfaceDirection s);

/// One landmark-driven boundary of a structure.
///
/// Anterior/posterior surfaces lie on the coronal slice `landmark` snaps to, shifted by
/// `slice_offset` so the slice falls inside the structure. Lateral surfaces are the structure's
/// voxels facing `partner` across the in-slice separator.
struct BoundarySpec {
    std::string region;
    SurfaceDirection surface = SurfaceDirection::Anterior;
    Hemisphere side = Hemisphere::None;
    Label label = 0;
    Label partner = 0;
    int landmark = 0;
    int slice_offset = 0;

    std::string name() const;
};

/// Table of protocol boundaries: IH, NAcc and Put, 3V, VDC_A and VDC_P, per hemisphere where lateral.
std::vector<BoundarySpec> protocol_boundaries();

/// GT surface points (world mm voxel centers). Throws ValidationError when empty.
std::vector<Vec3> extract_protocol_surface(const LabelVolume& gt, const BoundarySpec& spec, const LandmarkSet& lms);

/// Predicted voxels of the label on the structure's side of the plane, plane slice included.
/// With `whole_label` (and always for lateral surfaces) every voxel of the label counts.
std::vector<Vec3> predicted_side_set(const LabelVolume& pred, const BoundarySpec& spec, const LandmarkSet& lms,
                                     bool whole_label = false);

/// One-way mean distance from each GT surface point to its nearest predicted side-set point.
/// Throws ValidationError when either set is empty.
double pasd(const LabelVolume& gt, const LabelVolume& pred, const BoundarySpec& spec, const LandmarkSet& lms,
            bool whole_label = false);

/// Point-set form of the distance above.
double mean_min_distance(const std::vector<Vec3>& from, const std::vector<Vec3>& to);

struct LinePositions {
    std::vector<double> pred;
    std::vector<double> gt;
};

struct LineMetrics {
    double mae = 0.0;
    double sigma_y = 0.0; // population sd of pred
};

/// Throws ValidationError for empty or unequal-length input.
LineMetrics line_metrics(const LinePositions& lines);

struct SeparationSample {
    int row = 0;           // index along the in-slice axis orthogonal to the scan axis
    double position = 0.0; // voxel index along the scan axis
};

/// For each row of slice `slice` (index along `slice_axis`) scanned along `scan_axis` (toward lower
/// indices when `reverse`), the position of the first `b` voxel after an `a` voxel.
/// Rows without that pattern are left out. Throws ValidationError if no row qualifies.
std::vector<SeparationSample> extract_separation_line(const LabelVolume& vol, int slice_axis, int slice, Label a,
                                                      Label b, int scan_axis, bool reverse = false);

/// A 2D separation line measured on every slice along `slice_axis`.
struct LineSpec {
    std::string region;
    SurfaceDirection surface = SurfaceDirection::Posterior;
    Hemisphere side = Hemisphere::None;
    Label a = 0;
    Label b = 0;
    int slice_axis = 2;
    int scan_axis = 1;
    bool reverse = false;

    std::string name() const;
};

std::vector<LineSpec> protocol_lines();

struct LineSummary {
    std::optional<double> mae;     // mm, mean over slices
    std::optional<double> sigma_y; // mm, mean over slices
    int slices = 0;
};

/// Per-slice MAE and sigma_y over rows present in both volumes, averaged over slices.
LineSummary evaluate_line(const LabelVolume& pred, const LabelVolume& gt, const LineSpec& spec);

struct DiceEntry {
    Label label = 0;
    std::string name;
    double value = 0.0;
    bool both_empty = false;

    friend bool operator==(const DiceEntry&, const DiceEntry&) = default;
};

struct SurfaceEntry {
    std::string region;
    std::string surface;
    std::string side;
    std::optional<double> pasd;

    friend bool operator==(const SurfaceEntry&, const SurfaceEntry&) = default;
};

struct LineEntry {
    std::string region;
    std::string surface;
    std::string side;
    std::optional<double> mae;
    std::optional<double> sigma_y;
    int slices = 0;

    friend bool operator==(const LineEntry&, const LineEntry&) = default;
};

struct LandmarkErrorEntry {
    int id = 0;
    std::string name;
    double error = 0.0;

    friend bool operator==(const LandmarkErrorEntry&, const LandmarkErrorEntry&) = default;
};

struct MetricReport {
    std::string subject;
    std::vector<DiceEntry> dice;
    double mean_dice = 0.0;
    std::vector<SurfaceEntry> surfaces;
    std::optional<double> mean_pasd;
    std::vector<LineEntry> lines;
    std::vector<LandmarkErrorEntry> landmark_errors;
    std::vector<std::string> warnings;

    std::string to_json() const;
    static MetricReport from_json(std::string_view text);
    /// Rows of: subject,metric,region,surface,side,value. Undefined values are written as NA.
    std::string to_csv(bool header = true) const;

    friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

/// Dice for all 26 labels, PASD for every protocol boundary, line metrics for every protocol line.
/// Throws ValidationError unless the volumes share dims and affine.
MetricReport evaluate_pair(const LabelVolume& pred26, const LabelVolume& gt26, const LandmarkSet& lms,
                           std::string subject = {});

/// Appends per-landmark Euclidean errors for landmarks present in both sets.
void add_landmark_errors(MetricReport& report, const LandmarkSet& predicted, const LandmarkSet& truth);

} // namespace hoa
