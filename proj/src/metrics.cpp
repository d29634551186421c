#include "hoa/metrics.hpp"

#include "hoa/refinement.hpp"
#include "hoa/simd/kernels.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace hoa {
namespace {

LabelVolume canonical(const LabelVolume& vol) { return reorient_to_canonical(vol); }

simd::SoaPoints to_soa(const std::vector<Vec3>& pts)
{
    simd::SoaPoints out;
    out.x.reserve(pts.size());
    out.y.reserve(pts.size());
    out.z.reserve(pts.size());
    for (const Vec3& p : pts) out.push_back(p);
    return out;
}

long plane_slice(const LabelVolume& vol, const BoundarySpec& spec, const LandmarkSet& lms)
{
    return coronal_slice(vol, lms.at(spec.landmark));
}

std::vector<Vec3> surface_points(const LabelVolume& gt, const BoundarySpec& spec, const LandmarkSet& lms)
{
    std::vector<Vec3> pts;
    const int nx = gt.dims()[0], ny = gt.dims()[1], nz = gt.dims()[2];
    if (spec.surface == SurfaceDirection::Lateral) {
        for (int k = 0; k < nz; ++k)
            for (int j = 0; j < ny; ++j)
                for (int i = 0; i < nx; ++i) {
                    if (gt.at(i, j, k) != spec.label) continue;
                    const bool facing = (i > 0 && gt.at(i - 1, j, k) == spec.partner) ||
                                        (i + 1 < nx && gt.at(i + 1, j, k) == spec.partner);
                    if (facing) pts.push_back(gt.voxel_to_world(i, j, k));
                }
        return pts;
    }
    const long s = plane_slice(gt, spec, lms) + spec.slice_offset;
    if (s < 0 || s >= ny) return pts;
    const int j = int(s);
    for (int k = 0; k < nz; ++k)
        for (int i = 0; i < nx; ++i)
            if (gt.at(i, j, k) == spec.label) pts.push_back(gt.voxel_to_world(i, j, k));
    return pts;
}

std::vector<Vec3> side_points(const LabelVolume& pred, const BoundarySpec& spec, const LandmarkSet& lms,
                              bool whole_label)
{
    const int nx = pred.dims()[0], ny = pred.dims()[1], nz = pred.dims()[2];
    long lo = 0, hi = ny - 1;
    if (!whole_label && spec.surface != SurfaceDirection::Lateral) {
        const long p = plane_slice(pred, spec, lms);
        if (spec.surface == SurfaceDirection::Posterior)
            lo = p;
        else
            hi = p;
    }
    std::vector<Vec3> pts;
    for (int k = 0; k < nz; ++k)
        for (long j = std::max(lo, 0L); j <= std::min(hi, long(ny) - 1); ++j)
            for (int i = 0; i < nx; ++i)
                if (pred.at(i, int(j), k) == spec.label) pts.push_back(pred.voxel_to_world(i, int(j), k));
    return pts;
}

/// Row-ordered separation samples; empty when no row qualifies.
std::vector<SeparationSample> separation_samples(const LabelVolume& vol, int slice_axis, int slice, Label a, Label b,
                                                 int scan_axis, bool reverse)
{
    const int row_axis = 3 - slice_axis - scan_axis;
    const int n_rows = vol.dims()[row_axis];
    const int n_scan = vol.dims()[scan_axis];
    std::vector<SeparationSample> out;
    std::array<int, 3> ijk{};
    ijk[std::size_t(slice_axis)] = slice;
    for (int r = 0; r < n_rows; ++r) {
        ijk[std::size_t(row_axis)] = r;
        bool seen_a = false;
        for (int step = 0; step < n_scan; ++step) {
            ijk[std::size_t(scan_axis)] = reverse ? n_scan - 1 - step : step;
            const Label v = vol.at(ijk[0], ijk[1], ijk[2]);
            if (v == a) {
                seen_a = true;
            } else if (v == b && seen_a) {
                out.push_back({r, double(ijk[std::size_t(scan_axis)])});
                break;
            }
        }
    }
    return out;
}

void check_axes(const LabelVolume& vol, int slice_axis, int slice, int scan_axis)
{
    if (slice_axis < 0 || slice_axis > 2 || scan_axis < 0 || scan_axis > 2 || slice_axis == scan_axis)
        throw ValidationError("separation line: slice and scan axes must be distinct axes in 0..2");
    if (slice < 0 || slice >= vol.dims()[slice_axis]) throw ValidationError("separation line: slice out of range");
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string("NA"); }

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> opt_from(const nlohmann::json& j)
{
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

std::string side_of(Laterality l)
{
    switch (l) {
    case Laterality::Left: return "left";
    case Laterality::Right: return "right";
    case Laterality::Midline: break;
    }
    return "midline";
}

} // namespace

double dice(const LabelVolume& pred, const LabelVolume& gt, Label label)
{
    if (pred.dims() != gt.dims()) throw ValidationError("dice: volume dimensions differ");
    const auto c = simd::kernels().overlap_counts(pred.data(), gt.data(), label);
    if (c.pred + c.gt == 0) return 1.0;
    return 2.0 * double(c.both) / double(c.pred + c.gt);
}

std::string_view to_string(SurfaceDirection s)
{
    switch (s) {
    case SurfaceDirection::Anterior: return "anterior";
    case SurfaceDirection::Posterior: return "posterior";
    case SurfaceDirection::Lateral: return "lateral";
    }
    return "?";
}

std::string BoundarySpec::name() const
{
    return region + " (" + std::string(to_string(surface)) + ", " + std::string(to_string(side)) + ")";
}

std::string LineSpec::name() const
{
    return region + " (" + std::string(to_string(surface)) + ", " + std::string(to_string(side)) + ")";
}

std::vector<BoundarySpec> protocol_boundaries()
{
    using S = SurfaceDirection;
    std::vector<BoundarySpec> out;
    for (Hemisphere h : {Hemisphere::Left, Hemisphere::Right}) {
        const int r = h == Hemisphere::Right ? 1 : 0;
        out.push_back({"IH", S::Posterior, h, fine::IH_L + r, 0, lateral_landmark(lm::IHFirst_L, h), 1});
        out.push_back({"NAcc", S::Lateral, h, fine::NAcc_L + r, fine::Put_L + r, 0, 0});
        out.push_back({"NAcc", S::Posterior, h, fine::NAcc_L + r, 0, lateral_landmark(lm::NAccLast_L, h), 0});
        out.push_back({"Put", S::Anterior, h, fine::Put_L + r, 0, lateral_landmark(lm::PutFirst_L, h), 0});
        out.push_back({"Put", S::Lateral, h, fine::Put_L + r, fine::NAcc_L + r, 0, 0});
        if (h == Hemisphere::Left) out.push_back({"3V", S::Anterior, Hemisphere::None, fine::V3, 0, lm::V3First, 0});
        out.push_back({"VDC_A", S::Posterior, h, fine::VDC_A_L + r, 0, lateral_landmark(lm::Mammillary_L, h), 1});
        out.push_back({"VDC_P", S::Anterior, h, fine::VDC_P_L + r, 0, lateral_landmark(lm::Mammillary_L, h), 0});
    }
    return out;
}

std::vector<Vec3> extract_protocol_surface(const LabelVolume& gt, const BoundarySpec& spec, const LandmarkSet& lms)
{
    auto pts = surface_points(canonical(gt), spec, lms);
    if (pts.empty()) throw ValidationError("empty protocol surface for " + spec.name());
    return pts;
}

std::vector<Vec3> predicted_side_set(const LabelVolume& pred, const BoundarySpec& spec, const LandmarkSet& lms,
                                     bool whole_label)
{
    return side_points(canonical(pred), spec, lms, whole_label);
}

double mean_min_distance(const std::vector<Vec3>& from, const std::vector<Vec3>& to)
{
    if (from.empty()) throw ValidationError("distance: empty surface set");
    if (to.empty()) throw ValidationError("distance: empty predicted set");
    const auto cloud = to_soa(to);
    const auto& kt = simd::kernels();
    double sum = 0.0;
    for (const Vec3& p : from) sum += std::sqrt(kt.min_sq_distance(p, cloud));
    return sum / double(from.size());
}

double pasd(const LabelVolume& gt, const LabelVolume& pred, const BoundarySpec& spec, const LandmarkSet& lms,
            bool whole_label)
{
    if (!gt.same_grid(pred)) throw ValidationError("pasd: volumes are not on the same grid");
    const auto surface = extract_protocol_surface(gt, spec, lms);
    const auto side = predicted_side_set(pred, spec, lms, whole_label);
    if (side.empty()) throw ValidationError("empty predicted side set for " + spec.name());
    return mean_min_distance(surface, side);
}

LineMetrics line_metrics(const LinePositions& lines)
{
    if (lines.pred.empty()) throw ValidationError("line metrics: no sample points");
    if (lines.pred.size() != lines.gt.size()) throw ValidationError("line metrics: pred and gt lengths differ");
    const double n = double(lines.pred.size());
    // Deviations are taken about the first sample so a constant line gives exactly zero.
    const double y0 = lines.pred.front();
    double abs_sum = 0.0, shift = 0.0;
    for (std::size_t i = 0; i < lines.pred.size(); ++i) {
        abs_sum += std::abs(lines.pred[i] - lines.gt[i]);
        shift += lines.pred[i] - y0;
    }
    shift /= n;
    double sq = 0.0;
    for (double y : lines.pred) sq += ((y - y0) - shift) * ((y - y0) - shift);
    return {abs_sum / n, std::sqrt(sq / n)};
}

std::vector<SeparationSample> extract_separation_line(const LabelVolume& vol, int slice_axis, int slice, Label a,
                                                      Label b, int scan_axis, bool reverse)
{
    check_axes(vol, slice_axis, slice, scan_axis);
    auto out = separation_samples(vol, slice_axis, slice, a, b, scan_axis, reverse);
    if (out.empty()) throw ValidationError("separation line: no row contains both labels");
    return out;
}

std::vector<LineSpec> protocol_lines()
{
    using S = SurfaceDirection;
    std::vector<LineSpec> out;
    for (Hemisphere h : {Hemisphere::Left, Hemisphere::Right}) {
        const int r = h == Hemisphere::Right ? 1 : 0;
        out.push_back({"IH", S::Posterior, h, fine::LV_L + r, fine::IH_L + r, 2, 1, false});
        out.push_back({"VDC_P", S::Anterior, h, fine::VDC_P_L + r, fine::VDC_A_L + r, 2, 1, false});
        // Scan from the lateral putamen toward the midline.
        out.push_back({"NAcc", S::Lateral, h, fine::Put_L + r, fine::NAcc_L + r, 1, 0, h == Hemisphere::Right});
    }
    return out;
}

LineSummary evaluate_line(const LabelVolume& pred_in, const LabelVolume& gt_in, const LineSpec& spec)
{
    if (!pred_in.same_grid(gt_in)) throw ValidationError("line metrics: volumes are not on the same grid");
    const LabelVolume pred = canonical(pred_in);
    const LabelVolume gt = canonical(gt_in);
    const double step = gt.spacing()[spec.scan_axis];
    double mae_sum = 0.0, sd_sum = 0.0;
    LineSummary out;
    for (int s = 0; s < gt.dims()[spec.slice_axis]; ++s) {
        const auto g = separation_samples(gt, spec.slice_axis, s, spec.a, spec.b, spec.scan_axis, spec.reverse);
        if (g.empty()) continue;
        const auto p = separation_samples(pred, spec.slice_axis, s, spec.a, spec.b, spec.scan_axis, spec.reverse);
        LinePositions lines;
        std::size_t gi = 0, pi = 0;
        while (gi < g.size() && pi < p.size()) {
            if (g[gi].row < p[pi].row) {
                ++gi;
            } else if (p[pi].row < g[gi].row) {
                ++pi;
            } else {
                lines.gt.push_back(g[gi].position * step);
                lines.pred.push_back(p[pi].position * step);
                ++gi;
                ++pi;
            }
        }
        if (lines.pred.empty()) continue;
        const LineMetrics m = line_metrics(lines);
        mae_sum += m.mae;
        sd_sum += m.sigma_y;
        ++out.slices;
    }
    if (out.slices > 0) {
        out.mae = mae_sum / out.slices;
        out.sigma_y = sd_sum / out.slices;
    }
    return out;
}

MetricReport evaluate_pair(const LabelVolume& pred26_in, const LabelVolume& gt26_in, const LandmarkSet& lms,
                           std::string subject)
{
    if (!pred26_in.same_grid(gt26_in))
        throw ValidationError("evaluate: prediction and reference differ in dims or affine");
    const LabelVolume pred = canonical(pred26_in);
    const LabelVolume gt = canonical(gt26_in);

    MetricReport rep;
    rep.subject = std::move(subject);
    double dice_sum = 0.0;
    for (const FineLabel& fl : fine_labels()) {
        DiceEntry e{fl.id, std::string(fl.name), dice(pred, gt, fl.id), false};
        const auto c = simd::kernels().overlap_counts(pred.data(), gt.data(), fl.id);
        if (c.pred + c.gt == 0) {
            e.both_empty = true;
            rep.warnings.push_back("label " + e.name + " absent from both volumes; Dice set to 1");
        }
        dice_sum += e.value;
        rep.dice.push_back(std::move(e));
    }
    rep.mean_dice = dice_sum / double(rep.dice.size());

    double pasd_sum = 0.0;
    int pasd_count = 0;
    for (const BoundarySpec& spec : protocol_boundaries()) {
        SurfaceEntry e{spec.region, std::string(to_string(spec.surface)), std::string(to_string(spec.side)), {}};
        const bool need_landmark = spec.surface != SurfaceDirection::Lateral;
        if (need_landmark && !lms.has(spec.landmark)) {
            rep.warnings.push_back(spec.name() + ": landmark #" + std::to_string(spec.landmark) + " missing");
        } else {
            const auto surface = surface_points(gt, spec, lms);
            const auto side = side_points(pred, spec, lms, false);
            if (surface.empty())
                rep.warnings.push_back(spec.name() + ": empty reference surface");
            else if (side.empty())
                rep.warnings.push_back(spec.name() + ": empty predicted side set");
            else {
                e.pasd = mean_min_distance(surface, side);
                pasd_sum += *e.pasd;
                ++pasd_count;
            }
        }
        rep.surfaces.push_back(std::move(e));
    }
    if (pasd_count > 0) rep.mean_pasd = pasd_sum / pasd_count;

    for (const LineSpec& spec : protocol_lines()) {
        const LineSummary s = evaluate_line(pred, gt, spec);
        if (s.slices == 0) rep.warnings.push_back(spec.name() + ": no slice with a reference separation line");
        rep.lines.push_back({spec.region, std::string(to_string(spec.surface)), std::string(to_string(spec.side)),
                             s.mae, s.sigma_y, s.slices});
    }
    return rep;
}

void add_landmark_errors(MetricReport& report, const LandmarkSet& predicted, const LandmarkSet& truth)
{
    for (int id = 1; id <= kLandmarkCount; ++id) {
        if (!predicted.has(id) || !truth.has(id)) continue;
        report.landmark_errors.push_back(
            {id, std::string(landmark_info(id).name), norm(predicted.at(id) - truth.at(id))});
    }
}

std::string MetricReport::to_json() const
{
    using nlohmann::json;
    json doc;
    doc["subject"] = subject;
    doc["mean_dice"] = mean_dice;
    doc["mean_pasd"] = opt(mean_pasd);
    doc["dice"] = json::array();
    for (const auto& e : dice)
        doc["dice"].push_back({{"label", e.label}, {"name", e.name}, {"value", e.value}, {"both_empty", e.both_empty}});
    doc["pasd"] = json::array();
    for (const auto& e : surfaces)
        doc["pasd"].push_back({{"region", e.region}, {"surface", e.surface}, {"side", e.side}, {"value", opt(e.pasd)}});
    doc["lines"] = json::array();
    for (const auto& e : lines)
        doc["lines"].push_back({{"region", e.region},
                                {"surface", e.surface},
                                {"side", e.side},
                                {"mae", opt(e.mae)},
                                {"sigma_y", opt(e.sigma_y)},
                                {"slices", e.slices}});
    doc["landmark_errors"] = json::array();
    for (const auto& e : landmark_errors)
        doc["landmark_errors"].push_back({{"id", e.id}, {"name", e.name}, {"error", e.error}});
    doc["warnings"] = warnings;
    return doc.dump(2) + "\n";
}

MetricReport MetricReport::from_json(std::string_view text)
{
    try {
        const auto doc = nlohmann::json::parse(text);
        MetricReport r;
        r.subject = doc.at("subject").get<std::string>();
        r.mean_dice = doc.at("mean_dice").get<double>();
        r.mean_pasd = opt_from(doc.at("mean_pasd"));
        for (const auto& e : doc.at("dice"))
            r.dice.push_back({e.at("label").get<Label>(), e.at("name").get<std::string>(), e.at("value").get<double>(),
                              e.at("both_empty").get<bool>()});
        for (const auto& e : doc.at("pasd"))
            r.surfaces.push_back({e.at("region").get<std::string>(), e.at("surface").get<std::string>(),
                                  e.at("side").get<std::string>(), opt_from(e.at("value"))});
        for (const auto& e : doc.at("lines"))
            r.lines.push_back({e.at("region").get<std::string>(), e.at("surface").get<std::string>(),
                               e.at("side").get<std::string>(), opt_from(e.at("mae")), opt_from(e.at("sigma_y")),
                               e.at("slices").get<int>()});
        for (const auto& e : doc.at("landmark_errors"))
            r.landmark_errors.push_back(
                {e.at("id").get<int>(), e.at("name").get<std::string>(), e.at("error").get<double>()});
        r.warnings = doc.at("warnings").get<std::vector<std::string>>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("metric report JSON: ") + e.what());
    }
}

std::string MetricReport::to_csv(bool header) const
{
    std::ostringstream os;
    if (header) os << "subject,metric,region,surface,side,value\n";
    auto row = [&](std::string_view metric, std::string_view region, std::string_view surface, std::string_view side,
                   const std::string& value) {
        os << subject << ',' << metric << ',' << region << ',' << surface << ',' << side << ',' << value << '\n';
    };
    for (const auto& e : dice) row("dice", e.name, "volume", side_of(fine_label(e.label).laterality), fmt(e.value));
    row("mean_dice", "all", "volume", "all", fmt(mean_dice));
    for (const auto& e : surfaces) row("pasd", e.region, e.surface, e.side, fmt(e.pasd));
    row("mean_pasd", "all", "boundary", "all", fmt(mean_pasd));
    for (const auto& e : lines) {
        row("mae", e.region, e.surface, e.side, fmt(e.mae));
        row("sigma_y", e.region, e.surface, e.side, fmt(e.sigma_y));
    }
    for (const auto& e : landmark_errors)
        row("landmark_error", e.name, "point", side_of(landmark_info(e.id).laterality), fmt(e.error));
    return os.str();
}

} // namespace hoa
