#include "hoa/refinement.hpp"

#include "hoa/components.hpp"
#include "hoa/simd/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace hoa {
namespace {

constexpr std::array<Hemisphere, 2> kSides{Hemisphere::Left, Hemisphere::Right};

void require_canonical(const LabelVolume& vol)
{
    if (!canonical_frame_of(vol.affine()).is_identity())
        throw ValidationError("refinement step expects a volume in the canonical RAS frame");
}

bool is_bilateral_fused(Label fused_id) { return fused_id >= 1 && fused_id <= kFusedLabelCount && fused_label(fused_id).bilateral; }

// Lookup table of bilateral flags over fused ids.
std::array<std::uint8_t, kFusedLabelCount + 1> bilateral_lut()
{
    std::array<std::uint8_t, kFusedLabelCount + 1> lut{};
    for (Label id = 1; id <= kFusedLabelCount; ++id) lut[std::size_t(id)] = is_bilateral_fused(id);
    return lut;
}

struct RowGeometry {
    double slope;
    double offset;
};

RowGeometry row_geometry(const Affine& affine, const Plane& plane, int j, int k)
{
    const Vec3 base = affine.apply({0.0, double(j), double(k)});
    return {dot(affine.column(0), plane.normal), dot(base - plane.point, plane.normal)};
}

// Right/left flags for one row; `shift` moves the dividing line by that many signed-distance units toward +x.
void classify(const simd::KernelTable& kt, RowGeometry g, double shift, Hemisphere tie, std::span<std::uint8_t> right)
{
    if (tie == Hemisphere::Left) {
        // left iff d - shift <= 0, i.e. right iff -(d - shift) < 0
        kt.classify_row(-g.slope, -(g.offset - shift), right);
        for (auto& r : right) r = !r;
    } else {
        kt.classify_row(g.slope, g.offset - shift, right);
    }
}

bool rule_slice_exceeds(long j, long plane_j, bool inclusive) { return j > plane_j || (inclusive && j == plane_j); }
bool rule_slice_precedes(long j, long plane_j, bool inclusive) { return j < plane_j || (inclusive && j == plane_j); }

// Fails unless partial rules are allowed; returns whether the landmarks are present.
bool landmarks_available(const LandmarkSet& lms, std::initializer_list<int> ids, std::string_view purpose,
                         const RefinementConfig& cfg)
{
    const std::vector<int> list(ids);
    bool all = true;
    for (int id : list) all &= lms.has(id);
    if (!all && !cfg.partial_rules) lms.require(list, purpose);
    return all;
}

bool parse_bool(const std::string& key, const std::string& value)
{
    if (value == "1" || value == "true" || value == "on" || value == "yes") return true;
    if (value == "0" || value == "false" || value == "off" || value == "no") return false;
    throw ValidationError("config key " + key + ": expected a boolean, got '" + value + "'");
}

int parse_int(const std::string& key, const std::string& value)
{
    try {
        std::size_t used = 0;
        const int v = std::stoi(value, &used);
        if (used == value.size()) return v;
    } catch (const std::exception&) {
    }
    throw ValidationError("config key " + key + ": expected an integer, got '" + value + "'");
}

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

} // namespace

Plane build_midsagittal_plane(const LandmarkSet& lms)
{
    static constexpr int kIds[] = {lm::AC, lm::PC, lm::PPF};
    lms.require(kIds, "midsagittal plane");
    const Vec3 ac = lms.at(lm::AC), pc = lms.at(lm::PC), ppf = lms.at(lm::PPF);
    Vec3 n = cross(pc - ac, ppf - ac);
    const double twice_area = norm(n);
    if (!(twice_area / 2.0 > 1e-6)) throw RuleError("AC, PC and PPF are collinear; midsagittal plane undefined");
    n = (1.0 / twice_area) * n;
    if (n.x == 0.0) throw RuleError("midsagittal plane contains the left-right axis");
    if (n.x < 0.0) n = -1.0 * n;
    return {ac, n};
}

long coronal_slice(const LabelVolume& vol, Vec3 world) { return round_half_away(vol.world_to_voxel(world).y); }

HemisphereVolume split_hemispheres(const LabelVolume& vol12, const Plane& plane, const RefinementConfig& cfg)
{
    require_canonical(vol12);
    const auto& kt = simd::kernels();
    const int nx = vol12.dims()[0], ny = vol12.dims()[1], nz = vol12.dims()[2];
    const auto lut = bilateral_lut();
    const auto labels = vol12.data();
    HemisphereVolume out = HemisphereVolume::like(vol12, Hemisphere::None);
    auto tags = out.data();

    auto bilateral_at = [&](std::size_t v) {
        const Label l = labels[v];
        return l > 0 && l <= kFusedLabelCount && lut[std::size_t(l)];
    };

    auto tag_row = [&](int j, int k, double shift, std::span<std::uint8_t> scratch) {
        classify(kt, row_geometry(vol12.affine(), plane, j, k), shift, cfg.midline_tie, scratch);
        const std::size_t base = vol12.index(0, j, k);
        for (int i = 0; i < nx; ++i)
            tags[base + std::size_t(i)] = bilateral_at(base + std::size_t(i))
                                              ? (scratch[std::size_t(i)] ? Hemisphere::Right : Hemisphere::Left)
                                              : Hemisphere::None;
    };

    if (!cfg.slice_adjust) {
        parallel_for(std::size_t(nz), cfg.threads, [&](std::size_t k0, std::size_t k1) {
            std::vector<std::uint8_t> scratch(static_cast<std::size_t>(nx));
            for (std::size_t k = k0; k < k1; ++k)
                for (int j = 0; j < ny; ++j) tag_row(j, int(k), 0.0, scratch);
        });
        return out;
    }

    // Sequential posterior-to-anterior sweep. Each slice tries line offsets in
    // voxel steps and keeps the one whose 2D components best agree with the
    // previous slice's assignment.
    const double voxel_step = std::abs(dot(vol12.affine().column(0), plane.normal));
    const int radius = std::max(0, cfg.slice_adjust_radius);
    std::vector<int> offsets{0};
    for (int s = 1; s <= radius; ++s) {
        offsets.push_back(-s);
        offsets.push_back(s);
    }

    std::vector<std::uint8_t> scratch(static_cast<std::size_t>(nx));
    
    bool have_previous = false;
    for (int j = 0; j < ny; ++j) {
        bool any = false;
        for (int k = 0; k < nz && !any; ++k)
            for (int i = 0; i < nx && !any; ++i) any = bilateral_at(vol12.index(i, j, k));

        int chosen = 0;
        if (any && have_previous) {
            const Components2D comps = label_components_2d_keyed(nx, nz, [&](int i, int k) {
                const std::size_t v = vol12.index(i, j, k);
                return bilateral_at(v) ? int(labels[v]) : -1;
            });
            // Majority tag of same-label posterior neighbours, per component.
            std::vector<int> votes(std::size_t(comps.count), 0);
            for (int k = 0; k < nz; ++k)
                for (int i = 0; i < nx; ++i) {
                    const int c = comps.at(i, k);
                    if (c < 0) continue;
                    const std::size_t prev = vol12.index(i, j - 1, k);
                    if (labels[prev] != labels[vol12.index(i, j, k)]) continue;
                    votes[std::size_t(c)] += tags[prev] == Hemisphere::Right ? 1 : (tags[prev] == Hemisphere::Left ? -1 : 0);
                }
            long best_score = -1;
            for (int s : offsets) {
                long score = 0;
                for (int k = 0; k < nz; ++k) {
                    classify(kt, row_geometry(vol12.affine(), plane, j, k), double(s) * voxel_step, cfg.midline_tie, scratch);
                    for (int i = 0; i < nx; ++i) {
                        const int c = comps.at(i, k);
                        if (c < 0 || votes[std::size_t(c)] == 0) continue;
                        const bool ref_right = votes[std::size_t(c)] > 0;
                        score += (scratch[std::size_t(i)] != 0) == ref_right;
                    }
                }
                if (score > best_score) {
                    best_score = score;
                    chosen = s;
                }
            }
        }
        for (int k = 0; k < nz; ++k) tag_row(j, k, double(chosen) * voxel_step, scratch);
        have_previous = have_previous || any;
    }
    return out;
}

double nacc_putamen_separator_x(const LabelVolume& vol, const LandmarkSet& lms, Hemisphere h, long j, SeparatorMode mode)
{
    const Vec3 ant = lms.at(lateral_landmark(lm::ContactAnt_L, h));
    const Vec3 post = lms.at(lateral_landmark(lm::ContactPost_L, h));
    switch (mode) {
    case SeparatorMode::ConstantAnterior: return ant.x;
    case SeparatorMode::ConstantPosterior: return post.x;
    case SeparatorMode::Linear: break;
    }
    const long ja = coronal_slice(vol, ant);
    const long jp = coronal_slice(vol, post);
    if (ja == jp) return j >= ja ? ant.x : post.x;
    const double t = std::clamp(double(j - jp) / double(ja - jp), 0.0, 1.0);
    // Endpoint-exact form: t = 0 gives post.x, t = 1 gives ant.x.
    return (1.0 - t) * post.x + t * ant.x;
}

void separate_nacc_putamen(const LabelVolume& vol12, const LandmarkSet& lms, const HemisphereVolume& hemi,
                           LabelVolume& fine26, const RefinementConfig& cfg)
{
    require_canonical(vol12);
    const int nx = vol12.dims()[0], ny = vol12.dims()[1], nz = vol12.dims()[2];
    for (Hemisphere h : kSides) {
        const int ant = lateral_landmark(lm::ContactAnt_L, h), post = lateral_landmark(lm::ContactPost_L, h);
        const bool have = landmarks_available(lms, {ant, post}, "NAcc/putamen separation", cfg);
        const Label nacc = lateral_variant(fine::NAcc_L, h), put = lateral_variant(fine::Put_L, h);
        for (int j = 0; j < ny; ++j) {
            const double sep = have ? nacc_putamen_separator_x(vol12, lms, h, j, cfg.separator_mode) : 0.0;
            for (int k = 0; k < nz; ++k)
                for (int i = 0; i < nx; ++i) {
                    const std::size_t v = vol12.index(i, j, k);
                    if (vol12.data()[v] != fused::NAcc_Put || hemi.data()[v] != h) continue;
                    bool medial = false;
                    if (have) {
                        const double x = vol12.voxel_to_world(i, j, k).x;
                        medial = h == Hemisphere::Right ? x < sep : x > sep;
                    }
                    fine26.data()[v] = medial ? nacc : put;
                }
        }
    }
}

void apply_coronal_extents(LabelVolume& fine26, const LandmarkSet& lms, const RefinementConfig& cfg)
{
    require_canonical(fine26);
    const int nx = fine26.dims()[0], ny = fine26.dims()[1], nz = fine26.dims()[2];
    auto data = fine26.data();
    const bool inclusive = cfg.truncation_inclusive;

    // Per-label relabel decision as a function of the slice index.
    auto sweep = [&](Label from, Label to, auto&& moves) {
        for (int k = 0; k < nz; ++k)
            for (int j = 0; j < ny; ++j) {
                if (!moves(long(j))) continue;
                const std::size_t base = fine26.index(0, j, k);
                for (int i = 0; i < nx; ++i)
                    if (data[base + std::size_t(i)] == from) data[base + std::size_t(i)] = to;
            }
    };

    for (Hemisphere h : kSides) {
        const Label nacc = lateral_variant(fine::NAcc_L, h), put = lateral_variant(fine::Put_L, h);
        if (cfg.rule_putamen_anterior) {
            const int id = lateral_landmark(lm::PutFirst_L, h);
            if (landmarks_available(lms, {id}, "putamen anterior truncation", cfg)) {
                const long plane_j = coronal_slice(fine26, lms.at(id));
                sweep(put, nacc, [&](long j) { return rule_slice_exceeds(j, plane_j, inclusive); });
            }
        }
        if (cfg.rule_nacc_posterior) {
            const int id = lateral_landmark(lm::NAccLast_L, h);
            if (landmarks_available(lms, {id}, "NAcc posterior truncation", cfg)) {
                const long plane_j = coronal_slice(fine26, lms.at(id));
                sweep(nacc, put, [&](long j) { return rule_slice_precedes(j, plane_j, inclusive); });
            }
        }
    }
    if (cfg.rule_3v_anterior && landmarks_available(lms, {lm::V3First}, "third ventricle exclusion", cfg)) {
        const long plane_j = coronal_slice(fine26, lms.at(lm::V3First));
        sweep(fine::V3, cfg.v3_exclusion_target, [&](long j) { return rule_slice_exceeds(j, plane_j, inclusive); });
    }
}

void split_vdc(const LabelVolume& vol12, const LandmarkSet& lms, const HemisphereVolume& hemi, LabelVolume& fine26,
               const RefinementConfig& cfg)
{
    require_canonical(vol12);
    const int nx = vol12.dims()[0], ny = vol12.dims()[1], nz = vol12.dims()[2];
    for (Hemisphere h : kSides) {
        const int id = lateral_landmark(lm::Mammillary_L, h);
        const bool have = cfg.rule_vdc_split && landmarks_available(lms, {id}, "VDC split", cfg);
        const long plane_j = have ? coronal_slice(vol12, lms.at(id)) : std::numeric_limits<long>::max();
        const Label anterior = lateral_variant(fine::VDC_A_L, h), posterior = lateral_variant(fine::VDC_P_L, h);
        for (int k = 0; k < nz; ++k)
            for (int j = 0; j < ny; ++j) {
                const bool is_anterior = have && rule_slice_exceeds(j, plane_j, cfg.vdc_plane_anterior);
                for (int i = 0; i < nx; ++i) {
                    const std::size_t v = vol12.index(i, j, k);
                    if (vol12.data()[v] == fused::VDC && hemi.data()[v] == h)
                        fine26.data()[v] = is_anterior ? anterior : posterior;
                }
            }
    }
}

void split_lv_ih(const LabelVolume& vol12, const LandmarkSet& lms, const HemisphereVolume& hemi, LabelVolume& fine26,
                 const RefinementConfig& cfg)
{
    require_canonical(vol12);
    const int nx = vol12.dims()[0], ny = vol12.dims()[1], nz = vol12.dims()[2];
    const auto labels = vol12.data();
    auto out = fine26.data();

    for (Hemisphere h : kSides) {
        const Label lv = lateral_variant(fine::LV_L, h), ih = lateral_variant(fine::IH_L, h);
        auto in_structure = [&](int i, int j, int k) {
            const std::size_t v = vol12.index(i, j, k);
            return labels[v] == fused::LV_IH && hemi.data()[v] == h;
        };

        for (std::size_t v = 0; v < labels.size(); ++v)
            if (labels[v] == fused::LV_IH && hemi.data()[v] == h) out[v] = lv;

        const int id = lateral_landmark(lm::IHFirst_L, h);
        if (!cfg.rule_ih_split || !landmarks_available(lms, {id}, "LV/IH split", cfg)) continue;
        const Vec3 seed = lms.at(id);
        const long plane_j = coronal_slice(vol12, seed);
        const long first = std::max<long>(plane_j + 1, 0);

        std::vector<std::uint8_t> previous; // IH mask of the previous slice over (i, k)
        for (long j = first; j < ny; ++j) {
            const int jj = int(j);
            const Components2D comps =
                label_components_2d(nx, nz, [&](int i, int k) { return in_structure(i, jj, k); });
            if (comps.count == 0) break;

            int chosen = -1;
            if (j == first) {
                // Seed: component with the voxel center nearest the landmark in the (x, z) plane.
                std::vector<double> best(std::size_t(comps.count), std::numeric_limits<double>::infinity());
                for (int k = 0; k < nz; ++k)
                    for (int i = 0; i < nx; ++i) {
                        const int c = comps.at(i, k);
                        if (c < 0) continue;
                        const Vec3 w = vol12.voxel_to_world(i, jj, k);
                        const double d2 = (w.x - seed.x) * (w.x - seed.x) + (w.z - seed.z) * (w.z - seed.z);
                        best[std::size_t(c)] = std::min(best[std::size_t(c)], d2);
                    }
                chosen = int(std::min_element(best.begin(), best.end()) - best.begin());
            } else {
                std::vector<std::uint8_t> touches(std::size_t(comps.count), 0);
                std::vector<double> z_sum(std::size_t(comps.count), 0.0);
                std::vector<long> z_count(std::size_t(comps.count), 0);
                for (int k = 0; k < nz; ++k)
                    for (int i = 0; i < nx; ++i) {
                        const int c = comps.at(i, k);
                        if (c < 0) continue;
                        z_sum[std::size_t(c)] += vol12.voxel_to_world(i, jj, k).z;
                        ++z_count[std::size_t(c)];
                        if (touches[std::size_t(c)]) continue;
                        // 26-adjacency to the previous slice's IH voxels.
                        for (int dk = -1; dk <= 1 && !touches[std::size_t(c)]; ++dk)
                            for (int di = -1; di <= 1; ++di) {
                                const int pi = i + di, pk = k + dk;
                                if (pi < 0 || pk < 0 || pi >= nx || pk >= nz) continue;
                                if (previous[std::size_t(pk) * std::size_t(nx) + std::size_t(pi)]) {
                                    touches[std::size_t(c)] = 1;
                                    break;
                                }
                            }
                    }
                double best_z = std::numeric_limits<double>::infinity();
                for (int c = 0; c < comps.count; ++c) {
                    if (!touches[std::size_t(c)]) continue;
                    const double cz = z_sum[std::size_t(c)] / double(z_count[std::size_t(c)]);
                    if (cz < best_z) {
                        best_z = cz;
                        chosen = c;
                    }
                }
                if (chosen < 0) break;
            }

            previous.assign(std::size_t(nx) * std::size_t(nz), 0);
            for (int k = 0; k < nz; ++k)
                for (int i = 0; i < nx; ++i)
                    if (comps.at(i, k) == chosen) {
                        previous[std::size_t(k) * std::size_t(nx) + std::size_t(i)] = 1;
                        out[vol12.index(i, jj, k)] = ih;
                    }
        }
    }
}

LabelVolume refine_full(const LabelVolume& vol12, const LandmarkSet& lms, const RefinementConfig& cfg)
{
    check_fused_volume(vol12);
    if (!cfg.partial_rules) {
        std::vector<int> all(kLandmarkCount);
        for (int id = 1; id <= kLandmarkCount; ++id) all[std::size_t(id - 1)] = id;
        lms.require(all, "full refinement");
    }

    CanonicalFrame frame;
    const LabelVolume canon = reorient_to_canonical(vol12, &frame);
    const Plane plane = build_midsagittal_plane(lms);
    const HemisphereVolume hemi = split_hemispheres(canon, plane, cfg);

    LabelVolume fine26 = LabelVolume::like(canon, 0);
    {
        // Labels whose fine id follows from the fused id and hemisphere alone.
        std::array<Label, kFusedLabelCount + 1> midline{};
        midline[fused::CSF] = fine::CSF;
        midline[fused::V3] = fine::V3;
        midline[fused::V4] = fine::V4;
        midline[fused::Brainstem] = fine::Brainstem;
        std::array<Label, kFusedLabelCount + 1> left{};
        left[fused::CAU] = fine::CAU_L;
        left[fused::GP] = fine::GP_L;
        left[fused::TH] = fine::TH_L;
        left[fused::HF] = fine::HF_L;
        left[fused::AMY] = fine::AMY_L;
        const auto in = canon.data();
        const auto tags = hemi.data();
        auto out = fine26.data();
        parallel_for(in.size(), cfg.threads, [&](std::size_t b, std::size_t e) {
            for (std::size_t v = b; v < e; ++v) {
                const Label f = in[v];
                if (midline[std::size_t(f)]) out[v] = midline[std::size_t(f)];
                else if (left[std::size_t(f)]) out[v] = left[std::size_t(f)] + (tags[v] == Hemisphere::Right ? 1 : 0);
            }
        });
    }
    separate_nacc_putamen(canon, lms, hemi, fine26, cfg);
    apply_coronal_extents(fine26, lms, cfg);
    split_vdc(canon, lms, hemi, fine26, cfg);
    split_lv_ih(canon, lms, hemi, fine26, cfg);

    if (frame.is_identity()) return fine26;
    LabelVolume back = apply_frame(fine26, frame.inverse());
    return LabelVolume(vol12.dims(), vol12.spacing(), vol12.affine(), std::move(back.storage()));
}

std::map<std::string, std::string> to_key_values(const RefinementConfig& cfg)
{
    auto b = [](bool v) { return std::string(v ? "true" : "false"); };
    std::map<std::string, std::string> kv;
    kv["slice_adjust"] = b(cfg.slice_adjust);
    kv["slice_adjust_radius"] = std::to_string(cfg.slice_adjust_radius);
    kv["separator_mode"] = cfg.separator_mode == SeparatorMode::Linear             ? "linear"
                           : cfg.separator_mode == SeparatorMode::ConstantAnterior ? "anterior"
                                                                                   : "posterior";
    kv["midline_tie"] = cfg.midline_tie == Hemisphere::Left ? "left" : "right";
    kv["truncation_inclusive"] = b(cfg.truncation_inclusive);
    kv["vdc_plane_anterior"] = b(cfg.vdc_plane_anterior);
    kv["rule_putamen_anterior"] = b(cfg.rule_putamen_anterior);
    kv["rule_nacc_posterior"] = b(cfg.rule_nacc_posterior);
    kv["rule_3v_anterior"] = b(cfg.rule_3v_anterior);
    kv["rule_vdc_split"] = b(cfg.rule_vdc_split);
    kv["rule_ih_split"] = b(cfg.rule_ih_split);
    kv["v3_exclusion_target"] = std::to_string(cfg.v3_exclusion_target);
    kv["partial_rules"] = b(cfg.partial_rules);
    kv["threads"] = std::to_string(cfg.threads);
    return kv;
}

void apply_key_values(RefinementConfig& cfg, const std::map<std::string, std::string>& kv)
{
    for (const auto& [key, value] : kv) {
        if (key == "slice_adjust") cfg.slice_adjust = parse_bool(key, value);
        else if (key == "slice_adjust_radius") cfg.slice_adjust_radius = parse_int(key, value);
        else if (key == "separator_mode") {
            if (value == "linear") cfg.separator_mode = SeparatorMode::Linear;
            else if (value == "anterior") cfg.separator_mode = SeparatorMode::ConstantAnterior;
            else if (value == "posterior") cfg.separator_mode = SeparatorMode::ConstantPosterior;
            else throw ValidationError("config key separator_mode: expected linear|anterior|posterior");
        } else if (key == "midline_tie") {
            if (value == "left") cfg.midline_tie = Hemisphere::Left;
            else if (value == "right") cfg.midline_tie = Hemisphere::Right;
            else throw ValidationError("config key midline_tie: expected left|right");
        } else if (key == "truncation_inclusive") cfg.truncation_inclusive = parse_bool(key, value);
        else if (key == "vdc_plane_anterior") cfg.vdc_plane_anterior = parse_bool(key, value);
        else if (key == "rule_putamen_anterior") cfg.rule_putamen_anterior = parse_bool(key, value);
        else if (key == "rule_nacc_posterior") cfg.rule_nacc_posterior = parse_bool(key, value);
        else if (key == "rule_3v_anterior") cfg.rule_3v_anterior = parse_bool(key, value);
        else if (key == "rule_vdc_split") cfg.rule_vdc_split = parse_bool(key, value);
        else if (key == "rule_ih_split") cfg.rule_ih_split = parse_bool(key, value);
        else if (key == "v3_exclusion_target") {
            const int target = parse_int(key, value);
            fine_label(target);
            cfg.v3_exclusion_target = target;
        } else if (key == "partial_rules") cfg.partial_rules = parse_bool(key, value);
        else if (key == "threads") cfg.threads = std::max(1, parse_int(key, value));
        else throw ValidationError("unknown config key '" + key + "'");
    }
}

std::map<std::string, std::string> parse_key_value_text(std::string_view text)
{
    std::map<std::string, std::string> kv;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
        kv[trim(std::string_view(t).substr(0, eq))] = trim(std::string_view(t).substr(eq + 1));
    }
    return kv;
}

} // namespace hoa
