#include "hoa/phantom.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numbers>
#include <random>

namespace hoa {
namespace {

constexpr int kLayoutExtent = 96;

double unit(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }
double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit(rng); }
int uniform_int(std::mt19937_64& rng, int lo, int hi) { return lo + int(rng() % std::uint64_t(hi - lo + 1)); }

double gaussian(std::mt19937_64& rng)
{
    // Box-Muller; 1 - u keeps the log argument positive.
    const double u1 = 1.0 - unit(rng), u2 = unit(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

struct Shift {
    int du = 0, dj = 0, dk = 0;
};

struct Grid {
    Dims dims;
    double s;
    int c;      // center column: first right-hemisphere column
    int oj, ok; // offsets of the layout inside a larger grid

    int i_of(Hemisphere h, int u) const { return h == Hemisphere::Right ? c + u : c - 1 - u; }
    // Continuous i for a continuous lateral offset.
    double fi_of(Hemisphere h, double u) const { return h == Hemisphere::Right ? c + u : c - 1 - u; }
};

struct Rasterizer {
    LabelVolume& vol;

    void paint(const Grid& g, const Box& b, Hemisphere h, Shift sh, Label label)
    {
        const double uc = 0.5 * (b.u0 + b.u1), jc = 0.5 * (b.j0 + b.j1), kc = 0.5 * (b.k0 + b.k1);
        const double ru = 0.5 * (b.u1 - b.u0) + 0.5, rj = 0.5 * (b.j1 - b.j0) + 0.5, rk = 0.5 * (b.k1 - b.k0) + 0.5;
        for (int k = b.k0; k <= b.k1; ++k)
            for (int j = b.j0; j <= b.j1; ++j)
                for (int u = b.u0; u <= b.u1; ++u) {
                    if (b.ellipsoid) {
                        const double a = (u - uc) / ru, bj = (j - jc) / rj, ck = (k - kc) / rk;
                        if (a * a + bj * bj + ck * ck > 1.0) continue;
                    }
                    const int i = h == Hemisphere::None ? g.c + u : g.i_of(h, u + sh.du);
                    const int jj = j + sh.dj + g.oj, kk = k + sh.dk + g.ok;
                    if (!vol.contains(i, jj, kk))
                        throw ValidationError("phantom primitive for " + std::string(fine_label(label).name) +
                                              " leaves the grid");
                    Label& dst = vol.at(i, jj, kk);
                    if (dst != 0)
                        throw ValidationError("phantom primitives overlap: " + std::string(fine_label(label).name) +
                                              " and " + std::string(fine_label(dst).name));
                    dst = label;
                }
    }
};

struct PlaneFit {
    Vec3 point;
    Vec3 normal;
    double sd(Vec3 p) const { return dot(p - point, normal); }
};

PlaneFit plane_of(const LandmarkSet& lms)
{
    const Vec3 ac = lms.at(lm::AC), pc = lms.at(lm::PC), ppf = lms.at(lm::PPF);
    Vec3 n = cross(pc - ac, ppf - ac);
    n = (1.0 / norm(n)) * n;
    if (n.x < 0) n = -1.0 * n;
    return {ac, n};
}

long snap(const LabelVolume& vol, Vec3 p) { return round_half_away(vol.world_to_voxel(p).y); }

[[noreturn]] void violation(const std::string& what) { throw ValidationError("phantom violates " + what); }

void put_u64(std::uint64_t& h, std::uint64_t v, int bytes)
{
    for (int b = 0; b < bytes; ++b) {
        h ^= (v >> (8 * b)) & 0xffu;
        h *= 0x100000001b3ull;
    }
}

} // namespace

PhantomLayout default_layout()
{
    PhantomLayout L;
    L.lv_body = {6, 16, 24, 76, 74, 82};
    L.lv_bridge = {17, 24, 24, 40, 74, 82};
    L.lv_atrium = {18, 24, 24, 40, 30, 73};
    L.ih_tube = {20, 24, 41, 54, 30, 36};
    L.nacc_body = {16, 20, 56, 74, 40, 52};
    L.nacc_cap = {21, 24, 67, 74, 40, 52};
    L.put_body = {21, 28, 48, 66, 40, 52};
    L.put_ext = {18, 20, 48, 55, 40, 52};
    L.cau = {6, 14, 52, 80, 58, 72};
    L.gp = {11, 14, 46, 58, 42, 52};
    L.th = {3, 10, 28, 42, 42, 54, true};
    L.hf = {12, 17, 30, 46, 26, 34};
    L.amy = {12, 18, 50, 58, 28, 38, true};
    L.vdc_a = {2, 9, 46, 54, 30, 38};
    L.vdc_p = {2, 9, 36, 45, 30, 38};
    L.csf = {-1, 0, 60, 80, 60, 72};
    L.v3 = {-1, 0, 44, 52, 40, 54};
    L.v4 = {-2, 1, 22, 28, 18, 26};
    L.brainstem = {-6, 5, 30, 42, 5, 24};

    L.put_first_j = 66;
    L.contact_ant_j = 65;
    L.contact_post_j = 57;
    L.nacc_last_j = 56;
    L.v3_first_j = 52;
    L.mammillary_j = 45;
    L.ih_first_j = 40;
    L.separator_u = 21;

    L.ac_j = 50, L.ac_k = 56;
    L.pc_j = 38, L.pc_k = 52;
    L.ppf_j = 44, L.ppf_k = 20;
    return L;
}

Phantom generate_phantom(const PhantomSpec& spec)
{
    for (int a = 0; a < 3; ++a)
        if (spec.dims[a] < kLayoutExtent)
            throw ValidationError("phantom dims must be at least 96 along every axis");
    if (!(spec.spacing > 0.0)) throw ValidationError("phantom spacing must be positive");

    const Grid g{spec.dims, spec.spacing, spec.dims[0] / 2, (spec.dims[1] - kLayoutExtent) / 2,
                 (spec.dims[2] - kLayoutExtent) / 2};
    const double s = spec.spacing;
    // World origin at the grid center; x = 0 falls between columns c - 1 and c for even widths.
    Vec3 origin;
    for (int a = 0; a < 3; ++a) origin[a] = -0.5 * (spec.dims[a] - 1) * s;
    if (spec.dims[0] % 2 != 0) throw ValidationError("phantom width must be even");
    const Affine affine = Affine::diagonal({s, s, s}, origin);

    std::mt19937_64 rng(spec.seed);
    std::array<Shift, 2> shift{};
    double tilt = 0.0, azimuth = 0.0, offset = 0.0;
    if (spec.jitter) {
        for (auto& sh : shift) {
            sh.du = uniform_int(rng, 0, 1);
            sh.dj = uniform_int(rng, -2, 2);
            sh.dk = uniform_int(rng, -2, 2);
        }
        tilt = uniform(rng, 0.0, 1.0) * std::numbers::pi / 180.0;
        azimuth = uniform(rng, 0.0, 2.0 * std::numbers::pi);
        offset = uniform(rng, -0.3, 0.3) * s;
    }
    auto sub = [&](double amount) { return spec.jitter ? uniform(rng, -amount, amount) : 0.0; };

    LabelVolume vol(spec.dims, {s, s, s}, affine, std::vector<Label>(spec.dims.voxel_count(), 0));
    Rasterizer r{vol};
    const PhantomLayout& L = spec.layout;

    r.paint(g, L.csf, Hemisphere::None, {}, fine::CSF);
    r.paint(g, L.v3, Hemisphere::None, {}, fine::V3);
    r.paint(g, L.v4, Hemisphere::None, {}, fine::V4);
    r.paint(g, L.brainstem, Hemisphere::None, {}, fine::Brainstem);

    for (Hemisphere h : {Hemisphere::Left, Hemisphere::Right}) {
        const Shift sh = shift[h == Hemisphere::Right ? 1 : 0];
        auto lab = [&](Label left) { return lateral_variant(left, h); };
        r.paint(g, L.lv_body, h, sh, lab(fine::LV_L));
        r.paint(g, L.lv_bridge, h, sh, lab(fine::LV_L));
        r.paint(g, L.lv_atrium, h, sh, lab(fine::LV_L));
        r.paint(g, L.ih_tube, h, sh, lab(fine::IH_L));
        r.paint(g, L.nacc_body, h, sh, lab(fine::NAcc_L));
        r.paint(g, L.nacc_cap, h, sh, lab(fine::NAcc_L));
        r.paint(g, L.put_body, h, sh, lab(fine::Put_L));
        r.paint(g, L.put_ext, h, sh, lab(fine::Put_L));
        r.paint(g, L.cau, h, sh, lab(fine::CAU_L));
        r.paint(g, L.gp, h, sh, lab(fine::GP_L));
        r.paint(g, L.th, h, sh, lab(fine::TH_L));
        r.paint(g, L.hf, h, sh, lab(fine::HF_L));
        r.paint(g, L.amy, h, sh, lab(fine::AMY_L));
        r.paint(g, L.vdc_a, h, sh, lab(fine::VDC_A_L));
        r.paint(g, L.vdc_p, h, sh, lab(fine::VDC_P_L));
    }

    // Midsagittal plane: unit normal tilted from +x, passing `offset` mm off the grid center.
    const Vec3 n{std::cos(tilt), std::sin(tilt) * std::cos(azimuth), std::sin(tilt) * std::sin(azimuth)};
    auto world_y = [&](double j) { return origin.y + (j + g.oj) * s; };
    auto world_z = [&](double k) { return origin.z + (k + g.ok) * s; };
    auto on_plane = [&](double y, double z) { return Vec3{offset - (n.y * y + n.z * z) / n.x, y, z}; };

    LandmarkSet lms;
    lms.set(lm::AC, on_plane(world_y(L.ac_j + sub(0.35)), world_z(L.ac_k + sub(0.3))));
    lms.set(lm::PC, on_plane(world_y(L.pc_j + sub(0.35)), world_z(L.pc_k + sub(0.3))));
    lms.set(lm::PPF, on_plane(world_y(L.ppf_j + sub(0.35)), world_z(L.ppf_k + sub(0.3))));
    lms.set(lm::V3First,
            on_plane(world_y(L.v3_first_j + sub(0.35)), world_z(0.5 * (L.v3.k0 + L.v3.k1) + sub(0.3))));

    for (Hemisphere h : {Hemisphere::Left, Hemisphere::Right}) {
        const Shift sh = shift[h == Hemisphere::Right ? 1 : 0];
        auto world_x = [&](double u) { return origin.x + g.fi_of(h, u + sh.du) * s; };
        auto place = [&](int left_id, double u, int j, double k) {
            lms.set(lateral_landmark(left_id, h),
                    {world_x(u + sub(0.3)), world_y(j + sh.dj + sub(0.35)), world_z(k + sh.dk + sub(0.3))});
        };
        auto center_u = [](const Box& b) { return 0.5 * (b.u0 + b.u1); };
        auto center_k = [](const Box& b) { return 0.5 * (b.k0 + b.k1); };

        place(lm::PutFirst_L, center_u(L.put_body), L.put_first_j, center_k(L.put_body));
        place(lm::NAccLast_L, center_u(L.nacc_body), L.nacc_last_j, center_k(L.nacc_body));
        place(lm::Mammillary_L, L.vdc_a.u0 + 1, L.mammillary_j, center_k(L.vdc_a));
        place(lm::IHFirst_L, center_u(L.ih_tube), L.ih_first_j, center_k(L.ih_tube));
        // Contact points sit on the column boundary, which is half a voxel medial of separator_u.
        const double boundary_u = L.separator_u - 0.5;
        auto contact = [&](int left_id, int j) {
            lms.set(lateral_landmark(left_id, h), {world_x(boundary_u + sub(0.25)), world_y(j + sh.dj + sub(0.35)),
                                                   world_z(center_k(L.put_body) + sh.dk + sub(0.3))});
        };
        contact(lm::ContactAnt_L, L.contact_ant_j);
        contact(lm::ContactPost_L, L.contact_post_j);
    }

    check_phantom_rules(vol, lms);
    return {std::move(vol), std::move(lms)};
}

void check_phantom_rules(const LabelVolume& vol_in, const LandmarkSet& lms)
{
    std::vector<int> all(kLandmarkCount);
    for (int id = 1; id <= kLandmarkCount; ++id) all[std::size_t(id - 1)] = id;
    lms.require(all, "phantom rule check");

    const LabelVolume vol = reorient_to_canonical(vol_in);
    const PlaneFit plane = plane_of(lms);
    const int nx = vol.dims()[0], ny = vol.dims()[1], nz = vol.dims()[2];

    struct Side {
        long j1, j3, j5, j7, j11, j13;
        Vec3 ant, post;
        Vec3 ih_seed;
    };
    std::array<Side, 2> side{};
    for (Hemisphere h : {Hemisphere::Left, Hemisphere::Right}) {
        Side& sd = side[h == Hemisphere::Right ? 1 : 0];
        sd.j1 = snap(vol, lms.at(lateral_landmark(lm::PutFirst_L, h)));
        sd.ant = lms.at(lateral_landmark(lm::ContactAnt_L, h));
        sd.post = lms.at(lateral_landmark(lm::ContactPost_L, h));
        sd.j3 = snap(vol, sd.ant);
        sd.j5 = snap(vol, sd.post);
        sd.j7 = snap(vol, lms.at(lateral_landmark(lm::NAccLast_L, h)));
        sd.j11 = snap(vol, lms.at(lateral_landmark(lm::Mammillary_L, h)));
        sd.ih_seed = lms.at(lateral_landmark(lm::IHFirst_L, h));
        sd.j13 = snap(vol, sd.ih_seed);
    }
    const long j9 = snap(vol, lms.at(lm::V3First));

    auto separator = [&](const Side& sd, long j) {
        if (sd.j3 == sd.j5) return j >= sd.j3 ? sd.ant.x : sd.post.x;
        double t = double(j - sd.j5) / double(sd.j3 - sd.j5);
        t = std::min(1.0, std::max(0.0, t));
        return (1.0 - t) * sd.post.x + t * sd.ant.x;
    };

    std::array<long, 2> ih_first_slice_count{};
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const Label l = vol.at(i, j, k);
                if (l == 0) continue;
                const FineLabel& fl = fine_label(l);
                const Vec3 w = vol.voxel_to_world(i, j, k);
                if (l == fine::V3 && j > j9) violation("3V exclusion: 3V voxel anterior to landmark #9");
                if (fl.laterality == Laterality::Midline) continue;
                const bool right = fl.laterality == Laterality::Right;
                const double d = plane.sd(w);
                if (right != (d >= 0.0))
                    violation("midline split: " + std::string(fl.name) + " voxel on the wrong side of the plane");
                const Side& sd = side[right ? 1 : 0];
                const Hemisphere h = right ? Hemisphere::Right : Hemisphere::Left;
                const Label base = right ? l - 1 : l;

                if (base == fine::Put_L || base == fine::NAcc_L) {
                    const double sep = separator(sd, j);
                    bool nacc = right ? w.x < sep : w.x > sep;
                    if (j > sd.j1) nacc = true;
                    if (j < sd.j7) nacc = false;
                    if (nacc != (base == fine::NAcc_L))
                        violation("NAcc/putamen rules: " + std::string(fl.name) + " voxel at slice " +
                                  std::to_string(j) + " contradicts the separator or truncation landmarks");
                }
                if (base == fine::VDC_A_L && !(j > sd.j11))
                    violation("VDC split: " + std::string(fl.name) + " voxel not anterior to the mammillary slice");
                if (base == fine::VDC_P_L && j > sd.j11)
                    violation("VDC split: " + std::string(fl.name) + " voxel anterior to the mammillary slice");
                if (base == fine::IH_L) {
                    if (j <= sd.j13) violation("LV/IH split: IH voxel at or posterior to landmark #13/#14");
                    if (j == sd.j13 + 1) ++ih_first_slice_count[right ? 1 : 0];
                    const Label lv = lateral_variant(fine::LV_L, h);
                    if ((i > 0 && vol.at(i - 1, j, k) == lv) || (i + 1 < nx && vol.at(i + 1, j, k) == lv) ||
                        (k > 0 && vol.at(i, j, k - 1) == lv) || (k + 1 < nz && vol.at(i, j, k + 1) == lv))
                        violation("LV/IH split: IH touches LV within a coronal slice");
                }
            }
    for (int s = 0; s < 2; ++s)
        if (ih_first_slice_count[std::size_t(s)] == 0)
            violation("LV/IH split: no IH voxel on the slice after landmark #" + std::to_string(13 + s));

    const auto report = validate_landmarks(lms, vol);
    if (!report.empty())
        violation("landmark validation: " + report.front().kind + " (" + report.front().message + ")");
}

std::string_view to_string(DegradeMode m)
{
    switch (m) {
    case DegradeMode::None: return "none";
    case DegradeMode::BoundaryNoise: return "boundary-noise";
    case DegradeMode::Erosion: return "erosion";
    case DegradeMode::LandmarkJitter: return "landmark-jitter";
    }
    return "?";
}

DegradeMode parse_degrade_mode(std::string_view name)
{
    for (DegradeMode m : {DegradeMode::None, DegradeMode::BoundaryNoise, DegradeMode::Erosion, DegradeMode::LandmarkJitter})
        if (to_string(m) == name) return m;
    throw ValidationError("unknown degrade mode '" + std::string(name) +
                          "' (expected none, boundary-noise, erosion or landmark-jitter)");
}

Degraded degrade_phantom(const LabelVolume& vol26, const LandmarkSet& lms, const DegradeSpec& spec)
{
    Degraded out{fuse_labels(vol26), lms};
    std::mt19937_64 rng(spec.seed);
    const LabelVolume& src = out.fused;
    const int nx = src.dims()[0], ny = src.dims()[1], nz = src.dims()[2];
    static constexpr std::array<std::array<int, 3>, 6> kNeighbours{
        {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}}};

    switch (spec.mode) {
    case DegradeMode::None: break;
    case DegradeMode::LandmarkJitter:
        if (!(spec.sigma_mm >= 0.0)) throw ValidationError("jitter sigma must be non-negative");
        for (int id = 1; id <= kLandmarkCount; ++id) {
            if (!lms.has(id)) continue;
            const Vec3 p = lms.at(id);
            const Vec3 d{gaussian(rng), gaussian(rng), gaussian(rng)};
            out.landmarks.set(id, p + spec.sigma_mm * d);
        }
        break;
    case DegradeMode::BoundaryNoise:
    case DegradeMode::Erosion: {
        if (spec.mode == DegradeMode::BoundaryNoise && !(spec.flip_fraction >= 0.0 && spec.flip_fraction <= 1.0))
            throw ValidationError("flip fraction must lie in [0, 1]");
        LabelVolume dst = src;
        std::array<Label, 6> other{};
        for (int k = 0; k < nz; ++k)
            for (int j = 0; j < ny; ++j)
                for (int i = 0; i < nx; ++i) {
                    const Label l = src.at(i, j, k);
                    int count = 0;
                    bool touches_background = false;
                    for (const auto& d : kNeighbours) {
                        const int a = i + d[0], b = j + d[1], c = k + d[2];
                        if (!src.contains(a, b, c)) continue;
                        const Label m = src.at(a, b, c);
                        if (m != l) other[std::size_t(count++)] = m;
                        touches_background |= m == 0;
                    }
                    if (spec.mode == DegradeMode::Erosion) {
                        if (l != 0 && touches_background) dst.at(i, j, k) = 0;
                    } else if (count > 0 && unit(rng) < spec.flip_fraction) {
                        dst.at(i, j, k) = other[std::size_t(rng() % std::uint64_t(count))];
                    }
                }
        out.fused = std::move(dst);
        break;
    }
    }
    return out;
}

std::uint64_t phantom_hash(const LabelVolume& vol, const LandmarkSet& lms)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (int a = 0; a < 3; ++a) put_u64(h, std::uint32_t(vol.dims()[a]), 4);
    for (Label l : vol.data()) put_u64(h, std::uint32_t(l), 4);
    for (int id = 1; id <= kLandmarkCount; ++id) {
        if (!lms.has(id)) continue;
        put_u64(h, std::uint64_t(id), 1);
        const Vec3 p = lms.at(id);
        for (int a = 0; a < 3; ++a) put_u64(h, std::bit_cast<std::uint64_t>(p[a]), 8);
    }
    return h;
}

} // namespace hoa
