#include "hoa/landmarks.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace hoa {
namespace {

using L = Laterality;

constexpr std::array<LandmarkInfo, kLandmarkCount> kCatalog{{
    {1, "Put_first_L", "Putamen", "First anterior appearance (L)", L::Left, 2},
    {2, "Put_first_R", "Putamen", "First anterior appearance (R)", L::Right, 1},
    {3, "NAccPut_ant_L", "Nucleus accumbens-putamen interface", "Anterior contact (L)", L::Left, 4},
    {4, "NAccPut_ant_R", "Nucleus accumbens-putamen interface", "Anterior contact (R)", L::Right, 3},
    {5, "NAccPut_post_L", "Nucleus accumbens-putamen interface", "Posterior contact (L)", L::Left, 6},
    {6, "NAccPut_post_R", "Nucleus accumbens-putamen interface", "Posterior contact (R)", L::Right, 5},
    {7, "NAcc_last_L", "Nubbins", "Last anterior appearance of nucleus accumbens (L)", L::Left, 8},
    {8, "NAcc_last_R", "Nubbins", "Last anterior appearance of nucleus accumbens (R)", L::Right, 7},
    {9, "3V_first", "Third ventricle", "First anterior appearance", L::Midline, 0},
    {10, "AC", "Commissures", "Anterior commissure", L::Midline, 0},
    {11, "MB_L", "Ventral diencephalon", "Mammillary body (L)", L::Left, 12},
    {12, "MB_R", "Ventral diencephalon", "Mammillary body (R)", L::Right, 11},
    {13, "IH_first_L", "Continuity of atrium", "First posterior appearance of inferior horn (L)", L::Left, 14},
    {14, "IH_first_R", "Continuity of atrium", "First posterior appearance of inferior horn (R)", L::Right, 13},
    {15, "PC", "Commissures", "Posterior commissure", L::Midline, 0},
    {16, "PPF", "Brainstem limit", "Prepontine fissure", L::Midline, 0},
}};

std::string label_of(int id)
{
    return "#" + std::to_string(id) + " (" + std::string(kCatalog[std::size_t(id - 1)].name) + ")";
}

void check_id(int id)
{
    if (id < 1 || id > kLandmarkCount) throw ValidationError("unknown landmark id " + std::to_string(id));
}

} // namespace

std::span<const LandmarkInfo, kLandmarkCount> landmark_catalog() { return kCatalog; }

const LandmarkInfo& landmark_info(int id)
{
    check_id(id);
    return kCatalog[std::size_t(id - 1)];
}

int lateral_landmark(int left_id, Hemisphere h)
{
    const auto& info = landmark_info(left_id);
    if (info.laterality != Laterality::Left) throw std::logic_error("lateral_landmark expects a left landmark id");
    return h == Hemisphere::Right ? info.partner : left_id;
}

bool LandmarkSet::has(int id) const { return id >= 1 && id <= kLandmarkCount && points_[std::size_t(id - 1)].has_value(); }

std::optional<Vec3> LandmarkSet::find(int id) const
{
    check_id(id);
    return points_[std::size_t(id - 1)];
}

Vec3 LandmarkSet::at(int id) const
{
    check_id(id);
    const auto& p = points_[std::size_t(id - 1)];
    if (!p) throw ValidationError("missing landmark " + label_of(id));
    return *p;
}

void LandmarkSet::set(int id, Vec3 p)
{
    check_id(id);
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
        throw ValidationError("non-finite coordinate for landmark " + label_of(id));
    points_[std::size_t(id - 1)] = p;
}

void LandmarkSet::erase(int id)
{
    check_id(id);
    points_[std::size_t(id - 1)].reset();
}

std::size_t LandmarkSet::size() const
{
    std::size_t n = 0;
    for (const auto& p : points_) n += p.has_value();
    return n;
}

std::vector<int> LandmarkSet::ids() const
{
    std::vector<int> out;
    for (int id = 1; id <= kLandmarkCount; ++id)
        if (has(id)) out.push_back(id);
    return out;
}

std::vector<int> LandmarkSet::missing() const
{
    std::vector<int> out;
    for (int id = 1; id <= kLandmarkCount; ++id)
        if (!has(id)) out.push_back(id);
    return out;
}

void LandmarkSet::require(std::span<const int> ids, std::string_view purpose) const
{
    std::string absent;
    for (int id : ids) {
        if (has(id)) continue;
        if (!absent.empty()) absent += ", ";
        absent += label_of(id);
    }
    if (!absent.empty()) throw ValidationError(std::string(purpose) + " requires missing landmark(s) " + absent);
}

LandmarkSet parse_landmarks_json(std::string_view text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("landmark JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ValidationError("landmark JSON must be an object");
    if (doc.contains("space") && doc["space"] != "world_mm")
        throw ValidationError("landmark JSON: unsupported space " + doc["space"].dump());
    if (doc.contains("frame") && doc["frame"] != "RAS")
        throw ValidationError("landmark JSON: unsupported frame " + doc["frame"].dump());
    if (!doc.contains("landmarks") || !doc["landmarks"].is_array())
        throw ValidationError("landmark JSON: missing \"landmarks\" array");

    LandmarkSet set;
    for (const auto& entry : doc["landmarks"]) {
        if (!entry.is_object() || !entry.contains("id") || !entry["id"].is_number_integer())
            throw ValidationError("landmark JSON: every entry needs an integer \"id\"");
        const int id = entry["id"].get<int>();
        check_id(id);
        if (set.has(id)) throw ValidationError("landmark JSON: duplicate id " + std::to_string(id));
        const auto& xyz = entry.contains("xyz") ? entry["xyz"] : nlohmann::json();
        if (!xyz.is_array() || xyz.size() != 3)
            throw ValidationError("landmark JSON: id " + std::to_string(id) + " needs \"xyz\" with three numbers");
        Vec3 p;
        for (int a = 0; a < 3; ++a) {
            if (!xyz[std::size_t(a)].is_number())
                throw ValidationError("landmark JSON: non-finite coordinate for id " + std::to_string(id));
            p[a] = xyz[std::size_t(a)].get<double>();
        }
        set.set(id, p);
    }
    return set;
}

LandmarkSet parse_landmarks(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open landmark file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_landmarks_json(buf.str());
}

std::string landmarks_to_json(const LandmarkSet& set)
{
    nlohmann::json doc;
    doc["space"] = "world_mm";
    doc["frame"] = "RAS";
    doc["landmarks"] = nlohmann::json::array();
    for (int id : set.ids()) {
        const Vec3 p = set.at(id);
        doc["landmarks"].push_back({{"id", id}, {"name", landmark_info(id).name}, {"xyz", {p.x, p.y, p.z}}});
    }
    return doc.dump(2) + "\n";
}

std::string landmarks_to_csv(const LandmarkSet& set)
{
    std::ostringstream out;
    out << "id,name,x,y,z\n" << std::setprecision(17);
    for (int id : set.ids()) {
        const Vec3 p = set.at(id);
        out << id << ',' << landmark_info(id).name << ',' << p.x << ',' << p.y << ',' << p.z << '\n';
    }
    return out.str();
}

void write_landmarks(const LandmarkSet& set, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << (path.extension() == ".csv" ? landmarks_to_csv(set) : landmarks_to_json(set));
    if (!out) throw IoError("error writing " + path.string());
}

std::vector<LandmarkViolation> validate_landmarks(const LandmarkSet& set, const LabelVolume& vol)
{
    std::vector<LandmarkViolation> report;

    if (vol.affine().invertible()) {
        for (int id : set.ids()) {
            const Vec3 ijk = vol.world_to_voxel(set.at(id));
            for (int a = 0; a < 3; ++a) {
                if (ijk[a] < -0.5 || ijk[a] > double(vol.dims()[a]) - 0.5) {
                    report.push_back({"out of bounds", "landmark " + label_of(id) + " lies outside the volume", {id}});
                    break;
                }
            }
        }
    }

    for (const auto& info : kCatalog) {
        if (info.laterality != Laterality::Left || !set.has(info.id) || !set.has(info.partner)) continue;
        const Vec3 left = set.at(info.id);
        const Vec3 right = set.at(info.partner);
        if (!(left.x < right.x))
            report.push_back({"laterality ordering",
                              "left landmark " + label_of(info.id) + " is not left of " + label_of(info.partner),
                              {info.id, info.partner}});
        if (norm(left - right) > kMaxPairDistanceMm)
            report.push_back({"pair distance",
                              label_of(info.id) + " and " + label_of(info.partner) + " are more than 80 mm apart",
                              {info.id, info.partner}});
    }

    if (set.has(lm::AC) && set.has(lm::PC) && !(set.at(lm::AC).y > set.at(lm::PC).y))
        report.push_back({"AC/PC ordering", "AC is not anterior to PC", {lm::AC, lm::PC}});

    return report;
}

} // namespace hoa
