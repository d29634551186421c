#pragma once

#include "hoa/labels.hpp"
#include "hoa/volume.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hoa {

inline constexpr int kLandmarkCount = 16;

/// Protocol landmark ids.
namespace lm {
inline constexpr int PutFirst_L = 1, PutFirst_R = 2;
inline constexpr int ContactAnt_L = 3, ContactAnt_R = 4;
inline constexpr int ContactPost_L = 5, ContactPost_R = 6;
inline constexpr int NAccLast_L = 7, NAccLast_R = 8;
inline constexpr int V3First = 9;
inline constexpr int AC = 10;
inline constexpr int Mammillary_L = 11, Mammillary_R = 12;
inline constexpr int IHFirst_L = 13, IHFirst_R = 14;
inline constexpr int PC = 15;
inline constexpr int PPF = 16;
} // namespace lm

struct LandmarkInfo {
    int id;
    std::string_view name;
    std::string_view region;
    std::string_view description;
    Laterality laterality;
    int partner; // paired id for L/R landmarks, 0 otherwise
};

std::span<const LandmarkInfo, kLandmarkCount> landmark_catalog();
/// Throws ValidationError for unknown ids.
const LandmarkInfo& landmark_info(int id);
/// Left id of a pair picked by hemisphere: lateral_landmark(lm::Mammillary_L, Right) == lm::Mammillary_R.
int lateral_landmark(int left_id, Hemisphere h);

/// World-space (mm) landmark positions keyed by catalog id. Partial sets are allowed.
class LandmarkSet {
public:
    bool has(int id) const;
    /// Throws ValidationError naming the landmark when it is absent.
    Vec3 at(int id) const;
    std::optional<Vec3> find(int id) const;
    void set(int id, Vec3 p);
    void erase(int id);

    std::size_t size() const;
    bool complete() const { return size() == kLandmarkCount; }
    std::vector<int> ids() const;
    std::vector<int> missing() const;

    /// Throws ValidationError listing every id in `ids` that is absent.
    void require(std::span<const int> ids, std::string_view purpose) const;

    friend bool operator==(const LandmarkSet&, const LandmarkSet&) = default;

private:
    std::array<std::optional<Vec3>, kLandmarkCount> points_{};
};

/// Parses the landmark JSON document. Throws ValidationError on duplicate or unknown ids,
/// non-finite coordinates or a mismatched "space"/"frame"; IoError when the file cannot be read.
LandmarkSet parse_landmarks(const std::filesystem::path& path);
LandmarkSet parse_landmarks_json(std::string_view text);

std::string landmarks_to_json(const LandmarkSet& set);
/// Columns id,name,x,y,z.
std::string landmarks_to_csv(const LandmarkSet& set);
void write_landmarks(const LandmarkSet& set, const std::filesystem::path& path);

struct LandmarkViolation {
    std::string kind; // "out of bounds", "laterality ordering", "AC/PC ordering", "pair distance"
    std::string message;
    std::vector<int> ids;
};

inline constexpr double kMaxPairDistanceMm = 80.0;

/// Sanity report against a volume; never throws for geometric problems.
std::vector<LandmarkViolation> validate_landmarks(const LandmarkSet& set, const LabelVolume& vol);

} // namespace hoa
