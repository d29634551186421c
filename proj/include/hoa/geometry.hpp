#pragma once

#include <array>
#include <cmath>

namespace hoa {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr double operator[](int a) const { return a == 0 ? x : (a == 1 ? y : z); }
    constexpr double& operator[](int a) { return a == 0 ? x : (a == 1 ? y : z); }

    friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend constexpr Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
    friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(Vec3 a, Vec3 b)
{
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

/// Rounds half away from zero. Used wherever a world coordinate snaps to a slice index.
inline long round_half_away(double v)
{
    return static_cast<long>(v < 0.0 ? -std::floor(-v + 0.5) : std::floor(v + 0.5));
}

/// 4x4 homogeneous voxel-to-world transform. Only the top three rows are stored;
/// the last row is implicitly (0, 0, 0, 1).
class Affine {
public:
    using Rows = std::array<std::array<double, 4>, 3>;

    Affine();
    explicit Affine(const Rows& rows);

    static Affine identity() { return Affine(); }
    static Affine diagonal(Vec3 spacing, Vec3 origin = {});

    double operator()(int r, int c) const { return rows_[r][c]; }
    const Rows& rows() const { return rows_; }

    /// Column `c` of the 3x3 linear block (the world step of one voxel along axis c).
    Vec3 column(int c) const { return {rows_[0][c], rows_[1][c], rows_[2][c]}; }
    Vec3 translation() const { return {rows_[0][3], rows_[1][3], rows_[2][3]}; }

    double determinant() const;
    bool invertible() const;

    Vec3 apply(Vec3 ijk) const;
    /// Throws ValidationError when the linear block is singular.
    Vec3 apply_inverse(Vec3 xyz) const;
    Affine inverse() const;

    friend bool operator==(const Affine&, const Affine&) = default;

private:
    Rows rows_;
};

} // namespace hoa
