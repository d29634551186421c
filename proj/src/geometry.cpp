#include "hoa/geometry.hpp"

#include "hoa/error.hpp"

namespace hoa {

Affine::Affine()
{
    rows_ = {{{1.0, 0.0, 0.0, 0.0}, {0.0, 1.0, 0.0, 0.0}, {0.0, 0.0, 1.0, 0.0}}};
}

Affine::Affine(const Rows& rows) : rows_(rows) {}

Affine Affine::diagonal(Vec3 spacing, Vec3 origin)
{
    return Affine(Rows{{{spacing.x, 0.0, 0.0, origin.x},
                        {0.0, spacing.y, 0.0, origin.y},
                        {0.0, 0.0, spacing.z, origin.z}}});
}

double Affine::determinant() const
{
    const auto& m = rows_;
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

bool Affine::invertible() const { return std::abs(determinant()) > 1e-12; }

Vec3 Affine::apply(Vec3 p) const
{
    const auto& m = rows_;
    return {m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z + m[0][3],
            m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z + m[1][3],
            m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z + m[2][3]};
}

Affine Affine::inverse() const
{
    const double det = determinant();
    if (!(std::abs(det) > 1e-12)) throw ValidationError("affine is singular (|det| <= 1e-12)");
    const auto& m = rows_;
    Rows r{};
    // Adjugate of the 3x3 block.
    r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
    r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
    r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
    r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
    r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
    r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
    r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
    r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
    r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
    for (int row = 0; row < 3; ++row)
        r[row][3] = -(r[row][0] * m[0][3] + r[row][1] * m[1][3] + r[row][2] * m[2][3]);
    return Affine(r);
}

Vec3 Affine::apply_inverse(Vec3 xyz) const
{
    // Solve with the un-inverted block so round trips stay within a few ulps.
    const double det = determinant();
    if (!(std::abs(det) > 1e-12)) throw ValidationError("affine is singular (|det| <= 1e-12)");
    const Vec3 b = xyz - translation();
    const Vec3 c0 = column(0), c1 = column(1), c2 = column(2);
    // Cramer's rule.
    return {dot(b, cross(c1, c2)) / det, dot(c0, cross(b, c2)) / det, dot(c0, cross(c1, b)) / det};
}

} // namespace hoa
