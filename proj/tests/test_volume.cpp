#include "hoa/volume.hpp"

#include <doctest.h>

#include <random>

using namespace hoa;

namespace {

Affine random_oriented_affine(std::mt19937_64& rng)
{
    std::array<int, 3> perm{0, 1, 2};
    std::shuffle(perm.begin(), perm.end(), rng);
    std::uniform_real_distribution<double> sp(0.5, 2.0), off(-50.0, 50.0), tiny(-0.05, 0.05);
    Affine::Rows rows{};
    for (int c = 0; c < 3; ++c) {
        const double sign = rng() % 2 ? 1.0 : -1.0;
        const double s = sp(rng);
        for (int r = 0; r < 3; ++r) rows[std::size_t(r)][std::size_t(c)] = s * tiny(rng);
        rows[std::size_t(perm[std::size_t(c)])][std::size_t(c)] = sign * s;
    }
    for (int r = 0; r < 3; ++r) rows[std::size_t(r)][3] = off(rng);
    return Affine(rows);
}

} // namespace

TEST_CASE("round half away from zero")
{
    CHECK(round_half_away(0.5) == 1);
    CHECK(round_half_away(-0.5) == -1);
    CHECK(round_half_away(1.49) == 1);
    CHECK(round_half_away(-1.5) == -2);
    CHECK(round_half_away(2.0) == 2);
}

TEST_CASE("affine inverse round trip")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-100.0, 100.0);
    for (int t = 0; t < 200; ++t) {
        const Affine a = random_oriented_affine(rng);
        const Vec3 p{u(rng), u(rng), u(rng)};
        const Vec3 q = a.apply(a.apply_inverse(p));
        for (int k = 0; k < 3; ++k) CHECK(q[k] == doctest::Approx(p[k]).epsilon(1e-12));
        const Affine inv = a.inverse();
        const Vec3 r = inv.apply(a.apply(p));
        for (int k = 0; k < 3; ++k) CHECK(r[k] == doctest::Approx(p[k]).epsilon(1e-12));
    }
}

TEST_CASE("singular affine is rejected")
{
    Affine::Rows rows{};
    rows[0] = {1, 0, 0, 0};
    rows[1] = {2, 0, 0, 0};
    rows[2] = {0, 0, 1, 0};
    const Affine a(rows);
    CHECK_FALSE(a.invertible());
    CHECK_THROWS_AS(a.apply_inverse({1, 2, 3}), ValidationError);
}

TEST_CASE("volume construction and indexing")
{
    CHECK_THROWS_AS(LabelVolume(Dims{{2, 2, 2}}, {1, 1, 1}, Affine(), std::vector<Label>(7)), ValidationError);
    CHECK_THROWS_AS(LabelVolume(Dims{{0, 2, 2}}, {1, 1, 1}, Affine(), {}), ValidationError);
    CHECK_THROWS_AS(LabelVolume(Dims{{1, 1, 1}}, {1, 0, 1}, Affine(), std::vector<Label>(1)), ValidationError);

    LabelVolume v(Dims{{3, 4, 5}}, {1, 1, 1}, Affine(), std::vector<Label>(60));
    CHECK(v.index(1, 0, 0) == 1);
    CHECK(v.index(0, 1, 0) == 3);
    CHECK(v.index(0, 0, 1) == 12);
    v.at(2, 3, 4) = 7;
    CHECK(v.data()[59] == 7);
    CHECK(v.contains(2, 3, 4));
    CHECK_FALSE(v.contains(3, 0, 0));
    CHECK_FALSE(v.contains(-1, 0, 0));
}

TEST_CASE("reorientation preserves world positions and inverts exactly")
{
    std::mt19937_64 rng(5);
    for (int t = 0; t < 50; ++t) {
        const Dims d{{int(3 + rng() % 5), int(3 + rng() % 5), int(3 + rng() % 5)}};
        std::vector<Label> data(d.voxel_count());
        for (auto& x : data) x = Label(rng() % 30);
        const LabelVolume vol(d, {1, 1, 1}, random_oriented_affine(rng), data);

        CanonicalFrame frame;
        const LabelVolume canon = reorient_to_canonical(vol, &frame);
        CHECK(canonical_frame_of(canon.affine()).is_identity());

        // Each canonical voxel holds the label of the source voxel at the same world point.
        for (int k = 0; k < canon.dims()[2]; ++k)
            for (int j = 0; j < canon.dims()[1]; ++j)
                for (int i = 0; i < canon.dims()[0]; ++i) {
                    const Vec3 src = vol.world_to_voxel(canon.voxel_to_world(i, j, k));
                    const int si = int(round_half_away(src.x)), sj = int(round_half_away(src.y)),
                              sk = int(round_half_away(src.z));
                    REQUIRE(vol.contains(si, sj, sk));
                    CHECK(canon.at(i, j, k) == vol.at(si, sj, sk));
                }

        const LabelVolume back = apply_frame(canon, frame.inverse());
        CHECK(back.dims() == vol.dims());
        CHECK(std::equal(back.data().begin(), back.data().end(), vol.data().begin()));
    }
}

TEST_CASE("LPS volume maps to RAS")
{
    const Affine lps = Affine::diagonal({-1, -1, 1}, {10, 10, 0});
    const CanonicalFrame f = canonical_frame_of(lps);
    CHECK(f.source_axis == std::array<int, 3>{0, 1, 2});
    CHECK(f.flip == std::array<bool, 3>{true, true, false});
    const LabelVolume v(Dims{{2, 2, 1}}, {1, 1, 1}, lps, {1, 2, 3, 4});
    const LabelVolume c = reorient_to_canonical(v);
    CHECK(c.at(0, 0, 0) == 4);
    CHECK(c.affine().column(0).x > 0);
    CHECK(c.affine().column(1).y > 0);
}

TEST_CASE("ambiguous orientation is rejected")
{
    Affine::Rows rows{};
    rows[0] = {1, 1, 0, 0};
    rows[1] = {0, 0, 0, 0};
    rows[2] = {0, 0, 1, 0};
    rows[1][1] = 0.5;
    CHECK_THROWS_AS(canonical_frame_of(Affine(rows)), ValidationError);
}

TEST_CASE("z-score normalization")
{
    ScalarVolume v(Dims{{4, 1, 1}}, {1, 1, 1}, Affine(), {1.0, 2.0, 3.0, 4.0});
    const ScalarVolume z = zscore_normalize(v);
    double mean = 0, sq = 0;
    for (double x : z.data()) mean += x;
    for (double x : z.data()) sq += x * x;
    CHECK(mean == doctest::Approx(0.0));
    CHECK(sq / 4 == doctest::Approx(1.0));

    const LabelVolume mask(Dims{{4, 1, 1}}, {1, 1, 1}, Affine(), {1, 1, 0, 0});
    const ScalarVolume zm = zscore_normalize(v, &mask);
    CHECK(zm.data()[0] == doctest::Approx(-1.0));
    CHECK(zm.data()[1] == doctest::Approx(1.0));
    CHECK(zm.data()[2] == 0.0);

    ScalarVolume flat(Dims{{3, 1, 1}}, {1, 1, 1}, Affine(), {2.0, 2.0, 2.0});
    CHECK_THROWS_AS(zscore_normalize(flat), ValidationError);
}

TEST_CASE("coordinate map examples")
{
    const LabelVolume a(Dims{{20, 1, 1}}, {0.7, 0.7, 0.7}, Affine::diagonal({0.7, 0.7, 0.7}), std::vector<Label>(20));
    CHECK(a.voxel_to_world(10, 0, 0).x == doctest::Approx(7.0));
    const LabelVolume t(Dims{{1, 1, 1}}, {1, 1, 1}, Affine::diagonal({1, 1, 1}, {-90, -126, -72}), {0});
    CHECK(t.voxel_to_world(0, 0, 0) == Vec3{-90, -126, -72});
    CHECK(t.world_to_voxel({-90, -126, -72}) == Vec3{0, 0, 0});
    CHECK(Affine().apply({3, 4, 5}) == Vec3{3, 4, 5});
}

TEST_CASE("z-score is idempotent")
{
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(50, 9);
    std::vector<double> data(300);
    for (auto& x : data) x = g(rng);
    const ScalarVolume v(Dims{{10, 10, 3}}, {1, 1, 1}, Affine(), data);
    const ScalarVolume once = zscore_normalize(v), twice = zscore_normalize(once);
    for (std::size_t n = 0; n < data.size(); ++n) CHECK(std::abs(once.data()[n] - twice.data()[n]) < 1e-9);
}
