#include "hoa/nifti.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <random>

using namespace hoa;

namespace {

std::vector<std::uint8_t> payload_of(const std::vector<std::uint8_t>& file)
{
    std::int16_t dt;
    std::memcpy(&dt, file.data() + 70, 2);
    float off;
    std::memcpy(&off, file.data() + 108, 4);
    return {file.begin() + std::ptrdiff_t(off), file.end()};
}

LabelVolume random_volume(std::mt19937_64& rng, Label lo, Label hi)
{
    const Dims d{{int(2 + rng() % 6), int(2 + rng() % 6), int(1 + rng() % 6)}};
    std::uniform_int_distribution<Label> u(lo, hi);
    std::vector<Label> data(d.voxel_count());
    for (auto& v : data) v = u(rng);
    return LabelVolume(d, {0.7, 0.8, 0.9}, Affine::diagonal({0.7, 0.8, 0.9}, {-3, 4, 5}), data);
}

} // namespace

TEST_CASE("label round trip is byte-identical for every integer datatype")
{
    std::mt19937_64 rng(2);
    const std::pair<NiftiDatatype, Label> types[] = {{NiftiDatatype::UInt8, 255},
                                                     {NiftiDatatype::Int16, 32767},
                                                     {NiftiDatatype::UInt16, 65535},
                                                     {NiftiDatatype::Int32, 1 << 30}};
    for (auto [dt, hi] : types)
        for (int t = 0; t < 10; ++t) {
            const LabelVolume v = random_volume(rng, 0, hi);
            const auto bytes = encode_nifti(v, dt);
            const NiftiImage img = decode_nifti(bytes);
            CHECK(img.datatype == dt);
            const auto& back = std::get<LabelVolume>(img.volume);
            CHECK(back.dims() == v.dims());
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 4; ++c) CHECK(back.affine()(r, c) == double(float(v.affine()(r, c))));
            CHECK(std::equal(back.data().begin(), back.data().end(), v.data().begin()));
            CHECK(payload_of(encode_nifti(back, dt)) == payload_of(bytes));
            CHECK(encode_nifti(back, dt) == bytes);
        }
}

TEST_CASE("float round trip is byte-identical")
{
    std::mt19937_64 rng(3);
    std::normal_distribution<float> g(0.0f, 100.0f);
    std::vector<double> data(60);
    for (auto& v : data) v = double(g(rng));
    const ScalarVolume v(Dims{{3, 4, 5}}, {1, 1, 1}, Affine(), data);
    const auto bytes = encode_nifti(v);
    const NiftiImage img = decode_nifti(bytes);
    CHECK(img.datatype == NiftiDatatype::Float32);
    const auto& back = std::get<ScalarVolume>(img.volume);
    CHECK(std::equal(back.data().begin(), back.data().end(), data.begin()));
    CHECK(encode_nifti(back) == bytes);
}

TEST_CASE("default label datatype follows the label range")
{
    LabelVolume v(Dims{{2, 1, 1}}, {1, 1, 1}, Affine(), {0, 26});
    CHECK(decode_nifti(encode_nifti(v)).datatype == NiftiDatatype::UInt8);
    v.data()[1] = 300;
    CHECK(decode_nifti(encode_nifti(v)).datatype == NiftiDatatype::Int16);
    v.data()[1] = 70000;
    CHECK(decode_nifti(encode_nifti(v)).datatype == NiftiDatatype::Int32);
}

TEST_CASE("hand-built headers parse identically in both byte orders")
{
    const std::vector<std::int16_t> values{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
    const float rows[3][4] = {{0.7f, 0, 0, -10}, {0, 0.7f, 0, -20}, {0, 0, 1.5f, 5}};
    auto build = [&](bool be) {
        return oracle::HeaderBuilder(be).dims({3, 2, 2}).datatype(4, 16).pixdim(1, 0.7f, 0.7f, 1.5f).sform(rows).payload(values).bytes();
    };
    const NiftiImage le = decode_nifti(build(false));
    const NiftiImage be = decode_nifti(build(true));
    CHECK_FALSE(le.big_endian);
    CHECK(be.big_endian);
    const auto& a = std::get<LabelVolume>(le.volume);
    const auto& b = std::get<LabelVolume>(be.volume);
    CHECK(a.dims() == Dims{{3, 2, 2}});
    CHECK(a.dims() == b.dims());
    CHECK(a.affine() == b.affine());
    CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
    CHECK(a.at(2, 1, 1) == 11);
    CHECK(a.affine()(0, 3) == doctest::Approx(-10));
    CHECK(a.spacing().z == doctest::Approx(1.5));

    const std::vector<float> fvalues{1.5f, -2.0f, 3.25f, 0.0f};
    auto buildf = [&](bool be) {
        return oracle::HeaderBuilder(be).dims({2, 2, 1}).datatype(16, 32).pixdim(1, 1, 1, 1).scaling(2.0f, 1.0f).payload(fvalues).bytes();
    };
    const NiftiImage il = decode_nifti(buildf(false)), ib = decode_nifti(buildf(true));
    const auto& fl = std::get<ScalarVolume>(il.volume);
    const auto& fb = std::get<ScalarVolume>(ib.volume);
    CHECK(fl.data()[0] == 4.0);
    CHECK(fl.data()[1] == -3.0);
    CHECK(std::equal(fl.data().begin(), fl.data().end(), fb.data().begin()));
}

TEST_CASE("minimal 4x4x4 uint8 file with identity sform")
{
    const float identity[3][4] = {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}};
    std::vector<std::uint8_t> vals(64);
    for (std::size_t n = 0; n < vals.size(); ++n) vals[n] = std::uint8_t(n % 7);
    const auto bytes = oracle::HeaderBuilder(false).dims({4, 4, 4}).datatype(2, 8).pixdim(1, 1, 1, 1).sform(identity).payload(vals).bytes();
    const NiftiImage img = decode_nifti(bytes);
    const auto& v = std::get<LabelVolume>(img.volume);
    CHECK(v.dims() == Dims{{4, 4, 4}});
    CHECK(v.spacing() == Vec3{1, 1, 1});
    CHECK(v.affine() == Affine());
    CHECK(v.at(3, 3, 3) == 63 % 7);
    CHECK(payload_of(encode_nifti(v, NiftiDatatype::UInt8)) == std::vector<std::uint8_t>(vals.begin(), vals.end()));
}

TEST_CASE("qform and pixdim fallbacks")
{
    const std::vector<std::uint8_t> vals(8, 1);
    // 180 degrees about z: i -> -x, j -> -y.
    const auto q = oracle::HeaderBuilder(false).dims({2, 2, 2}).datatype(2, 8).pixdim(1, 2, 3, 4).qform(0, 0, 1, 5, 6, 7).payload(vals).bytes();
    const NiftiImage iq = decode_nifti(q);
    const auto& vq = std::get<LabelVolume>(iq.volume);
    CHECK(vq.affine()(0, 0) == doctest::Approx(-2));
    CHECK(vq.affine()(1, 1) == doctest::Approx(-3));
    CHECK(vq.affine()(2, 2) == doctest::Approx(4));
    CHECK(vq.affine()(1, 3) == doctest::Approx(6));

    const auto p = oracle::HeaderBuilder(false).dims({2, 2, 2}).datatype(2, 8).pixdim(1, 2, 3, 4).payload(vals).bytes();
    const NiftiImage ip = decode_nifti(p);
    const auto& vp = std::get<LabelVolume>(ip.volume);
    CHECK(vp.affine() == Affine::diagonal({2, 3, 4}));
}

TEST_CASE("malformed files")
{
    const std::vector<std::uint8_t> vals(8, 1);
    auto good = oracle::HeaderBuilder(false).dims({2, 2, 2}).datatype(2, 8).pixdim(1, 1, 1, 1).payload(vals).bytes();

    auto truncated = good;
    truncated.resize(truncated.size() - 1);
    CHECK_THROWS_AS(decode_nifti(truncated), IoError);

    CHECK_THROWS_AS(decode_nifti(oracle::HeaderBuilder(false).dims({2, 2, 2}).datatype(2, 8).magic("xyz\0").payload(vals).bytes()), IoError);
    CHECK_THROWS_AS(decode_nifti(std::vector<std::uint8_t>(100, 0)), IoError);

    const std::vector<std::int16_t> neg{1, -1, 0, 0};
    CHECK_THROWS_AS(decode_nifti(oracle::HeaderBuilder(false).dims({2, 2, 1}).datatype(4, 16).payload(neg).bytes()), ValidationError);

    CHECK_THROWS_AS(decode_nifti(oracle::HeaderBuilder(false).dims({2, 2, 1, 2}).datatype(2, 8).payload(vals).bytes()), ValidationError);
    // A trailing singleton time axis is accepted.
    CHECK_NOTHROW(decode_nifti(oracle::HeaderBuilder(false).dims({2, 2, 2, 1}).datatype(2, 8).payload(vals).bytes()));

    CHECK_THROWS_AS(decode_nifti(oracle::HeaderBuilder(false).dims({2, 2, 2}).datatype(64, 64).payload(vals).bytes()), ValidationError);
}

TEST_CASE("gzip files round trip and are detected by content")
{
    const auto dir = std::filesystem::temp_directory_path() / "hoa_nifti_test";
    std::filesystem::create_directories(dir);
    std::mt19937_64 rng(4);
    const LabelVolume v = random_volume(rng, 0, 26);
    write_volume(v, dir / "a.nii.gz");
    write_volume(v, dir / "a.nii");
    const auto gz = read_file_bytes(dir / "a.nii.gz");
    CHECK(gz[0] == 0x1f);
    CHECK(gz[1] == 0x8b);
    std::filesystem::copy_file(dir / "a.nii.gz", dir / "misnamed.nii", std::filesystem::copy_options::overwrite_existing);
    const LabelVolume a = read_label_volume(dir / "misnamed.nii");
    const LabelVolume b = read_label_volume(dir / "a.nii");
    CHECK(std::equal(a.data().begin(), a.data().end(), v.data().begin()));
    CHECK(std::equal(b.data().begin(), b.data().end(), v.data().begin()));

    // Output bytes do not depend on the run.
    write_volume(v, dir / "b.nii.gz");
    CHECK(read_file_bytes(dir / "b.nii.gz") == gz);

    CHECK_THROWS_AS(read_label_volume(dir / "missing.nii"), IoError);
    std::filesystem::remove_all(dir);
}
