#include "hoa/nifti.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace hoa {
namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kVoxOffset = 352;

class Reader {
public:
    Reader(std::span<const std::uint8_t> bytes, bool big_endian) : bytes_(bytes), swap_(big_endian != (std::endian::native == std::endian::big)) {}

    template <typename T>
    T get(std::size_t offset) const
    {
        std::array<std::uint8_t, sizeof(T)> raw{};
        std::memcpy(raw.data(), bytes_.data() + offset, sizeof(T));
        if (swap_) std::reverse(raw.begin(), raw.end());
        T v;
        std::memcpy(&v, raw.data(), sizeof(T));
        return v;
    }

private:
    std::span<const std::uint8_t> bytes_;
    bool swap_;
};

class Writer {
public:
    explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

    template <typename T>
    void put(std::size_t offset, T v)
    {
        std::array<std::uint8_t, sizeof(T)> raw{};
        std::memcpy(raw.data(), &v, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
        std::memcpy(out_.data() + offset, raw.data(), sizeof(T));
    }

private:
    std::vector<std::uint8_t>& out_;
};

bool known_datatype(std::int16_t code)
{
    switch (code) {
    case 2: case 4: case 8: case 16: case 512: return true;
    default: return false;
    }
}

Affine qform_affine(const Reader& r, const std::array<double, 8>& pixdim)
{
    const double b = r.get<float>(256), c = r.get<float>(260), d = r.get<float>(264);
    const double a = std::sqrt(std::max(0.0, 1.0 - (b * b + c * c + d * d)));
    const double qfac = pixdim[0] < 0.0 ? -1.0 : 1.0;
    const double dx = pixdim[1] > 0 ? pixdim[1] : 1.0;
    const double dy = pixdim[2] > 0 ? pixdim[2] : 1.0;
    const double dz = (pixdim[3] > 0 ? pixdim[3] : 1.0) * qfac;
    const double R[3][3] = {
        {a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)},
        {2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)},
        {2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - c * c - b * b},
    };
    const double off[3] = {r.get<float>(268), r.get<float>(272), r.get<float>(276)};
    Affine::Rows rows{};
    for (int i = 0; i < 3; ++i) {
        rows[i][0] = R[i][0] * dx;
        rows[i][1] = R[i][1] * dy;
        rows[i][2] = R[i][2] * dz;
        rows[i][3] = off[i];
    }
    return Affine(rows);
}

template <typename Raw>
void decode_payload(const Reader& r, std::size_t offset, std::size_t n, auto&& sink)
{
    for (std::size_t v = 0; v < n; ++v) sink(v, r.get<Raw>(offset + v * sizeof(Raw)));
}

std::vector<std::uint8_t> inflate_gzip(std::span<const std::uint8_t> in)
{
    z_stream zs{};
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw IoError("zlib inflateInit2 failed");
    std::vector<std::uint8_t> out;
    std::array<std::uint8_t, 1 << 16> chunk{};
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    int rc = Z_OK;
    while (true) {
        zs.next_out = chunk.data();
        zs.avail_out = static_cast<uInt>(chunk.size());
        rc = inflate(&zs, Z_NO_FLUSH);
        out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - zs.avail_out));
        if (rc == Z_STREAM_END) {
            // Concatenated gzip members.
            if (zs.avail_in == 0) break;
            if (inflateReset(&zs) != Z_OK) break;
            continue;
        }
        if (rc != Z_OK) {
            inflateEnd(&zs);
            throw IoError("corrupt or truncated gzip stream");
        }
        if (zs.avail_in == 0 && zs.avail_out != 0) {
            inflateEnd(&zs);
            throw IoError("truncated gzip stream");
        }
    }
    inflateEnd(&zs);
    return out;
}

std::vector<std::uint8_t> deflate_gzip(std::span<const std::uint8_t> in)
{
    z_stream zs{};
    // Fixed level and no timestamp so output bytes are reproducible.
    if (deflateInit2(&zs, 6, Z_DEFLATED, 16 + MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK)
        throw IoError("zlib deflateInit2 failed");
    std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(in.size())) + 32);
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = deflate(&zs, Z_FINISH);
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) throw IoError("gzip compression failed");
    out.resize(zs.total_out);
    return out;
}

std::vector<std::uint8_t> header_template(const Dims& dims, Vec3 spacing, const Affine& affine, NiftiDatatype dt)
{
    std::vector<std::uint8_t> out(kVoxOffset + dims.voxel_count() * std::size_t(bytes_per_voxel(dt)), 0);
    Writer w(out);
    w.put<std::int32_t>(0, 348);
    w.put<std::int16_t>(40, 3);
    for (int a = 0; a < 3; ++a) w.put<std::int16_t>(42 + 2 * a, static_cast<std::int16_t>(dims[a]));
    for (int a = 3; a < 7; ++a) w.put<std::int16_t>(42 + 2 * a, 1);
    w.put<std::int16_t>(70, static_cast<std::int16_t>(dt));
    w.put<std::int16_t>(72, static_cast<std::int16_t>(8 * bytes_per_voxel(dt)));
    w.put<float>(76, 1.0f);
    for (int a = 0; a < 3; ++a) w.put<float>(80 + 4 * a, static_cast<float>(spacing[a]));
    w.put<float>(108, static_cast<float>(kVoxOffset));
    w.put<float>(112, 1.0f);
    w.put<float>(116, 0.0f);
    w.put<std::int8_t>(123, 2); // mm
    w.put<std::int16_t>(252, 0);
    w.put<std::int16_t>(254, 1);
    const auto& rows = affine.rows();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c) w.put<float>(280 + 16 * std::size_t(r) + 4 * std::size_t(c), static_cast<float>(rows[r][c]));
    std::memcpy(out.data() + 344, "n+1\0", 4);
    return out;
}

} // namespace

bool is_integer_datatype(NiftiDatatype dt) { return dt != NiftiDatatype::Float32; }

int bytes_per_voxel(NiftiDatatype dt)
{
    switch (dt) {
    case NiftiDatatype::UInt8: return 1;
    case NiftiDatatype::Int16: return 2;
    case NiftiDatatype::UInt16: return 2;
    case NiftiDatatype::Int32: return 4;
    case NiftiDatatype::Float32: return 4;
    }
    return 0;
}

NiftiImage decode_nifti(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < kHeaderSize) throw IoError("file shorter than a NIfTI-1 header");

    bool big_endian = false;
    {
        const Reader le(bytes, false);
        const Reader be(bytes, true);
        if (le.get<std::int32_t>(0) == 348) big_endian = false;
        else if (be.get<std::int32_t>(0) == 348) big_endian = true;
        else throw IoError("sizeof_hdr is not 348 in either byte order");
    }
    const Reader r(bytes, big_endian);

    const char* magic = reinterpret_cast<const char*>(bytes.data() + 344);
    if (std::memcmp(magic, "n+1\0", 4) != 0 && std::memcmp(magic, "ni1\0", 4) != 0)
        throw IoError("bad NIfTI-1 magic");

    const int ndim = r.get<std::int16_t>(40);
    if (ndim < 1 || ndim > 7) throw IoError("dim[0] out of range: " + std::to_string(ndim));
    std::array<int, 7> dim{};
    for (int a = 0; a < 7; ++a) dim[a] = a < ndim ? r.get<std::int16_t>(42 + 2 * std::size_t(a)) : 1;
    int effective = ndim;
    while (effective > 3 && dim[effective - 1] == 1) --effective;
    if (effective > 3) throw ValidationError("expected a 3D image, found " + std::to_string(effective) + " dimensions");
    Dims dims{{dim[0], dim[1], dim[2]}};
    for (int a = 0; a < 3; ++a)
        if (dims[a] <= 0) throw IoError("non-positive image dimension");

    const std::int16_t dt_code = r.get<std::int16_t>(70);
    if (!known_datatype(dt_code)) throw ValidationError("unsupported NIfTI datatype code " + std::to_string(dt_code));
    const auto dt = static_cast<NiftiDatatype>(dt_code);

    std::array<double, 8> pixdim{};
    for (int a = 0; a < 8; ++a) pixdim[a] = r.get<float>(76 + 4 * std::size_t(a));
    Vec3 spacing;
    for (int a = 0; a < 3; ++a) spacing[a] = std::abs(pixdim[a + 1]) > 0 ? std::abs(pixdim[a + 1]) : 1.0;

    const double vox_offset_f = r.get<float>(108);
    const std::size_t vox_offset = vox_offset_f < double(kHeaderSize) ? kVoxOffset : static_cast<std::size_t>(vox_offset_f);

    const int qform_code = r.get<std::int16_t>(252);
    const int sform_code = r.get<std::int16_t>(254);
    Affine affine;
    if (sform_code > 0) {
        Affine::Rows rows{};
        for (int row = 0; row < 3; ++row)
            for (int c = 0; c < 4; ++c) rows[row][c] = r.get<float>(280 + 16 * std::size_t(row) + 4 * std::size_t(c));
        affine = Affine(rows);
    } else if (qform_code > 0) {
        affine = qform_affine(r, pixdim);
    } else {
        affine = Affine::diagonal(spacing);
    }

    const std::size_t n = dims.voxel_count();
    const std::size_t need = vox_offset + n * std::size_t(bytes_per_voxel(dt));
    if (bytes.size() < need)
        throw IoError("truncated payload: need " + std::to_string(need) + " bytes, have " + std::to_string(bytes.size()));

    NiftiImage img;
    img.datatype = dt;
    img.big_endian = big_endian;

    if (dt == NiftiDatatype::Float32) {
        const double slope = r.get<float>(112);
        const double inter = r.get<float>(116);
        const bool scale = slope != 0.0 && std::isfinite(slope) && !(slope == 1.0 && inter == 0.0);
        std::vector<double> data(n);
        decode_payload<float>(r, vox_offset, n, [&](std::size_t v, float x) {
            data[v] = scale ? double(x) * slope + inter : double(x);
        });
        img.volume = ScalarVolume(dims, spacing, affine, std::move(data));
        return img;
    }

    std::vector<Label> data(n);
    bool negative = false;
    auto store = [&](std::size_t v, auto x) {
        if (x < 0) negative = true;
        data[v] = static_cast<Label>(x);
    };
    switch (dt) {
    case NiftiDatatype::UInt8: decode_payload<std::uint8_t>(r, vox_offset, n, store); break;
    case NiftiDatatype::Int16: decode_payload<std::int16_t>(r, vox_offset, n, store); break;
    case NiftiDatatype::UInt16: decode_payload<std::uint16_t>(r, vox_offset, n, store); break;
    case NiftiDatatype::Int32: decode_payload<std::int32_t>(r, vox_offset, n, store); break;
    case NiftiDatatype::Float32: break;
    }
    if (negative) throw ValidationError("label image contains negative values");
    img.volume = LabelVolume(dims, spacing, affine, std::move(data));
    return img;
}

std::vector<std::uint8_t> encode_nifti(const LabelVolume& vol, std::optional<NiftiDatatype> datatype)
{
    const auto src = vol.data();
    Label max_label = 0;
    for (Label v : src) {
        if (v < 0) throw ValidationError("label volume contains negative values");
        max_label = std::max(max_label, v);
    }
    NiftiDatatype dt;
    if (datatype) {
        dt = *datatype;
        if (dt == NiftiDatatype::Float32) throw ValidationError("labels cannot be written as float32");
        const long limit = dt == NiftiDatatype::UInt8    ? 255L
                           : dt == NiftiDatatype::Int16  ? 32767L
                           : dt == NiftiDatatype::UInt16 ? 65535L
                                                         : long(std::numeric_limits<std::int32_t>::max());
        if (max_label > limit) throw ValidationError("label " + std::to_string(max_label) + " does not fit the requested datatype");
    } else {
        dt = max_label < 256 ? NiftiDatatype::UInt8 : (max_label <= 32767 ? NiftiDatatype::Int16 : NiftiDatatype::Int32);
    }

    auto out = header_template(vol.dims(), vol.spacing(), vol.affine(), dt);
    Writer w(out);
    const std::size_t bpv = std::size_t(bytes_per_voxel(dt));
    for (std::size_t v = 0; v < src.size(); ++v) {
        const std::size_t off = kVoxOffset + v * bpv;
        switch (dt) {
        case NiftiDatatype::UInt8: w.put<std::uint8_t>(off, static_cast<std::uint8_t>(src[v])); break;
        case NiftiDatatype::Int16: w.put<std::int16_t>(off, static_cast<std::int16_t>(src[v])); break;
        case NiftiDatatype::UInt16: w.put<std::uint16_t>(off, static_cast<std::uint16_t>(src[v])); break;
        case NiftiDatatype::Int32: w.put<std::int32_t>(off, src[v]); break;
        case NiftiDatatype::Float32: break;
        }
    }
    return out;
}

std::vector<std::uint8_t> encode_nifti(const ScalarVolume& vol)
{
    auto out = header_template(vol.dims(), vol.spacing(), vol.affine(), NiftiDatatype::Float32);
    Writer w(out);
    const auto src = vol.data();
    for (std::size_t v = 0; v < src.size(); ++v) w.put<float>(kVoxOffset + 4 * v, static_cast<float>(src[v]));
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("error reading " + path.string());
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes, bool gzip)
{
    std::vector<std::uint8_t> packed;
    if (gzip) {
        packed = deflate_gzip(bytes);
        bytes = packed;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("error writing " + path.string());
}

NiftiImage read_nifti(const std::filesystem::path& path)
{
    auto bytes = read_file_bytes(path);
    if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) bytes = inflate_gzip(bytes);
    return decode_nifti(bytes);
}

AnyVolume read_volume(const std::filesystem::path& path) { return read_nifti(path).volume; }

LabelVolume read_label_volume(const std::filesystem::path& path)
{
    auto img = read_nifti(path);
    if (auto* labels = std::get_if<LabelVolume>(&img.volume)) return std::move(*labels);
    throw ValidationError(path.string() + " holds float data, not labels");
}

ScalarVolume read_scalar_volume(const std::filesystem::path& path)
{
    auto img = read_nifti(path);
    if (auto* scalars = std::get_if<ScalarVolume>(&img.volume)) return std::move(*scalars);
    const auto& labels = std::get<LabelVolume>(img.volume);
    std::vector<double> data(labels.data().begin(), labels.data().end());
    return ScalarVolume(labels.dims(), labels.spacing(), labels.affine(), std::move(data));
}

namespace {
bool wants_gzip(const std::filesystem::path& path) { return path.extension() == ".gz"; }
} // namespace

void write_volume(const LabelVolume& vol, const std::filesystem::path& path, std::optional<NiftiDatatype> datatype)
{
    write_file_bytes(path, encode_nifti(vol, datatype), wants_gzip(path));
}

void write_volume(const ScalarVolume& vol, const std::filesystem::path& path)
{
    write_file_bytes(path, encode_nifti(vol), wants_gzip(path));
}

} // namespace hoa
