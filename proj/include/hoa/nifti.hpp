#pragma once

#include "hoa/volume.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace hoa {

/// NIfTI-1 datatype codes this reader understands.
enum class NiftiDatatype : std::int16_t {
    UInt8 = 2,
    Int16 = 4,
    Int32 = 8,
    Float32 = 16,
    UInt16 = 512,
};

bool is_integer_datatype(NiftiDatatype dt);
int bytes_per_voxel(NiftiDatatype dt);

using AnyVolume = std::variant<LabelVolume, ScalarVolume>;

/// A decoded image plus the storage details it came with.
struct NiftiImage {
    AnyVolume volume;
    NiftiDatatype datatype = NiftiDatatype::UInt8;
    bool big_endian = false;
};

/// Decodes a single-file NIfTI-1 image from memory (already inflated).
/// Integer datatypes yield a LabelVolume, float32 a ScalarVolume with scl_slope/scl_inter applied.
NiftiImage decode_nifti(std::span<const std::uint8_t> bytes);

/// Encodes as little-endian single-file NIfTI-1 (vox_offset 352, sform_code 1).
/// Without an explicit datatype, labels use uint8 when the maximum label is < 256, int16 otherwise
/// (int32 if the range requires it).
std::vector<std::uint8_t> encode_nifti(const LabelVolume& vol, std::optional<NiftiDatatype> datatype = {});
std::vector<std::uint8_t> encode_nifti(const ScalarVolume& vol);

/// Reads .nii or .nii.gz; gzip is detected from the leading 0x1f 0x8b bytes, not the extension.
NiftiImage read_nifti(const std::filesystem::path& path);
AnyVolume read_volume(const std::filesystem::path& path);

/// Throws ValidationError when the file holds float data.
LabelVolume read_label_volume(const std::filesystem::path& path);
/// Integer files are widened to double.
ScalarVolume read_scalar_volume(const std::filesystem::path& path);

/// Paths ending in ".gz" are written gzip-compressed.
void write_volume(const LabelVolume& vol, const std::filesystem::path& path,
                  std::optional<NiftiDatatype> datatype = {});
void write_volume(const ScalarVolume& vol, const std::filesystem::path& path);

/// Raw file helpers shared with the CLI.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes, bool gzip);

} // namespace hoa
