#pragma once

// Data-parallel inner loops behind a runtime-selected function table.
// Every vector variant must return results bit-identical to the scalar one;
// tests/test_simd.cpp checks this on randomized inputs.

#include "hoa/geometry.hpp"
#include "hoa/volume.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace hoa::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa);
std::optional<Isa> parse_isa(std::string_view name);

/// Min and max over a label buffer; {0, 0} for an empty buffer.
struct LabelRange {
    Label min = 0;
    Label max = 0;
};

struct OverlapCounts {
    std::uint64_t pred = 0;
    std::uint64_t gt = 0;
    std::uint64_t both = 0;
};

/// Structure-of-arrays point cloud for nearest-distance queries.
struct SoaPoints {
    std::vector<double> x, y, z;

    std::size_t size() const { return x.size(); }
    bool empty() const { return x.empty(); }
    void push_back(Vec3 p)
    {
        x.push_back(p.x);
        y.push_back(p.y);
        z.push_back(p.z);
    }
};

struct KernelTable {
    Isa isa;
    LabelRange (*label_range)(std::span<const Label> in);
    /// out[v] = lut[in[v]]; every in[v] must index into lut.
    void (*map_labels)(std::span<const Label> in, std::span<Label> out, std::span<const Label> lut);
    OverlapCounts (*overlap_counts)(std::span<const Label> pred, std::span<const Label> gt, Label label);
    /// out[i] = (double(i) * slope + offset >= 0). This is the half-space test along one voxel row.
    void (*classify_row)(double slope, double offset, std::span<std::uint8_t> out);
    /// min over the cloud of |p - q|^2 computed as (dx*dx + dy*dy) + dz*dz; +inf for an empty cloud.
    double (*min_sq_distance)(Vec3 p, const SoaPoints& cloud);
};

bool isa_supported(Isa isa);

/// Table for a specific ISA; throws std::runtime_error if the CPU or build lacks it.
const KernelTable& kernels_for(Isa isa);

/// The active table. Chosen on first use: HOA_SIMD=scalar|avx2|neon if set, else the best supported.
const KernelTable& kernels();
Isa active_isa();
void set_active_isa(Isa isa);

// Per-ISA tables, defined in their own translation units.
const KernelTable& scalar_table();
#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_table();
#endif
#if defined(__aarch64__)
const KernelTable& neon_table();
#endif

} // namespace hoa::simd
