#include "hoa/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace hoa::simd {
namespace {

std::atomic<const KernelTable*> g_active{nullptr};

Isa best_supported()
{
    if (isa_supported(Isa::Avx2)) return Isa::Avx2;
    if (isa_supported(Isa::Neon)) return Isa::Neon;
    return Isa::Scalar;
}

const KernelTable* initial_table()
{
    if (const char* env = std::getenv("HOA_SIMD"); env && *env && std::string_view(env) != "auto") {
        const auto isa = parse_isa(env);
        if (!isa) throw std::runtime_error(std::string("HOA_SIMD: unknown instruction set '") + env + "'");
        return &kernels_for(*isa);
    }
    return &kernels_for(best_supported());
}

} // namespace

std::string_view to_string(Isa isa)
{
    switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
    }
    return "?";
}

std::optional<Isa> parse_isa(std::string_view name)
{
    if (name == "scalar") return Isa::Scalar;
    if (name == "avx2") return Isa::Avx2;
    if (name == "neon") return Isa::Neon;
    return std::nullopt;
}

bool isa_supported(Isa isa)
{
    switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("popcnt");
#else
        return false;
#endif
    case Isa::Neon:
#if defined(__aarch64__)
        return true;
#else
        return false;
#endif
    }
    return false;
}

const KernelTable& kernels_for(Isa isa)
{
    if (!isa_supported(isa)) throw std::runtime_error("instruction set " + std::string(to_string(isa)) + " not available");
    switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::Avx2: return avx2_table();
#endif
#if defined(__aarch64__)
    case Isa::Neon: return neon_table();
#endif
    default: return scalar_table();
    }
}

const KernelTable& kernels()
{
    const KernelTable* t = g_active.load(std::memory_order_acquire);
    if (!t) {
        t = initial_table();
        const KernelTable* expected = nullptr;
        if (!g_active.compare_exchange_strong(expected, t, std::memory_order_acq_rel)) t = expected;
    }
    return *t;
}

Isa active_isa() { return kernels().isa; }

void set_active_isa(Isa isa) { g_active.store(&kernels_for(isa), std::memory_order_release); }

} // namespace hoa::simd
