#include "srckt/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "srckt/util/error.hpp"

namespace srckt::simd {
namespace {

const KernelTable* table_for(Level level) {
    switch (level) {
    case Level::Scalar: return &detail::scalar_table;
    case Level::Avx2:
#if defined(SRCKT_HAVE_AVX2)
        return &detail::avx2_table;
#else
        return nullptr;
#endif
    case Level::Neon:
#if defined(SRCKT_HAVE_NEON)
        return &detail::neon_table;
#else
        return nullptr;
#endif
    }
    return nullptr;
}

const KernelTable* initial_table() {
    if (const char* env = std::getenv("SRCKT_SIMD")) {
        const std::string want(env);
        if (want == "scalar") return &detail::scalar_table;
        if (want == "avx2" && supported(Level::Avx2)) return table_for(Level::Avx2);
        if (want == "neon" && supported(Level::Neon)) return table_for(Level::Neon);
    }
    return table_for(detect_best());
}

std::atomic<const KernelTable*>& active() {
    static std::atomic<const KernelTable*> table{initial_table()};
    return table;
}

} // namespace

std::string_view to_string(Level level) {
    switch (level) {
    case Level::Scalar: return "scalar";
    case Level::Avx2: return "avx2";
    case Level::Neon: return "neon";
    }
    return "unknown";
}

bool supported(Level level) {
    switch (level) {
    case Level::Scalar: return true;
    case Level::Avx2:
#if defined(SRCKT_HAVE_AVX2)
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
        return false;
#endif
    case Level::Neon:
#if defined(SRCKT_HAVE_NEON)
        return true;
#else
        return false;
#endif
    }
    return false;
}

Level detect_best() {
    if (supported(Level::Avx2)) return Level::Avx2;
    if (supported(Level::Neon)) return Level::Neon;
    return Level::Scalar;
}

const KernelTable& kernels() { return *active().load(std::memory_order_relaxed); }

const KernelTable& kernels(Level level) {
    if (!supported(level)) fail(ErrorCode::ConfigError, "SIMD level not available: " + std::string(to_string(level)));
    return *table_for(level);
}

void set_level(Level level) { active().store(&kernels(level)); }

Level active_level() { return kernels().level; }

} // namespace srckt::simd
