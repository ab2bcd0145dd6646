#include "poolest/match_kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <stdexcept>
#include <string_view>

namespace poolest::kernels {

namespace detail {

PairCounts scan_pair_scalar(std::span<const EqPred> match_eq,
                            std::span<const std::uint8_t* const> must_bind,
                            std::span<const EqPred> target_eq,
                            std::size_t rows) {
    return scan_rows_scalar(match_eq, must_bind, target_eq, 0, rows);
}

PairCounts scan_rows_scalar(std::span<const EqPred> match_eq,
                            std::span<const std::uint8_t* const> must_bind,
                            std::span<const EqPred> target_eq,
                            std::size_t begin, std::size_t end) {
    PairCounts out;
    for (std::size_t r = begin; r < end; ++r) {
        bool ok = true;
        for (const EqPred& p : match_eq)
            if (p.column[r] != p.code) { ok = false; break; }
        if (ok)
            for (const std::uint8_t* c : must_bind)
                if (c[r] == 0) { ok = false; break; }
        if (!ok) continue;
        ++out.matched;
        bool hit = true;
        for (const EqPred& p : target_eq)
            if (p.column[r] != p.code) { hit = false; break; }
        if (hit) ++out.successes;
    }
    return out;
}

} // namespace detail

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
        case Backend::neon: return "neon";
    }
    return "?";
}

bool backend_available(Backend b) {
    switch (b) {
        case Backend::scalar:
            return true;
        case Backend::avx2:
#if defined(POOLEST_HAVE_AVX2)
            return __builtin_cpu_supports("avx2") != 0;
#else
            return false;
#endif
        case Backend::neon:
#if defined(POOLEST_HAVE_NEON)
            return true;
#else
            return false;
#endif
    }
    return false;
}

namespace {

Backend pick_default() {
    if (const char* env = std::getenv("POOLEST_KERNEL")) {
        const std::string_view want(env);
        for (Backend b : {Backend::scalar, Backend::avx2, Backend::neon})
            if (want == backend_name(b) && backend_available(b)) return b;
    }
#if defined(POOLEST_HAVE_AVX2)
    if (backend_available(Backend::avx2)) return Backend::avx2;
#endif
#if defined(POOLEST_HAVE_NEON)
    return Backend::neon;
#endif
    return Backend::scalar;
}

std::atomic<Backend> g_backend{Backend::scalar};
std::once_flag g_backend_once;

Backend current_backend() {
    std::call_once(g_backend_once, [] { g_backend.store(pick_default()); });
    return g_backend.load();
}

} // namespace

Backend active_backend() { return current_backend(); }

void force_backend(Backend b) {
    if (!backend_available(b))
        throw std::invalid_argument(std::string("kernel backend not available: ") +
                                    backend_name(b));
    current_backend(); // make sure initialization does not race the override
    g_backend.store(b);
}

void reset_backend() {
    current_backend();
    g_backend.store(pick_default());
}

PairCounts scan_pair(std::span<const EqPred> match_eq,
                     std::span<const std::uint8_t* const> must_bind,
                     std::span<const EqPred> target_eq,
                     std::size_t rows) {
    switch (current_backend()) {
#if defined(POOLEST_HAVE_AVX2)
        case Backend::avx2:
            return detail::scan_pair_avx2(match_eq, must_bind, target_eq, rows);
#endif
#if defined(POOLEST_HAVE_NEON)
        case Backend::neon:
            return detail::scan_pair_neon(match_eq, must_bind, target_eq, rows);
#endif
        default:
            return detail::scan_pair_scalar(match_eq, must_bind, target_eq, rows);
    }
}

} // namespace poolest::kernels
