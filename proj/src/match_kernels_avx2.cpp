// AVX2 variant of the row-scan kernel.  Compiled with -mavx2 in its own
// translation unit; only reached after a runtime cpuid check.

#include "poolest/match_kernels.hpp"

#if defined(POOLEST_HAVE_AVX2)

#include <immintrin.h>

namespace poolest::kernels::detail {

PairCounts scan_pair_avx2(std::span<const EqPred> match_eq,
                          std::span<const std::uint8_t* const> must_bind,
                          std::span<const EqPred> target_eq,
                          std::size_t rows) {
    PairCounts out;
    const __m256i zero = _mm256_setzero_si256();
    const std::size_t blocks = rows / 32;

    for (std::size_t blk = 0; blk < blocks; ++blk) {
        const std::size_t base = blk * 32;
        __m256i m = _mm256_set1_epi8(static_cast<char>(0xff));
        for (const EqPred& p : match_eq) {
            const __m256i col =
                _mm256_loadu_si256(reinterpret_cast<const __m256i*>(p.column + base));
            m = _mm256_and_si256(m, _mm256_cmpeq_epi8(col, _mm256_set1_epi8(static_cast<char>(p.code))));
        }
        for (const std::uint8_t* c : must_bind) {
            const __m256i col = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(c + base));
            // bound means nonzero, so clear lanes where the column is 0
            m = _mm256_andnot_si256(_mm256_cmpeq_epi8(col, zero), m);
        }
        const unsigned mbits = static_cast<unsigned>(_mm256_movemask_epi8(m));
        out.matched += __builtin_popcount(mbits);
        if (mbits == 0) continue;

        __m256i t = m;
        for (const EqPred& p : target_eq) {
            const __m256i col =
                _mm256_loadu_si256(reinterpret_cast<const __m256i*>(p.column + base));
            t = _mm256_and_si256(t, _mm256_cmpeq_epi8(col, _mm256_set1_epi8(static_cast<char>(p.code))));
        }
        out.successes += __builtin_popcount(static_cast<unsigned>(_mm256_movemask_epi8(t)));
    }

    const std::size_t done = blocks * 32;
    const PairCounts tail = scan_rows_scalar(match_eq, must_bind, target_eq, done, rows);
    out.matched += tail.matched;
    out.successes += tail.successes;
    return out;
}

} // namespace poolest::kernels::detail

#endif // POOLEST_HAVE_AVX2
