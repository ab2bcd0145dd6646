// NEON variant of the row-scan kernel for aarch64.

#include "poolest/match_kernels.hpp"

#if defined(POOLEST_HAVE_NEON)

#include <arm_neon.h>

namespace poolest::kernels::detail {

PairCounts scan_pair_neon(std::span<const EqPred> match_eq,
                          std::span<const std::uint8_t* const> must_bind,
                          std::span<const EqPred> target_eq,
                          std::size_t rows) {
    PairCounts out;
    const uint8x16_t zero = vdupq_n_u8(0);
    const uint8x16_t one = vdupq_n_u8(1);
    const std::size_t blocks = rows / 16;

    for (std::size_t blk = 0; blk < blocks; ++blk) {
        const std::size_t base = blk * 16;
        uint8x16_t m = vdupq_n_u8(0xff);
        for (const EqPred& p : match_eq)
            m = vandq_u8(m, vceqq_u8(vld1q_u8(p.column + base), vdupq_n_u8(p.code)));
        for (const std::uint8_t* c : must_bind)
            m = vbicq_u8(m, vceqq_u8(vld1q_u8(c + base), zero));
        out.matched += vaddvq_u8(vandq_u8(m, one));

        uint8x16_t t = m;
        for (const EqPred& p : target_eq)
            t = vandq_u8(t, vceqq_u8(vld1q_u8(p.column + base), vdupq_n_u8(p.code)));
        out.successes += vaddvq_u8(vandq_u8(t, one));
    }

    const std::size_t done = blocks * 16;
    const PairCounts tail = scan_rows_scalar(match_eq, must_bind, target_eq, done, rows);
    out.matched += tail.matched;
    out.successes += tail.successes;
    return out;
}

} // namespace poolest::kernels::detail

#endif // POOLEST_HAVE_NEON
