#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

// Counting kernels over column-major byte-coded observation data.
//
// A column stores one byte per observation: the 1-based value code, or 0 when
// the attribute was not observed.  The primitive below makes one pass over
// the rows and produces, for a conjunction of equality predicates plus a set
// of must-be-bound columns, the number of matching rows and the number of
// those that additionally satisfy a second conjunction.  Everything the
// estimator counts reduces to this shape, so it is the only loop worth
// vectorizing.
//
// The scalar implementation is the reference semantics; the SIMD variants
// must agree with it exactly (these are integer counts, so "exactly" is
// meaningful) and are checked against it in the test suite.

namespace poolest::kernels {

struct EqPred {
    const std::uint8_t* column;
    std::uint8_t code;
};

struct PairCounts {
    std::uint64_t matched = 0;   // rows satisfying match_eq and bound on all must_bind columns
    std::uint64_t successes = 0; // matched rows also satisfying target_eq
    friend bool operator==(const PairCounts&, const PairCounts&) = default;
};

PairCounts scan_pair(std::span<const EqPred> match_eq,
                     std::span<const std::uint8_t* const> must_bind,
                     std::span<const EqPred> target_eq,
                     std::size_t rows);

enum class Backend { scalar, avx2, neon };

const char* backend_name(Backend b);
bool backend_available(Backend b);

// The backend actually used by scan_pair.  Defaults to the widest available
// instruction set; the POOLEST_KERNEL environment variable (scalar|avx2|neon)
// overrides the default when that backend is available.
Backend active_backend();

// Test hook: pin the backend explicitly.  Throws std::invalid_argument if the
// backend is not available on this machine.
void force_backend(Backend b);

// Test hook: undo force_backend, restoring the default selection.
void reset_backend();

namespace detail {

PairCounts scan_pair_scalar(std::span<const EqPred> match_eq,
                            std::span<const std::uint8_t* const> must_bind,
                            std::span<const EqPred> target_eq,
                            std::size_t rows);

// Row range [begin, end); the SIMD variants use it for their remainder rows.
PairCounts scan_rows_scalar(std::span<const EqPred> match_eq,
                            std::span<const std::uint8_t* const> must_bind,
                            std::span<const EqPred> target_eq,
                            std::size_t begin, std::size_t end);

#if defined(POOLEST_HAVE_AVX2)
PairCounts scan_pair_avx2(std::span<const EqPred> match_eq,
                          std::span<const std::uint8_t* const> must_bind,
                          std::span<const EqPred> target_eq,
                          std::size_t rows);
#endif

#if defined(POOLEST_HAVE_NEON)
PairCounts scan_pair_neon(std::span<const EqPred> match_eq,
                          std::span<const std::uint8_t* const> must_bind,
                          std::span<const EqPred> target_eq,
                          std::size_t rows);
#endif

} // namespace detail

} // namespace poolest::kernels
