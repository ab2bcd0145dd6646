#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace poolest::stats {

// Success counts for one cell (one sibling event).  Proportions are derived,
// never stored: keeping integers means the pooled estimate is a single
// division, and configurations with identical per-cell ratios produce a
// statistic of exactly zero.
struct CellSummary {
    std::uint64_t n = 0;
    std::uint64_t successes = 0;

    CellSummary() = default;
    CellSummary(std::uint64_t n_, std::uint64_t successes_);

    double p_hat() const; // requires n > 0

    bool operator==(const CellSummary&) const = default;
};

// How the significance level is chosen.  `fixed` uses the same alpha at
// every sample size.  `scheduled` tightens it as data accumulates,
// alpha(N) = min(cap, N^-d) with d > 1, so that the per-test false-rejection
// budget is summable while the test still gains power from growing N.
struct AlphaPolicy {
    enum class Kind { fixed, scheduled };
    Kind kind = Kind::fixed;
    double alpha = 0.05; // fixed only
    double d = 1.5;      // scheduled only
    double cap = 0.05;   // scheduled only

    static AlphaPolicy fixed(double alpha);
    static AlphaPolicy scheduled(double d, double cap);
    bool operator==(const AlphaPolicy&) const = default;
};

// Significance level the policy yields at total sample size n (clamped to a
// positive value so a critical value always exists).
double alpha_for(const AlphaPolicy& policy, std::uint64_t total_n);

// Size-weighted mean of the cell proportions == total successes / total n.
// Requires at least one nonempty cell.
double pooled_estimate(std::span<const CellSummary> cells);

// Homogeneity statistic over the nonempty cells:
//   sum_i n_i * (p_i - p)^2 / (p * (1 - p))
// with p the pooled estimate.  Zero (exactly) when the pooled estimate is
// degenerate (0 or 1).  Requires at least two nonempty cells.
double chi_square_statistic(std::span<const CellSummary> cells);

// Chi-square density, upper tail probability, and upper critical value.
double chi_square_pdf(double x, unsigned dof);
double chi_square_survival(double x, unsigned dof); // P(X >= x), dof >= 1
double chi_square_critical(double alpha, unsigned dof); // survival(c) == alpha

enum class Decision { pool, no_pool, invalid };

struct TestOutcome {
    Decision decision = Decision::invalid;
    std::optional<double> statistic; // absent when the test was not computable
    unsigned dof = 0;                // nonempty cells - 1
    std::optional<double> critical;
    double alpha_used = 0.0;
    // Per input cell: true when the cell is empty or satisfies the
    // expected-count rule; false marks the cells that invalidated the test.
    std::vector<bool> cell_ok;

    bool operator==(const TestOutcome&) const = default;
};

// Chi-square test of whether the success probability is independent of
// which cell an observation fell in (equal proportions across cells).
//
//   pool     statistic below the critical value at alpha_for(policy, N)
//   no_pool  statistic at or above the critical value
//   invalid  the chi-square approximation is untrustworthy: some nonempty
//            cell has expected successes or failures below
//            `validity_threshold` (n_i * p and n_i * (1 - p) must both
//            reach it)
//
// A degenerate pooled estimate (0 or 1) forces every cell proportion equal
// to it, so that case pools directly with statistic 0 — the data contains
// literally no heterogeneity and the expected-count rule is moot.
//
// Empty cells carry no evidence; they are excluded from the statistic and
// from the degrees of freedom.  Throws std::invalid_argument when fewer
// than two cells are nonempty.
TestOutcome independence_test(std::span<const CellSummary> cells, const AlphaPolicy& policy,
                              double validity_threshold = 5.0);

} // namespace poolest::stats
