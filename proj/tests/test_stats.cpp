#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "poolest/stats.hpp"

using namespace poolest::stats;

TEST_CASE("cell summaries validate and derive proportions") {
    const CellSummary c(40, 10);
    CHECK(c.p_hat() == 0.25);
    CHECK_THROWS_AS(CellSummary(3, 4), std::invalid_argument);
    CHECK_THROWS_AS((void)CellSummary().p_hat(), std::logic_error);
}

TEST_CASE("pooled estimate is the size-weighted mean") {
    // (100 @ 0.5, 300 @ 0.7) pools to 260/400 = 0.65, not the plain mean 0.6.
    const std::vector<CellSummary> cells = {{100, 50}, {300, 210}};
    CHECK(pooled_estimate(cells) == 0.65);

    const std::vector<CellSummary> single = {{100, 30}};
    CHECK(pooled_estimate(single) == 0.3);
    const std::vector<CellSummary> zero = {{10, 0}, {30, 0}};
    CHECK(pooled_estimate(zero) == 0.0);
    const std::vector<CellSummary> even = {{100, 50}, {100, 60}};
    CHECK(pooled_estimate(even) == 0.55);

    // Empty cells contribute nothing.
    const std::vector<CellSummary> with_empty = {{100, 50}, {0, 0}, {300, 210}};
    CHECK(pooled_estimate(with_empty) == 0.65);

    const std::vector<CellSummary> all_empty = {{0, 0}, {0, 0}};
    CHECK_THROWS_AS((void)pooled_estimate(all_empty), std::invalid_argument);

    // Equal-count halves: exact simple fraction.
    const std::vector<CellSummary> halves = {{10, 1}, {10, 4}};
    CHECK(pooled_estimate(halves) == 0.25);
}

TEST_CASE("statistic on worked examples") {
    // Two cells of 100 at 0.5 and 0.6: p = 0.55,
    // X2 = (100*(0.05)^2 + 100*(0.05)^2) / (0.55*0.45) = 0.5 / 0.2475.
    const std::vector<CellSummary> two = {{100, 50}, {100, 60}};
    CHECK(chi_square_statistic(two) == doctest::Approx(0.5 / 0.2475).epsilon(1e-12));

    // Identical proportions across cells: exactly zero, no tolerance.
    const std::vector<CellSummary> equal = {{40, 10}, {80, 20}, {120, 30}};
    CHECK(chi_square_statistic(equal) == 0.0);

    // Degenerate pooled estimate: exactly zero.
    const std::vector<CellSummary> none = {{50, 0}, {70, 0}};
    CHECK(chi_square_statistic(none) == 0.0);
    const std::vector<CellSummary> all = {{50, 50}, {70, 70}};
    CHECK(chi_square_statistic(all) == 0.0);

    CHECK_THROWS_AS((void)chi_square_statistic(std::vector<CellSummary>{{100, 50}}),
                    std::invalid_argument);
    const std::vector<CellSummary> one_nonempty = {{100, 50}, {0, 0}};
    CHECK_THROWS_AS((void)chi_square_statistic(one_nonempty), std::invalid_argument);
}

TEST_CASE("statistic agrees with the extended-precision formula on random cells") {
    std::mt19937 gen(314159);
    std::uniform_int_distribution<int> k_dist(2, 8);
    std::uniform_int_distribution<std::uint64_t> n_dist(1, 5000);
    for (int rep = 0; rep < 500; ++rep) {
        const int k = k_dist(gen);
        std::vector<CellSummary> cells;
        for (int i = 0; i < k; ++i) {
            const std::uint64_t n = n_dist(gen);
            std::uniform_int_distribution<std::uint64_t> s_dist(0, n);
            cells.emplace_back(n, s_dist(gen));
        }
        const long double want = oracles::direct_statistic(cells);
        const double got = chi_square_statistic(cells);
        const long double tol = 1e-12L * std::max<long double>(1.0L, want);
        CHECK(std::fabs(static_cast<long double>(got) - want) <= tol);
    }
}

TEST_CASE("proportional cells give an exact zero statistic") {
    // n_i = b * m_i, successes_i = a * m_i ==> every p_i == a/b exactly.
    std::mt19937 gen(2718);
    std::uniform_int_distribution<std::uint64_t> m_dist(1, 400);
    for (int rep = 0; rep < 300; ++rep) {
        std::uniform_int_distribution<std::uint64_t> b_dist(1, 60);
        const std::uint64_t b = b_dist(gen);
        std::uniform_int_distribution<std::uint64_t> a_dist(0, b);
        const std::uint64_t a = a_dist(gen);
        std::uniform_int_distribution<int> k_dist(2, 6);
        std::vector<CellSummary> cells;
        const int k = k_dist(gen);
        for (int i = 0; i < k; ++i) {
            const std::uint64_t m = m_dist(gen);
            cells.emplace_back(b * m, a * m);
        }
        CHECK(chi_square_statistic(cells) == 0.0);
    }
}

TEST_CASE("survival function on known quantiles and against quadrature") {
    // Classic 5% quantiles.
    CHECK(chi_square_survival(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(chi_square_survival(9.487729036781154, 4) == doctest::Approx(0.05).epsilon(1e-9));
    // dof 2 closes in elementary form: exp(-x/2).
    CHECK(chi_square_survival(3.0, 2) == doctest::Approx(std::exp(-1.5)).epsilon(1e-13));

    CHECK(chi_square_survival(0.0, 3) == 1.0);
    CHECK_THROWS_AS(chi_square_survival(-1.0, 3), std::invalid_argument);
    CHECK_THROWS_AS(chi_square_survival(1.0, 0), std::invalid_argument);

    for (unsigned dof : {1u, 2u, 3u, 4u, 7u, 15u, 30u}) {
        for (double x : {0.05, 0.5, 1.0, 2.5, 5.0, 10.0, 25.0, 60.0}) {
            const double want = oracles::quadrature_chi2_survival(x, dof);
            CHECK(chi_square_survival(x, dof) == doctest::Approx(want).epsilon(1e-10));
        }
    }
}

TEST_CASE("critical values invert the survival function") {
    CHECK(chi_square_critical(0.01, 4) == doctest::Approx(13.276704135987622).epsilon(1e-9));
    CHECK(chi_square_critical(0.05, 1) == doctest::Approx(3.841458820694124).epsilon(1e-9));

    std::mt19937 gen(55);
    std::uniform_real_distribution<double> a_dist(1e-8, 0.5);
    std::uniform_int_distribution<unsigned> dof_dist(1, 30);
    for (int rep = 0; rep < 200; ++rep) {
        const double alpha = a_dist(gen);
        const unsigned dof = dof_dist(gen);
        const double c = chi_square_critical(alpha, dof);
        CHECK(c > 0.0);
        CHECK(chi_square_survival(c, dof) == doctest::Approx(alpha).epsilon(1e-9));
    }

    CHECK_THROWS_AS((void)chi_square_critical(0.0, 3), std::invalid_argument);
    CHECK_THROWS_AS((void)chi_square_critical(1.0, 3), std::invalid_argument);
    CHECK_THROWS_AS((void)chi_square_critical(0.05, 0), std::invalid_argument);
}

TEST_CASE("density special cases at the origin") {
    CHECK(std::isinf(chi_square_pdf(0.0, 1)));
    CHECK(chi_square_pdf(0.0, 2) == 0.5);
    CHECK(chi_square_pdf(0.0, 3) == 0.0);
    CHECK(chi_square_pdf(2.0, 2) == doctest::Approx(0.5 * std::exp(-1.0)).epsilon(1e-13));
}

TEST_CASE("alpha policies") {
    const auto f = AlphaPolicy::fixed(0.01);
    CHECK(alpha_for(f, 1) == 0.01);
    CHECK(alpha_for(f, 1000000) == 0.01);
    CHECK_THROWS_AS((void)alpha_for(f, 0), std::invalid_argument);

    const auto s = AlphaPolicy::scheduled(2.0, 0.05);
    CHECK(alpha_for(s, 100) == doctest::Approx(1e-4).epsilon(1e-12));
    CHECK(alpha_for(s, 2) == 0.05); // 2^-2 = 0.25 capped at 0.05
    CHECK(alpha_for(s, 1) == 0.05);
    // Enormous N clamps to a positive floor rather than underflowing to zero.
    CHECK(alpha_for(AlphaPolicy::scheduled(100.0, 0.05), 1000000000) > 0.0);

    CHECK_THROWS_AS((void)AlphaPolicy::fixed(0.0), std::invalid_argument);
    CHECK_THROWS_AS((void)AlphaPolicy::fixed(1.0), std::invalid_argument);
    CHECK_THROWS_AS((void)AlphaPolicy::scheduled(1.0, 0.05), std::invalid_argument);
    CHECK_THROWS_AS((void)AlphaPolicy::scheduled(1.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS((void)AlphaPolicy::scheduled(1.5, 1.5), std::invalid_argument);
}

TEST_CASE("independence test pools homogeneous data and splits heterogeneous data") {
    const auto policy = AlphaPolicy::fixed(0.05);

    // Mildly different proportions, large n: X2 = 0.5/0.2475 ~ 2.02 < 3.84.
    const std::vector<CellSummary> mild = {{100, 50}, {100, 60}};
    const auto pooled = independence_test(mild, policy);
    CHECK(pooled.decision == Decision::pool);
    CHECK(pooled.dof == 1);
    CHECK(pooled.statistic.value() == doctest::Approx(0.5 / 0.2475).epsilon(1e-12));
    CHECK(pooled.critical.value() == doctest::Approx(3.841458820694124).epsilon(1e-9));
    CHECK(pooled.alpha_used == 0.05);
    CHECK(pooled.cell_ok == std::vector<bool>{true, true});

    // Strongly different proportions: X2 = (100+100)*0.04 / 0.25 = 32.
    const std::vector<CellSummary> strong = {{100, 30}, {100, 70}};
    const auto split = independence_test(strong, policy);
    CHECK(split.decision == Decision::no_pool);
    CHECK(split.statistic.value() == doctest::Approx(32.0).epsilon(1e-12));

    // Empty cells drop out of the degrees of freedom.
    const std::vector<CellSummary> with_empty = {{100, 50}, {0, 0}, {100, 60}, {0, 0}};
    const auto dropped = independence_test(with_empty, policy);
    CHECK(dropped.dof == 1);
    CHECK(dropped.decision == Decision::pool);
    CHECK(dropped.statistic == pooled.statistic);
    CHECK(dropped.cell_ok == std::vector<bool>{true, true, true, true});

    CHECK_THROWS_AS((void)independence_test(std::vector<CellSummary>{{100, 50}}, policy),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        (void)independence_test(std::vector<CellSummary>{{100, 50}, {0, 0}}, policy),
        std::invalid_argument);
}

TEST_CASE("independence test worked triples") {
    const auto policy = AlphaPolicy::fixed(0.05);

    // Proportions 0.30/0.31/0.29 over 200 each: X2 = 0.04/0.21, far below the
    // dof-2 critical value 5.99.
    const std::vector<CellSummary> close = {{200, 60}, {200, 62}, {200, 58}};
    const auto a = independence_test(close, policy);
    CHECK(a.decision == Decision::pool);
    CHECK(a.dof == 2);
    CHECK(a.statistic.value() == doctest::Approx(0.04 / 0.21).epsilon(1e-12));

    // Proportions 0.2 vs 0.5: X2 = 9/0.2275, roughly ten times the critical.
    const std::vector<CellSummary> far = {{200, 40}, {200, 100}};
    const auto b = independence_test(far, policy);
    CHECK(b.decision == Decision::no_pool);
    CHECK(b.statistic.value() == doctest::Approx(9.0 / 0.2275).epsilon(1e-12));

    // Three observations per cell cannot satisfy an expected-count rule of 5.
    const std::vector<CellSummary> tiny = {{3, 1}, {3, 2}};
    CHECK(independence_test(tiny, policy).decision == Decision::invalid);
}

TEST_CASE("independence test flags low expected counts as invalid") {
    const auto policy = AlphaPolicy::fixed(0.05);

    // Pooled p = 12/120 = 0.1; the 20-row cell expects only 2 successes.
    const std::vector<CellSummary> low = {{100, 10}, {20, 2}};
    const auto out = independence_test(low, policy);
    CHECK(out.decision == Decision::invalid);
    CHECK_FALSE(out.statistic.has_value());
    CHECK_FALSE(out.critical.has_value());
    CHECK(out.dof == 1);
    CHECK(out.alpha_used == 0.05);
    CHECK(out.cell_ok == std::vector<bool>{true, false});

    // Threshold is adjustable: at 2.0 the same cells become testable.
    const auto relaxed = independence_test(low, policy, 2.0);
    CHECK(relaxed.decision == Decision::pool);
    CHECK(relaxed.statistic.has_value());

    // Expected failures can fail the rule, not just expected successes.
    const std::vector<CellSummary> high_p = {{100, 90}, {20, 18}};
    CHECK(independence_test(high_p, policy).decision == Decision::invalid);
}

TEST_CASE("degenerate pooled estimates pool with a zero statistic") {
    const auto policy = AlphaPolicy::fixed(0.05);
    for (const auto& cells : {std::vector<CellSummary>{{4, 0}, {3, 0}},
                              std::vector<CellSummary>{{4, 4}, {3, 3}}}) {
        const auto out = independence_test(cells, policy);
        CHECK(out.decision == Decision::pool);
        CHECK(out.statistic.value() == 0.0);
        CHECK(out.dof == 1);
        CHECK(out.critical.has_value());
        CHECK(out.cell_ok == std::vector<bool>{true, true});
    }
}

TEST_CASE("scheduled alpha uses the combined sample size") {
    // N = 400: alpha = min(0.05, 400^-1.5) = 1.25e-4, critical ~ 14.7 (dof 1),
    // so a statistic near 9 pools under the schedule but splits at fixed 0.05.
    const std::vector<CellSummary> cells = {{200, 100}, {200, 130}};
    const auto at_fixed = independence_test(cells, AlphaPolicy::fixed(0.05));
    CHECK(at_fixed.decision == Decision::no_pool);

    const auto at_sched = independence_test(cells, AlphaPolicy::scheduled(1.5, 0.05));
    CHECK(at_sched.alpha_used == doctest::Approx(std::pow(400.0, -1.5)).epsilon(1e-12));
    CHECK(at_sched.decision == Decision::pool);
    CHECK(at_sched.statistic == at_fixed.statistic);
}

TEST_CASE("merging cells with identical proportions preserves the statistic") {
    std::mt19937 gen(808);
    std::uniform_int_distribution<std::uint64_t> n_dist(50, 400);
    for (int rep = 0; rep < 100; ++rep) {
        const std::uint64_t n1 = 2 * n_dist(gen);
        const std::uint64_t n2 = 2 * n_dist(gen);
        std::uniform_int_distribution<std::uint64_t> s1(0, n1 / 2), s2(0, n2);
        // Cells a and b share a proportion by construction (s, n and 2s, 2n).
        const CellSummary a(n1 / 2, s1(gen));
        const CellSummary b(n1, a.successes * 2);
        const CellSummary c(n2, s2(gen));
        const std::vector<CellSummary> split_cells = {a, b, c};
        const std::vector<CellSummary> merged = {
            {a.n + b.n, a.successes + b.successes}, c};
        // The merged pair has the same proportion, so the pooled estimate is
        // unchanged and the combined term n*(p-pool)^2 just adds.
        CHECK(pooled_estimate(split_cells) == doctest::Approx(pooled_estimate(merged)).epsilon(1e-14));
        if (pooled_estimate(split_cells) > 0.0 && pooled_estimate(split_cells) < 1.0) {
            CHECK(chi_square_statistic(split_cells) ==
                  doctest::Approx(chi_square_statistic(merged)).epsilon(1e-10));
        }
    }
}

TEST_CASE("statistic bounds: pooled estimate sits within the cell proportions") {
    std::mt19937 gen(9090);
    std::uniform_int_distribution<std::uint64_t> n_dist(1, 500);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<CellSummary> cells;
        double lo = 1.0, hi = 0.0;
        for (int i = 0; i < 4; ++i) {
            const std::uint64_t n = n_dist(gen);
            std::uniform_int_distribution<std::uint64_t> s_dist(0, n);
            cells.emplace_back(n, s_dist(gen));
            lo = std::min(lo, cells.back().p_hat());
            hi = std::max(hi, cells.back().p_hat());
        }
        const double p = pooled_estimate(cells);
        CHECK(p >= lo);
        CHECK(p <= hi);
        CHECK(chi_square_statistic(cells) >= 0.0);
    }
}
