#include "poolest/stats.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace poolest::stats {

CellSummary::CellSummary(std::uint64_t n_, std::uint64_t successes_)
    : n(n_), successes(successes_) {
    if (successes > n)
        throw std::invalid_argument("cell has more successes than observations");
}

double CellSummary::p_hat() const {
    if (n == 0) throw std::logic_error("proportion of an empty cell");
    return static_cast<double>(successes) / static_cast<double>(n);
}

AlphaPolicy AlphaPolicy::fixed(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("fixed alpha must lie in (0,1)");
    AlphaPolicy p;
    p.kind = Kind::fixed;
    p.alpha = alpha;
    return p;
}

AlphaPolicy AlphaPolicy::scheduled(double d, double cap) {
    if (!(d > 1.0))
        throw std::invalid_argument("schedule exponent must exceed 1");
    if (!(cap > 0.0 && cap < 1.0))
        throw std::invalid_argument("schedule cap must lie in (0,1)");
    AlphaPolicy p;
    p.kind = Kind::scheduled;
    p.d = d;
    p.cap = cap;
    return p;
}

double alpha_for(const AlphaPolicy& policy, std::uint64_t total_n) {
    if (total_n == 0) throw std::invalid_argument("alpha_for needs a positive sample size");
    if (policy.kind == AlphaPolicy::Kind::fixed) return policy.alpha;
    const double scheduled = std::pow(static_cast<double>(total_n), -policy.d);
    // N^-d underflows to 0 only at absurd N; keep the level strictly positive
    return std::max(std::min(policy.cap, scheduled), 1e-300);
}

double pooled_estimate(std::span<const CellSummary> cells) {
    std::uint64_t n = 0, successes = 0;
    for (const CellSummary& c : cells) {
        n += c.n;
        successes += c.successes;
    }
    if (n == 0) throw std::invalid_argument("pooled_estimate: all cells empty");
    // One division of exact integer totals: cells whose ratios are equal as
    // rationals yield proportions identical to this value as doubles.
    return static_cast<double>(successes) / static_cast<double>(n);
}

double chi_square_statistic(std::span<const CellSummary> cells) {
    std::size_t nonempty = 0;
    for (const CellSummary& c : cells)
        if (c.n > 0) ++nonempty;
    if (nonempty < 2)
        throw std::invalid_argument("chi_square_statistic needs at least two nonempty cells");
    const double p = pooled_estimate(cells);
    if (p == 0.0 || p == 1.0) return 0.0; // every cell proportion equals p
    const double denom = p * (1.0 - p);
    double x2 = 0.0;
    for (const CellSummary& c : cells) {
        if (c.n == 0) continue;
        const double diff = c.p_hat() - p;
        x2 += diff * diff * static_cast<double>(c.n);
    }
    return x2 / denom;
}

namespace {

// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
// Series for the lower function when x < a + 1, Lentz's continued fraction
// for the upper function otherwise; the crossover keeps both expansions in
// their fast-converging regimes.
double gamma_q(double a, double x) {
    if (x < 0.0) throw std::invalid_argument("gamma_q: negative argument");
    if (x == 0.0) return 1.0;
    const double log_prefactor = a * std::log(x) - x - std::lgamma(a);
    constexpr double eps = 1e-16;
    constexpr int max_iter = 1000;
    if (x < a + 1.0) {
        // P(a,x) = prefactor * sum_{k>=0} x^k / (a (a+1) ... (a+k))
        double term = 1.0 / a;
        double sum = term;
        double denom = a;
        for (int k = 0; k < max_iter; ++k) {
            denom += 1.0;
            term *= x / denom;
            sum += term;
            if (term < sum * eps) break;
        }
        return 1.0 - std::exp(log_prefactor) * sum;
    }
    // Q(a,x) = prefactor * CF, CF per Lentz with a_i = -i(i-a), b_i = x - a + 1 + 2i
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < max_iter; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < eps) break;
    }
    return std::exp(log_prefactor) * h;
}

} // namespace

double chi_square_pdf(double x, unsigned dof) {
    if (dof == 0) throw std::invalid_argument("chi_square_pdf: dof must be positive");
    if (x < 0.0) return 0.0;
    const double a = 0.5 * dof;
    if (x == 0.0) {
        if (dof == 1) return std::numeric_limits<double>::infinity();
        if (dof == 2) return 0.5;
        return 0.0;
    }
    return std::exp((a - 1.0) * std::log(x) - 0.5 * x - a * std::numbers::ln2_v<double> -
                    std::lgamma(a));
}

double chi_square_survival(double x, unsigned dof) {
    if (dof == 0) throw std::invalid_argument("chi_square_survival: dof must be positive");
    if (x < 0.0) throw std::invalid_argument("chi_square_survival: negative statistic");
    return gamma_q(0.5 * dof, 0.5 * x);
}

double chi_square_critical(double alpha, unsigned dof) {
    if (dof == 0) throw std::invalid_argument("chi_square_critical: dof must be positive");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("chi_square_critical: alpha must lie in (0,1)");

    // Bracket the root of survival(x) - alpha, then bisect; survival is
    // strictly decreasing so the bracket is safe.  A few Newton steps at the
    // end sharpen the bisection result to full precision.
    double lo = 0.0;
    double hi = static_cast<double>(dof) + 16.0;
    while (chi_square_survival(hi, dof) > alpha) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e8)
            throw std::runtime_error("chi_square_critical: failed to bracket");
    }
    for (int i = 0; i < 120 && hi - lo > 1e-14 * (1.0 + lo); ++i) {
        const double mid = 0.5 * (lo + hi);
        if (chi_square_survival(mid, dof) > alpha)
            lo = mid;
        else
            hi = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int i = 0; i < 4; ++i) {
        const double f = chi_square_survival(x, dof) - alpha;
        const double fp = chi_square_pdf(x, dof);
        if (fp <= 0.0 || !std::isfinite(fp)) break;
        const double step = f / fp;
        const double next = x + step;
        if (!(next > lo && next < hi)) break;
        x = next;
        if (std::fabs(step) < 1e-15 * x) break;
    }
    return x;
}

TestOutcome independence_test(std::span<const CellSummary> cells, const AlphaPolicy& policy,
                              double validity_threshold) {
    if (validity_threshold <= 0.0)
        throw std::invalid_argument("validity threshold must be positive");
    std::uint64_t total_n = 0;
    std::size_t nonempty = 0;
    for (const CellSummary& c : cells) {
        total_n += c.n;
        if (c.n > 0) ++nonempty;
    }
    if (nonempty < 2)
        throw std::invalid_argument("independence_test needs at least two nonempty cells");

    TestOutcome out;
    out.dof = static_cast<unsigned>(nonempty - 1);
    out.alpha_used = alpha_for(policy, total_n);
    out.cell_ok.assign(cells.size(), true);

    const double p = pooled_estimate(cells);
    if (p == 0.0 || p == 1.0) {
        out.decision = Decision::pool;
        out.statistic = 0.0;
        out.critical = chi_square_critical(out.alpha_used, out.dof);
        return out;
    }

    bool valid = true;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].n == 0) continue;
        const double expected_succ = static_cast<double>(cells[i].n) * p;
        const double expected_fail = static_cast<double>(cells[i].n) * (1.0 - p);
        if (expected_succ < validity_threshold || expected_fail < validity_threshold) {
            out.cell_ok[i] = false;
            valid = false;
        }
    }
    if (!valid) {
        out.decision = Decision::invalid;
        return out;
    }

    out.statistic = chi_square_statistic(cells);
    out.critical = chi_square_critical(out.alpha_used, out.dof);
    out.decision = (*out.statistic < *out.critical) ? Decision::pool : Decision::no_pool;
    return out;
}

} // namespace poolest::stats
