#include "poolest/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "poolest/io.hpp"
#include "poolest/rng.hpp"

namespace poolest::sim {

namespace {

void check_distribution(std::span<const double> probs, const char* what) {
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0))
            throw std::invalid_argument(std::string(what) + ": negative probability");
        sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-12)
        throw std::invalid_argument(std::string(what) + ": probabilities must sum to 1");
}

// Index of the drawn value for u uniform in [0,1): the unique i with
// cdf(i-1) <= u < cdf(i), clamped to the last cell against rounding.
std::size_t draw_categorical(std::span<const double> probs, double u) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return probs.size() - 1;
}

} // namespace

GeneratorSpec GeneratorSpec::independent_spec(AttributeSchema schema,
                                              std::vector<std::vector<double>> dists,
                                              std::uint64_t seed) {
    if (dists.size() != schema.size())
        throw std::invalid_argument("generator: one distribution per attribute required");
    for (std::uint32_t a = 0; a < dists.size(); ++a) {
        if (dists[a].size() != schema.domain_size(a))
            throw std::invalid_argument("generator: distribution size does not match domain");
        check_distribution(dists[a], "generator");
    }
    GeneratorSpec spec;
    spec.schema = std::move(schema);
    spec.independent = std::move(dists);
    spec.seed = seed;
    return spec;
}

GeneratorSpec GeneratorSpec::joint_spec(AttributeSchema schema, std::vector<double> table,
                                        std::uint64_t seed) {
    std::size_t states = 1;
    for (std::uint32_t a = 0; a < schema.size(); ++a) states *= schema.domain_size(a);
    if (table.size() != states)
        throw std::invalid_argument("generator: joint table needs one entry per state");
    check_distribution(table, "generator");
    GeneratorSpec spec;
    spec.schema = std::move(schema);
    spec.joint = std::move(table);
    spec.seed = seed;
    return spec;
}

Dataset generate(const GeneratorSpec& spec, std::size_t n) {
    if (spec.independent.empty() && spec.joint.empty())
        throw std::invalid_argument("generator: uninitialized spec");
    const std::size_t attrs = spec.schema.size();
    std::vector<std::vector<std::uint8_t>> columns(attrs,
                                                   std::vector<std::uint8_t>(n, 0));
    Pcg32 rng(spec.seed, 0);
    if (spec.is_joint()) {
        // Decode a state index into value codes, first attribute slowest.
        std::vector<std::size_t> stride(attrs, 1);
        for (std::size_t a = attrs - 1; a-- > 0;)
            stride[a] = stride[a + 1] * spec.schema.domain_size(static_cast<std::uint32_t>(a + 1));
        for (std::size_t r = 0; r < n; ++r) {
            std::size_t s = draw_categorical(spec.joint, rng.next_double());
            for (std::size_t a = 0; a < attrs; ++a) {
                columns[a][r] = static_cast<std::uint8_t>(s / stride[a] + 1);
                s %= stride[a];
            }
        }
    } else {
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t a = 0; a < attrs; ++a)
                columns[a][r] = static_cast<std::uint8_t>(
                    draw_categorical(spec.independent[a], rng.next_double()) + 1);
    }
    return Dataset::from_columns(spec.schema, std::move(columns));
}

double true_probability(const GeneratorSpec& spec, const Event& event) {
    if (!spec.is_joint()) {
        double p = 1.0;
        for (const Binding& b : event.bindings()) p *= spec.independent[b.attribute][b.code - 1];
        return p;
    }
    const std::size_t attrs = spec.schema.size();
    std::vector<std::size_t> stride(attrs, 1);
    for (std::size_t a = attrs - 1; a-- > 0;)
        stride[a] = stride[a + 1] * spec.schema.domain_size(static_cast<std::uint32_t>(a + 1));
    double p = 0.0;
    for (std::size_t s = 0; s < spec.joint.size(); ++s) {
        bool agrees = true;
        for (const Binding& b : event.bindings())
            if (s / stride[b.attribute] % spec.schema.domain_size(b.attribute) + 1 != b.code) {
                agrees = false;
                break;
            }
        if (agrees) p += spec.joint[s];
    }
    return p;
}

double true_conditional(const GeneratorSpec& spec, const Event& target, const Event& given) {
    const double pg = true_probability(spec, given);
    if (pg <= 0.0)
        throw std::invalid_argument("true_conditional: conditioning event has probability 0");
    return true_probability(spec, target.merged(given)) / pg;
}

double ExperimentReport::aggregate(std::string_view name) const {
    for (const auto& [key, value] : aggregates)
        if (key == name) return value;
    throw std::out_of_range("no aggregate named '" + std::string(name) + "'");
}

namespace {

// Per-cell accumulation sizes at which the test is invoked: every
// `every` points per cell, plus the final size.
std::vector<unsigned> checkpoint_sizes(unsigned final_size, unsigned every) {
    std::vector<unsigned> sizes;
    if (every == 0) {
        sizes.push_back(final_size);
        return sizes;
    }
    for (unsigned s = every; s < final_size; s += every) sizes.push_back(s);
    sizes.push_back(final_size);
    return sizes;
}

} // namespace

ExperimentReport run_pool_rate_experiment(const PoolRateParams& params,
                                          const EstimatorConfig& config, std::uint64_t seed) {
    if (params.cells < 2)
        throw std::invalid_argument("pool-rate experiment needs at least two cells");
    if (!(params.p >= 0.0 && params.p <= 1.0))
        throw std::invalid_argument("pool-rate experiment: p outside [0,1]");
    if (params.points_per_cell == 0 || params.trials == 0)
        throw std::invalid_argument("pool-rate experiment: empty configuration");

    const std::vector<unsigned> sizes =
        checkpoint_sizes(params.points_per_cell, params.checkpoint_every);

    ExperimentReport report;
    report.experiment = "pool_rate";
    report.rng_algorithm = "pcg32";
    report.seed = seed;
    report.params = {{"cells", params.cells},
                     {"p", params.p},
                     {"points_per_cell", params.points_per_cell},
                     {"trials", params.trials},
                     {"checkpoint_every", params.checkpoint_every},
                     {"config", io::estimator_config_json(config)}};
    report.trial_columns = {"trial", "tests", "valid", "invalid", "no_pool"};

    std::uint64_t tests_total = 0, tests_valid = 0, tests_invalid = 0, no_pool_total = 0;
    for (unsigned t = 0; t < params.trials; ++t) {
        Pcg32 rng(seed, t); // stream per trial: order-independent reproducibility
        std::vector<stats::CellSummary> cells(params.cells);
        unsigned tests = 0, valid = 0, invalid = 0, no_pool = 0;
        unsigned grown = 0;
        for (unsigned target_size : sizes) {
            for (auto& cell : cells) {
                cell.n += target_size - grown;
                for (unsigned i = grown; i < target_size; ++i)
                    if (rng.bernoulli(params.p)) ++cell.successes;
            }
            grown = target_size;
            const stats::TestOutcome o =
                stats::independence_test(cells, config.alpha_policy, config.validity_threshold);
            ++tests;
            if (o.decision == stats::Decision::invalid) {
                ++invalid;
            } else {
                ++valid;
                if (o.decision == stats::Decision::no_pool) ++no_pool;
            }
        }
        tests_total += tests;
        tests_valid += valid;
        tests_invalid += invalid;
        no_pool_total += no_pool;
        report.trial_rows.push_back({static_cast<double>(t), static_cast<double>(tests),
                                     static_cast<double>(valid), static_cast<double>(invalid),
                                     static_cast<double>(no_pool)});
    }

    report.aggregates = {
        {"trials", static_cast<double>(params.trials)},
        {"tests_total", static_cast<double>(tests_total)},
        {"tests_valid", static_cast<double>(tests_valid)},
        {"tests_invalid", static_cast<double>(tests_invalid)},
        {"no_pool_total", static_cast<double>(no_pool_total)},
        {"no_pool_rate",
         static_cast<double>(no_pool_total) / static_cast<double>(tests_total)},
        {"no_pool_rate_valid", tests_valid > 0 ? static_cast<double>(no_pool_total) /
                                                     static_cast<double>(tests_valid)
                                               : -1.0},
    };
    return report;
}

ExperimentReport run_stabilization_experiment(const StabilizationParams& params,
                                              const EstimatorConfig& config,
                                              std::uint64_t seed) {
    if (params.cell_probs.size() < 2)
        throw std::invalid_argument("stabilization experiment needs at least two cells");
    for (double p : params.cell_probs)
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("stabilization experiment: probability outside [0,1]");
    if (std::all_of(params.cell_probs.begin(), params.cell_probs.end(),
                    [&](double p) { return p == params.cell_probs.front(); }))
        throw std::invalid_argument(
            "stabilization experiment: equal probabilities never stabilize on NO_POOL");
    if (params.checkpoint_every == 0 || params.trials == 0)
        throw std::invalid_argument("stabilization experiment: empty configuration");
    if (params.max_points_per_cell < 4 * params.checkpoint_every)
        throw std::invalid_argument(
            "stabilization experiment: horizon shorter than one checkpoint span");

    const std::vector<unsigned> sizes =
        checkpoint_sizes(params.max_points_per_cell, params.checkpoint_every);
    const std::size_t k = params.cell_probs.size();

    ExperimentReport report;
    report.experiment = "stabilization";
    report.rng_algorithm = "pcg32";
    report.seed = seed;
    report.params = {{"cell_probs", params.cell_probs},
                     {"trials", params.trials},
                     {"checkpoint_every", params.checkpoint_every},
                     {"max_points_per_cell", params.max_points_per_cell},
                     {"config", io::estimator_config_json(config)}};
    report.trial_columns = {"trial", "stabilization_point", "resolved"};

    std::vector<double> points;
    std::uint64_t resolved_count = 0;
    for (unsigned t = 0; t < params.trials; ++t) {
        Pcg32 rng(seed, t);
        std::vector<stats::CellSummary> cells(k);
        std::vector<bool> refused(sizes.size(), false); // NO_POOL at this checkpoint?
        unsigned grown = 0;
        for (std::size_t ci = 0; ci < sizes.size(); ++ci) {
            for (std::size_t cell = 0; cell < k; ++cell) {
                cells[cell].n += sizes[ci] - grown;
                for (unsigned i = grown; i < sizes[ci]; ++i)
                    if (rng.bernoulli(params.cell_probs[cell])) ++cells[cell].successes;
            }
            grown = sizes[ci];
            refused[ci] = stats::independence_test(cells, config.alpha_policy,
                                                   config.validity_threshold)
                              .decision == stats::Decision::no_pool;
        }

        // Smallest checkpoint s that is NO_POOL and stays NO_POOL at every
        // checkpoint through the 4s horizon; only candidates whose horizon
        // fits inside the generated data can be certified.
        double point = -1.0;
        for (std::size_t ci = 0; ci < sizes.size(); ++ci) {
            const unsigned s = sizes[ci];
            if (4ull * s > params.max_points_per_cell) break;
            bool stable = true;
            for (std::size_t cj = ci; cj < sizes.size() && sizes[cj] <= 4 * s; ++cj)
                if (!refused[cj]) {
                    stable = false;
                    break;
                }
            if (stable) {
                point = static_cast<double>(s);
                break;
            }
        }
        if (point >= 0.0) ++resolved_count;
        report.trial_rows.push_back(
            {static_cast<double>(t), point, point >= 0.0 ? 1.0 : 0.0});
        points.push_back(point >= 0.0 ? point : std::numeric_limits<double>::infinity());
    }

    std::sort(points.begin(), points.end());
    const std::size_t n = points.size();
    double median = (n % 2 == 1) ? points[n / 2]
                                 : 0.5 * (points[n / 2 - 1] + points[n / 2]);
    const bool median_defined = std::isfinite(median);

    report.aggregates = {
        {"trials", static_cast<double>(params.trials)},
        {"resolved", static_cast<double>(resolved_count)},
        {"unresolved", static_cast<double>(params.trials - resolved_count)},
        {"median_defined", median_defined ? 1.0 : 0.0},
        {"median_points_per_cell", median_defined ? median : -1.0},
    };
    return report;
}

ExperimentReport run_moment_experiment(const MomentParams& params,
                                       const EstimatorConfig& config, std::uint64_t seed) {
    if (params.trials < 1000)
        throw std::invalid_argument(
            "moment experiment needs at least 1000 trials for stable moments");
    const std::size_t k = params.cell_probs.size();
    if (k < 2 || params.cell_sizes.size() != k)
        throw std::invalid_argument(
            "moment experiment needs matching probabilities and sizes for at least two cells");
    for (double p : params.cell_probs)
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("moment experiment: probability outside [0,1]");
    for (unsigned n : params.cell_sizes)
        if (n == 0) throw std::invalid_argument("moment experiment: empty cell");

    // The synthetic world: one grouping attribute with a value per cell, one
    // binary outcome.  The estimate under scrutiny is
    // Pr(outcome=yes | group=g1).
    std::vector<std::string> group_values;
    for (std::size_t i = 0; i < k; ++i) group_values.push_back("g" + std::to_string(i + 1));
    const AttributeSchema schema({Attribute{"group", group_values},
                                  Attribute{"outcome", {"yes", "no"}}});
    const Event target = Event::of(schema, {{"outcome", "yes"}});
    const Event condition = Event::of(schema, {{"group", "g1"}});

    std::uint64_t total_n = 0;
    std::uint64_t min_cell = params.cell_sizes[0];
    for (unsigned n : params.cell_sizes) {
        total_n += n;
        min_cell = std::min<std::uint64_t>(min_cell, n);
    }
    const bool equal_probs = std::all_of(params.cell_probs.begin(), params.cell_probs.end(),
                                         [&](double p) { return p == params.cell_probs[0]; });
    const double p_ref = params.cell_probs[0];
    const double target_mean = p_ref;
    const double target_variance =
        equal_probs ? p_ref * (1.0 - p_ref) / static_cast<double>(total_n)
                    : p_ref * (1.0 - p_ref) / static_cast<double>(params.cell_sizes[0]);

    ExperimentReport report;
    report.experiment = "moments";
    report.rng_algorithm = "pcg32";
    report.seed = seed;
    report.params = {{"cell_probs", params.cell_probs},
                     {"cell_sizes", params.cell_sizes},
                     {"trials", params.trials},
                     {"config", io::estimator_config_json(config)}};
    report.trial_columns = {"trial", "estimate", "pooled", "effective_n"};

    std::vector<std::uint8_t> group_column;
    group_column.reserve(total_n);
    for (std::size_t i = 0; i < k; ++i)
        group_column.insert(group_column.end(), params.cell_sizes[i],
                            static_cast<std::uint8_t>(i + 1));

    double sum = 0.0, sum_sq = 0.0;
    std::uint64_t pooled_count = 0;
    for (unsigned t = 0; t < params.trials; ++t) {
        Pcg32 rng(seed, t);
        std::vector<std::uint8_t> outcome(total_n);
        std::size_t row = 0;
        for (std::size_t i = 0; i < k; ++i)
            for (unsigned j = 0; j < params.cell_sizes[i]; ++j, ++row)
                outcome[row] = rng.bernoulli(params.cell_probs[i]) ? 1 : 2;

        std::vector<std::vector<std::uint8_t>> cols;
        cols.push_back(group_column);
        cols.push_back(std::move(outcome));
        const Dataset data = Dataset::from_columns(schema, std::move(cols));
        const EstimateResult r = estimate(data, target, condition, config);
        const double est = *r.probability; // cells are nonempty, so always defined
        const bool pooled = r.effective_condition.empty();
        if (pooled) ++pooled_count;
        sum += est;
        sum_sq += est * est;
        report.trial_rows.push_back({static_cast<double>(t), est, pooled ? 1.0 : 0.0,
                                     static_cast<double>(r.effective_n)});
    }

    const double trials = params.trials;
    const double mean = sum / trials;
    const double variance = (sum_sq - sum * sum / trials) / (trials - 1.0);
    report.aggregates = {
        {"trials", trials},
        {"mean", mean},
        {"variance", variance},
        {"se_mean", std::sqrt(std::max(variance, 0.0) / trials)},
        {"pooled_fraction", static_cast<double>(pooled_count) / trials},
        {"equal_probs", equal_probs ? 1.0 : 0.0},
        {"target_mean", target_mean},
        {"target_variance", target_variance},
        {"variance_ratio", target_variance > 0.0
                               ? variance / target_variance
                               : (variance == 0.0 ? 1.0 : -1.0)},
        {"total_n", static_cast<double>(total_n)},
        {"min_cell_n", static_cast<double>(min_cell)},
        {"growth_exponent",
         std::log(static_cast<double>(min_cell)) / std::log(static_cast<double>(total_n))},
    };
    return report;
}

} // namespace poolest::sim
