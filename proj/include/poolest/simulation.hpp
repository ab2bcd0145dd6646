#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "poolest/dataset.hpp"
#include "poolest/estimator.hpp"

namespace poolest::sim {

// A synthetic world: the schema plus a distribution over its full states,
// given either as independent per-attribute categoricals or as an explicit
// joint table (probabilities over all value combinations, first attribute
// varying slowest — same order as decision-matrix columns).
struct GeneratorSpec {
    AttributeSchema schema;
    std::vector<std::vector<double>> independent; // [attr][value], empty in joint mode
    std::vector<double> joint;                    // empty in independent mode
    std::uint64_t seed = 0;

    static GeneratorSpec independent_spec(AttributeSchema schema,
                                          std::vector<std::vector<double>> dists,
                                          std::uint64_t seed);
    static GeneratorSpec joint_spec(AttributeSchema schema, std::vector<double> table,
                                    std::uint64_t seed);
    bool is_joint() const { return !joint.empty(); }
};

// n observations drawn independently from the state distribution, every
// attribute bound.  Deterministic given spec.seed.
Dataset generate(const GeneratorSpec& spec, std::size_t n);

// Exact probabilities under the spec's distribution; the oracle the
// experiments and end-to-end tests compare estimates against.
double true_probability(const GeneratorSpec& spec, const Event& event);
double true_conditional(const GeneratorSpec& spec, const Event& target, const Event& given);

// One row per trial plus named aggregates; aggregates are recomputable from
// the rows (tested), so external tools can re-derive every summary.
struct ExperimentReport {
    std::string experiment;
    std::string rng_algorithm; // "pcg32"
    std::uint64_t seed = 0;
    nlohmann::ordered_json params;
    std::vector<std::string> trial_columns;
    std::vector<std::vector<double>> trial_rows;
    std::vector<std::pair<std::string, double>> aggregates;

    double aggregate(std::string_view name) const;
};

// How often the test refuses to pool when the cells genuinely share one
// probability.  Each trial grows k cells to points_per_cell, invoking the
// test each time every cell has gained `checkpoint_every` points
// (checkpoint_every = 0 means one test at the final size only); the headline
// number is the NO_POOL fraction over all test invocations.
struct PoolRateParams {
    unsigned cells = 2;
    double p = 0.5;
    unsigned points_per_cell = 200;
    unsigned trials = 100;
    unsigned checkpoint_every = 5;
};
ExperimentReport run_pool_rate_experiment(const PoolRateParams& params,
                                          const EstimatorConfig& config, std::uint64_t seed);

// With genuinely different cell probabilities, how much data until the test
// durably refuses to pool: a trial's stabilization point is the smallest
// checkpoint s (points per cell) with NO_POOL at s and every later
// checkpoint through 4s.  Trials whose point would exceed
// max_points_per_cell / 4 are reported unresolved (-1 in the row).
struct StabilizationParams {
    std::vector<double> cell_probs;
    unsigned trials = 100;
    unsigned checkpoint_every = 5;
    unsigned max_points_per_cell = 2000;
};
ExperimentReport run_stabilization_experiment(const StabilizationParams& params,
                                              const EstimatorConfig& config,
                                              std::uint64_t seed);

// Monte-Carlo check of the composite estimator's moments: regenerate a
// dataset per trial (one group attribute with a cell per probability, one
// binary outcome), estimate Pr(outcome | first group), and compare the
// sample mean and variance against the asymptotic targets — with equal cell
// probabilities the pooled limits p and p(1-p)/N, otherwise the single-cell
// limits p_1 and p_1(1-p_1)/N_1.
struct MomentParams {
    std::vector<double> cell_probs;
    std::vector<unsigned> cell_sizes;
    unsigned trials = 1000; // at least 1000: the moments are asymptotic summaries
};
ExperimentReport run_moment_experiment(const MomentParams& params,
                                       const EstimatorConfig& config, std::uint64_t seed);

} // namespace poolest::sim
