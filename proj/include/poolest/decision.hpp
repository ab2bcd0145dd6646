#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "poolest/dataset.hpp"
#include "poolest/estimator.hpp"

namespace poolest {

// Every assignment of values to `attrs` (given sorted by schema index), in
// deterministic order: the first attribute varies slowest, each domain in
// schema value order.
std::vector<Event> column_events(const AttributeSchema& schema,
                                 std::span<const std::uint32_t> attrs);

struct DecisionMatrix {
    std::vector<std::string> actions;
    std::vector<std::uint32_t> column_attrs; // sorted by schema index
    std::vector<Event> columns;              // cross product, canonical order
    std::vector<std::vector<double>> utilities; // [action][column]

    // Validates and assembles: distinct action names, known attributes, one
    // fully-populated utility row per action.
    static DecisionMatrix create(const AttributeSchema& schema,
                                 std::vector<std::string> actions,
                                 const std::vector<std::string>& column_attr_names,
                                 std::vector<std::vector<double>> utilities);
};

// EU(a) = sum_j probabilities[j] * utilities[a][j].  The probability vector
// must have one entry per column, all nonnegative, summing to 1 within 1e-9.
std::vector<double> expected_utilities(const DecisionMatrix& matrix,
                                       std::span<const double> probabilities);

enum class ProbabilitySource { estimated, supplied };

struct DecisionReport {
    std::string chosen;
    std::size_t chosen_index = 0;
    std::vector<double> expected_utilities;
    std::vector<double> probabilities_used;
    ProbabilitySource source = ProbabilitySource::estimated;
    Event initial_info;
    // present iff the probabilities were estimated from data
    std::optional<ColumnEstimates> estimates;
};

// Chooses the max-expected-utility action.  Column probabilities come from
// `override_probs` when supplied (bypassing estimation entirely), otherwise
// from the normalized per-column estimates under `initial_info`.  Ties break
// toward the earliest action.  Throws StarvedError naming the starved
// columns when estimation cannot produce a full distribution, and DataError
// when an override is not a distribution over the columns.
DecisionReport decide(const DecisionMatrix& matrix, const Dataset& dataset,
                      const Event& initial_info, const EstimatorConfig& config,
                      std::optional<std::span<const double>> override_probs = std::nullopt);

} // namespace poolest
