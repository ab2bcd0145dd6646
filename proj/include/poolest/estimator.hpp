#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "poolest/dataset.hpp"
#include "poolest/stats.hpp"

namespace poolest {

// When the expected-count rule invalidates a test: keep conditioning on the
// attribute (conservative default), or pool anyway for data-starved regimes.
enum class OnInvalid { keep_attribute, pool_anyway };

// Grouping of one attribute's values into named classes.  Values inside a
// class are asserted homogeneous by the user and merged without testing;
// the independence test then runs across classes instead of across values.
struct ClassPartition {
    std::vector<std::string> class_names;
    std::vector<std::uint8_t> class_of_code; // index per value code - 1
};

// Declares that `attribute` is known to be irrelevant to targets binding
// exactly `target_attrs`; matching tests are skipped and the attribute is
// eliminated outright.
struct KnownIrrelevanceRule {
    std::uint32_t attribute;
    std::vector<std::uint32_t> target_attrs; // sorted
};

struct EstimatorConfig {
    stats::AlphaPolicy alpha_policy = stats::AlphaPolicy::fixed(0.05);
    double validity_threshold = 5.0;
    OnInvalid on_invalid = OnInvalid::keep_attribute;
    std::vector<KnownIrrelevanceRule> known_irrelevant;
    std::map<std::uint32_t, ClassPartition> class_partitions;
};

// Checks that the partition names are valid and that every value code maps
// to exactly one class, with no empty class.  Throws DataError otherwise.
void validate_partition(const AttributeSchema& schema, std::uint32_t attribute,
                        const ClassPartition& partition);

enum class StepAction { eliminated, retained };

// One attribute test inside an estimate: the cells that were compared, the
// verdict, and what happened to the attribute.
struct EliminationStep {
    std::uint32_t attribute = 0;
    unsigned pass = 1;
    bool skipped_known_irrelevant = false;
    std::optional<stats::TestOutcome> outcome; // absent iff skipped
    std::vector<stats::CellSummary> cells;     // per sibling value, or per class
    std::vector<std::string> cell_labels;
    StepAction action = StepAction::retained;
};

struct EstimateResult {
    std::optional<double> probability; // absent when effective_n == 0
    Event effective_condition;
    std::uint64_t effective_n = 0;
    std::uint64_t successes = 0;
    std::vector<EliminationStep> trace;
    unsigned passes = 0;
};

// Tests whether `attribute`'s binding in `condition` matters for `target`:
// builds one cell per sibling event (the condition's value first, then the
// other domain values in order), merges cells within classes when a
// partition applies, and runs the independence test at the significance
// level the policy yields for the combined sample size.  Throws StarvedError
// when every sibling cell is empty.
EliminationStep test_attribute(const Dataset& dataset, const Event& target,
                               const Event& condition, std::uint32_t attribute,
                               const EstimatorConfig& config);

// Estimates Pr(target | condition) by repeatedly sweeping the bound
// attributes and unbinding those whose test pools, until a full sweep
// eliminates nothing, then taking the direct proportion under whatever
// condition survives.  An eliminated attribute stays eliminated.  The trace
// records every test in execution order.
EstimateResult estimate(const Dataset& dataset, const Event& target, const Event& condition,
                        const EstimatorConfig& config);

// As estimate(), but sweeping attributes in the given preference order
// (indices into the schema; condition attributes not listed are appended in
// schema order).  estimate() is this with the schema order.
EstimateResult estimate_with_order(const Dataset& dataset, const Event& target,
                                   const Event& condition, const EstimatorConfig& config,
                                   std::span<const std::uint32_t> sweep_order);

// Independent estimates for a family of mutually exclusive column events
// (all binding the same attribute set).  Raw values need not sum to 1 since
// each column may pool differently; the normalized copy rescales the defined
// entries to sum to 1 and is what downstream decision-making consumes.
struct ColumnEstimates {
    std::vector<EstimateResult> results;
    std::vector<std::optional<double>> raw;
    std::vector<std::optional<double>> normalized;
    double raw_sum = 0.0;  // over defined entries
    bool all_defined = false;
    // true when some column was undefined or the defined entries sum to 0,
    // i.e. `normalized` is not a full distribution
    bool normalization_flagged = false;
};

ColumnEstimates estimate_all_columns(const Dataset& dataset, std::span<const Event> columns,
                                     const Event& condition, const EstimatorConfig& config);

namespace detail {

// Non-throwing core of test_attribute: degenerate cell layouts (fewer than
// two nonempty cells, or all cells empty) come back as an INVALID outcome
// for the caller's on_invalid policy to resolve instead of an exception.
EliminationStep run_attribute_test(const Dataset& dataset, const Event& target,
                                   const Event& condition, std::uint32_t attribute,
                                   const EstimatorConfig& config);

} // namespace detail

} // namespace poolest
