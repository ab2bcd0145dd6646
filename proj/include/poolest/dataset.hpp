#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "poolest/schema.hpp"

namespace poolest {

// One recorded episode: the attribute values that were observed (an Event —
// attributes absent from it were not recorded) plus an optional tag carried
// through from the source file for diagnostics.
struct Observation {
    Event values;
    std::string episode;
};

// Counts for a target event within the rows matching a condition.
// `proportion` is successes / n, absent when n == 0.
struct JointProportion {
    std::uint64_t n = 0;
    std::uint64_t successes = 0;
    std::optional<double> proportion;
};

// Immutable column-major store: one byte per (attribute, observation) holding
// the 1-based value code, 0 where the attribute was unobserved.
class Dataset {
public:
    Dataset(AttributeSchema schema, std::span<const Observation> observations);

    // Adopt pre-encoded columns (all sized `rows`); used by the simulator.
    static Dataset from_columns(AttributeSchema schema,
                                std::vector<std::vector<std::uint8_t>> columns,
                                std::vector<std::string> episodes = {});

    const AttributeSchema& schema() const { return schema_; }
    std::size_t size() const { return rows_; }
    std::span<const std::uint8_t> column(std::uint32_t attr) const;
    const std::string& episode(std::size_t row) const;
    Observation observation(std::size_t row) const;

    // Rows whose observed values satisfy every binding of `pattern`.
    std::uint64_t count_matching(const Event& pattern) const;

    // As above, additionally requiring the row to bind every attribute in
    // `must_bind`.  This is the missing-data rule: a row only counts toward a
    // cell when it binds everything the cell's event mentions.
    std::uint64_t count_matching_bound(const Event& pattern,
                                       std::span<const std::uint32_t> must_bind) const;

    // Relative frequency of `target` among rows matching `condition`,
    // counting only rows that bind every attribute of both events.  The two
    // events must bind disjoint attribute sets.
    JointProportion joint_proportion(const Event& target, const Event& condition) const;

private:
    Dataset() = default;

    AttributeSchema schema_;
    std::size_t rows_ = 0;
    std::vector<std::vector<std::uint8_t>> columns_; // [attribute][row]
    std::vector<std::string> episodes_;              // empty when untagged
};

// The ways `condition` could have been with respect to one of its bound
// attributes: the condition itself first, then the variants with that
// attribute rebound to each other value in domain order.
std::vector<Event> siblings(const AttributeSchema& schema, const Event& condition,
                            std::uint32_t attr);

} // namespace poolest
