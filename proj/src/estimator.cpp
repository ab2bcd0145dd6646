#include "poolest/estimator.hpp"

#include <algorithm>
#include <stdexcept>

namespace poolest {

void validate_partition(const AttributeSchema& schema, std::uint32_t attribute,
                        const ClassPartition& partition) {
    const std::size_t domain = schema.domain_size(attribute);
    const std::string& attr_name = schema.attribute(attribute).name;
    if (partition.class_names.empty())
        throw DataError("partition of '" + attr_name + "' has no classes");
    for (const std::string& name : partition.class_names)
        if (!valid_identifier(name))
            throw DataError("partition of '" + attr_name + "' has a bad class name '" + name +
                            "'");
    for (std::size_t i = 0; i < partition.class_names.size(); ++i)
        for (std::size_t j = i + 1; j < partition.class_names.size(); ++j)
            if (partition.class_names[i] == partition.class_names[j])
                throw DataError("partition of '" + attr_name + "' repeats class '" +
                                partition.class_names[i] + "'");
    if (partition.class_of_code.size() != domain)
        throw DataError("partition of '" + attr_name + "' must assign every value a class");
    std::vector<bool> used(partition.class_names.size(), false);
    for (std::uint8_t cls : partition.class_of_code) {
        if (cls >= partition.class_names.size())
            throw DataError("partition of '" + attr_name + "' references a missing class");
        used[cls] = true;
    }
    for (std::size_t c = 0; c < used.size(); ++c)
        if (!used[c])
            throw DataError("partition of '" + attr_name + "' leaves class '" +
                            partition.class_names[c] + "' empty");
}

namespace {

bool known_irrelevant_applies(const EstimatorConfig& config, std::uint32_t attribute,
                              const Event& target) {
    std::vector<std::uint32_t> target_attrs;
    target_attrs.reserve(target.size());
    for (const Binding& b : target.bindings()) target_attrs.push_back(b.attribute);
    for (const KnownIrrelevanceRule& rule : config.known_irrelevant)
        if (rule.attribute == attribute && rule.target_attrs == target_attrs) return true;
    return false;
}

} // namespace

namespace detail {

EliminationStep run_attribute_test(const Dataset& dataset, const Event& target,
                                   const Event& condition, std::uint32_t attribute,
                                   const EstimatorConfig& config) {
    EliminationStep step;
    step.attribute = attribute;

    if (known_irrelevant_applies(config, attribute, target)) {
        step.skipped_known_irrelevant = true;
        step.action = StepAction::eliminated;
        return step;
    }

    const AttributeSchema& schema = dataset.schema();
    const std::vector<Event> sibs = siblings(schema, condition, attribute);

    // One cell per sibling: the condition's own value first, then the rest
    // of the domain in order.
    std::vector<stats::CellSummary> cells;
    std::vector<std::string> labels;
    cells.reserve(sibs.size());
    labels.reserve(sibs.size());
    for (const Event& sib : sibs) {
        const JointProportion jp = dataset.joint_proportion(target, sib);
        cells.emplace_back(jp.n, jp.successes);
        labels.push_back(schema.value_name(attribute, *sib.code_of(attribute)));
    }

    if (auto it = config.class_partitions.find(attribute); it != config.class_partitions.end()) {
        // Merge within classes (the user vouches for within-class
        // homogeneity); the test then compares the classes.
        const ClassPartition& part = it->second;
        validate_partition(schema, attribute, part);
        std::vector<stats::CellSummary> merged(part.class_names.size());
        for (std::size_t i = 0; i < sibs.size(); ++i) {
            const std::uint8_t code = *sibs[i].code_of(attribute);
            const std::uint8_t cls = part.class_of_code[code - 1];
            merged[cls].n += cells[i].n;
            merged[cls].successes += cells[i].successes;
        }
        cells = std::move(merged);
        labels = part.class_names;
    }

    step.cells = cells;
    step.cell_labels = std::move(labels);

    std::size_t nonempty = 0;
    std::uint64_t total_n = 0;
    for (const stats::CellSummary& c : cells) {
        if (c.n > 0) ++nonempty;
        total_n += c.n;
    }

    if (nonempty >= 2) {
        step.outcome =
            stats::independence_test(cells, config.alpha_policy, config.validity_threshold);
    } else {
        // Nothing to compare against (at most one value of the attribute was
        // ever observed with the rest of the condition): the test cannot
        // run, so report INVALID and leave the resolution to on_invalid.
        stats::TestOutcome o;
        o.decision = stats::Decision::invalid;
        o.dof = 0;
        o.alpha_used = total_n > 0 ? stats::alpha_for(config.alpha_policy, total_n) : 0.0;
        o.cell_ok.assign(cells.size(), true);
        step.outcome = o;
    }

    switch (step.outcome->decision) {
        case stats::Decision::pool:
            step.action = StepAction::eliminated;
            break;
        case stats::Decision::no_pool:
            step.action = StepAction::retained;
            break;
        case stats::Decision::invalid:
            step.action = config.on_invalid == OnInvalid::pool_anyway ? StepAction::eliminated
                                                                      : StepAction::retained;
            break;
    }
    return step;
}

} // namespace detail

EliminationStep test_attribute(const Dataset& dataset, const Event& target,
                               const Event& condition, std::uint32_t attribute,
                               const EstimatorConfig& config) {
    if (!condition.binds(attribute))
        throw std::invalid_argument("test_attribute: attribute not bound in condition");
    if (!target.attr_disjoint(condition))
        throw std::invalid_argument("test_attribute: target and condition overlap");
    if (target.empty()) throw std::invalid_argument("test_attribute: empty target");

    EliminationStep step = detail::run_attribute_test(dataset, target, condition, attribute, config);
    if (!step.skipped_known_irrelevant) {
        std::uint64_t total_n = 0;
        for (const stats::CellSummary& c : step.cells) total_n += c.n;
        if (total_n == 0)
            throw StarvedError("no observations cover attribute '" +
                               dataset.schema().attribute(attribute).name +
                               "' under condition '" + condition.to_string(dataset.schema()) +
                               "'");
    }
    return step;
}

EstimateResult estimate_with_order(const Dataset& dataset, const Event& target,
                                   const Event& condition, const EstimatorConfig& config,
                                   std::span<const std::uint32_t> sweep_order) {
    if (!target.attr_disjoint(condition))
        throw std::invalid_argument("estimate: target and condition overlap");
    if (target.empty()) throw std::invalid_argument("estimate: empty target");

    // Preference order: caller's list first (deduplicated), then any
    // remaining condition attributes in schema order.
    std::vector<std::uint32_t> order;
    for (std::uint32_t a : sweep_order)
        if (condition.binds(a) && std::find(order.begin(), order.end(), a) == order.end())
            order.push_back(a);
    for (const Binding& b : condition.bindings())
        if (std::find(order.begin(), order.end(), b.attribute) == order.end())
            order.push_back(b.attribute);

    EstimateResult result;
    Event current = condition;
    unsigned pass = 0;
    bool changed = true;
    while (changed && !current.empty()) {
        changed = false;
        ++pass;
        for (std::uint32_t attr : order) {
            if (!current.binds(attr)) continue;
            EliminationStep step =
                detail::run_attribute_test(dataset, target, current, attr, config);
            step.pass = pass;
            const bool eliminated = step.action == StepAction::eliminated;
            result.trace.push_back(std::move(step));
            if (eliminated) {
                current = current.without(attr); // Pr(E|I) = Pr(E|I - A)
                changed = true;
            }
        }
    }
    result.passes = pass;

    const JointProportion jp = dataset.joint_proportion(target, current);
    result.effective_condition = std::move(current);
    result.effective_n = jp.n;
    result.successes = jp.successes;
    result.probability = jp.proportion;
    return result;
}

EstimateResult estimate(const Dataset& dataset, const Event& target, const Event& condition,
                        const EstimatorConfig& config) {
    std::vector<std::uint32_t> schema_order(dataset.schema().size());
    for (std::uint32_t i = 0; i < schema_order.size(); ++i) schema_order[i] = i;
    return estimate_with_order(dataset, target, condition, config, schema_order);
}

ColumnEstimates estimate_all_columns(const Dataset& dataset, std::span<const Event> columns,
                                     const Event& condition, const EstimatorConfig& config) {
    if (columns.empty()) throw std::invalid_argument("estimate_all_columns: no columns");
    std::vector<std::uint32_t> attrs;
    for (const Binding& b : columns.front().bindings()) attrs.push_back(b.attribute);
    for (const Event& col : columns) {
        std::vector<std::uint32_t> a;
        for (const Binding& b : col.bindings()) a.push_back(b.attribute);
        if (a != attrs)
            throw std::invalid_argument(
                "estimate_all_columns: columns must bind one common attribute set");
    }

    ColumnEstimates out;
    out.results.reserve(columns.size());
    out.raw.reserve(columns.size());
    out.all_defined = true;
    for (const Event& col : columns) {
        out.results.push_back(estimate(dataset, col, condition, config));
        const auto& p = out.results.back().probability;
        out.raw.push_back(p);
        if (p)
            out.raw_sum += *p;
        else
            out.all_defined = false;
    }

    out.normalized.assign(columns.size(), std::nullopt);
    if (out.raw_sum > 0.0) {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (out.raw[i]) out.normalized[i] = *out.raw[i] / out.raw_sum;
    }
    out.normalization_flagged = !out.all_defined || out.raw_sum <= 0.0;
    return out;
}

} // namespace poolest
