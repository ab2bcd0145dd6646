#include "poolest/decision.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace poolest {

std::vector<Event> column_events(const AttributeSchema& schema,
                                 std::span<const std::uint32_t> attrs) {
    if (attrs.empty()) throw std::invalid_argument("column_events: empty attribute set");
    for (std::size_t i = 0; i < attrs.size(); ++i) {
        if (attrs[i] >= schema.size())
            throw std::invalid_argument("column_events: attribute index out of range");
        if (i > 0 && attrs[i] <= attrs[i - 1])
            throw std::invalid_argument("column_events: attributes must be strictly increasing");
    }

    std::size_t total = 1;
    for (std::uint32_t a : attrs) total *= schema.domain_size(a);

    std::vector<Event> out;
    out.reserve(total);
    std::vector<std::uint8_t> codes(attrs.size(), 1);
    for (std::size_t i = 0; i < total; ++i) {
        std::vector<Binding> bs;
        bs.reserve(attrs.size());
        for (std::size_t k = 0; k < attrs.size(); ++k)
            bs.push_back(Binding{attrs[k], codes[k]});
        out.push_back(Event::from_bindings(schema, std::move(bs)));
        // odometer increment, last attribute fastest
        for (std::size_t k = attrs.size(); k-- > 0;) {
            if (codes[k] < schema.domain_size(attrs[k])) {
                ++codes[k];
                break;
            }
            codes[k] = 1;
        }
    }
    return out;
}

DecisionMatrix DecisionMatrix::create(const AttributeSchema& schema,
                                      std::vector<std::string> actions,
                                      const std::vector<std::string>& column_attr_names,
                                      std::vector<std::vector<double>> utilities) {
    if (actions.empty()) throw DataError("matrix: no actions");
    for (std::size_t i = 0; i < actions.size(); ++i) {
        if (!valid_identifier(actions[i]))
            throw DataError("matrix: bad action name '" + actions[i] + "'");
        for (std::size_t j = i + 1; j < actions.size(); ++j)
            if (actions[i] == actions[j])
                throw DataError("matrix: duplicate action '" + actions[i] + "'");
    }

    std::vector<std::uint32_t> attrs;
    attrs.reserve(column_attr_names.size());
    for (const std::string& name : column_attr_names) attrs.push_back(schema.require(name));
    std::sort(attrs.begin(), attrs.end());
    if (std::adjacent_find(attrs.begin(), attrs.end()) != attrs.end())
        throw DataError("matrix: duplicate column attribute");

    DecisionMatrix m;
    m.columns = column_events(schema, attrs);
    m.column_attrs = std::move(attrs);
    if (utilities.size() != actions.size())
        throw DataError("matrix: need exactly one utility row per action");
    for (std::size_t a = 0; a < utilities.size(); ++a) {
        if (utilities[a].size() != m.columns.size())
            throw DataError("matrix: action '" + actions[a] + "' has " +
                            std::to_string(utilities[a].size()) + " utilities, expected " +
                            std::to_string(m.columns.size()));
        for (double u : utilities[a])
            if (!std::isfinite(u))
                throw DataError("matrix: non-finite utility for action '" + actions[a] + "'");
    }
    m.actions = std::move(actions);
    m.utilities = std::move(utilities);
    return m;
}

std::vector<double> expected_utilities(const DecisionMatrix& matrix,
                                       std::span<const double> probabilities) {
    if (probabilities.size() != matrix.columns.size())
        throw std::invalid_argument("expected_utilities: one probability per column required");
    double sum = 0.0;
    for (double p : probabilities) {
        if (p < 0.0) throw std::invalid_argument("expected_utilities: negative probability");
        sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("expected_utilities: probabilities must sum to 1");

    std::vector<double> eu(matrix.actions.size(), 0.0);
    for (std::size_t a = 0; a < matrix.actions.size(); ++a)
        for (std::size_t j = 0; j < probabilities.size(); ++j)
            eu[a] += probabilities[j] * matrix.utilities[a][j];
    return eu;
}

DecisionReport decide(const DecisionMatrix& matrix, const Dataset& dataset,
                      const Event& initial_info, const EstimatorConfig& config,
                      std::optional<std::span<const double>> override_probs) {
    for (std::uint32_t a : matrix.column_attrs)
        if (initial_info.binds(a))
            throw std::invalid_argument(
                "decide: initial information binds a column attribute");

    DecisionReport report;
    report.initial_info = initial_info;
    if (override_probs) {
        if (override_probs->size() != matrix.columns.size())
            throw DataError("override distribution needs one probability per column (" +
                            std::to_string(matrix.columns.size()) + ")");
        double sum = 0.0;
        for (double p : *override_probs) {
            if (!(p >= 0.0))
                throw DataError("override distribution has a negative or non-numeric entry");
            sum += p;
        }
        if (std::fabs(sum - 1.0) > 1e-9)
            throw DataError("override distribution sums to " + std::to_string(sum) +
                            ", expected 1");
        report.probabilities_used.assign(override_probs->begin(), override_probs->end());
        report.source = ProbabilitySource::supplied;
    } else {
        ColumnEstimates est =
            estimate_all_columns(dataset, matrix.columns, initial_info, config);
        if (est.normalization_flagged) {
            std::string starved;
            for (std::size_t j = 0; j < matrix.columns.size(); ++j) {
                if (est.raw[j] && est.raw_sum > 0.0) continue;
                if (!starved.empty()) starved += ", ";
                starved += matrix.columns[j].to_string(dataset.schema());
            }
            throw StarvedError("no usable estimate for column(s): " + starved);
        }
        report.probabilities_used.reserve(matrix.columns.size());
        for (const auto& p : est.normalized) report.probabilities_used.push_back(*p);
        report.source = ProbabilitySource::estimated;
        report.estimates = std::move(est);
    }

    report.expected_utilities = expected_utilities(matrix, report.probabilities_used);
    std::size_t best = 0;
    for (std::size_t a = 1; a < report.expected_utilities.size(); ++a)
        if (report.expected_utilities[a] > report.expected_utilities[best]) best = a;
    report.chosen_index = best;
    report.chosen = matrix.actions[best];
    return report;
}

} // namespace poolest
