#include "poolest/dataset.hpp"

#include <stdexcept>

#include "poolest/match_kernels.hpp"

namespace poolest {

Dataset::Dataset(AttributeSchema schema, std::span<const Observation> observations)
    : schema_(std::move(schema)), rows_(observations.size()) {
    columns_.assign(schema_.size(), std::vector<std::uint8_t>(rows_, 0));
    bool tagged = false;
    for (const Observation& o : observations)
        if (!o.episode.empty()) { tagged = true; break; }
    if (tagged) episodes_.resize(rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (const Binding& b : observations[r].values.bindings()) {
            if (b.attribute >= schema_.size() || b.code == 0 ||
                b.code > schema_.domain_size(b.attribute))
                throw std::out_of_range("observation binding outside schema");
            columns_[b.attribute][r] = b.code;
        }
        if (tagged) episodes_[r] = observations[r].episode;
    }
}

Dataset Dataset::from_columns(AttributeSchema schema,
                              std::vector<std::vector<std::uint8_t>> columns,
                              std::vector<std::string> episodes) {
    Dataset d;
    d.schema_ = std::move(schema);
    if (columns.size() != d.schema_.size())
        throw std::invalid_argument("from_columns: one column per attribute required");
    d.rows_ = columns.empty() ? 0 : columns[0].size();
    for (std::uint32_t a = 0; a < columns.size(); ++a) {
        if (columns[a].size() != d.rows_)
            throw std::invalid_argument("from_columns: ragged columns");
        const auto limit = static_cast<std::uint8_t>(d.schema_.domain_size(a));
        for (std::uint8_t code : columns[a])
            if (code > limit)
                throw std::out_of_range("from_columns: value code outside schema");
    }
    if (!episodes.empty() && episodes.size() != d.rows_)
        throw std::invalid_argument("from_columns: episode tag count mismatch");
    d.columns_ = std::move(columns);
    d.episodes_ = std::move(episodes);
    return d;
}

std::span<const std::uint8_t> Dataset::column(std::uint32_t attr) const {
    if (attr >= columns_.size()) throw std::out_of_range("attribute index out of range");
    return columns_[attr];
}

const std::string& Dataset::episode(std::size_t row) const {
    static const std::string empty;
    if (row >= rows_) throw std::out_of_range("row out of range");
    return episodes_.empty() ? empty : episodes_[row];
}

Observation Dataset::observation(std::size_t row) const {
    if (row >= rows_) throw std::out_of_range("row out of range");
    std::vector<Binding> bs;
    for (std::uint32_t a = 0; a < columns_.size(); ++a)
        if (columns_[a][row] != 0) bs.push_back(Binding{a, columns_[a][row]});
    return Observation{Event::from_bindings(schema_, std::move(bs)), episode(row)};
}

namespace {

std::vector<kernels::EqPred> event_preds(const Dataset& d, const Event& e) {
    std::vector<kernels::EqPred> preds;
    preds.reserve(e.size());
    for (const Binding& b : e.bindings())
        preds.push_back(kernels::EqPred{d.column(b.attribute).data(), b.code});
    return preds;
}

} // namespace

std::uint64_t Dataset::count_matching(const Event& pattern) const {
    const auto preds = event_preds(*this, pattern);
    return kernels::scan_pair(preds, {}, {}, rows_).matched;
}

std::uint64_t Dataset::count_matching_bound(const Event& pattern,
                                            std::span<const std::uint32_t> must_bind) const {
    const auto preds = event_preds(*this, pattern);
    std::vector<const std::uint8_t*> binds;
    binds.reserve(must_bind.size());
    for (std::uint32_t a : must_bind) {
        if (pattern.binds(a)) continue; // an equality match already implies bound
        binds.push_back(column(a).data());
    }
    return kernels::scan_pair(preds, binds, {}, rows_).matched;
}

JointProportion Dataset::joint_proportion(const Event& target, const Event& condition) const {
    if (!target.attr_disjoint(condition))
        throw std::invalid_argument(
            "joint_proportion: target and condition must bind disjoint attributes");
    const auto cond_preds = event_preds(*this, condition);
    const auto target_preds = event_preds(*this, target);
    // A row enters the denominator only if it binds every attribute the
    // target mentions; condition attributes are bound by their equality
    // predicates already.
    std::vector<const std::uint8_t*> binds;
    binds.reserve(target.size());
    for (const Binding& b : target.bindings()) binds.push_back(column(b.attribute).data());
    const kernels::PairCounts c = kernels::scan_pair(cond_preds, binds, target_preds, rows_);
    JointProportion jp{c.matched, c.successes, std::nullopt};
    if (jp.n > 0)
        jp.proportion = static_cast<double>(jp.successes) / static_cast<double>(jp.n);
    return jp;
}

std::vector<Event> siblings(const AttributeSchema& schema, const Event& condition,
                            std::uint32_t attr) {
    const auto bound = condition.code_of(attr);
    if (!bound)
        throw std::invalid_argument("siblings: condition does not bind attribute '" +
                                    schema.attribute(attr).name + "'");
    std::vector<Event> out;
    out.reserve(schema.domain_size(attr));
    out.push_back(condition);
    for (unsigned code = 1; code <= schema.domain_size(attr); ++code)
        if (code != *bound)
            out.push_back(condition.with(attr, static_cast<std::uint8_t>(code)));
    return out;
}

} // namespace poolest
