#include "poolest/schema.hpp"

#include <algorithm>
#include <sstream>

namespace poolest {

bool valid_identifier(std::string_view s) {
    if (s.empty() || s == "?") return false;
    for (char c : s) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '_' || c == '.' ||
                        c == '-' || c == '+';
        if (!ok) return false;
    }
    return true;
}

AttributeSchema::AttributeSchema(std::vector<Attribute> attributes)
    : attrs_(std::move(attributes)) {
    if (attrs_.empty()) throw DataError("schema: no attributes");
    value_codes_.resize(attrs_.size());
    for (std::uint32_t i = 0; i < attrs_.size(); ++i) {
        const Attribute& a = attrs_[i];
        if (!valid_identifier(a.name))
            throw DataError("schema: bad attribute name '" + a.name + "'");
        if (!by_name_.emplace(a.name, i).second)
            throw DataError("schema: duplicate attribute '" + a.name + "'");
        if (a.values.size() < 2)
            throw DataError("schema: attribute '" + a.name + "' needs at least two values");
        if (a.values.size() > 255)
            throw DataError("schema: attribute '" + a.name + "' has more than 255 values");
        for (std::size_t v = 0; v < a.values.size(); ++v) {
            if (!valid_identifier(a.values[v]))
                throw DataError("schema: bad value '" + a.values[v] + "' for attribute '" +
                                a.name + "'");
            const auto code = static_cast<std::uint8_t>(v + 1);
            if (!value_codes_[i].emplace(a.values[v], code).second)
                throw DataError("schema: duplicate value '" + a.values[v] +
                                "' for attribute '" + a.name + "'");
        }
    }
}

const Attribute& AttributeSchema::attribute(std::uint32_t index) const {
    if (index >= attrs_.size()) throw std::out_of_range("attribute index out of range");
    return attrs_[index];
}

std::size_t AttributeSchema::domain_size(std::uint32_t index) const {
    return attribute(index).values.size();
}

std::optional<std::uint32_t> AttributeSchema::find(std::string_view name) const {
    auto it = by_name_.find(std::string(name));
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
}

std::uint32_t AttributeSchema::require(std::string_view name) const {
    auto idx = find(name);
    if (!idx) throw DataError("unknown attribute '" + std::string(name) + "'");
    return *idx;
}

std::optional<std::uint8_t> AttributeSchema::find_value(std::uint32_t attr,
                                                        std::string_view value) const {
    if (attr >= attrs_.size()) throw std::out_of_range("attribute index out of range");
    auto it = value_codes_[attr].find(std::string(value));
    if (it == value_codes_[attr].end()) return std::nullopt;
    return it->second;
}

std::uint8_t AttributeSchema::require_value(std::uint32_t attr, std::string_view value) const {
    auto code = find_value(attr, value);
    if (!code)
        throw DataError("unknown value '" + std::string(value) + "' for attribute '" +
                        attribute(attr).name + "'");
    return *code;
}

const std::string& AttributeSchema::value_name(std::uint32_t attr, std::uint8_t code) const {
    const Attribute& a = attribute(attr);
    if (code == 0 || code > a.values.size())
        throw std::out_of_range("value code out of range for attribute '" + a.name + "'");
    return a.values[code - 1];
}

Event Event::of(const AttributeSchema& schema,
                std::span<const std::pair<std::string_view, std::string_view>> pairs) {
    std::vector<Binding> bs;
    bs.reserve(pairs.size());
    for (const auto& [name, value] : pairs) {
        const std::uint32_t attr = schema.require(name);
        bs.push_back(Binding{attr, schema.require_value(attr, value)});
    }
    return from_bindings(schema, std::move(bs));
}

Event Event::of(const AttributeSchema& schema,
                std::initializer_list<std::pair<std::string_view, std::string_view>> pairs) {
    return of(schema, std::span(pairs.begin(), pairs.size()));
}

Event Event::parse(const AttributeSchema& schema, std::string_view literal) {
    std::vector<Binding> bs;
    std::size_t pos = 0;
    while (pos < literal.size()) {
        std::size_t comma = literal.find(',', pos);
        if (comma == std::string_view::npos) comma = literal.size();
        std::string_view term = literal.substr(pos, comma - pos);
        const std::size_t eq = term.find('=');
        if (eq == std::string_view::npos || eq == 0 || eq + 1 >= term.size())
            throw DataError("bad event term '" + std::string(term) +
                            "' (expected attr=value)");
        const std::uint32_t attr = schema.require(term.substr(0, eq));
        bs.push_back(Binding{attr, schema.require_value(attr, term.substr(eq + 1))});
        pos = comma + 1;
    }
    if (!literal.empty() && literal.back() == ',')
        throw DataError("bad event literal '" + std::string(literal) + "' (trailing comma)");
    return from_bindings(schema, std::move(bs));
}

Event Event::from_bindings(const AttributeSchema& schema, std::vector<Binding> bindings) {
    for (const Binding& b : bindings) {
        if (b.attribute >= schema.size())
            throw std::out_of_range("binding attribute index out of range");
        if (b.code == 0 || b.code > schema.domain_size(b.attribute))
            throw std::out_of_range("binding value code out of range");
    }
    std::sort(bindings.begin(), bindings.end(),
              [](const Binding& a, const Binding& b) { return a.attribute < b.attribute; });
    for (std::size_t i = 1; i < bindings.size(); ++i)
        if (bindings[i].attribute == bindings[i - 1].attribute)
            throw DataError("event binds attribute '" +
                            schema.attribute(bindings[i].attribute).name + "' twice");
    Event e;
    e.bindings_ = std::move(bindings);
    return e;
}

bool Event::binds(std::uint32_t attr) const { return code_of(attr).has_value(); }

std::optional<std::uint8_t> Event::code_of(std::uint32_t attr) const {
    for (const Binding& b : bindings_) {
        if (b.attribute == attr) return b.code;
        if (b.attribute > attr) break;
    }
    return std::nullopt;
}

Event Event::without(std::uint32_t attr) const {
    Event e;
    e.bindings_.reserve(bindings_.size());
    for (const Binding& b : bindings_)
        if (b.attribute != attr) e.bindings_.push_back(b);
    return e;
}

Event Event::with(std::uint32_t attr, std::uint8_t code) const {
    Event e = without(attr);
    auto it = std::lower_bound(e.bindings_.begin(), e.bindings_.end(), attr,
                               [](const Binding& b, std::uint32_t a) { return b.attribute < a; });
    e.bindings_.insert(it, Binding{attr, code});
    return e;
}

Event Event::merged(const Event& other) const {
    if (!attr_disjoint(other))
        throw std::invalid_argument("merged events must bind disjoint attributes");
    Event e;
    e.bindings_.resize(bindings_.size() + other.bindings_.size());
    std::merge(bindings_.begin(), bindings_.end(), other.bindings_.begin(),
               other.bindings_.end(), e.bindings_.begin(),
               [](const Binding& a, const Binding& b) { return a.attribute < b.attribute; });
    return e;
}

bool Event::attr_disjoint(const Event& other) const {
    auto a = bindings_.begin();
    auto b = other.bindings_.begin();
    while (a != bindings_.end() && b != other.bindings_.end()) {
        if (a->attribute == b->attribute) return false;
        if (a->attribute < b->attribute)
            ++a;
        else
            ++b;
    }
    return true;
}

std::string Event::to_string(const AttributeSchema& schema) const {
    std::ostringstream out;
    for (std::size_t i = 0; i < bindings_.size(); ++i) {
        if (i) out << ',';
        out << schema.attribute(bindings_[i].attribute).name << '='
            << schema.value_name(bindings_[i].attribute, bindings_[i].code);
    }
    return out.str();
}

} // namespace poolest
