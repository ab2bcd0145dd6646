#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "poolest/errors.hpp"

namespace poolest {

// A named attribute with its ordered value domain.  Value order matters: it
// fixes the byte codes observations are stored under, the order sibling
// events are enumerated in, and the column order of decision matrices.
struct Attribute {
    std::string name;
    std::vector<std::string> values;

    bool operator==(const Attribute&) const = default;
};

// Identifiers (attribute names and values) are restricted to characters that
// cannot collide with the file formats: no whitespace, '=', ',', ':' or '#',
// and the literal "?" is reserved for missing values.
bool valid_identifier(std::string_view s);

class AttributeSchema {
public:
    AttributeSchema() = default;
    explicit AttributeSchema(std::vector<Attribute> attributes);

    std::size_t size() const { return attrs_.size(); }
    std::span<const Attribute> attributes() const { return attrs_; }
    const Attribute& attribute(std::uint32_t index) const;
    std::size_t domain_size(std::uint32_t index) const;

    std::optional<std::uint32_t> find(std::string_view name) const;
    std::uint32_t require(std::string_view name) const;

    // Value codes are 1-based (1 .. domain size); 0 is reserved for
    // "unobserved" in stored data.
    std::optional<std::uint8_t> find_value(std::uint32_t attr, std::string_view value) const;
    std::uint8_t require_value(std::uint32_t attr, std::string_view value) const;
    const std::string& value_name(std::uint32_t attr, std::uint8_t code) const;

    bool operator==(const AttributeSchema& other) const { return attrs_ == other.attrs_; }

private:
    std::vector<Attribute> attrs_;
    std::unordered_map<std::string, std::uint32_t> by_name_;
    std::vector<std::unordered_map<std::string, std::uint8_t>> value_codes_;
};

// One attribute bound to one value code.
struct Binding {
    std::uint32_t attribute;
    std::uint8_t code;
    friend auto operator<=>(const Binding&, const Binding&) = default;
};

// A conjunction of equality constraints over distinct attributes, kept
// sorted by attribute index.  The empty event is trivially true.
class Event {
public:
    Event() = default;

    // Build from (attribute name, value name) pairs, validated against the
    // schema.  Duplicate attributes are rejected.
    static Event of(const AttributeSchema& schema,
                    std::span<const std::pair<std::string_view, std::string_view>> pairs);
    static Event of(const AttributeSchema& schema,
                    std::initializer_list<std::pair<std::string_view, std::string_view>> pairs);

    // Parse "attr=value,attr=value"; the empty string is the empty event.
    static Event parse(const AttributeSchema& schema, std::string_view literal);

    // Build from codes already resolved against the schema.
    static Event from_bindings(const AttributeSchema& schema, std::vector<Binding> bindings);

    std::span<const Binding> bindings() const { return bindings_; }
    std::size_t size() const { return bindings_.size(); }
    bool empty() const { return bindings_.empty(); }

    bool binds(std::uint32_t attr) const;
    std::optional<std::uint8_t> code_of(std::uint32_t attr) const;

    // Copy with one binding removed / replaced-or-added.  with() keeps the
    // sorted-by-attribute representation.
    Event without(std::uint32_t attr) const;
    Event with(std::uint32_t attr, std::uint8_t code) const;

    // Conjunction of two events over disjoint attribute sets; throws
    // std::invalid_argument if the attribute sets overlap.
    Event merged(const Event& other) const;
    bool attr_disjoint(const Event& other) const;

    // Canonical literal form, bindings in attribute order.
    std::string to_string(const AttributeSchema& schema) const;

    bool operator==(const Event& other) const = default;

private:
    std::vector<Binding> bindings_;
};

} // namespace poolest
