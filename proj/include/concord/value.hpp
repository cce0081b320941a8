// value.hpp - typed property values shared by the store, rules and engine.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace concord {

/// Artifacts are addressed by stable textual identifiers; the same artifact
/// is viewed differently per work area but never duplicated.
using ArtifactId = std::string;

enum class ValueKind : std::uint8_t { String, Integer, Real, Boolean, Link };

/// One scalar payload. Link payloads reuse the string slot (artifact id).
using Scalar = std::variant<std::string, std::int64_t, double, bool>;

/// A property value: a kind plus one item (single cardinality) or any
/// number of items (many cardinality). Cardinality is a declaration-side
/// concept; the value itself just carries its items.
struct Value {
    ValueKind kind = ValueKind::String;
    std::vector<Scalar> items;

    bool operator==(const Value&) const = default;

    static Value str(std::string s) {
        return Value{ValueKind::String, {Scalar{std::move(s)}}};
    }
    static Value integer(std::int64_t i) {
        return Value{ValueKind::Integer, {Scalar{i}}};
    }
    static Value real(double d) {
        return Value{ValueKind::Real, {Scalar{d}}};
    }
    static Value boolean(bool b) {
        return Value{ValueKind::Boolean, {Scalar{b}}};
    }
    static Value link(ArtifactId target) {
        return Value{ValueKind::Link, {Scalar{std::move(target)}}};
    }
    static Value links(std::vector<ArtifactId> targets) {
        Value v{ValueKind::Link, {}};
        v.items.reserve(targets.size());
        for (auto& t : targets) v.items.emplace_back(std::move(t));
        return v;
    }
};

inline const char* kind_name(ValueKind k) {
    switch (k) {
        case ValueKind::String: return "string";
        case ValueKind::Integer: return "integer";
        case ValueKind::Real: return "real";
        case ValueKind::Boolean: return "boolean";
        case ValueKind::Link: return "link";
    }
    return "?";
}

inline std::optional<ValueKind> kind_from_name(std::string_view name) {
    if (name == "string") return ValueKind::String;
    if (name == "integer") return ValueKind::Integer;
    if (name == "real") return ValueKind::Real;
    if (name == "boolean") return ValueKind::Boolean;
    if (name == "link") return ValueKind::Link;
    return std::nullopt;
}

}  // namespace concord
