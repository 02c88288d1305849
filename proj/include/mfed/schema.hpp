#ifndef MFED_SCHEMA_HPP
#define MFED_SCHEMA_HPP

#include <json.hpp>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace mfed::meta {

enum class AttrType { String, Integer, Real, Timestamp, Enum, LfnRef };

const char* attr_type_name(AttrType t);
AttrType attr_type_from_name(const std::string& name);  // throws FedError(Malformed)

struct AttributeDef {
    std::string name;
    AttrType type = AttrType::String;
    std::vector<std::string> enum_values;  // Enum only
    bool required = false;

    bool operator==(const AttributeDef&) const = default;
};

// A record-kind schema, stored as data and interpreted at runtime.
struct SchemaDescription {
    std::string name;
    int version = 1;
    std::vector<AttributeDef> attributes;

    bool operator==(const SchemaDescription&) const = default;

    const AttributeDef* find_attribute(const std::string& attr) const;

    nlohmann::json to_json() const;
    static SchemaDescription from_json(const nlohmann::json& doc);  // validates shape
};

// Backward-compatibility rule between consecutive versions: next may only add
// optional attributes or widen enums. Throws FedError(Conflict) on violation.
void check_compatible(const SchemaDescription& prev, const SchemaDescription& next);

struct SchemaDelta {
    std::vector<AttributeDef> add_attributes;  // must all be optional
    std::map<std::string, std::vector<std::string>> widen_enums;  // attr -> appended values
};

// Returns base with version+1 after applying a compatible delta.
// Throws FedError(Conflict) if the delta breaks the compatibility rule.
SchemaDescription evolve_schema(const SchemaDescription& base, const SchemaDelta& delta);

// Node-local registry addressed by (name, version). Single writer, many
// readers; lookups return stable pointers (schemas are never mutated in
// place or removed).
class SchemaRegistry {
public:
    // load_schema: idempotent for identical content, Conflict if (name,
    // version) exists with different content or the version breaks backward
    // compatibility against a registered neighbour.
    const SchemaDescription& load(const nlohmann::json& doc);
    const SchemaDescription& load_text(const std::string& text);

    const SchemaDescription* find(const std::string& name, int version) const;
    const SchemaDescription* latest(const std::string& name) const;
    std::vector<std::string> kinds() const;

private:
    mutable std::shared_mutex mu_;
    std::map<std::pair<std::string, int>, std::unique_ptr<SchemaDescription>> schemas_;
};

// The four seed schemas (patient, study, image, annotation), shipped as
// version 1. Raw documents are exposed so they can be round-tripped.
const std::vector<std::string>& baseline_schema_documents();
void register_baseline(SchemaRegistry& reg);

}  // namespace mfed::meta

#endif
