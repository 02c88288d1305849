#ifndef MFED_RECORD_HPP
#define MFED_RECORD_HPP

#include <json.hpp>
#include <string>

#include "mfed/schema.hpp"

namespace mfed::meta {

// A metadata record: typed attribute values validated against the schema
// named by (kind, schema_version). record_id is "<origin_node>:<counter>",
// federation-unique without coordination.
struct MetadataRecord {
    std::string record_id;
    std::string kind;
    int schema_version = 1;
    std::string origin_node;
    nlohmann::json values;  // object: attr name -> typed value

    nlohmann::json to_json() const;
    static MetadataRecord from_json(const nlohmann::json& j);
};

// True when the string is an acceptable timestamp value: "YYYY-MM-DD" or
// "YYYY-MM-DDThh:mm:ssZ". Timestamps compare lexicographically.
bool is_valid_timestamp(const std::string& s);

// Single-value check against an attribute definition. Returns an empty
// string when valid, else the violation message.
std::string check_value(const AttributeDef& attr, const nlohmann::json& value);

// validate_record: type-checks every value, enforces required presence and
// closed-world attribute membership. Throws FedError(NotFound) if the schema
// is unknown, FedError(Malformed) listing every violating attribute.
void validate_record(const MetadataRecord& record, const SchemaRegistry& registry);

}  // namespace mfed::meta

#endif
