#include "mfed/record.hpp"

#include <algorithm>

#include "mfed/errors.hpp"
#include "mfed/lfn.hpp"

using nlohmann::json;

namespace mfed::meta {

json MetadataRecord::to_json() const {
    return json{{"record_id", record_id},
                {"kind", kind},
                {"schema_version", schema_version},
                {"origin_node", origin_node},
                {"values", values}};
}

MetadataRecord MetadataRecord::from_json(const json& j) {
    MetadataRecord r;
    try {
        r.record_id = j.at("record_id").get<std::string>();
        r.kind = j.at("kind").get<std::string>();
        r.schema_version = j.at("schema_version").get<int>();
        r.origin_node = j.at("origin_node").get<std::string>();
        r.values = j.at("values");
    } catch (const json::exception& e) {
        throw err_malformed(std::string("record: ") + e.what());
    }
    if (!r.values.is_object()) throw err_malformed("record values must be an object");
    return r;
}

bool is_valid_timestamp(const std::string& s) {
    auto digits = [&](std::size_t from, std::size_t n) {
        for (std::size_t i = from; i < from + n; ++i)
            if (i >= s.size() || s[i] < '0' || s[i] > '9') return false;
        return true;
    };
    auto date_ok = [&] {
        if (!digits(0, 4) || s[4] != '-' || !digits(5, 2) || s[7] != '-' || !digits(8, 2))
            return false;
        int month = (s[5] - '0') * 10 + (s[6] - '0');
        int day = (s[8] - '0') * 10 + (s[9] - '0');
        return month >= 1 && month <= 12 && day >= 1 && day <= 31;
    };
    if (s.size() == 10) return date_ok();
    if (s.size() == 20) {
        if (!date_ok() || s[10] != 'T' || s.back() != 'Z') return false;
        if (!digits(11, 2) || s[13] != ':' || !digits(14, 2) || s[16] != ':' || !digits(17, 2))
            return false;
        int hh = (s[11] - '0') * 10 + (s[12] - '0');
        int mm = (s[14] - '0') * 10 + (s[15] - '0');
        int ss = (s[17] - '0') * 10 + (s[18] - '0');
        return hh < 24 && mm < 60 && ss < 60;
    }
    return false;
}

std::string check_value(const AttributeDef& attr, const json& value) {
    switch (attr.type) {
        case AttrType::String:
            if (!value.is_string()) return attr.name + ": expected string";
            return {};
        case AttrType::Integer:
            if (!value.is_number_integer() && !value.is_number_unsigned())
                return attr.name + ": expected integer";
            return {};
        case AttrType::Real:
            if (!value.is_number()) return attr.name + ": expected real";
            return {};
        case AttrType::Timestamp:
            if (!value.is_string() || !is_valid_timestamp(value.get<std::string>()))
                return attr.name + ": expected timestamp (YYYY-MM-DD[Thh:mm:ssZ])";
            return {};
        case AttrType::Enum: {
            if (!value.is_string()) return attr.name + ": expected enum value";
            const auto& v = value.get_ref<const std::string&>();
            if (std::find(attr.enum_values.begin(), attr.enum_values.end(), v) ==
                attr.enum_values.end())
                return attr.name + ": value '" + v + "' not in enum";
            return {};
        }
        case AttrType::LfnRef:
            if (!value.is_string() || !is_valid_lfn(value.get<std::string>()))
                return attr.name + ": expected logical file name";
            return {};
    }
    return attr.name + ": unknown type";
}

void validate_record(const MetadataRecord& record, const SchemaRegistry& registry) {
    const SchemaDescription* schema = registry.find(record.kind, record.schema_version);
    if (!schema)
        throw err_not_found("no schema registered for " + record.kind + " v" +
                            std::to_string(record.schema_version));
    std::vector<std::string> violations;
    for (const auto& attr : schema->attributes) {
        auto it = record.values.find(attr.name);
        if (it == record.values.end()) {
            if (attr.required) violations.push_back(attr.name + ": required attribute missing");
            continue;
        }
        std::string msg = check_value(attr, *it);
        if (!msg.empty()) violations.push_back(std::move(msg));
    }
    for (auto it = record.values.begin(); it != record.values.end(); ++it) {
        if (!schema->find_attribute(it.key()))
            violations.push_back(it.key() + ": not in schema " + record.kind + " v" +
                                 std::to_string(record.schema_version));
    }
    if (record.record_id.empty()) violations.push_back("record_id: must be nonempty");
    if (!violations.empty()) {
        std::string detail = "record " + record.record_id + " invalid:";
        for (const auto& v : violations) detail += " [" + v + "]";
        throw err_malformed(detail);
    }
}

}  // namespace mfed::meta
