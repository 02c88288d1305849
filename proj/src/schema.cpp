#include "mfed/schema.hpp"

#include <algorithm>
#include <mutex>

#include "mfed/errors.hpp"

using nlohmann::json;

namespace mfed::meta {

const char* attr_type_name(AttrType t) {
    switch (t) {
        case AttrType::String: return "string";
        case AttrType::Integer: return "integer";
        case AttrType::Real: return "real";
        case AttrType::Timestamp: return "timestamp";
        case AttrType::Enum: return "enum";
        case AttrType::LfnRef: return "lfn-ref";
    }
    return "?";
}

AttrType attr_type_from_name(const std::string& name) {
    if (name == "string") return AttrType::String;
    if (name == "integer") return AttrType::Integer;
    if (name == "real") return AttrType::Real;
    if (name == "timestamp") return AttrType::Timestamp;
    if (name == "enum") return AttrType::Enum;
    if (name == "lfn-ref") return AttrType::LfnRef;
    throw err_malformed("unknown attribute type: " + name);
}

const AttributeDef* SchemaDescription::find_attribute(const std::string& attr) const {
    for (const auto& a : attributes)
        if (a.name == attr) return &a;
    return nullptr;
}

json SchemaDescription::to_json() const {
    json attrs = json::array();
    for (const auto& a : attributes) {
        json ja{{"name", a.name}, {"type", attr_type_name(a.type)}, {"required", a.required}};
        if (a.type == AttrType::Enum) ja["values"] = a.enum_values;
        attrs.push_back(std::move(ja));
    }
    return json{{"name", name}, {"version", version}, {"attributes", attrs}};
}

SchemaDescription SchemaDescription::from_json(const json& doc) {
    if (!doc.is_object()) throw err_malformed("schema document must be an object");
    SchemaDescription s;
    try {
        s.name = doc.at("name").get<std::string>();
        s.version = doc.at("version").get<int>();
        for (const auto& ja : doc.at("attributes")) {
            AttributeDef a;
            a.name = ja.at("name").get<std::string>();
            a.type = attr_type_from_name(ja.at("type").get<std::string>());
            a.required = ja.value("required", false);
            if (a.type == AttrType::Enum) {
                a.enum_values = ja.at("values").get<std::vector<std::string>>();
                if (a.enum_values.empty()) throw err_malformed("enum attribute needs values");
            } else if (ja.contains("values")) {
                throw err_malformed("values only allowed on enum attributes");
            }
            s.attributes.push_back(std::move(a));
        }
    } catch (const json::exception& e) {
        throw err_malformed(std::string("schema document: ") + e.what());
    }
    if (s.name.empty()) throw err_malformed("schema name must be nonempty");
    if (s.version < 1) throw err_malformed("schema version must be >= 1");
    for (std::size_t i = 0; i < s.attributes.size(); ++i) {
        if (s.attributes[i].name.empty()) throw err_malformed("attribute name must be nonempty");
        for (std::size_t k = i + 1; k < s.attributes.size(); ++k)
            if (s.attributes[i].name == s.attributes[k].name)
                throw err_malformed("duplicate attribute name: " + s.attributes[i].name);
    }
    return s;
}

void check_compatible(const SchemaDescription& prev, const SchemaDescription& next) {
    auto conflict = [&](const std::string& why) {
        throw err_conflict("schema " + next.name + " v" + std::to_string(next.version) +
                           " incompatible with v" + std::to_string(prev.version) + ": " + why);
    };
    for (const auto& pa : prev.attributes) {
        const AttributeDef* na = next.find_attribute(pa.name);
        if (!na) conflict("attribute removed: " + pa.name);
        if (na->type != pa.type) conflict("attribute type changed: " + pa.name);
        if (na->required != pa.required) conflict("required flag changed: " + pa.name);
        if (pa.type == AttrType::Enum) {
            for (const auto& v : pa.enum_values) {
                if (std::find(na->enum_values.begin(), na->enum_values.end(), v) ==
                    na->enum_values.end())
                    conflict("enum value removed from " + pa.name + ": " + v);
            }
        }
    }
    for (const auto& na : next.attributes) {
        if (!prev.find_attribute(na.name) && na.required)
            conflict("new attribute must be optional: " + na.name);
    }
}

SchemaDescription evolve_schema(const SchemaDescription& base, const SchemaDelta& delta) {
    SchemaDescription next = base;
    next.version = base.version + 1;
    for (const auto& [attr, values] : delta.widen_enums) {
        bool found = false;
        for (auto& a : next.attributes) {
            if (a.name != attr) continue;
            found = true;
            if (a.type != AttrType::Enum)
                throw err_conflict("cannot widen non-enum attribute: " + attr);
            for (const auto& v : values)
                if (std::find(a.enum_values.begin(), a.enum_values.end(), v) ==
                    a.enum_values.end())
                    a.enum_values.push_back(v);
        }
        if (!found) throw err_conflict("cannot widen unknown attribute: " + attr);
    }
    for (const auto& a : delta.add_attributes) {
        if (next.find_attribute(a.name))
            throw err_conflict("delta re-adds existing attribute: " + a.name);
        if (a.required)
            throw err_conflict("delta may only add optional attributes, got required: " + a.name);
        next.attributes.push_back(a);
    }
    check_compatible(base, next);
    return next;
}

const SchemaDescription& SchemaRegistry::load(const json& doc) {
    SchemaDescription s = SchemaDescription::from_json(doc);
    std::unique_lock lk(mu_);
    auto key = std::make_pair(s.name, s.version);
    auto it = schemas_.find(key);
    if (it != schemas_.end()) {
        if (*it->second == s) return *it->second;  // idempotent reload
        throw err_conflict("schema " + s.name + " v" + std::to_string(s.version) +
                           " already registered with different content");
    }
    // enforce the compatibility rule against the nearest registered neighbours
    const SchemaDescription* below = nullptr;
    const SchemaDescription* above = nullptr;
    for (const auto& [k, sd] : schemas_) {
        if (k.first != s.name) continue;
        if (k.second < s.version && (!below || sd->version > below->version)) below = sd.get();
        if (k.second > s.version && (!above || sd->version < above->version)) above = sd.get();
    }
    if (below) check_compatible(*below, s);
    if (above) check_compatible(s, *above);
    auto owned = std::make_unique<SchemaDescription>(std::move(s));
    const SchemaDescription& ref = *owned;
    schemas_[key] = std::move(owned);
    return ref;
}

const SchemaDescription& SchemaRegistry::load_text(const std::string& text) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw err_malformed("schema document is not valid structured text");
    return load(doc);
}

const SchemaDescription* SchemaRegistry::find(const std::string& name, int version) const {
    std::shared_lock lk(mu_);
    auto it = schemas_.find({name, version});
    return it == schemas_.end() ? nullptr : it->second.get();
}

const SchemaDescription* SchemaRegistry::latest(const std::string& name) const {
    std::shared_lock lk(mu_);
    const SchemaDescription* best = nullptr;
    for (const auto& [k, sd] : schemas_)
        if (k.first == name && (!best || sd->version > best->version)) best = sd.get();
    return best;
}

std::vector<std::string> SchemaRegistry::kinds() const {
    std::shared_lock lk(mu_);
    std::vector<std::string> out;
    for (const auto& [k, sd] : schemas_)
        if (out.empty() || out.back() != k.first) out.push_back(k.first);
    return out;
}

}  // namespace mfed::meta
