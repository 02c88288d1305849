#include "mfed/schema.hpp"

namespace mfed::meta {

// Seed schemas, version 1. Every fixture in the repo validates against these.
static const char* kPatientV1 = R"({
  "name": "patient",
  "version": 1,
  "attributes": [
    {"name": "pseudonym", "type": "string", "required": true},
    {"name": "birth_year", "type": "integer", "required": true},
    {"name": "site", "type": "string", "required": true}
  ]
})";

static const char* kStudyV1 = R"({
  "name": "study",
  "version": 1,
  "attributes": [
    {"name": "patient", "type": "string", "required": true},
    {"name": "study_id", "type": "string", "required": true},
    {"name": "study_date", "type": "timestamp", "required": true},
    {"name": "laterality", "type": "string", "required": true}
  ]
})";

static const char* kImageV1 = R"({
  "name": "image",
  "version": 1,
  "attributes": [
    {"name": "study", "type": "string", "required": true},
    {"name": "view", "type": "enum", "values": ["CC", "MLO"], "required": true},
    {"name": "laterality", "type": "enum", "values": ["L", "R", "U"], "required": false},
    {"name": "lfn", "type": "lfn-ref", "required": true},
    {"name": "width", "type": "integer", "required": true},
    {"name": "height", "type": "integer", "required": true},
    {"name": "tube_kvp", "type": "real", "required": true},
    {"name": "exposure_mas", "type": "real", "required": true},
    {"name": "detector_gain", "type": "real", "required": true},
    {"name": "detector_offset", "type": "real", "required": true},
    {"name": "mean_brightness", "type": "real", "required": true},
    {"name": "contrast", "type": "real", "required": true}
  ]
})";

static const char* kAnnotationV1 = R"({
  "name": "annotation",
  "version": 1,
  "attributes": [
    {"name": "image", "type": "string", "required": true},
    {"name": "annotator", "type": "string", "required": true},
    {"name": "finding", "type": "enum",
     "values": ["normal", "benign", "malignant", "microcalc-cluster", "mass"],
     "required": true},
    {"name": "region", "type": "string", "required": false}
  ]
})";

const std::vector<std::string>& baseline_schema_documents() {
    static const std::vector<std::string> docs{kPatientV1, kStudyV1, kImageV1, kAnnotationV1};
    return docs;
}

void register_baseline(SchemaRegistry& reg) {
    for (const auto& doc : baseline_schema_documents()) reg.load_text(doc);
}

}  // namespace mfed::meta
