#include "mfed/store.hpp"

#include <unistd.h>

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <fstream>

#include "mfed/errors.hpp"
#include "mfed/sha256.hpp"

using nlohmann::json;

namespace mfed::node {

BlobStore::BlobStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_ / ".staging");
}

std::filesystem::path BlobStore::path_of(const std::string& checksum) const {
    return dir_ / checksum;
}

BlobStore::PutResult BlobStore::put(const util::Bytes& bytes) {
    std::string checksum = util::sha256_hex(bytes);
    std::filesystem::path final_path = path_of(checksum);
    if (std::filesystem::exists(final_path)) return {checksum, false};
    std::filesystem::path staged =
        dir_ / ".staging" / (checksum + "." + std::to_string(::getpid()));
    util::write_file(staged, bytes);
    std::filesystem::rename(staged, final_path);
    return {checksum, true};
}

util::Bytes BlobStore::get(const std::string& checksum) const {
    std::filesystem::path p = path_of(checksum);
    if (!std::filesystem::exists(p)) throw err_not_found("no blob " + checksum);
    return util::read_file(p);
}

bool BlobStore::exists(const std::string& checksum) const {
    return std::filesystem::exists(path_of(checksum));
}

void BlobStore::remove(const std::string& checksum) {
    std::filesystem::remove(path_of(checksum));
}

ReplicaIndex::ReplicaIndex(std::filesystem::path file) : file_(std::move(file)) {
    if (!std::filesystem::exists(file_)) return;
    std::ifstream in(file_);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) continue;  // torn tail
        entries_[j.at("lfn").get<std::string>()] =
            Entry{j.at("checksum").get<std::string>(), j.at("size").get<std::uint64_t>()};
    }
}

void ReplicaIndex::rewrite_locked() const {
    std::filesystem::path tmp = file_;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        for (const auto& [lfn, e] : entries_)
            out << json{{"lfn", lfn}, {"checksum", e.checksum}, {"size", e.size}}.dump() << "\n";
        out.flush();
        if (!out) throw err_internal("short write on replica index");
    }
    std::filesystem::rename(tmp, file_);
}

void ReplicaIndex::add(const std::string& lfn, const std::string& checksum, std::uint64_t size) {
    std::unique_lock lk(mu_);
    entries_[lfn] = Entry{checksum, size};
    std::ofstream out(file_, std::ios::app);
    out << json{{"lfn", lfn}, {"checksum", checksum}, {"size", size}}.dump() << "\n";
    out.flush();
    if (!out) throw err_internal("short write on replica index");
}

void ReplicaIndex::remove(const std::string& lfn) {
    std::unique_lock lk(mu_);
    entries_.erase(lfn);
    rewrite_locked();
}

std::optional<ReplicaIndex::Entry> ReplicaIndex::lookup(const std::string& lfn) const {
    std::shared_lock lk(mu_);
    auto it = entries_.find(lfn);
    return it == entries_.end() ? std::nullopt : std::make_optional(it->second);
}

std::map<std::string, ReplicaIndex::Entry> ReplicaIndex::all() const {
    std::shared_lock lk(mu_);
    return entries_;
}

RecordStore::RecordStore(std::filesystem::path file, std::string node_id,
                         const meta::SchemaRegistry& registry)
    : file_(std::move(file)), node_id_(std::move(node_id)), registry_(registry) {
    if (!std::filesystem::exists(file_)) return;
    std::ifstream in(file_);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) break;  // torn tail
        auto rec = std::make_unique<meta::MetadataRecord>(meta::MetadataRecord::from_json(j));
        meta::validate_record(*rec, registry_);
        const meta::MetadataRecord* p = rec.get();
        by_id_[p->record_id] = p;
        if (p->kind == "patient" && p->values.contains("pseudonym"))
            patient_by_pseudonym_[p->values["pseudonym"].get<std::string>()] = p;
        if (p->kind == "study" && p->values.contains("study_id"))
            study_by_study_id_[p->values["study_id"].get<std::string>()] = p;
        if (p->origin_node == node_id_) {
            auto colon = p->record_id.rfind(':');
            if (colon != std::string::npos) {
                std::uint64_t c = std::strtoull(p->record_id.c_str() + colon + 1, nullptr, 10);
                next_counter_ = std::max(next_counter_, c + 1);
            }
        }
        records_.push_back(std::move(rec));
    }
}

std::string RecordStore::next_id_locked() {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06" PRIu64, next_counter_++);
    return node_id_ + ":" + buf;
}

void RecordStore::persist_locked(const std::vector<const meta::MetadataRecord*>& batch) {
    std::string lines;
    for (const auto* r : batch) lines += r->to_json().dump() + "\n";
    std::ofstream out(file_, std::ios::app);
    if (!out) throw err_internal("cannot append to record store " + file_.string());
    out.write(lines.data(), static_cast<std::streamsize>(lines.size()));
    out.flush();
    if (!out) throw err_internal("short write on record store");
}

std::string RecordStore::append(const std::string& kind, int schema_version, json values) {
    std::unique_lock lk(mu_);
    auto rec = std::make_unique<meta::MetadataRecord>();
    rec->kind = kind;
    rec->schema_version = schema_version;
    rec->origin_node = node_id_;
    rec->values = std::move(values);
    rec->record_id = next_id_locked();
    meta::validate_record(*rec, registry_);
    persist_locked({rec.get()});
    const meta::MetadataRecord* p = rec.get();
    by_id_[p->record_id] = p;
    if (p->kind == "patient" && p->values.contains("pseudonym"))
        patient_by_pseudonym_[p->values["pseudonym"].get<std::string>()] = p;
    if (p->kind == "study" && p->values.contains("study_id"))
        study_by_study_id_[p->values["study_id"].get<std::string>()] = p;
    records_.push_back(std::move(rec));
    return p->record_id;
}

RecordStore::StudyRecords RecordStore::append_study(const StudyBundle& bundle) {
    std::unique_lock lk(mu_);
    StudyRecords out;

    std::string study_id = bundle.study_values.value("study_id", "");
    if (study_id.empty()) throw err_malformed("study bundle needs a study_id value");
    if (study_by_study_id_.count(study_id))
        throw err_conflict("study id already ingested at this node: " + study_id);

    std::string pseudonym = bundle.patient_values.value("pseudonym", "");
    if (pseudonym.empty()) throw err_malformed("patient bundle needs a pseudonym value");

    std::vector<std::unique_ptr<meta::MetadataRecord>> staged;
    auto stage = [&](const std::string& kind, json values) -> const meta::MetadataRecord* {
        auto rec = std::make_unique<meta::MetadataRecord>();
        rec->kind = kind;
        rec->schema_version = bundle.schema_version;
        rec->origin_node = node_id_;
        rec->values = std::move(values);
        rec->record_id = next_id_locked();
        staged.push_back(std::move(rec));
        return staged.back().get();
    };

    auto existing_patient = patient_by_pseudonym_.find(pseudonym);
    if (existing_patient != patient_by_pseudonym_.end()) {
        out.patient_record = existing_patient->second->record_id;
        out.patient_created = false;
    } else {
        out.patient_record = stage("patient", bundle.patient_values)->record_id;
        out.patient_created = true;
    }

    json study_values = bundle.study_values;
    study_values["patient"] = out.patient_record;
    out.study_record = stage("study", study_values)->record_id;

    for (json image_values : bundle.image_values) {
        image_values["study"] = out.study_record;
        out.image_records.push_back(stage("image", std::move(image_values))->record_id);
    }

    std::vector<const meta::MetadataRecord*> batch;
    for (const auto& r : staged) {
        meta::validate_record(*r, registry_);
        batch.push_back(r.get());
    }
    persist_locked(batch);

    for (auto& r : staged) {
        const meta::MetadataRecord* p = r.get();
        by_id_[p->record_id] = p;
        if (p->kind == "patient") patient_by_pseudonym_[pseudonym] = p;
        if (p->kind == "study") study_by_study_id_[study_id] = p;
        records_.push_back(std::move(r));
    }
    return out;
}

std::optional<meta::MetadataRecord> RecordStore::find(const std::string& record_id) const {
    std::shared_lock lk(mu_);
    auto it = by_id_.find(record_id);
    return it == by_id_.end() ? std::nullopt : std::make_optional(*it->second);
}

bool RecordStore::study_id_exists(const std::string& study_id) const {
    std::shared_lock lk(mu_);
    return study_by_study_id_.count(study_id) > 0;
}

std::size_t RecordStore::count(const std::string& kind) const {
    std::shared_lock lk(mu_);
    std::size_t n = 0;
    for (const auto& r : records_)
        if (r->kind == kind) ++n;
    return n;
}

std::size_t RecordStore::total() const {
    std::shared_lock lk(mu_);
    return records_.size();
}

void RecordStore::scan(const std::string& kind,
                       const std::function<void(const meta::MetadataRecord&)>& fn) const {
    std::shared_lock lk(mu_);
    for (const auto& r : records_)
        if (r->kind == kind) fn(*r);
}

}  // namespace mfed::node
