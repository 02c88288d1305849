#ifndef MFED_STORE_HPP
#define MFED_STORE_HPP

#include <filesystem>
#include <functional>
#include <map>
#include <shared_mutex>

#include "mfed/record.hpp"
#include "mfed/util.hpp"

namespace mfed::node {

// Content-addressed blob store: blobs/<sha256> with staged writes.
class BlobStore {
public:
    explicit BlobStore(std::filesystem::path dir);

    struct PutResult {
        std::string checksum;
        bool created;  // false when identical content was already stored
    };
    PutResult put(const util::Bytes& bytes);

    util::Bytes get(const std::string& checksum) const;  // NotFound
    bool exists(const std::string& checksum) const;
    void remove(const std::string& checksum);

    std::filesystem::path path_of(const std::string& checksum) const;

private:
    std::filesystem::path dir_;
};

// Node-local lfn -> (checksum, size) table: which logical files this node
// physically holds. One JSON line per entry, rewritten on removal.
class ReplicaIndex {
public:
    explicit ReplicaIndex(std::filesystem::path file);

    struct Entry {
        std::string checksum;
        std::uint64_t size = 0;
    };

    void add(const std::string& lfn, const std::string& checksum, std::uint64_t size);
    void remove(const std::string& lfn);
    std::optional<Entry> lookup(const std::string& lfn) const;
    std::map<std::string, Entry> all() const;

private:
    void rewrite_locked() const;

    std::filesystem::path file_;
    mutable std::shared_mutex mu_;
    std::map<std::string, Entry> entries_;
};

// Per-node metadata record table: one JSON line per record, indexed in memory
// on startup. Single writer, many readers; records are immutable once
// appended.
class RecordStore {
public:
    RecordStore(std::filesystem::path file, std::string node_id,
                const meta::SchemaRegistry& registry);

    // Generic append (annotations, fixtures): validates, assigns the next
    // record id, persists.
    std::string append(const std::string& kind, int schema_version, nlohmann::json values);

    struct StudyBundle {
        nlohmann::json patient_values;  // without the patient ref chain
        nlohmann::json study_values;    // study_id required; patient ref filled in
        std::vector<nlohmann::json> image_values;  // study ref filled in
        int schema_version = 1;
    };
    struct StudyRecords {
        std::string patient_record;
        bool patient_created = false;
        std::string study_record;
        std::vector<std::string> image_records;
    };
    // Atomic multi-record ingest step: upserts the patient by pseudonym,
    // enforces study_id uniqueness (Conflict), chains record references, and
    // persists the whole batch in one write.
    StudyRecords append_study(const StudyBundle& bundle);

    std::optional<meta::MetadataRecord> find(const std::string& record_id) const;
    bool study_id_exists(const std::string& study_id) const;
    std::size_t count(const std::string& kind) const;
    std::size_t total() const;

    // Scans every record of a kind under the read lock.
    void scan(const std::string& kind,
              const std::function<void(const meta::MetadataRecord&)>& fn) const;

    const std::string& node_id() const { return node_id_; }

private:
    std::string next_id_locked();
    void persist_locked(const std::vector<const meta::MetadataRecord*>& batch);

    std::filesystem::path file_;
    std::string node_id_;
    const meta::SchemaRegistry& registry_;
    mutable std::shared_mutex mu_;
    std::vector<std::unique_ptr<meta::MetadataRecord>> records_;
    std::map<std::string, const meta::MetadataRecord*> by_id_;
    std::map<std::string, const meta::MetadataRecord*> patient_by_pseudonym_;
    std::map<std::string, const meta::MetadataRecord*> study_by_study_id_;
    std::uint64_t next_counter_ = 1;
};

}  // namespace mfed::node

#endif
