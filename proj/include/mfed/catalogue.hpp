#ifndef MFED_CATALOGUE_HPP
#define MFED_CATALOGUE_HPP

#include <filesystem>
#include <json.hpp>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace mfed::cat {

// One physical copy of a logical file at a node.
struct ReplicaEntry {
    std::string lfn;
    std::string node_id;
    std::string local_path;  // node-relative storage key (blob checksum)
    std::uint64_t size_bytes = 0;
    std::string checksum;  // hex sha256 of file bytes, 64 chars
    std::string registered_at;

    bool operator==(const ReplicaEntry&) const = default;

    nlohmann::json to_json() const;
    static ReplicaEntry from_json(const nlohmann::json& j);
};

struct ListPage {
    std::vector<std::string> names;
    std::optional<std::string> next;  // continuation token when truncated
};

// The virtual file catalogue: federation-wide namespace of logical file
// names resolved to replicas. Mutations are serialized through a single
// writer and appended to a durable log before they become visible; reads may
// run concurrently. The log is compacted on startup.
class Catalogue {
public:
    // sync: fsync the log after every mutation (power-loss durability);
    // writes are always flushed to the OS before acknowledgement.
    explicit Catalogue(std::filesystem::path log_path, bool sync = true);
    ~Catalogue();

    // Returns the replica count for the lfn after registration.
    // Conflict if (lfn, node_id) exists or the lfn exists with a different
    // checksum/size; Malformed on an invalid entry.
    std::size_t register_file(const ReplicaEntry& entry);

    // All live replicas, ordered by node_id ascending. NotFound if none.
    std::vector<ReplicaEntry> resolve(const std::string& lfn) const;

    // Remaining replica count (0 means the lfn is gone). NotFound if the
    // replica does not exist.
    std::size_t remove_replica(const std::string& lfn, const std::string& node_id);

    // Lexicographically sorted names under a string prefix, paged.
    // limit 0 selects the default page size (1000).
    ListPage list(const std::string& prefix, std::size_t limit,
                  const std::optional<std::string>& after = std::nullopt) const;

    std::size_t lfn_count() const;

private:
    void append_log(const nlohmann::json& line);
    void load();
    void compact_locked();

    mutable std::shared_mutex mu_;
    std::map<std::string, std::map<std::string, ReplicaEntry>> entries_;  // lfn -> node -> replica
    std::filesystem::path log_path_;
    bool sync_;
    int log_fd_ = -1;
};

void check_replica_entry(const ReplicaEntry& e);  // throws FedError(Malformed)

}  // namespace mfed::cat

#endif
