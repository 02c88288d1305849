#ifndef MFED_NODE_HPP
#define MFED_NODE_HPP

#include <memory>
#include <semaphore>

#include "mfed/anonymize.hpp"
#include "mfed/mediator.hpp"
#include "mfed/server.hpp"
#include "mfed/store.hpp"

namespace mfed::node {

struct NodeConfig {
    std::string node_id;
    std::string listen_host = "127.0.0.1";
    std::uint16_t listen_port = 0;  // 0 picks a free port
    std::filesystem::path data_dir;
    std::string catalogue_address;
    std::filesystem::path roster_path;
    std::uint64_t placement_threshold_bytes = 10ull * 1024 * 1024;
    std::filesystem::path secret_file;
    std::filesystem::path site_key_file;
    int dial_timeout_ms = 5000;
    int job_workers = 4;  // concurrent job executions

    static NodeConfig load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
};

struct IngestReport {
    std::string patient_record;
    bool patient_created = false;
    std::string study_record;
    std::vector<std::string> image_records;
    std::vector<std::string> lfns;

    nlohmann::json to_json() const;
};

// The grid-box: per-hospital service owning local stores, the anonymizer map,
// and an embedded mediator. All operations are usable in-process; NodeServer
// exposes them over the wire.
class Node {
public:
    explicit Node(NodeConfig cfg);

    // parse -> anonymize -> QC -> store blob -> register lfn -> write
    // records; all-or-nothing per study (compensating deregistration on
    // failure). The container is read from this node's local filesystem.
    IngestReport ingest_study(const std::filesystem::path& container_path);

    // Pure metadata scan against this node only; never opens a connection.
    med::ResultSet local_query(const med::SubQuery& sub) const;

    // Exact stored bytes + checksum; the receiver verifies the hash.
    struct FetchedImage {
        util::Bytes bytes;
        std::string checksum;
    };
    FetchedImage fetch_image(const std::string& lfn) const;

    // Runs a registered algorithm against locally replicated inputs; refuses
    // to start unless every input is local (no partial execution).
    nlohmann::json run_job(const med::JobSpec& spec);

    bool job_completed(const std::string& job_id) const;

    // Registers a schema document in the node's registry and persists it to
    // schemas.tbl so records validating against it reload after a restart.
    const meta::SchemaDescription& load_schema(const nlohmann::json& doc);

    const NodeConfig& config() const { return cfg_; }
    const meta::SchemaRegistry& registry() const { return registry_; }
    meta::SchemaRegistry& registry_mut() { return registry_; }
    RecordStore& records() { return *records_; }
    const RecordStore& records() const { return *records_; }
    BlobStore& blobs() { return *blobs_; }
    ReplicaIndex& replicas() { return *replicas_; }
    anon::ReidentificationMap& reid_map() { return *reid_map_; }
    med::Mediator& mediator() { return *mediator_; }
    const proto::AuthToken& token() const { return token_; }
    const proto::Roster& roster() const { return roster_; }

private:
    NodeConfig cfg_;
    std::string site_key_;
    proto::AuthToken token_;
    proto::Roster roster_;
    meta::SchemaRegistry registry_;
    std::unique_ptr<BlobStore> blobs_;
    std::unique_ptr<ReplicaIndex> replicas_;
    std::unique_ptr<RecordStore> records_;
    std::unique_ptr<anon::ReidentificationMap> reid_map_;
    std::unique_ptr<med::Mediator> mediator_;

    std::unique_ptr<std::counting_semaphore<>> job_slots_;
    mutable std::mutex jobs_mu_;
    std::set<std::string> completed_jobs_;
};

// Serves proto kinds 0x20, 0x30-0x32, 0x40-0x41 plus the site-local 0x50
// ingest admin kind. Audit lines go to <data_dir>/audit.log.
class NodeServer {
public:
    explicit NodeServer(Node& node);

    void start() { server_->start(); }
    void stop() { server_->stop(); }
    std::string address() const { return server_->address(); }
    std::uint16_t port() const { return server_->port(); }

private:
    std::pair<proto::Kind, nlohmann::json> handle(const proto::SessionInfo& session,
                                                  proto::Kind kind, const nlohmann::json& body);

    Node& node_;
    std::unique_ptr<proto::ProtoServer> server_;
};

}  // namespace mfed::node

#endif
