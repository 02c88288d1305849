#ifndef MFED_MEDIATOR_HPP
#define MFED_MEDIATOR_HPP

#include <functional>
#include <set>

#include "mfed/auth.hpp"
#include "mfed/cat_client.hpp"
#include "mfed/query.hpp"

namespace mfed::med {

// A named analysis algorithm bound to a set of logical files.
struct JobSpec {
    std::string job_id;
    std::string algorithm;
    std::vector<std::string> lfns;
    std::string requester;       // node mediating the job
    nlohmann::json parameters = nlohmann::json::object();

    nlohmann::json to_json() const;
    static JobSpec from_json(const nlohmann::json& j);
};

struct PlacementChoice {
    enum class Mode { ExecuteAtData, ReplicateToRequester };
    std::string lfn;
    Mode mode = Mode::ReplicateToRequester;
    std::string node;  // executing node for ExecuteAtData
    std::uint64_t size_bytes = 0;
};

struct PlacementDecision {
    std::vector<PlacementChoice> choices;  // one per input lfn, input order
    std::uint64_t threshold = 0;

    // Total data volume the decision moves across the wire (the size of every
    // replicated input); the rationale recorded next to the threshold.
    std::uint64_t bytes_moved() const;

    nlohmann::json to_json() const;
};

// One SubQuery per roster node (or per site_filter node when given), each
// carrying the query's predicate and projection unchanged. Targets come out
// sorted by node id. EmptyFederation (Malformed) when the roster is empty.
std::vector<SubQuery> decompose(const Query& q, const std::set<std::string>& roster_nodes);

// Deduplicating set-union of per-node results, sorted by record_id. The
// checksum resolver maps an lfn to its content hash so replicated image
// payloads collapse to one record (smallest record_id wins); it is only
// consulted for records that carry an lfn.
using ChecksumResolver = std::function<std::optional<std::string>(const std::string&)>;
ResultSet merge_results(const std::vector<ResultSet>& parts,
                        const ChecksumResolver& checksums = nullptr);

// Size-threshold placement: inputs larger than the threshold execute at the
// replica node holding the most of the job's inputs (ties: node_id
// ascending); everything else is replicated to the requester.
using ReplicaResolver = std::function<std::vector<cat::ReplicaEntry>(const std::string&)>;
PlacementDecision place_job(const JobSpec& spec, const ReplicaResolver& resolve,
                            std::uint64_t threshold_bytes);

struct MediatorConfig {
    std::string self_node;
    proto::AuthToken token;
    proto::Roster roster;
    std::string catalogue_address;
    std::uint64_t placement_threshold_bytes = 10ull * 1024 * 1024;
    int dial_timeout_ms = 5000;
};

// Federated query handling and job placement, embedded in the requester's
// node process. Fan-out treats every roster node uniformly over the wire.
class Mediator {
public:
    Mediator(MediatorConfig cfg, const meta::SchemaRegistry& registry)
        : cfg_(std::move(cfg)), registry_(registry) {}

    ResultSet execute_federated(const Query& q) const;
    ResultSet execute_federated_text(const std::string& query_text) const;

    // Dispatches per placement; aggregates per-image outputs keyed by lfn.
    // JobResult JSON shape is documented in docs/protocol.md.
    nlohmann::json run_federated_job(const JobSpec& spec) const;

    const MediatorConfig& config() const { return cfg_; }

private:
    ResultSet run_subquery_remote(const SubQuery& sub, const std::string& address) const;

    MediatorConfig cfg_;
    const meta::SchemaRegistry& registry_;
};

}  // namespace mfed::med

#endif
