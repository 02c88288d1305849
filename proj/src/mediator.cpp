#include "mfed/mediator.hpp"

#include <algorithm>
#include <future>
#include <map>

#include "mfed/analyze.hpp"
#include "mfed/errors.hpp"
#include "mfed/image.hpp"
#include "mfed/sha256.hpp"

using nlohmann::json;

namespace mfed::med {

json JobSpec::to_json() const {
    return json{{"job_id", job_id},
                {"algorithm", algorithm},
                {"lfns", lfns},
                {"requester", requester},
                {"parameters", parameters}};
}

JobSpec JobSpec::from_json(const json& j) {
    JobSpec s;
    try {
        s.job_id = j.at("job_id").get<std::string>();
        s.algorithm = j.at("algorithm").get<std::string>();
        s.lfns = j.at("lfns").get<std::vector<std::string>>();
        s.requester = j.value("requester", "");
        s.parameters = j.value("parameters", json::object());
    } catch (const json::exception& e) {
        throw err_malformed(std::string("job spec: ") + e.what());
    }
    if (s.job_id.empty()) throw err_malformed("job spec needs a job_id");
    if (!s.parameters.is_object()) throw err_malformed("job parameters must be an object");
    return s;
}

std::uint64_t PlacementDecision::bytes_moved() const {
    std::uint64_t total = 0;
    for (const auto& c : choices)
        if (c.mode == PlacementChoice::Mode::ReplicateToRequester) total += c.size_bytes;
    return total;
}

json PlacementDecision::to_json() const {
    json per_lfn = json::object();
    for (const auto& c : choices) {
        json jc{{"mode", c.mode == PlacementChoice::Mode::ExecuteAtData
                             ? "execute_at_data"
                             : "replicate_to_requester"},
                {"size", c.size_bytes}};
        if (!c.node.empty()) jc["node"] = c.node;
        per_lfn[c.lfn] = std::move(jc);
    }
    return json{{"threshold", threshold}, {"bytes_moved", bytes_moved()}, {"per_lfn", per_lfn}};
}

std::vector<SubQuery> decompose(const Query& q, const std::set<std::string>& roster_nodes) {
    if (roster_nodes.empty()) throw err_empty_federation("no nodes in roster");
    std::vector<SubQuery> out;
    for (const auto& node : roster_nodes) {
        if (!q.site_filter.empty() &&
            std::find(q.site_filter.begin(), q.site_filter.end(), node) == q.site_filter.end())
            continue;
        out.push_back(SubQuery{node, q.kind, q.predicate, q.projection});
    }
    return out;
}

ResultSet merge_results(const std::vector<ResultSet>& parts, const ChecksumResolver& checksums) {
    if (parts.empty()) return {};
    ResultSet merged;
    merged.kind = parts.front().kind;
    merged.projection = parts.front().projection;
    for (const auto& p : parts) {
        if (p.kind != merged.kind)
            throw err_malformed("cannot merge result sets of different kinds");
        if (p.projection != merged.projection)
            throw err_malformed("cannot merge result sets with different projections");
    }

    std::set<std::string> answered, failed;
    std::vector<ResultRecord> all;
    for (const auto& p : parts) {
        answered.insert(p.answered.begin(), p.answered.end());
        failed.insert(p.failed.begin(), p.failed.end());
        all.insert(all.end(), p.records.begin(), p.records.end());
    }

    std::sort(all.begin(), all.end(), [](const ResultRecord& a, const ResultRecord& b) {
        return a.record_id < b.record_id;
    });
    all.erase(std::unique(all.begin(), all.end(),
                          [](const ResultRecord& a, const ResultRecord& b) {
                              return a.record_id == b.record_id;
                          }),
              all.end());

    // image records replicated at several sites carry distinct record ids but
    // identical payloads; collapse them by content hash (smallest id wins)
    if (checksums) {
        std::map<std::string, std::string> lfn_checksum;
        std::set<std::string> content_seen;
        std::vector<ResultRecord> kept;
        for (auto& r : all) {
            if (!r.lfn) {
                kept.push_back(std::move(r));
                continue;
            }
            auto it = lfn_checksum.find(*r.lfn);
            if (it == lfn_checksum.end()) {
                auto cs = checksums(*r.lfn);
                it = lfn_checksum.emplace(*r.lfn, cs ? *cs : "lfn:" + *r.lfn).first;
            }
            if (content_seen.insert(it->second).second) kept.push_back(std::move(r));
        }
        all = std::move(kept);
    }

    merged.records = std::move(all);
    merged.answered.assign(answered.begin(), answered.end());
    merged.failed.assign(failed.begin(), failed.end());
    return merged;
}

PlacementDecision place_job(const JobSpec& spec, const ReplicaResolver& resolve,
                            std::uint64_t threshold_bytes) {
    PlacementDecision decision;
    decision.threshold = threshold_bytes;

    // resolve everything once; count how many of the job's inputs each node holds
    std::map<std::string, std::vector<cat::ReplicaEntry>> replicas;
    std::map<std::string, std::size_t> node_input_count;
    for (const auto& lfn : spec.lfns) {
        if (replicas.count(lfn)) continue;  // duplicate input lfn
        auto r = resolve(lfn);
        if (r.empty()) throw err_not_found("no replica registered for " + lfn);
        for (const auto& e : r) ++node_input_count[e.node_id];
        replicas[lfn] = std::move(r);
    }

    for (const auto& lfn : spec.lfns) {
        const auto& reps = replicas.at(lfn);
        PlacementChoice c;
        c.lfn = lfn;
        c.size_bytes = reps.front().size_bytes;
        if (c.size_bytes > threshold_bytes) {
            c.mode = PlacementChoice::Mode::ExecuteAtData;
            // replica node with the most of this job's inputs; ties fall to
            // node_id ascending (reps are already sorted by node_id)
            const cat::ReplicaEntry* best = &reps.front();
            for (const auto& e : reps)
                if (node_input_count[e.node_id] > node_input_count[best->node_id]) best = &e;
            c.node = best->node_id;
        } else {
            c.mode = PlacementChoice::Mode::ReplicateToRequester;
        }
        decision.choices.push_back(std::move(c));
    }
    return decision;
}

// ---------------------------------------------------------------------------
// Federated execution

namespace {

// Distinguishes a dead/unreachable peer (degrade to PartialResult) from a
// request-level error returned by a live one (propagate).
template <typename Fn>
auto dispatch(const std::string& address, const proto::AuthToken& token, int timeout_ms, Fn fn)
    -> std::optional<decltype(fn(std::declval<proto::Session&>()))> {
    std::unique_ptr<proto::Session> session;
    try {
        session = std::make_unique<proto::Session>(address, token, timeout_ms);
    } catch (const std::exception&) {
        return std::nullopt;  // unreachable
    }
    return fn(*session);  // FedError replies propagate
}

}  // namespace

ResultSet Mediator::run_subquery_remote(const SubQuery& sub, const std::string& address) const {
    proto::Session session(address, cfg_.token, cfg_.dial_timeout_ms);
    json body = sub.to_json();
    body["scope"] = "local";
    json reply = session.call_expect(proto::Kind::SubQuery, body, proto::Kind::ResultSet);
    return ResultSet::from_json(reply);
}

ResultSet Mediator::execute_federated(const Query& q) const {
    const meta::SchemaDescription* schema = registry_.latest(q.kind);
    if (!schema) throw err_malformed("unknown record kind: " + q.kind);
    validate_predicate(*q.predicate, *schema);
    validate_projection(q.projection, *schema);

    // fan-out targets are the grid-box nodes; admin principals in the roster
    // authenticate but host no data
    std::set<std::string> roster_nodes;
    for (const auto& [id, e] : cfg_.roster.nodes())
        if (e.role == "node") roster_nodes.insert(id);
    std::vector<SubQuery> subs = decompose(q, roster_nodes);

    struct Outcome {
        std::string node;
        std::optional<ResultSet> result;  // nullopt: unreachable
        std::exception_ptr error;         // request-level failure from a live node
    };
    std::vector<std::future<Outcome>> futures;
    for (const auto& sub : subs) {
        const proto::RosterEntry* entry = cfg_.roster.find(sub.target_node);
        futures.push_back(std::async(std::launch::async, [this, sub, entry]() -> Outcome {
            try {
                auto result = dispatch(entry->address, cfg_.token, cfg_.dial_timeout_ms,
                                       [&](proto::Session& session) {
                                           json body = sub.to_json();
                                           body["scope"] = "local";
                                           return ResultSet::from_json(session.call_expect(
                                               proto::Kind::SubQuery, body,
                                               proto::Kind::ResultSet));
                                       });
                return {sub.target_node, std::move(result), nullptr};
            } catch (...) {
                return {sub.target_node, std::nullopt, std::current_exception()};
            }
        }));
    }

    std::vector<ResultSet> parts;
    std::vector<std::string> failed;
    std::exception_ptr request_error;
    for (auto& f : futures) {
        Outcome o = f.get();
        if (o.error && !request_error)
            request_error = o.error;
        else if (o.result)
            parts.push_back(std::move(*o.result));
        else if (!o.error)
            failed.push_back(o.node);
    }
    if (request_error) std::rethrow_exception(request_error);

    ChecksumResolver checksums = nullptr;
    std::shared_ptr<cat::CatalogueClient> cat_client;
    if (q.kind == "image") {
        checksums = [this, cat_client](const std::string& lfn) mutable
            -> std::optional<std::string> {
            try {
                if (!cat_client)
                    cat_client = std::make_shared<cat::CatalogueClient>(cfg_.catalogue_address,
                                                                        cfg_.token);
                auto reps = cat_client->resolve(lfn);
                return reps.empty() ? std::nullopt
                                    : std::make_optional(reps.front().checksum);
            } catch (const std::exception&) {
                return std::nullopt;
            }
        };
    }

    ResultSet merged = merge_results(parts, checksums);
    merged.kind = q.kind;
    merged.projection = q.projection;
    for (auto& n : failed)
        merged.failed.push_back(std::move(n));
    std::sort(merged.failed.begin(), merged.failed.end());
    return merged;
}

ResultSet Mediator::execute_federated_text(const std::string& query_text) const {
    return execute_federated(parse_query(query_text, registry_));
}

nlohmann::json Mediator::run_federated_job(const JobSpec& spec_in) const {
    JobSpec spec = spec_in;
    if (spec.requester.empty()) spec.requester = cfg_.self_node;
    if (!img::algorithm_registered(spec.algorithm)) throw err_unknown_algorithm(spec.algorithm);
    if (spec.lfns.empty()) throw err_malformed("job needs at least one input lfn");

    std::uint64_t threshold = cfg_.placement_threshold_bytes;
    if (spec.parameters.contains("placement_threshold")) {
        threshold = spec.parameters["placement_threshold"].get<std::uint64_t>();
        spec.parameters.erase("placement_threshold");  // mediator-level knob
    }

    cat::CatalogueClient catalogue(cfg_.catalogue_address, cfg_.token);
    PlacementDecision placement = place_job(
        spec, [&](const std::string& lfn) { return catalogue.resolve(lfn); }, threshold);

    json entries = json::object();
    std::set<std::string> unreachable;

    // group execute_at_data inputs per node and dispatch concurrently
    std::map<std::string, std::vector<std::string>> at_node;
    std::vector<const PlacementChoice*> to_fetch;
    for (const auto& c : placement.choices) {
        if (c.mode == PlacementChoice::Mode::ExecuteAtData)
            at_node[c.node].push_back(c.lfn);
        else
            to_fetch.push_back(&c);
    }

    struct GroupOutcome {
        std::string node;
        std::vector<std::string> lfns;
        std::optional<json> result;  // nullopt: unreachable
        std::exception_ptr error;    // request-level failure from a live node
    };
    std::vector<std::future<GroupOutcome>> futures;
    for (const auto& [node, lfns] : at_node) {
        const proto::RosterEntry* entry = cfg_.roster.find(node);
        JobSpec remote = spec;
        remote.lfns = lfns;
        futures.push_back(std::async(
            std::launch::async,
            [this, node = node, lfns = lfns, entry, remote]() -> GroupOutcome {
                try {
                    auto result = dispatch(entry->address, cfg_.token, cfg_.dial_timeout_ms,
                                           [&](proto::Session& session) {
                                               json body = remote.to_json();
                                               body["scope"] = "local";
                                               return session.call_expect(
                                                   proto::Kind::JobSubmit, body,
                                                   proto::Kind::JobResult);
                                           });
                    return {node, lfns, std::move(result), nullptr};
                } catch (...) {
                    return {node, lfns, std::nullopt, std::current_exception()};
                }
            }));
    }

    // replicate-to-requester inputs: fetch, verify, run in-process
    for (const PlacementChoice* c : to_fetch) {
        json entry;
        entry["placement"] = "replicate_to_requester";
        try {
            auto reps = catalogue.resolve(c->lfn);
            const cat::ReplicaEntry& source = reps.front();  // node_id ascending
            const proto::RosterEntry* src_entry = cfg_.roster.find(source.node_id);
            if (!src_entry) throw err_not_found("replica node not in roster: " + source.node_id);
            auto fetched = dispatch(src_entry->address, cfg_.token, cfg_.dial_timeout_ms,
                                    [&](proto::Session& session) {
                                        return session.call_expect(proto::Kind::FetchImage,
                                                                   json{{"lfn", c->lfn}},
                                                                   proto::Kind::ImageData);
                                    });
            if (!fetched) {
                unreachable.insert(source.node_id);
                entry["status"] = "unreachable";
                entry["node"] = source.node_id;
            } else {
                util::Bytes bytes =
                    util::base64_decode(fetched->at("bytes_b64").get<std::string>());
                std::string got = util::sha256_hex(bytes);
                if (got != source.checksum) {
                    entry["status"] = "integrity_error";
                    entry["detail"] = "fetched bytes hash " + got + ", catalogue says " +
                                      source.checksum;
                } else {
                    img::SmiFile file = img::decode_smi(bytes);
                    entry["status"] = "ok";
                    entry["node"] = cfg_.self_node;
                    entry["output"] = img::run_algorithm(spec.algorithm, file, spec.parameters);
                }
            }
        } catch (const img::DegenerateError& e) {
            entry["status"] = "degenerate";
            entry["detail"] = e.detail();
        } catch (const FedError& e) {
            entry["status"] = "error";
            entry["detail"] = e.what();
        }
        entries[c->lfn] = std::move(entry);
    }

    std::exception_ptr request_error;
    for (auto& f : futures) {
        GroupOutcome o = f.get();
        if (o.error) {
            if (!request_error) request_error = o.error;
            continue;
        }
        if (!o.result) {
            unreachable.insert(o.node);
            for (const auto& lfn : o.lfns)
                entries[lfn] = json{{"status", "unreachable"},
                                    {"node", o.node},
                                    {"placement", "execute_at_data"}};
            continue;
        }
        for (const auto& lfn : o.lfns) {
            json entry = o.result->at("entries").at(lfn);
            entry["placement"] = "execute_at_data";
            entries[lfn] = std::move(entry);
        }
    }
    if (request_error) std::rethrow_exception(request_error);

    json result{{"job_id", spec.job_id},
                {"algorithm", spec.algorithm},
                {"status", unreachable.empty() ? "complete" : "partial"},
                {"unreachable", json::array()},
                {"entries", entries},
                {"placement", placement.to_json()}};
    for (const auto& n : unreachable) result["unreachable"].push_back(n);
    return result;
}

}  // namespace mfed::med
