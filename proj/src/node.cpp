#include "mfed/node.hpp"

#include <mutex>
#include <fstream>
#include <iostream>

#include "mfed/analyze.hpp"
#include "mfed/image.hpp"
#include "mfed/lfn.hpp"
#include "mfed/sha256.hpp"

using nlohmann::json;

namespace mfed::node {

NodeConfig NodeConfig::load(const std::filesystem::path& path) {
    json j = json::parse(util::read_text_file(path), nullptr, false);
    if (j.is_discarded()) throw err_malformed("node config is not valid structured text");
    NodeConfig cfg;
    try {
        cfg.node_id = j.at("node_id").get<std::string>();
        cfg.data_dir = j.at("data_dir").get<std::string>();
        cfg.catalogue_address = j.at("catalogue").get<std::string>();
        cfg.roster_path = j.at("roster").get<std::string>();
        cfg.secret_file = j.at("secret_file").get<std::string>();
        cfg.site_key_file = j.at("site_key_file").get<std::string>();
        if (j.contains("listen")) {
            auto [host, port] = net::split_address(j["listen"].get<std::string>());
            cfg.listen_host = host;
            cfg.listen_port = port;
        }
        cfg.placement_threshold_bytes =
            j.value("placement_threshold_bytes", cfg.placement_threshold_bytes);
        cfg.dial_timeout_ms = j.value("dial_timeout_ms", cfg.dial_timeout_ms);
        cfg.job_workers = j.value("job_workers", cfg.job_workers);
        if (cfg.job_workers < 1) throw err_malformed("job_workers must be at least 1");
    } catch (const json::exception& e) {
        throw err_malformed(std::string("node config: ") + e.what());
    }
    return cfg;
}

json NodeConfig::to_json() const {
    return json{{"node_id", node_id},
                {"listen", listen_host + ":" + std::to_string(listen_port)},
                {"data_dir", data_dir.string()},
                {"catalogue", catalogue_address},
                {"roster", roster_path.string()},
                {"placement_threshold_bytes", placement_threshold_bytes},
                {"secret_file", secret_file.string()},
                {"site_key_file", site_key_file.string()},
                {"dial_timeout_ms", dial_timeout_ms},
                {"job_workers", job_workers}};
}

json IngestReport::to_json() const {
    return json{{"patient_record", patient_record},
                {"patient_created", patient_created},
                {"study_record", study_record},
                {"image_records", image_records},
                {"lfns", lfns}};
}

namespace {

std::string trimmed_file(const std::filesystem::path& p) {
    std::string s = util::read_text_file(p);
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) s.pop_back();
    return s;
}

}  // namespace

Node::Node(NodeConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.node_id.empty()) throw err_malformed("node config needs a node_id");
    for (char c : cfg_.node_id)
        if (!is_valid_lfn_component_char(c))
            throw err_malformed("node_id has invalid characters: " + cfg_.node_id);

    std::filesystem::create_directories(cfg_.data_dir);
    site_key_ = trimmed_file(cfg_.site_key_file);
    token_ = proto::AuthToken::from_secret(cfg_.node_id, trimmed_file(cfg_.secret_file));
    roster_ = proto::Roster::load(cfg_.roster_path.string());
    if (!roster_.find(cfg_.node_id))
        throw err_malformed("node " + cfg_.node_id + " is not in the federation roster");

    meta::register_baseline(registry_);
    // runtime-loaded schemas reload before the record store validates
    if (std::filesystem::exists(cfg_.data_dir / "schemas.tbl")) {
        std::ifstream in(cfg_.data_dir / "schemas.tbl");
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json doc = json::parse(line, nullptr, false);
            if (!doc.is_discarded()) registry_.load(doc);
        }
    }
    blobs_ = std::make_unique<BlobStore>(cfg_.data_dir / "blobs");
    replicas_ = std::make_unique<ReplicaIndex>(cfg_.data_dir / "lfns.tbl");
    records_ = std::make_unique<RecordStore>(cfg_.data_dir / "records.tbl", cfg_.node_id,
                                             registry_);
    reid_map_ = std::make_unique<anon::ReidentificationMap>(cfg_.data_dir / "reid.map",
                                                            site_key_);
    med::MediatorConfig mcfg;
    mcfg.self_node = cfg_.node_id;
    mcfg.token = token_;
    mcfg.roster = roster_;
    mcfg.catalogue_address = cfg_.catalogue_address;
    mcfg.placement_threshold_bytes = cfg_.placement_threshold_bytes;
    mcfg.dial_timeout_ms = cfg_.dial_timeout_ms;
    mediator_ = std::make_unique<med::Mediator>(std::move(mcfg), registry_);
    job_slots_ = std::make_unique<std::counting_semaphore<>>(cfg_.job_workers);
}

IngestReport Node::ingest_study(const std::filesystem::path& container_path) {
    util::Bytes bytes = util::read_file(container_path);
    img::DecodedContainer container = img::decode_container(bytes);

    // anonymization strictly precedes any persistence or registration
    anon::StripResult strip = anon::strip_identifiers(container.header, site_key_);
    std::string study_id = strip.sanitized.value("study_id", "");
    if (records_->study_id_exists(study_id))
        throw err_conflict("study id already ingested at this node: " + study_id);

    reid_map_->record(strip.pseudonym, strip.identifiers);

    struct PreparedImage {
        std::string lfn;
        util::Bytes blob;
        std::string checksum;
        json values;  // image record values minus the study ref
    };
    std::vector<PreparedImage> prepared;
    std::set<std::string> lateralities;
    std::set<std::string> used_names;
    for (const auto& ci : container.images) {
        PreparedImage p;
        img::QcReport qc = img::qc_metrics(ci.image);
        p.blob = img::encode_smi(ci.image, ci.acq);
        p.checksum = util::sha256_hex(p.blob);

        std::string base = "img-" + ci.laterality + "-" + ci.view;
        std::string name = base + ".smi";
        for (int i = 2; used_names.count(name); ++i)
            name = base + "-" + std::to_string(i) + ".smi";
        used_names.insert(name);
        p.lfn = "/" + cfg_.node_id + "/" + strip.pseudonym + "/" + study_id + "/" + name;
        check_lfn(p.lfn);

        lateralities.insert(ci.laterality);
        p.values = json{{"view", ci.view},
                        {"laterality", ci.laterality},
                        {"lfn", p.lfn},
                        {"width", ci.image.width},
                        {"height", ci.image.height},
                        {"tube_kvp", ci.acq.tube_kvp},
                        {"exposure_mas", ci.acq.exposure_mas},
                        {"detector_gain", ci.acq.detector_gain},
                        {"detector_offset", ci.acq.detector_offset},
                        {"mean_brightness", qc.mean_brightness},
                        {"contrast", qc.contrast}};
        prepared.push_back(std::move(p));
    }

    // compensation state for all-or-nothing ingest
    std::vector<std::string> created_blobs;
    std::vector<std::string> registered_lfns;
    std::vector<std::string> indexed_lfns;
    auto rollback = [&] {
        try {
            if (!registered_lfns.empty()) {
                cat::CatalogueClient catalogue(cfg_.catalogue_address, token_);
                for (const auto& lfn : registered_lfns) {
                    try {
                        catalogue.remove_replica(lfn, cfg_.node_id);
                    } catch (const std::exception&) {
                    }
                }
            }
        } catch (const std::exception&) {
        }
        for (const auto& lfn : indexed_lfns) replicas_->remove(lfn);
        for (const auto& cs : created_blobs) blobs_->remove(cs);
    };

    try {
        for (const auto& p : prepared) {
            auto put = blobs_->put(p.blob);
            if (put.created) created_blobs.push_back(put.checksum);
        }
        {
            cat::CatalogueClient catalogue(cfg_.catalogue_address, token_);
            for (const auto& p : prepared) {
                cat::ReplicaEntry e;
                e.lfn = p.lfn;
                e.node_id = cfg_.node_id;
                e.local_path = p.checksum;
                e.size_bytes = p.blob.size();
                e.checksum = p.checksum;
                e.registered_at = util::now_iso8601();
                catalogue.register_file(e);
                registered_lfns.push_back(p.lfn);
            }
        }
        for (const auto& p : prepared) {
            replicas_->add(p.lfn, p.checksum, p.blob.size());
            indexed_lfns.push_back(p.lfn);
        }

        RecordStore::StudyBundle bundle;
        bundle.patient_values = json{{"pseudonym", strip.pseudonym},
                                     {"birth_year", strip.sanitized.at("birth_year")},
                                     {"site", cfg_.node_id}};
        std::string laterality;
        for (const auto& l : lateralities) {
            if (!laterality.empty()) laterality += ",";
            laterality += l;
        }
        bundle.study_values = json{{"study_id", study_id},
                                   {"study_date", strip.sanitized.value("study_date", "")},
                                   {"laterality", laterality}};
        for (const auto& p : prepared) bundle.image_values.push_back(p.values);

        RecordStore::StudyRecords recs = records_->append_study(bundle);

        IngestReport report;
        report.patient_record = recs.patient_record;
        report.patient_created = recs.patient_created;
        report.study_record = recs.study_record;
        report.image_records = recs.image_records;
        for (const auto& p : prepared) report.lfns.push_back(p.lfn);
        return report;
    } catch (...) {
        rollback();
        throw;
    }
}

med::ResultSet Node::local_query(const med::SubQuery& sub) const {
    const meta::SchemaDescription* schema = registry_.latest(sub.kind);
    if (!schema) throw err_not_found("unknown record kind: " + sub.kind);
    if (!sub.predicate) throw err_malformed("sub-query needs a predicate");
    med::validate_predicate(*sub.predicate, *schema);
    med::validate_projection(sub.projection, *schema);

    med::ResultSet rs;
    rs.kind = sub.kind;
    rs.projection = sub.projection;
    records_->scan(sub.kind, [&](const meta::MetadataRecord& rec) {
        if (!med::eval_predicate(*sub.predicate, rec.values, *schema)) return;
        med::ResultRecord out;
        out.record_id = rec.record_id;
        if (sub.kind == "image" && rec.values.contains("lfn"))
            out.lfn = rec.values["lfn"].get<std::string>();
        if (sub.projection.empty()) {
            out.values = rec.values;
        } else {
            out.values = json::object();
            for (const auto& attr : sub.projection)
                if (rec.values.contains(attr)) out.values[attr] = rec.values[attr];
        }
        rs.records.push_back(std::move(out));
    });
    std::sort(rs.records.begin(), rs.records.end(),
              [](const med::ResultRecord& a, const med::ResultRecord& b) {
                  return a.record_id < b.record_id;
              });
    rs.answered = {cfg_.node_id};
    return rs;
}

Node::FetchedImage Node::fetch_image(const std::string& lfn) const {
    check_lfn(lfn);
    auto entry = replicas_->lookup(lfn);
    if (!entry) throw err_not_found("no local replica of " + lfn);
    return FetchedImage{blobs_->get(entry->checksum), entry->checksum};
}

json Node::run_job(const med::JobSpec& spec) {
    // bound concurrent job executions to the configured worker count
    job_slots_->acquire();
    struct Release {
        std::counting_semaphore<>* s;
        ~Release() { s->release(); }
    } release{job_slots_.get()};
    if (!img::algorithm_registered(spec.algorithm)) throw err_unknown_algorithm(spec.algorithm);
    if (spec.lfns.empty()) throw err_malformed("job needs at least one input lfn");

    // refuse before touching anything: no partial execution
    std::vector<std::string> missing;
    for (const auto& lfn : spec.lfns)
        if (!replicas_->lookup(lfn)) missing.push_back(lfn);
    if (!missing.empty()) {
        std::string detail = "inputs not locally replicated:";
        for (const auto& lfn : missing) detail += " " + lfn;
        throw err_not_found(detail);
    }

    json entries = json::object();
    for (const auto& lfn : spec.lfns) {
        auto entry = replicas_->lookup(lfn);
        json je;
        je["node"] = cfg_.node_id;
        try {
            img::SmiFile file = img::decode_smi(blobs_->get(entry->checksum));
            je["status"] = "ok";
            je["output"] = img::run_algorithm(spec.algorithm, file, spec.parameters);
        } catch (const img::DegenerateError& e) {
            je["status"] = "degenerate";
            je["detail"] = e.detail();
        }
        entries[lfn] = std::move(je);
    }
    {
        std::lock_guard lk(jobs_mu_);
        completed_jobs_.insert(spec.job_id);
    }
    return json{{"job_id", spec.job_id},
                {"algorithm", spec.algorithm},
                {"status", "complete"},
                {"unreachable", json::array()},
                {"entries", entries}};
}

bool Node::job_completed(const std::string& job_id) const {
    std::lock_guard lk(jobs_mu_);
    return completed_jobs_.count(job_id) > 0;
}

const meta::SchemaDescription& Node::load_schema(const json& doc) {
    meta::SchemaDescription parsed = meta::SchemaDescription::from_json(doc);
    bool already = registry_.find(parsed.name, parsed.version) != nullptr;
    const meta::SchemaDescription& schema = registry_.load(doc);
    if (!already) {
        std::ofstream out(cfg_.data_dir / "schemas.tbl", std::ios::app);
        out << schema.to_json().dump() << "\n";
        out.flush();
        if (!out) throw err_internal("short write on schema table");
    }
    return schema;
}

// ---------------------------------------------------------------------------

NodeServer::NodeServer(Node& node) : node_(node) {
    auto audit_path = node.config().data_dir / "audit.log";
    auto mu = std::make_shared<std::mutex>();
    proto::ProtoServer::AuditSink audit =
        [audit_path, mu](const std::string& ts, const std::string& peer, const char* kind) {
            std::lock_guard lk(*mu);
            std::ofstream out(audit_path, std::ios::app);
            out << ts << " " << peer << " " << kind << "\n";
        };
    server_ = std::make_unique<proto::ProtoServer>(
        node.config().listen_host, node.config().listen_port, node.roster(),
        node.config().node_id,
        [this](const proto::SessionInfo& s, proto::Kind k, const json& b) {
            return handle(s, k, b);
        },
        std::move(audit));
}

std::pair<proto::Kind, json> NodeServer::handle(const proto::SessionInfo& session,
                                                proto::Kind kind, const json& body) {
    switch (kind) {
        case proto::Kind::SubQuery: {
            std::string scope = body.value("scope", "local");
            if (scope == "federated") {
                med::ResultSet rs =
                    node_.mediator().execute_federated_text(body.value("text", ""));
                return {proto::Kind::ResultSet, rs.to_json()};
            }
            med::ResultSet rs = node_.local_query(med::SubQuery::from_json(body));
            return {proto::Kind::ResultSet, rs.to_json()};
        }
        case proto::Kind::JobSubmit: {
            med::JobSpec spec = med::JobSpec::from_json(body);
            std::string scope = body.value("scope", "local");
            if (scope == "federated")
                return {proto::Kind::JobResult, node_.mediator().run_federated_job(spec)};
            return {proto::Kind::JobResult, node_.run_job(spec)};
        }
        case proto::Kind::JobStatus: {
            std::string job_id = body.value("job_id", "");
            return {proto::Kind::JobStatus,
                    json{{"job_id", job_id},
                         {"state", node_.job_completed(job_id) ? "completed" : "unknown"}}};
        }
        case proto::Kind::FetchImage: {
            auto fetched = node_.fetch_image(body.value("lfn", ""));
            return {proto::Kind::ImageData,
                    json{{"lfn", body.value("lfn", "")},
                         {"checksum", fetched.checksum},
                         {"bytes_b64", util::base64_encode(fetched.bytes)}}};
        }
        case proto::Kind::Ingest: {
            // site-local admin op: the body names a path on this node's
            // filesystem; container bytes never cross the wire
            std::string path = body.value("path", "");
            if (path.empty()) throw err_malformed("ingest needs a container path");
            IngestReport report = node_.ingest_study(path);
            (void)session;
            return {proto::Kind::Ingest, report.to_json()};
        }
        default:
            throw err_malformed(std::string("node does not serve ") + kind_name(kind));
    }
}

}  // namespace mfed::node
