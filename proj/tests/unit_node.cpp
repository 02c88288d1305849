#include <doctest.h>

#include <fstream>
#include <thread>

#include "mfed/analyze.hpp"
#include "mfed/errors.hpp"
#include "mfed/node.hpp"
#include "mfed/sha256.hpp"
#include "support/cluster.hpp"
#include "support/fixtures.hpp"
#include "support/oracle.hpp"

using namespace mfed;
using nlohmann::json;

namespace {

std::filesystem::path write_container(const test::TempDir& tmp, const std::string& name,
                                      const test::ContainerSpec& spec) {
    auto path = tmp / name;
    util::write_file(path, test::make_container(spec));
    return path;
}

med::SubQuery subquery(const std::string& kind, const std::string& text,
                       const meta::SchemaRegistry& reg,
                       std::vector<std::string> projection = {}) {
    med::Query q = med::parse_query("FIND " + kind + " WHERE " + text, reg);
    return med::SubQuery{"", kind, q.predicate, std::move(projection)};
}

}  // namespace

TEST_CASE("ingest_study: records, consent, duplicates") {
    test::Cluster cluster(1);
    test::TempDir tmp("containers");
    node::Node& node = cluster.node(0);

    // 1 study, 2 views -> 1 patient + 1 study + 2 image records, 2 lfns
    test::ContainerSpec spec;
    node::IngestReport report = node.ingest_study(write_container(tmp, "ok.mgc", spec));
    CHECK(report.patient_created);
    CHECK(report.image_records.size() == 2);
    CHECK(report.lfns.size() == 2);
    CHECK(node.records().count("patient") == 1);
    CHECK(node.records().count("study") == 1);
    CHECK(node.records().count("image") == 2);

    // lfns resolvable federation-wide with the blob checksum
    for (const auto& lfn : report.lfns) {
        auto replicas = cluster.catalogue().resolve(lfn);
        REQUIRE(replicas.size() == 1);
        CHECK(replicas[0].node_id == "node-a");
        auto fetched = node.fetch_image(lfn);
        CHECK(util::sha256_hex(fetched.bytes) == replicas[0].checksum);
    }

    // image records carry QC metrics computed at ingest
    auto image_record = node.records().find(report.image_records[0]);
    REQUIRE(image_record);
    CHECK(image_record->values["mean_brightness"] == 1200.0);
    CHECK(image_record->values["contrast"] == 0.0);
    CHECK(image_record->values["view"] == "CC");

    // consent unset -> ConsentMissing, nothing persisted
    test::ContainerSpec refused = spec;
    refused.study_id = "S99002";
    refused.consent = "N";
    try {
        node.ingest_study(write_container(tmp, "refused.mgc", refused));
        FAIL("expected ConsentMissing");
    } catch (const FedError& e) {
        CHECK(e.code() == ErrorCode::Unauthorized);
    }
    CHECK(node.records().count("study") == 1);
    CHECK(cluster.catalogue().lfn_count() == 2);

    // duplicate study id -> Conflict
    CHECK_THROWS_AS(node.ingest_study(write_container(tmp, "dup.mgc", spec)), FedError);
    CHECK(node.records().count("study") == 1);

    // same patient, second study: patient record reused
    test::ContainerSpec second = spec;
    second.study_id = "S99003";
    second.study_date = "2004-01-15";
    node::IngestReport r2 = node.ingest_study(write_container(tmp, "second.mgc", second));
    CHECK_FALSE(r2.patient_created);
    CHECK(r2.patient_record == report.patient_record);
    CHECK(node.records().count("patient") == 1);
    CHECK(node.records().count("study") == 2);

    // malformed container -> Malformed
    util::write_text_file(tmp / "junk.mgc", "MGC1 nope");
    CHECK_THROWS_AS(node.ingest_study(tmp / "junk.mgc"), FedError);
}

TEST_CASE("ingest atomicity: a mid-pipeline failure leaves no trace") {
    test::Cluster cluster(1);
    test::TempDir tmp("containers");
    node::Node& node = cluster.node(0);

    // Pre-register the lfn the *second* image will get, with a different
    // checksum: ingest then fails at catalogue registration after the first
    // image succeeded, and must compensate.
    test::ContainerSpec spec;
    spec.study_id = "S55001";
    util::Bytes container = test::make_container(spec);
    img::DecodedContainer decoded = img::decode_container(container);
    anon::StripResult strip =
        anon::strip_identifiers(decoded.header, "site-key-node-a");
    std::string clash_lfn =
        "/node-a/" + strip.pseudonym + "/S55001/img-L-MLO.smi";
    cat::ReplicaEntry foreign;
    foreign.lfn = clash_lfn;
    foreign.node_id = "node-a";
    foreign.local_path = std::string(64, '9');
    foreign.checksum = std::string(64, '9');
    foreign.size_bytes = 17;
    cluster.catalogue().register_file(foreign);

    auto path = tmp / "clash.mgc";
    util::write_file(path, container);
    try {
        node.ingest_study(path);
        FAIL("expected Conflict");
    } catch (const FedError& e) {
        CHECK(e.code() == ErrorCode::Conflict);
    }

    // no records, no local replicas, no blobs, and the first image's
    // catalogue registration was compensated
    CHECK(node.records().total() == 0);
    CHECK(node.replicas().all().empty());
    CHECK(cluster.catalogue().lfn_count() == 1);  // only the planted foreign entry
    std::string cc_lfn = "/node-a/" + strip.pseudonym + "/S55001/img-L-CC.smi";
    CHECK_THROWS_AS(cluster.catalogue().resolve(cc_lfn), FedError);

    // after removing the clash, the same container ingests cleanly
    cluster.catalogue().remove_replica(clash_lfn, "node-a");
    CHECK_NOTHROW(node.ingest_study(path));
    CHECK(node.records().count("image") == 2);
}

TEST_CASE("local_query: spec examples and full-scan oracle over a 500-record fixture") {
    test::Cluster cluster(1);
    node::Node& node = cluster.node(0);
    const meta::SchemaRegistry& reg = node.registry();

    // no annotations yet: finding = malignant matches nothing
    med::ResultSet empty =
        node.local_query(subquery("annotation", "finding = malignant", reg));
    CHECK(empty.records.empty());
    CHECK(empty.answered == std::vector<std::string>{"node-a"});

    // fixture: 2 CC + 1 MLO images via direct record append
    auto image_values = [&](const std::string& view, double brightness) {
        return json{{"study", "node-a:000001"},
                    {"view", view},
                    {"lfn", "/node-a/p/s/img-" + view + std::to_string(int(brightness)) + ".smi"},
                    {"width", 128},
                    {"height", 128},
                    {"tube_kvp", 28.0},
                    {"exposure_mas", 100.0},
                    {"detector_gain", 1.0},
                    {"detector_offset", 0.0},
                    {"mean_brightness", brightness},
                    {"contrast", 10.0}};
    };
    node.records().append("image", 1, image_values("CC", 1000));
    node.records().append("image", 1, image_values("CC", 2000));
    node.records().append("image", 1, image_values("MLO", 3000));
    med::ResultSet cc = node.local_query(subquery("image", "view = CC", reg));
    CHECK(cc.records.size() == 2);
    med::ResultSet projected =
        node.local_query(subquery("image", "view = CC", reg, {"view", "mean_brightness"}));
    CHECK(projected.records[0].values.size() == 2);
    CHECK(projected.records[0].lfn.has_value());  // identity side-band survives projection

    // unknown kind -> NotFound; bad predicate attr -> Malformed
    med::SubQuery ghost = subquery("image", "view = CC", reg);
    ghost.kind = "ghost";
    try {
        node.local_query(ghost);
        FAIL("expected NotFound");
    } catch (const FedError& e) {
        CHECK(e.code() == ErrorCode::NotFound);
    }
    med::SubQuery bad = subquery("image", "view = CC", reg);
    auto pred = std::make_shared<med::Predicate>();
    pred->type = med::Predicate::Type::Compare;
    pred->attr = "sharpness";
    pred->literal = 1;
    bad.predicate = pred;
    CHECK_THROWS_AS(node.local_query(bad), FedError);

    // 500-record mixed fixture vs the independent full-scan oracle
    util::Rng rng(606);
    for (int i = 0; i < 500; ++i) {
        node.records().append(
            "annotation", 1,
            json{{"image", "node-a:00000" + std::to_string(1 + rng.below(3))},
                 {"annotator", rng.chance(0.5) ? "radiologist" : "cad"},
                 {"finding", std::vector<std::string>{
                                 "normal", "benign", "malignant", "microcalc-cluster",
                                 "mass"}[rng.below(5)]}});
    }
    std::vector<json> all_records;
    node.records().scan("annotation", [&](const meta::MetadataRecord& r) {
        all_records.push_back(r.to_json());
    });
    json schema_doc = reg.find("annotation", 1)->to_json();

    const char* queries[] = {
        "finding = malignant",
        "finding != normal AND annotator = cad",
        "finding = mass OR finding = benign",
        "NOT (finding = normal OR annotator = radiologist)",
        "annotator >= cad AND finding != benign",
    };
    for (const char* text : queries) {
        med::SubQuery sub = subquery("annotation", text, reg);
        med::ResultSet rs = node.local_query(sub);
        std::set<std::string> got;
        for (const auto& r : rs.records) got.insert(test::oracle_row(r.record_id, r.values));
        std::set<std::string> expected = test::oracle_query(
            all_records, "annotation", sub.predicate->to_json(), {}, schema_doc);
        CHECK(got == expected);
    }
}

TEST_CASE("local_query touches no network: succeeds with the catalogue down") {
    test::Cluster cluster(1);
    node::Node& node = cluster.node(0);
    test::TempDir tmp("containers");
    node.ingest_study(write_container(tmp, "c.mgc", test::ContainerSpec{}));

    // node keeps answering local queries with every remote endpoint gone
    cluster.shutdown();
    med::ResultSet rs =
        node.local_query(subquery("image", "view = CC", node.registry()));
    CHECK(rs.records.size() == 1);
}

TEST_CASE("fetch_image: round-trip, remote-only lfn, store integrity") {
    test::Cluster cluster(2);
    test::TempDir tmp("containers");
    node::Node& a = cluster.node(0);

    test::ContainerSpec spec;
    spec.views = {{"CC", "L"}};
    node::IngestReport report = a.ingest_study(write_container(tmp, "c.mgc", spec));
    const std::string lfn = report.lfns[0];

    // exact bytes round-trip, hash matches catalogue checksum
    auto fetched = a.fetch_image(lfn);
    auto replicas = cluster.catalogue().resolve(lfn);
    CHECK(util::sha256_hex(fetched.bytes) == replicas[0].checksum);
    img::SmiFile smi = img::decode_smi(fetched.bytes);
    CHECK(smi.image.pixels[0] == 1200);

    // replicated only elsewhere -> NotFound (caller must resolve and redirect)
    try {
        cluster.node(1).fetch_image(lfn);
        FAIL("expected NotFound");
    } catch (const FedError& e) {
        CHECK(e.code() == ErrorCode::NotFound);
    }

    // 100 random images: fetch-after-ingest is bit-identical to the payload
    util::Rng rng(717);
    for (int i = 0; i < 100; ++i) {
        test::ContainerSpec s;
        s.study_id = "SRT" + std::to_string(i);
        s.patient_id = "PAT-Q" + std::to_string(100 + i) + "-X001";
        s.views = {{"CC", "L"}};
        s.base_value = static_cast<std::uint16_t>(rng.below(60000));
        auto path = write_container(tmp, "rt" + std::to_string(i) + ".mgc", s);
        node::IngestReport r = a.ingest_study(path);
        img::DecodedContainer original = img::decode_container(util::read_file(path));
        auto got = a.fetch_image(r.lfns[0]);
        img::SmiFile stored = img::decode_smi(got.bytes);
        CHECK(stored.image.pixels == original.images[0].image.pixels);
    }

    // blob keys are content hashes
    for (const auto& [lfn2, entry] : a.replicas().all()) {
        CHECK(util::sha256_hex(a.blobs().get(entry.checksum)) == entry.checksum);
    }
}

TEST_CASE("run_job: local algorithms, missing replicas, unknown algorithm") {
    test::Cluster cluster(1);
    test::TempDir tmp("containers");
    node::Node& node = cluster.node(0);
    test::ContainerSpec spec;
    node::IngestReport report = node.ingest_study(write_container(tmp, "c.mgc", spec));

    med::JobSpec job;
    job.job_id = "job-local-1";
    job.algorithm = "qc_metrics";
    job.lfns = report.lfns;
    json result = node.run_job(job);
    CHECK(result["status"] == "complete");
    CHECK(result["entries"].size() == 2);

    // outputs equal direct in-process invocation on the same bytes
    for (const auto& lfn : report.lfns) {
        img::SmiFile smi = img::decode_smi(node.fetch_image(lfn).bytes);
        json direct = img::run_algorithm("qc_metrics", smi, json::object());
        CHECK(result["entries"][lfn]["output"] == direct);
    }
    CHECK(node.job_completed("job-local-1"));
    CHECK_FALSE(node.job_completed("job-ghost"));

    // a job naming a non-replicated lfn refuses entirely
    med::JobSpec partial = job;
    partial.job_id = "job-local-2";
    partial.lfns.push_back("/node-a/ghost/S0/img-L-CC.smi");
    try {
        node.run_job(partial);
        FAIL("expected NotFound");
    } catch (const FedError& e) {
        CHECK(e.code() == ErrorCode::NotFound);
    }
    CHECK_FALSE(node.job_completed("job-local-2"));

    med::JobSpec unknown = job;
    unknown.job_id = "job-local-3";
    unknown.algorithm = "sharpen";
    try {
        node.run_job(unknown);
        FAIL("expected UnknownAlgorithm");
    } catch (const FedError& e) {
        CHECK(e.code() == ErrorCode::Malformed);
        CHECK(std::string(e.detail()).find("UnknownAlgorithm") != std::string::npos);
    }

    // all four registered algorithms run against ingested images
    for (const std::string& algo : img::registered_algorithms()) {
        med::JobSpec s;
        s.job_id = "job-algo-" + algo;
        s.algorithm = algo;
        s.lfns = report.lfns;
        json r = node.run_job(s);
        CHECK(r["status"] == "complete");
        for (const auto& lfn : report.lfns)
            CHECK(r["entries"][lfn].contains("output") ==
                  (r["entries"][lfn]["status"] == "ok"));
    }
}

TEST_CASE("job worker cap serializes execution without changing results") {
    test::Cluster cluster(1);
    test::TempDir tmp("containers");
    node::NodeConfig cfg = cluster.node(0).config();
    cfg.job_workers = 1;
    node::Node node(cfg);  // same data dir, capped workers
    node::IngestReport report =
        node.ingest_study(write_container(tmp, "c.mgc", test::ContainerSpec{}));

    std::vector<std::thread> threads;
    std::vector<json> results(4);
    for (int i = 0; i < 4; ++i)
        threads.emplace_back([&, i] {
            med::JobSpec spec;
            spec.job_id = "job-cap-" + std::to_string(i);
            spec.algorithm = "qc_metrics";
            spec.lfns = report.lfns;
            results[i] = node.run_job(spec);
        });
    for (auto& t : threads) t.join();
    for (int i = 1; i < 4; ++i) CHECK(results[i]["entries"] == results[0]["entries"]);
}

TEST_CASE("record store survives restart with the same state") {
    test::TempDir tmp("store");
    meta::SchemaRegistry reg;
    meta::register_baseline(reg);
    std::string id1, id2;
    {
        node::RecordStore store(tmp / "records.tbl", "node-a", reg);
        id1 = store.append("patient", 1,
                           json{{"pseudonym", "P-aa"}, {"birth_year", 1950}, {"site", "node-a"}});
        id2 = store.append("patient", 1,
                           json{{"pseudonym", "P-bb"}, {"birth_year", 1960}, {"site", "node-a"}});
        CHECK(id1 == "node-a:000001");
        CHECK(id2 == "node-a:000002");
    }
    {
        node::RecordStore store(tmp / "records.tbl", "node-a", reg);
        CHECK(store.total() == 2);
        CHECK(store.find(id1)->values["birth_year"] == 1950);
        // counter resumes past reloaded records
        std::string id3 = store.append(
            "patient", 1,
            json{{"pseudonym", "P-cc"}, {"birth_year", 1970}, {"site", "node-a"}});
        CHECK(id3 == "node-a:000003");
    }
}
