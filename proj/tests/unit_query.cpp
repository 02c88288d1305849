#include <doctest.h>

#include <set>

#include "mfed/errors.hpp"
#include "mfed/mediator.hpp"
#include "mfed/query.hpp"
#include "support/oracle.hpp"

using namespace mfed;
using nlohmann::json;

namespace {

// random well-formed query generator over the baseline image/patient schemas
med::Query random_query(util::Rng& rng, const meta::SchemaRegistry& reg) {
    const bool image = rng.chance(0.6);
    const std::string kind = image ? "image" : "patient";

    std::function<med::PredicatePtr(int)> gen = [&](int depth) -> med::PredicatePtr {
        auto node = std::make_shared<med::Predicate>();
        if (depth > 0 && rng.chance(0.55)) {
            switch (rng.below(3)) {
                case 0: node->type = med::Predicate::Type::And; break;
                case 1: node->type = med::Predicate::Type::Or; break;
                default: node->type = med::Predicate::Type::Not; break;
            }
            if (node->type == med::Predicate::Type::Not) {
                node->children.push_back(gen(depth - 1));
            } else {
                std::size_t n = 2 + rng.below(2);
                for (std::size_t i = 0; i < n; ++i) node->children.push_back(gen(depth - 1));
            }
            return node;
        }
        node->type = med::Predicate::Type::Compare;
        if (image) {
            switch (rng.below(4)) {
                case 0:
                    node->attr = "view";
                    node->op = rng.chance(0.5) ? med::CompareOp::Eq : med::CompareOp::Ne;
                    node->literal = rng.chance(0.5) ? "CC" : "MLO";
                    break;
                case 1:
                    node->attr = "mean_brightness";
                    node->op = static_cast<med::CompareOp>(rng.below(6));
                    node->literal = rng.uniform(500.0, 4000.0);
                    break;
                case 2:
                    node->attr = "width";
                    node->op = static_cast<med::CompareOp>(rng.below(6));
                    node->literal = static_cast<std::int64_t>(rng.range(64, 256));
                    break;
                default:
                    node->attr = "tube_kvp";
                    node->op = static_cast<med::CompareOp>(rng.below(6));
                    node->literal = rng.uniform(25.0, 33.0);
                    break;
            }
        } else {
            if (rng.chance(0.5)) {
                node->attr = "birth_year";
                node->op = static_cast<med::CompareOp>(rng.below(6));
                node->literal = static_cast<std::int64_t>(rng.range(1930, 1985));
            } else {
                node->attr = "site";
                node->op = rng.chance(0.5) ? med::CompareOp::Eq : med::CompareOp::Ne;
                node->literal = std::string("node-") + char('a' + rng.below(3));
            }
        }
        return node;
    };

    med::Query q;
    q.kind = kind;
    q.predicate = gen(3);
    if (rng.chance(0.4)) {
        const meta::SchemaDescription* schema = reg.latest(kind);
        std::set<std::string> attrs;
        std::size_t n = 1 + rng.below(3);
        for (std::size_t i = 0; i < n; ++i)
            attrs.insert(schema->attributes[rng.below(schema->attributes.size())].name);
        for (const auto& a : attrs) q.projection.push_back(a);
    }
    if (rng.chance(0.3)) {
        std::set<std::string> nodes;
        std::size_t n = 1 + rng.below(3);
        for (std::size_t i = 0; i < n; ++i)
            nodes.insert(std::string("node-") + char('a' + rng.below(4)));
        q.site_filter.assign(nodes.begin(), nodes.end());
    }
    return q;
}

}  // namespace

TEST_CASE("parse_query: basic form") {
    meta::SchemaRegistry reg;
    meta::register_baseline(reg);
    med::Query q = med::parse_query("FIND image WHERE view = CC", reg);
    CHECK(q.kind == "image");
    CHECK(q.projection.empty());
    CHECK(q.site_filter.empty());
    REQUIRE(q.predicate);
    CHECK(q.predicate->type == med::Predicate::Type::Compare);
    CHECK(q.predicate->attr == "view");
    CHECK(q.predicate->op == med::CompareOp::Eq);
    CHECK(q.predicate->literal == "CC");
}

TEST_CASE("parse_query: syntax errors carry the 1-based token position") {
    meta::SchemaRegistry reg;
    meta::register_baseline(reg);
    try {
        med::parse_query("FIND image WHERE", reg);
        FAIL("expected Malformed");
    } catch (const FedError& e) {
        CHECK(e.code() == ErrorCode::Malformed);
        CHECK(std::string(e.detail()).find("token 4") != std::string::npos);
    }
    try {
        med::parse_query("image WHERE view = CC", reg);
        FAIL("expected Malformed");
    } catch (const FedError& e) {
        CHECK(std::string(e.detail()).find("token 1") != std::string::npos);
    }
    CHECK_THROWS_AS(med::parse_query("FIND image WHERE view = CC extra", reg), FedError);
    CHECK_THROWS_AS(med::parse_query("FIND image WHERE (view = CC", reg), FedError);
    CHECK_THROWS_AS(med::parse_query("FIND image WHERE view CC", reg), FedError);
}

TEST_CASE("parse_query: semantic validation against the schemas") {
    meta::SchemaRegistry reg;
    meta::register_baseline(reg);
    CHECK_THROWS_AS(med::parse_query("FIND ghost WHERE a = 1", reg), FedError);
    CHECK_THROWS_AS(med::parse_query("FIND image WHERE sharpness = 1", reg), FedError);
    CHECK_THROWS_AS(med::parse_query("FIND image WHERE view = SIDEWAYS", reg), FedError);
    CHECK_THROWS_AS(med::parse_query("FIND image WHERE view < CC", reg), FedError);
    CHECK_THROWS_AS(med::parse_query("FIND image WHERE width = wide", reg), FedError);
    CHECK_THROWS_AS(med::parse_query("FIND image PROJECT ghost WHERE view = CC", reg), FedError);
    CHECK_THROWS_AS(med::parse_query("FIND study WHERE study_date > nonsense", reg), FedError);
    CHECK_NOTHROW(med::parse_query("FIND study WHERE study_date >= 2003-01-01", reg));
    CHECK_NOTHROW(med::parse_query(
        "FIND image PROJECT lfn,view WHERE (view = CC OR view = MLO) AND NOT width < 64 AT node-a,node-b",
        reg));
}

TEST_CASE("500 random queries: parse(print(q)) reproduces the AST exactly") {
    meta::SchemaRegistry reg;
    meta::register_baseline(reg);
    util::Rng rng(31415);
    for (int i = 0; i < 500; ++i) {
        med::Query q = random_query(rng, reg);
        std::string text = med::print_query(q);
        INFO("query text: ", text);
        med::Query reparsed = med::parse_query(text, reg);
        CHECK(reparsed.equals(q));
        // and the canonical form is a fixed point
        CHECK(med::print_query(reparsed) == text);
    }
}

TEST_CASE("predicate JSON form round-trips") {
    meta::SchemaRegistry reg;
    meta::register_baseline(reg);
    util::Rng rng(777);
    for (int i = 0; i < 200; ++i) {
        med::Query q = random_query(rng, reg);
        med::PredicatePtr reparsed = med::Predicate::from_json(q.predicate->to_json());
        CHECK(reparsed->equals(*q.predicate));
    }
}

TEST_CASE("decompose: one sub-query per roster node, predicate unchanged") {
    meta::SchemaRegistry reg;
    meta::register_baseline(reg);
    med::Query q = med::parse_query("FIND image WHERE view = CC", reg);

    std::set<std::string> roster{"node-a", "node-b", "node-c"};
    auto subs = med::decompose(q, roster);
    REQUIRE(subs.size() == 3);
    for (const auto& s : subs) {
        CHECK(s.kind == "image");
        CHECK(s.predicate->equals(*q.predicate));  // decomposition soundness
        CHECK(s.projection == q.projection);
    }
    CHECK(subs[0].target_node == "node-a");
    CHECK(subs[2].target_node == "node-c");

    q.site_filter = {"node-a"};
    auto filtered = med::decompose(q, roster);
    REQUIRE(filtered.size() == 1);
    CHECK(filtered[0].target_node == "node-a");

    CHECK_THROWS_AS(med::decompose(q, {}), FedError);
}

TEST_CASE("decompose property: targets = roster intersect site_filter") {
    meta::SchemaRegistry reg;
    meta::register_baseline(reg);
    util::Rng rng(999);
    for (int i = 0; i < 300; ++i) {
        med::Query q = random_query(rng, reg);
        std::set<std::string> roster;
        std::size_t n = 1 + rng.below(5);
        for (std::size_t k = 0; k < n; ++k)
            roster.insert(std::string("node-") + char('a' + rng.below(5)));

        std::set<std::string> expected;
        for (const auto& node : roster)
            if (q.site_filter.empty() ||
                std::find(q.site_filter.begin(), q.site_filter.end(), node) !=
                    q.site_filter.end())
                expected.insert(node);

        auto subs = med::decompose(q, roster);
        std::set<std::string> got;
        for (const auto& s : subs) got.insert(s.target_node);
        CHECK(got == expected);
    }
}

TEST_CASE("eval_predicate matches the independent oracle over random records") {
    meta::SchemaRegistry reg;
    meta::register_baseline(reg);
    const meta::SchemaDescription* schema = reg.latest("image");
    json schema_doc = schema->to_json();
    util::Rng rng(2718);

    for (int i = 0; i < 2000; ++i) {
        med::Query q = random_query(rng, reg);
        if (q.kind != "image") continue;
        json values{{"view", rng.chance(0.5) ? "CC" : "MLO"},
                    {"mean_brightness", rng.uniform(400.0, 4200.0)},
                    {"width", static_cast<std::int64_t>(rng.range(64, 256))},
                    {"tube_kvp", rng.uniform(25.0, 33.0)}};
        if (rng.chance(0.2)) values.erase("mean_brightness");  // optional-missing semantics
        bool got = med::eval_predicate(*q.predicate, values, *schema);
        bool expected = test::oracle_eval(q.predicate->to_json(), values, schema_doc);
        INFO("predicate: ", q.predicate->to_json().dump(), " values: ", values.dump());
        CHECK(got == expected);
    }
}

TEST_CASE("merge_results: dedup rules and determinism") {
    auto rec = [](const std::string& id, json values,
                  std::optional<std::string> lfn = std::nullopt) {
        med::ResultRecord r;
        r.record_id = id;
        r.values = std::move(values);
        r.lfn = std::move(lfn);
        return r;
    };
    med::ResultSet a, b;
    a.kind = b.kind = "image";
    a.answered = {"node-a"};
    b.answered = {"node-b"};
    a.records = {rec("node-a:000001", {{"view", "CC"}}, "/node-a/p/s/1.smi"),
                 rec("node-a:000002", {{"view", "MLO"}}, "/node-a/p/s/2.smi")};
    b.records = {rec("node-b:000001", {{"view", "CC"}}, "/node-b/p/s/1.smi"),
                 rec("node-b:000002", {{"view", "CC"}}, "/node-b/p/s/9.smi"),
                 rec("node-b:000003", {{"view", "MLO"}}, "/node-b/p/s/3.smi")};

    // disjoint parts of sizes 2 and 3 -> 5 records
    med::ResultSet merged = med::merge_results({a, b});
    CHECK(merged.records.size() == 5);
    CHECK(merged.answered == std::vector<std::string>{"node-a", "node-b"});
    CHECK(std::is_sorted(merged.records.begin(), merged.records.end(),
                         [](const med::ResultRecord& x, const med::ResultRecord& y) {
                             return x.record_id < y.record_id;
                         }));

    // identical record id in two parts appears once
    med::ResultSet b2 = b;
    b2.records.push_back(a.records[0]);
    CHECK(med::merge_results({a, b2}).records.size() == 5);

    // replicated image payloads collapse by checksum; smallest record id wins
    std::map<std::string, std::string> checksums{
        {"/node-a/p/s/1.smi", "c1"}, {"/node-b/p/s/1.smi", "c1"},
        {"/node-a/p/s/2.smi", "c2"}, {"/node-b/p/s/9.smi", "c9"},
        {"/node-b/p/s/3.smi", "c3"}};
    auto resolver = [&](const std::string& lfn) -> std::optional<std::string> {
        auto it = checksums.find(lfn);
        return it == checksums.end() ? std::nullopt : std::make_optional(it->second);
    };
    med::ResultSet deduped = med::merge_results({a, b}, resolver);
    REQUIRE(deduped.records.size() == 4);
    CHECK(deduped.records[0].record_id == "node-a:000001");  // beat node-b:000001 on id order

    // merge is independent of part arrival order, and idempotent
    med::ResultSet swapped = med::merge_results({b, a}, resolver);
    CHECK(swapped.to_json() == deduped.to_json());
    med::ResultSet again = med::merge_results({deduped}, resolver);
    CHECK(again.to_json() == deduped.to_json());

    // projection mismatch is Malformed
    med::ResultSet c = b;
    c.projection = {"view"};
    CHECK_THROWS_AS(med::merge_results({a, c}), FedError);
}

TEST_CASE("merge property: random partitions of a record set merge back to the set") {
    util::Rng rng(1618);
    for (int round = 0; round < 100; ++round) {
        std::vector<med::ResultRecord> all;
        std::size_t n = 1 + rng.below(40);
        for (std::size_t i = 0; i < n; ++i) {
            med::ResultRecord r;
            char buf[32];
            std::snprintf(buf, sizeof buf, "node-%c:%06zu", char('a' + rng.below(3)), i);
            r.record_id = buf;
            r.values = json{{"view", rng.chance(0.5) ? "CC" : "MLO"}};
            all.push_back(std::move(r));
        }
        std::size_t parts_n = 1 + rng.below(4);
        std::vector<med::ResultSet> parts(parts_n);
        for (auto& p : parts) p.kind = "image";
        for (const auto& r : all) parts[rng.below(parts_n)].records.push_back(r);

        med::ResultSet merged = med::merge_results(parts);
        std::set<std::string> expected, got;
        for (const auto& r : all) expected.insert(r.record_id + "|" + r.values.dump());
        for (const auto& r : merged.records) got.insert(r.record_id + "|" + r.values.dump());
        CHECK(got == expected);
    }
}

TEST_CASE("place_job: threshold rule, co-location, and the cost property") {
    auto replica = [](const std::string& lfn, const std::string& node, std::uint64_t size) {
        cat::ReplicaEntry e;
        e.lfn = lfn;
        e.node_id = node;
        e.local_path = std::string(64, 'a');
        e.checksum = std::string(64, 'a');
        e.size_bytes = size;
        return e;
    };
    std::map<std::string, std::vector<cat::ReplicaEntry>> table{
        {"/f/small", {replica("/f/small", "node-a", 1 << 20)}},
        {"/f/big1", {replica("/f/big1", "node-b", 100 << 20),
                     replica("/f/big1", "node-c", 100 << 20)}},
        {"/f/big2", {replica("/f/big2", "node-c", 90 << 20)}},
    };
    auto resolve = [&](const std::string& lfn) {
        auto it = table.find(lfn);
        if (it == table.end()) throw err_not_found(lfn);
        return it->second;
    };

    med::JobSpec spec;
    spec.job_id = "j1";
    spec.algorithm = "qc_metrics";
    spec.lfns = {"/f/small", "/f/big1", "/f/big2"};
    med::PlacementDecision d = med::place_job(spec, resolve, 10ull << 20);

    REQUIRE(d.choices.size() == 3);
    CHECK(d.choices[0].mode == med::PlacementChoice::Mode::ReplicateToRequester);
    // big1 could run at node-b (1 input) or node-c (2 inputs); co-location wins
    CHECK(d.choices[1].mode == med::PlacementChoice::Mode::ExecuteAtData);
    CHECK(d.choices[1].node == "node-c");
    CHECK(d.choices[2].node == "node-c");
    CHECK(d.bytes_moved() == 1 << 20);

    // ties fall to node_id ascending
    med::JobSpec tie;
    tie.job_id = "j2";
    tie.algorithm = "qc_metrics";
    tie.lfns = {"/f/big1"};
    CHECK(med::place_job(tie, resolve, 10ull << 20).choices[0].node == "node-b");

    CHECK_THROWS_AS(med::place_job(med::JobSpec{"j3", "qc_metrics", {"/f/ghost"}, "", {}},
                                   resolve, 1),
                    FedError);

    // threshold extremes force each mode
    med::PlacementDecision all_local = med::place_job(spec, resolve, 0);
    for (const auto& c : all_local.choices)
        CHECK(c.mode == med::PlacementChoice::Mode::ExecuteAtData);
    med::PlacementDecision all_fetch = med::place_job(spec, resolve, 1ull << 40);
    for (const auto& c : all_fetch.choices)
        CHECK(c.mode == med::PlacementChoice::Mode::ReplicateToRequester);

    // cost property over random inputs: policy never moves more than
    // always-replicate, and execute_at_data only picks replica holders
    util::Rng rng(13579);
    for (int round = 0; round < 200; ++round) {
        std::map<std::string, std::vector<cat::ReplicaEntry>> rnd;
        med::JobSpec js;
        js.job_id = "jr";
        js.algorithm = "qc_metrics";
        std::uint64_t total = 0;
        std::size_t n = 1 + rng.below(8);
        for (std::size_t i = 0; i < n; ++i) {
            std::string lfn = "/r/f" + std::to_string(i);
            std::uint64_t size = 1 + rng.below(200);
            total += size;
            std::vector<cat::ReplicaEntry> reps;
            std::size_t copies = 1 + rng.below(3);
            std::set<std::string> nodes;
            while (nodes.size() < copies)
                nodes.insert(std::string("node-") + char('a' + rng.below(4)));
            for (const auto& nd : nodes) reps.push_back(replica(lfn, nd, size));
            rnd[lfn] = reps;
            js.lfns.push_back(lfn);
        }
        std::uint64_t threshold = rng.below(250);
        med::PlacementDecision dec = med::place_job(
            js, [&](const std::string& lfn) { return rnd.at(lfn); }, threshold);
        CHECK(dec.bytes_moved() <= total);
        for (const auto& c : dec.choices) {
            if (c.mode != med::PlacementChoice::Mode::ExecuteAtData) continue;
            bool holds = false;
            for (const auto& r : rnd.at(c.lfn))
                if (r.node_id == c.node) holds = true;
            CHECK(holds);
        }
    }
}
