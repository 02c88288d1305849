#ifndef MFED_QUERY_HPP
#define MFED_QUERY_HPP

#include <json.hpp>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mfed/schema.hpp"

namespace mfed::med {

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge };

const char* compare_op_text(CompareOp op);

// Immutable predicate tree. And/Or are n-ary (syntactic chains at one level
// are flattened); Not holds a single child.
struct Predicate {
    enum class Type { Compare, And, Or, Not };
    Type type = Type::Compare;

    // Compare
    std::string attr;
    CompareOp op = CompareOp::Eq;
    nlohmann::json literal;  // string or number

    std::vector<std::shared_ptr<const Predicate>> children;

    bool equals(const Predicate& other) const;
    nlohmann::json to_json() const;
    static std::shared_ptr<const Predicate> from_json(const nlohmann::json& j);
};

using PredicatePtr = std::shared_ptr<const Predicate>;

// Clinician query AST. Empty projection means all attributes; empty
// site_filter means the whole federation.
struct Query {
    std::string kind;
    PredicatePtr predicate;
    std::vector<std::string> projection;   // order as written, deduplicated
    std::vector<std::string> site_filter;  // sorted unique

    bool equals(const Query& other) const;
    nlohmann::json to_json() const;
    static Query from_json(const nlohmann::json& j);
};

// Per-node slice of a decomposition: the parent's predicate and projection,
// unchanged, aimed at one node.
struct SubQuery {
    std::string target_node;
    std::string kind;
    PredicatePtr predicate;
    std::vector<std::string> projection;

    nlohmann::json to_json() const;
    static SubQuery from_json(const nlohmann::json& j);
};

struct ResultRecord {
    std::string record_id;
    std::optional<std::string> lfn;  // image records carry their lfn for identity resolution
    nlohmann::json values;

    bool operator==(const ResultRecord&) const = default;
};

struct ResultSet {
    std::string kind;
    std::vector<std::string> projection;
    std::vector<ResultRecord> records;   // sorted by record_id
    std::vector<std::string> answered;   // nodes that returned a slice
    std::vector<std::string> failed;     // unreachable nodes (PartialResult)

    nlohmann::json to_json() const;
    static ResultSet from_json(const nlohmann::json& j);
};

// Parses `FIND <kind> [PROJECT a,b] WHERE <predicate> [AT node,...]`
// (grammar in docs/query-grammar.md). Throws FedError(Malformed) with the
// 1-based token position of the first syntax error, or a semantic message for
// unknown kinds/attributes and literal/type mismatches.
Query parse_query(const std::string& text, const meta::SchemaRegistry& registry);

// Canonical text form; parse_query(print_query(q)) reproduces q exactly.
std::string print_query(const Query& q);

// Shared semantic check (also used for SubQuery revalidation on nodes).
void validate_predicate(const Predicate& p, const meta::SchemaDescription& schema);
void validate_projection(const std::vector<std::string>& projection,
                         const meta::SchemaDescription& schema);

// Predicate evaluation against a record's values. Missing attributes make a
// comparison false; NOT is logical negation of its child.
bool eval_predicate(const Predicate& p, const nlohmann::json& values,
                    const meta::SchemaDescription& schema);

}  // namespace mfed::med

#endif
