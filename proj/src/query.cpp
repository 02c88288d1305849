#include "mfed/query.hpp"

#include <algorithm>
#include <set>

#include "mfed/errors.hpp"
#include "mfed/lfn.hpp"
#include "mfed/record.hpp"

using nlohmann::json;

namespace mfed::med {

const char* compare_op_text(CompareOp op) {
    switch (op) {
        case CompareOp::Eq: return "=";
        case CompareOp::Ne: return "!=";
        case CompareOp::Lt: return "<";
        case CompareOp::Le: return "<=";
        case CompareOp::Gt: return ">";
        case CompareOp::Ge: return ">=";
    }
    return "?";
}

static CompareOp compare_op_from_text(const std::string& s) {
    if (s == "=") return CompareOp::Eq;
    if (s == "!=") return CompareOp::Ne;
    if (s == "<") return CompareOp::Lt;
    if (s == "<=") return CompareOp::Le;
    if (s == ">") return CompareOp::Gt;
    if (s == ">=") return CompareOp::Ge;
    throw err_malformed("unknown comparison operator: " + s);
}

bool Predicate::equals(const Predicate& other) const {
    if (type != other.type) return false;
    if (type == Type::Compare)
        return attr == other.attr && op == other.op && literal == other.literal;
    if (children.size() != other.children.size()) return false;
    for (std::size_t i = 0; i < children.size(); ++i)
        if (!children[i]->equals(*other.children[i])) return false;
    return true;
}

json Predicate::to_json() const {
    switch (type) {
        case Type::Compare:
            return json{{"cmp", compare_op_text(op)}, {"attr", attr}, {"value", literal}};
        case Type::Not:
            return json{{"not", children[0]->to_json()}};
        case Type::And:
        case Type::Or: {
            json arr = json::array();
            for (const auto& c : children) arr.push_back(c->to_json());
            return json{{type == Type::And ? "and" : "or", arr}};
        }
    }
    return {};
}

PredicatePtr Predicate::from_json(const json& j) {
    if (!j.is_object()) throw err_malformed("predicate must be an object");
    auto node = std::make_shared<Predicate>();
    if (j.contains("cmp")) {
        node->type = Type::Compare;
        node->op = compare_op_from_text(j.at("cmp").get<std::string>());
        node->attr = j.at("attr").get<std::string>();
        node->literal = j.at("value");
        if (!node->literal.is_string() && !node->literal.is_number())
            throw err_malformed("predicate literal must be string or number");
        return node;
    }
    if (j.contains("not")) {
        node->type = Type::Not;
        node->children.push_back(from_json(j.at("not")));
        return node;
    }
    if (j.contains("and") || j.contains("or")) {
        bool is_and = j.contains("and");
        node->type = is_and ? Type::And : Type::Or;
        const json& arr = is_and ? j.at("and") : j.at("or");
        if (!arr.is_array() || arr.size() < 2)
            throw err_malformed("and/or needs at least two children");
        for (const auto& c : arr) node->children.push_back(from_json(c));
        return node;
    }
    throw err_malformed("predicate object needs cmp/not/and/or");
}

bool Query::equals(const Query& other) const {
    return kind == other.kind && projection == other.projection &&
           site_filter == other.site_filter &&
           ((predicate == nullptr) == (other.predicate == nullptr)) &&
           (!predicate || predicate->equals(*other.predicate));
}

json Query::to_json() const {
    json j{{"kind", kind},
           {"predicate", predicate ? predicate->to_json() : json(nullptr)},
           {"projection", projection}};
    if (!site_filter.empty()) j["site_filter"] = site_filter;
    return j;
}

Query Query::from_json(const json& j) {
    Query q;
    q.kind = j.at("kind").get<std::string>();
    if (!j.at("predicate").is_null()) q.predicate = Predicate::from_json(j.at("predicate"));
    q.projection = j.value("projection", std::vector<std::string>{});
    q.site_filter = j.value("site_filter", std::vector<std::string>{});
    return q;
}

json SubQuery::to_json() const {
    return json{{"target_node", target_node},
                {"kind", kind},
                {"predicate", predicate ? predicate->to_json() : json(nullptr)},
                {"projection", projection}};
}

SubQuery SubQuery::from_json(const json& j) {
    SubQuery s;
    try {
        s.target_node = j.value("target_node", "");
        s.kind = j.at("kind").get<std::string>();
        if (!j.at("predicate").is_null()) s.predicate = Predicate::from_json(j.at("predicate"));
        s.projection = j.value("projection", std::vector<std::string>{});
    } catch (const json::exception& e) {
        throw err_malformed(std::string("sub-query: ") + e.what());
    }
    return s;
}

json ResultSet::to_json() const {
    json recs = json::array();
    for (const auto& r : records) {
        json jr{{"record_id", r.record_id}, {"values", r.values}};
        if (r.lfn) jr["lfn"] = *r.lfn;
        recs.push_back(std::move(jr));
    }
    return json{{"kind", kind},
                {"projection", projection},
                {"records", recs},
                {"answered", answered},
                {"failed", failed}};
}

ResultSet ResultSet::from_json(const json& j) {
    ResultSet rs;
    try {
        rs.kind = j.at("kind").get<std::string>();
        rs.projection = j.at("projection").get<std::vector<std::string>>();
        for (const auto& jr : j.at("records")) {
            ResultRecord r;
            r.record_id = jr.at("record_id").get<std::string>();
            r.values = jr.at("values");
            if (jr.contains("lfn")) r.lfn = jr["lfn"].get<std::string>();
            rs.records.push_back(std::move(r));
        }
        rs.answered = j.value("answered", std::vector<std::string>{});
        rs.failed = j.value("failed", std::vector<std::string>{});
    } catch (const json::exception& e) {
        throw err_malformed(std::string("result set: ") + e.what());
    }
    return rs;
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

struct Token {
    enum class Type { Word, Number, String, Symbol, End };
    Type type;
    std::string text;   // word/symbol text, or string literal content
    json number;        // Number only
    std::size_t pos;    // 1-based token index
};

bool is_word_char(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
           c == '.' || c == '_' || c == '-';
}

std::vector<Token> lex(const std::string& text) {
    std::vector<Token> out;
    std::size_t i = 0;
    auto pos = [&] { return out.size() + 1; };
    while (i < text.size()) {
        char c = text[i];
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            ++i;
            continue;
        }
        if (c == '(' || c == ')' || c == ',' || c == '=') {
            out.push_back({Token::Type::Symbol, std::string(1, c), {}, pos()});
            ++i;
            continue;
        }
        if (c == '!' || c == '<' || c == '>') {
            std::string sym(1, c);
            if (i + 1 < text.size() && text[i + 1] == '=') {
                sym += '=';
                ++i;
            }
            if (sym == "!")
                throw err_malformed("syntax error at token " + std::to_string(pos()) +
                                    ": lone '!'");
            out.push_back({Token::Type::Symbol, sym, {}, pos()});
            ++i;
            continue;
        }
        if (c == '\'') {
            std::size_t end = text.find('\'', i + 1);
            if (end == std::string::npos)
                throw err_malformed("syntax error at token " + std::to_string(pos()) +
                                    ": unterminated string literal");
            out.push_back({Token::Type::String, text.substr(i + 1, end - i - 1), {}, pos()});
            i = end + 1;
            continue;
        }
        if (is_word_char(c)) {
            // maximal word-char run; pure numbers classify as Number, anything
            // else (identifiers, enum values, bare dates) stays a Word
            std::size_t start = i;
            while (i < text.size() && is_word_char(text[i])) ++i;
            std::string word = text.substr(start, i - start);
            bool real = false;
            std::size_t d = word[0] == '-' ? 1 : 0;
            bool numeric = d < word.size();
            for (std::size_t k = d; k < word.size(); ++k) {
                char wc = word[k];
                if (wc == '.' && !real && k > d && k + 1 < word.size()) {
                    real = true;
                } else if (wc < '0' || wc > '9') {
                    numeric = false;
                    break;
                }
            }
            if (numeric) {
                Token t{Token::Type::Number, word, {}, pos()};
                t.number = real ? json(std::stod(word)) : json(std::stoll(word));
                out.push_back(std::move(t));
            } else {
                out.push_back({Token::Type::Word, word, {}, pos()});
            }
            continue;
        }
        throw err_malformed("syntax error at token " + std::to_string(pos()) +
                            ": unexpected character '" + std::string(1, c) + "'");
    }
    out.push_back({Token::Type::End, "", {}, pos()});
    return out;
}

bool is_keyword(const std::string& w) {
    return w == "FIND" || w == "PROJECT" || w == "WHERE" || w == "AT" || w == "AND" ||
           w == "OR" || w == "NOT";
}

// ---------------------------------------------------------------------------
// Recursive-descent parser

class Parser {
public:
    explicit Parser(const std::string& text) : tokens_(lex(text)) {}

    Query parse() {
        Query q;
        expect_keyword("FIND");
        q.kind = expect_name("record kind");
        if (accept_keyword("PROJECT")) {
            do {
                std::string attr = expect_name("projection attribute");
                if (std::find(q.projection.begin(), q.projection.end(), attr) ==
                    q.projection.end())
                    q.projection.push_back(attr);
            } while (accept_symbol(","));
        }
        expect_keyword("WHERE");
        q.predicate = parse_or();
        if (accept_keyword("AT")) {
            std::set<std::string> nodes;
            do {
                nodes.insert(expect_name("node id"));
            } while (accept_symbol(","));
            q.site_filter.assign(nodes.begin(), nodes.end());
        }
        if (cur().type != Token::Type::End) fail("trailing input");
        return q;
    }

private:
    const Token& cur() const { return tokens_[idx_]; }

    [[noreturn]] void fail(const std::string& what) const {
        throw err_malformed("syntax error at token " + std::to_string(cur().pos) + ": " + what);
    }

    bool accept_keyword(const char* kw) {
        if (cur().type == Token::Type::Word && cur().text == kw) {
            ++idx_;
            return true;
        }
        return false;
    }

    void expect_keyword(const char* kw) {
        if (!accept_keyword(kw)) fail(std::string("expected ") + kw);
    }

    bool accept_symbol(const char* sym) {
        if (cur().type == Token::Type::Symbol && cur().text == sym) {
            ++idx_;
            return true;
        }
        return false;
    }

    std::string expect_name(const char* what) {
        if (cur().type != Token::Type::Word || is_keyword(cur().text))
            fail(std::string("expected ") + what);
        return tokens_[idx_++].text;
    }

    PredicatePtr parse_or() {
        auto first = parse_and();
        if (!(cur().type == Token::Type::Word && cur().text == "OR")) return first;
        auto node = std::make_shared<Predicate>();
        node->type = Predicate::Type::Or;
        node->children.push_back(std::move(first));
        while (accept_keyword("OR")) node->children.push_back(parse_and());
        return node;
    }

    PredicatePtr parse_and() {
        auto first = parse_unary();
        if (!(cur().type == Token::Type::Word && cur().text == "AND")) return first;
        auto node = std::make_shared<Predicate>();
        node->type = Predicate::Type::And;
        node->children.push_back(std::move(first));
        while (accept_keyword("AND")) node->children.push_back(parse_unary());
        return node;
    }

    PredicatePtr parse_unary() {
        if (accept_keyword("NOT")) {
            auto node = std::make_shared<Predicate>();
            node->type = Predicate::Type::Not;
            node->children.push_back(parse_unary());
            return node;
        }
        if (accept_symbol("(")) {
            auto inner = parse_or();
            if (!accept_symbol(")")) fail("expected ')'");
            return inner;
        }
        return parse_compare();
    }

    PredicatePtr parse_compare() {
        auto node = std::make_shared<Predicate>();
        node->type = Predicate::Type::Compare;
        node->attr = expect_name("predicate");
        if (cur().type != Token::Type::Symbol || cur().text == "(" || cur().text == ")" ||
            cur().text == ",")
            fail("expected comparison operator");
        node->op = compare_op_from_text(tokens_[idx_++].text);
        switch (cur().type) {
            case Token::Type::Number:
                node->literal = cur().number;
                ++idx_;
                break;
            case Token::Type::String:
                node->literal = cur().text;
                ++idx_;
                break;
            case Token::Type::Word:
                if (is_keyword(cur().text)) fail("expected literal");
                node->literal = cur().text;
                ++idx_;
                break;
            default:
                fail("expected literal");
        }
        return node;
    }

    std::vector<Token> tokens_;
    std::size_t idx_ = 0;
};

bool printable_as_bare_word(const std::string& s) {
    if (s.empty() || is_keyword(s)) return false;
    char c = s.front();
    bool starts_alpha = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z');
    if (!starts_alpha) return false;
    return std::all_of(s.begin(), s.end(), is_word_char);
}

std::string print_literal(const json& literal) {
    if (literal.is_string()) {
        const auto& s = literal.get_ref<const std::string&>();
        if (printable_as_bare_word(s)) return s;
        return "'" + s + "'";
    }
    return literal.dump();
}

std::string print_predicate(const Predicate& p, bool parenthesize) {
    switch (p.type) {
        case Predicate::Type::Compare:
            return p.attr + " " + compare_op_text(p.op) + " " + print_literal(p.literal);
        case Predicate::Type::Not: {
            const Predicate& child = *p.children[0];
            bool child_parens = child.type != Predicate::Type::Compare;
            return "NOT " + print_predicate(child, child_parens);
        }
        case Predicate::Type::And:
        case Predicate::Type::Or: {
            const char* joiner = p.type == Predicate::Type::And ? " AND " : " OR ";
            std::string out;
            for (std::size_t i = 0; i < p.children.size(); ++i) {
                const Predicate& child = *p.children[i];
                // children that are themselves chains keep their own parens so
                // the reparse rebuilds the identical tree
                bool child_parens =
                    child.type == Predicate::Type::And || child.type == Predicate::Type::Or;
                if (i) out += joiner;
                out += print_predicate(child, child_parens);
            }
            if (parenthesize) out = "( " + out + " )";
            return out;
        }
    }
    return {};
}

}  // namespace

std::string print_query(const Query& q) {
    std::string out = "FIND " + q.kind;
    if (!q.projection.empty()) {
        out += " PROJECT ";
        for (std::size_t i = 0; i < q.projection.size(); ++i) {
            if (i) out += ",";
            out += q.projection[i];
        }
    }
    out += " WHERE " + print_predicate(*q.predicate, false);
    if (!q.site_filter.empty()) {
        out += " AT ";
        for (std::size_t i = 0; i < q.site_filter.size(); ++i) {
            if (i) out += ",";
            out += q.site_filter[i];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Semantic validation and evaluation

namespace {

void validate_compare(const Predicate& p, const meta::SchemaDescription& schema) {
    const meta::AttributeDef* attr = schema.find_attribute(p.attr);
    if (!attr)
        throw err_malformed("unknown attribute '" + p.attr + "' for kind " + schema.name);
    bool ordered = p.op != CompareOp::Eq && p.op != CompareOp::Ne;
    switch (attr->type) {
        case meta::AttrType::Integer:
        case meta::AttrType::Real:
            if (!p.literal.is_number())
                throw err_malformed("attribute '" + p.attr + "' needs a numeric literal");
            break;
        case meta::AttrType::String:
            if (!p.literal.is_string())
                throw err_malformed("attribute '" + p.attr + "' needs a string literal");
            break;
        case meta::AttrType::Timestamp:
            if (!p.literal.is_string() ||
                !meta::is_valid_timestamp(p.literal.get<std::string>()))
                throw err_malformed("attribute '" + p.attr + "' needs a timestamp literal");
            break;
        case meta::AttrType::Enum: {
            if (!p.literal.is_string())
                throw err_malformed("attribute '" + p.attr + "' needs an enum literal");
            const auto& v = p.literal.get_ref<const std::string&>();
            if (std::find(attr->enum_values.begin(), attr->enum_values.end(), v) ==
                attr->enum_values.end())
                throw err_malformed("'" + v + "' is not a value of enum attribute '" + p.attr +
                                    "'");
            if (ordered)
                throw err_malformed("enum attribute '" + p.attr + "' supports only = and !=");
            break;
        }
        case meta::AttrType::LfnRef:
            if (!p.literal.is_string() || !is_valid_lfn(p.literal.get<std::string>()))
                throw err_malformed("attribute '" + p.attr + "' needs a logical file name");
            if (ordered)
                throw err_malformed("lfn attribute '" + p.attr + "' supports only = and !=");
            break;
    }
}

}  // namespace

void validate_predicate(const Predicate& p, const meta::SchemaDescription& schema) {
    if (p.type == Predicate::Type::Compare) {
        validate_compare(p, schema);
        return;
    }
    for (const auto& c : p.children) validate_predicate(*c, schema);
}

void validate_projection(const std::vector<std::string>& projection,
                         const meta::SchemaDescription& schema) {
    for (const auto& attr : projection)
        if (!schema.find_attribute(attr))
            throw err_malformed("unknown projection attribute '" + attr + "' for kind " +
                                schema.name);
}

Query parse_query(const std::string& text, const meta::SchemaRegistry& registry) {
    Query q = Parser(text).parse();
    const meta::SchemaDescription* schema = registry.latest(q.kind);
    if (!schema) throw err_malformed("unknown record kind: " + q.kind);
    validate_predicate(*q.predicate, *schema);
    validate_projection(q.projection, *schema);
    return q;
}

bool eval_predicate(const Predicate& p, const json& values,
                    const meta::SchemaDescription& schema) {
    switch (p.type) {
        case Predicate::Type::And:
            for (const auto& c : p.children)
                if (!eval_predicate(*c, values, schema)) return false;
            return true;
        case Predicate::Type::Or:
            for (const auto& c : p.children)
                if (eval_predicate(*c, values, schema)) return true;
            return false;
        case Predicate::Type::Not:
            return !eval_predicate(*p.children[0], values, schema);
        case Predicate::Type::Compare:
            break;
    }

    auto it = values.find(p.attr);
    if (it == values.end()) return false;  // missing attribute: no match
    const meta::AttributeDef* attr = schema.find_attribute(p.attr);
    if (!attr) return false;

    int cmp;
    if (attr->type == meta::AttrType::Integer || attr->type == meta::AttrType::Real) {
        if (!it->is_number() || !p.literal.is_number()) return false;
        double lhs = it->get<double>();
        double rhs = p.literal.get<double>();
        cmp = lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
    } else {
        if (!it->is_string() || !p.literal.is_string()) return false;
        cmp = it->get_ref<const std::string&>().compare(p.literal.get_ref<const std::string&>());
        cmp = cmp < 0 ? -1 : (cmp > 0 ? 1 : 0);
    }
    switch (p.op) {
        case CompareOp::Eq: return cmp == 0;
        case CompareOp::Ne: return cmp != 0;
        case CompareOp::Lt: return cmp < 0;
        case CompareOp::Le: return cmp <= 0;
        case CompareOp::Gt: return cmp > 0;
        case CompareOp::Ge: return cmp >= 0;
    }
    return false;
}

}  // namespace mfed::med
