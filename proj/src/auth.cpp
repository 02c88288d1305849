#include "mfed/auth.hpp"

#include <json.hpp>

#include "mfed/errors.hpp"
#include "mfed/sha256.hpp"

using nlohmann::json;

namespace mfed::proto {

AuthToken AuthToken::from_secret(const std::string& node_id, const std::string& secret) {
    return AuthToken{node_id, util::sha256_hex(secret), util::now_iso8601()};
}

Roster Roster::load(const std::string& path) {
    return from_json_text(util::read_text_file(path));
}

Roster Roster::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw err_malformed(std::string("roster: ") + e.what());
    }
    if (!j.is_object() || !j.contains("nodes") || !j["nodes"].is_object())
        throw err_malformed("roster: expected {\"nodes\": {...}}");
    Roster r;
    for (auto& [id, v] : j["nodes"].items()) {
        RosterEntry e;
        e.address = v.value("address", "");
        e.secret_digest = v.value("secret_digest", "");
        e.role = v.value("role", "node");
        if (e.secret_digest.size() != 64)
            throw err_malformed("roster: node " + id + " needs a 64-char hex secret_digest");
        r.nodes_[id] = std::move(e);
    }
    return r;
}

std::string Roster::to_json_text() const {
    json nodes = json::object();
    for (const auto& [id, e] : nodes_) {
        nodes[id] = {{"address", e.address}, {"secret_digest", e.secret_digest}, {"role", e.role}};
    }
    return json{{"nodes", nodes}}.dump(2) + "\n";
}

const RosterEntry* Roster::find(const std::string& node_id) const {
    auto it = nodes_.find(node_id);
    return it == nodes_.end() ? nullptr : &it->second;
}

static void send_error(net::TcpConn& conn, ErrorCode code, const std::string& detail) {
    json body{{"code", static_cast<int>(code)},
              {"error", error_code_name(code)},
              {"detail", detail}};
    conn.write_frame(Kind::Error, body.dump());
}

std::optional<SessionInfo> server_handshake(net::TcpConn& conn, const Roster& roster,
                                            const std::string& server_id) {
    std::optional<Frame> f;
    try {
        f = conn.read_frame();
    } catch (const FedError& e) {
        send_error(conn, e.code(), e.detail());
        return std::nullopt;
    }
    if (!f) return std::nullopt;
    if (f->kind != Kind::Auth) {
        send_error(conn, ErrorCode::Unauthorized, "first frame must be AUTH");
        return std::nullopt;
    }
    json j = json::parse(f->body, nullptr, false);
    if (j.is_discarded() || !j.contains("node_id") || !j.contains("secret_digest")) {
        send_error(conn, ErrorCode::Malformed, "AUTH body needs node_id and secret_digest");
        return std::nullopt;
    }
    std::string node_id = j["node_id"].get<std::string>();
    const RosterEntry* entry = roster.find(node_id);
    if (!entry) {
        send_error(conn, ErrorCode::UnknownNode, "node not in federation roster: " + node_id);
        return std::nullopt;
    }
    if (j["secret_digest"].get<std::string>() != entry->secret_digest) {
        send_error(conn, ErrorCode::BadSecret, "secret digest mismatch for " + node_id);
        return std::nullopt;
    }
    conn.write_frame(Kind::AuthOk, json{{"node_id", node_id}, {"server", server_id}}.dump());
    return SessionInfo{node_id, entry->role};
}

void client_handshake(net::TcpConn& conn, const AuthToken& token) {
    json body{{"node_id", token.node_id},
              {"secret_digest", token.secret_digest},
              {"issued_at", token.issued_at}};
    conn.write_frame(Kind::Auth, body.dump());
    auto f = conn.read_frame();
    if (!f) throw err_internal("connection closed during auth");
    if (f->kind == Kind::Error) {
        json j = json::parse(f->body);
        throw FedError(static_cast<ErrorCode>(j["code"].get<int>()),
                       j.value("detail", "auth rejected"));
    }
    if (f->kind != Kind::AuthOk) throw err_malformed("expected AUTH_OK");
}

}  // namespace mfed::proto
