#ifndef MFED_AUTH_HPP
#define MFED_AUTH_HPP

#include <map>
#include <optional>
#include <string>

#include "mfed/net.hpp"

namespace mfed::proto {

// Shared-secret token auth; a deliberate stand-in for full PKI.
struct AuthToken {
    std::string node_id;
    std::string secret_digest;  // hex sha256 of the site secret, 64 chars
    std::string issued_at;      // UTC ISO 8601, recorded for audit only

    static AuthToken from_secret(const std::string& node_id, const std::string& secret);
};

struct RosterEntry {
    std::string address;        // host:port the node listens on
    std::string secret_digest;  // hex sha256
    std::string role;           // "node" (default) or "admin"
};

// Federation roster: every principal that may open a session, with the
// address peers use to reach it. Loaded from a JSON file shared by all sites.
class Roster {
public:
    static Roster load(const std::string& path);
    static Roster from_json_text(const std::string& text);

    const RosterEntry* find(const std::string& node_id) const;
    const std::map<std::string, RosterEntry>& nodes() const { return nodes_; }
    bool empty() const { return nodes_.empty(); }

    void add(const std::string& node_id, RosterEntry e) { nodes_[node_id] = std::move(e); }
    std::string to_json_text() const;

private:
    std::map<std::string, RosterEntry> nodes_;
};

struct SessionInfo {
    std::string node_id;
    std::string role;
};

// Server side: first frame must be AUTH; validates against the roster and
// replies AUTH_OK, or replies ERROR and returns nullopt (caller closes).
std::optional<SessionInfo> server_handshake(net::TcpConn& conn, const Roster& roster,
                                            const std::string& server_id);

// Client side: sends AUTH, expects AUTH_OK. Throws FedError on rejection.
void client_handshake(net::TcpConn& conn, const AuthToken& token);

}  // namespace mfed::proto

#endif
