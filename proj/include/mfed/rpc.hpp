#ifndef MFED_RPC_HPP
#define MFED_RPC_HPP

#include <json.hpp>
#include <memory>

#include "mfed/auth.hpp"
#include "mfed/net.hpp"

namespace mfed::proto {

// Authenticated client connection. One outstanding request at a time.
class Session {
public:
    Session(const std::string& address, const AuthToken& token, int timeout_ms = 30000);

    // Sends a request and reads the single reply frame. ERROR replies become
    // FedError throws; anything else is returned as (kind, body).
    std::pair<Kind, nlohmann::json> call(Kind kind, const nlohmann::json& body);

    // Like call(), but requires the reply kind to match `expect`.
    nlohmann::json call_expect(Kind kind, const nlohmann::json& body, Kind expect);

private:
    std::unique_ptr<net::TcpConn> conn_;
};

}  // namespace mfed::proto

#endif
