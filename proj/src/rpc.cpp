#include "mfed/rpc.hpp"

#include "mfed/errors.hpp"

using nlohmann::json;

namespace mfed::proto {

Session::Session(const std::string& address, const AuthToken& token, int timeout_ms) {
    conn_ = net::dial(address, timeout_ms);
    conn_->set_recv_timeout_ms(timeout_ms);
    client_handshake(*conn_, token);
}

std::pair<Kind, json> Session::call(Kind kind, const json& body) {
    conn_->write_frame(kind, body.dump());
    auto f = conn_->read_frame();
    if (!f) throw err_internal("connection closed awaiting reply");
    json reply = f->body.empty() ? json::object() : json::parse(f->body);
    if (f->kind == Kind::Error) {
        throw FedError(static_cast<ErrorCode>(reply.at("code").get<int>()),
                       reply.value("detail", "remote error"));
    }
    return {f->kind, std::move(reply)};
}

json Session::call_expect(Kind kind, const json& body, Kind expect) {
    auto [k, reply] = call(kind, body);
    if (k != expect)
        throw err_malformed(std::string("expected ") + kind_name(expect) + " reply, got " +
                            kind_name(k));
    return reply;
}

}  // namespace mfed::proto
