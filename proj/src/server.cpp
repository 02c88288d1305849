#include "mfed/server.hpp"

#include "mfed/errors.hpp"

using nlohmann::json;

namespace mfed::proto {

ProtoServer::ProtoServer(const std::string& host, std::uint16_t port, Roster roster,
                         std::string server_id, Handler handler, AuditSink audit)
    : listener_(host, port),
      roster_(std::move(roster)),
      server_id_(std::move(server_id)),
      handler_(std::move(handler)),
      audit_(std::move(audit)) {}

ProtoServer::~ProtoServer() { stop(); }

void ProtoServer::start() {
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void ProtoServer::stop() {
    if (stopping_.exchange(true)) {
        if (accept_thread_.joinable()) accept_thread_.join();
        return;
    }
    listener_.close();
    {
        std::lock_guard lk(conns_mu_);
        for (auto& [conn, _] : conns_) conn->shutdown();
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    std::list<std::pair<std::shared_ptr<net::TcpConn>, std::thread>> conns;
    {
        std::lock_guard lk(conns_mu_);
        conns.swap(conns_);
    }
    for (auto& [_, t] : conns)
        if (t.joinable()) t.join();
}

void ProtoServer::accept_loop() {
    while (!stopping_) {
        auto conn = listener_.accept();
        if (!conn) break;
        std::shared_ptr<net::TcpConn> shared(conn.release());
        std::lock_guard lk(conns_mu_);
        if (stopping_) {
            shared->shutdown();
            break;
        }
        conns_.emplace_back(shared, std::thread([this, shared] {
                                try {
                                    serve(*shared);
                                } catch (...) {
                                    // connection-level failure: drop the session
                                }
                                shared->close();
                            }));
        // reap finished sessions opportunistically
        for (auto it = conns_.begin(); it != conns_.end();) {
            if (it->first->fd() < 0 && it->second.joinable()) {
                it->second.join();
                it = conns_.erase(it);
            } else {
                ++it;
            }
        }
    }
}

void ProtoServer::serve(net::TcpConn& conn) {
    auto session = server_handshake(conn, roster_, server_id_);
    if (!session) return;
    if (audit_) audit_(util::now_iso8601(), session->node_id, "AUTH");

    for (;;) {
        std::optional<Frame> f;
        try {
            f = conn.read_frame();
        } catch (const FedError& e) {
            json body{{"code", static_cast<int>(e.code())},
                      {"error", error_code_name(e.code())},
                      {"detail", e.detail()}};
            try {
                conn.write_frame(Kind::Error, body.dump());
            } catch (...) {
            }
            return;  // framing violation: close
        }
        if (!f) return;  // peer done

        if (audit_) audit_(util::now_iso8601(), session->node_id, kind_name(f->kind));

        json request = f->body.empty() ? json::object() : json::parse(f->body);
        try {
            auto [kind, reply] = handler_(*session, f->kind, request);
            conn.write_frame(kind, reply.dump());
        } catch (const FedError& e) {
            json body{{"code", static_cast<int>(e.code())},
                      {"error", error_code_name(e.code())},
                      {"detail", e.detail()}};
            conn.write_frame(Kind::Error, body.dump());
        } catch (const std::exception& e) {
            json body{{"code", static_cast<int>(ErrorCode::Internal)},
                      {"error", error_code_name(ErrorCode::Internal)},
                      {"detail", e.what()}};
            conn.write_frame(Kind::Error, body.dump());
        }
    }
}

}  // namespace mfed::proto
