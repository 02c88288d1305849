#ifndef MFED_SERVER_HPP
#define MFED_SERVER_HPP

#include <atomic>
#include <functional>
#include <json.hpp>
#include <list>
#include <mutex>
#include <thread>

#include "mfed/auth.hpp"
#include "mfed/net.hpp"

namespace mfed::proto {

// Request/response server over the framed protocol. One session per
// connection; sessions are independent and served concurrently. Frames before
// a successful AUTH are rejected and the connection closed. Request-level
// FedErrors reply ERROR and keep the connection; malformed frames close it.
class ProtoServer {
public:
    using Handler =
        std::function<std::pair<Kind, nlohmann::json>(const SessionInfo&, Kind, const nlohmann::json&)>;
    // (timestamp, session node, kind name) per accepted request, for audit.
    using AuditSink = std::function<void(const std::string&, const std::string&, const char*)>;

    ProtoServer(const std::string& host, std::uint16_t port, Roster roster, std::string server_id,
                Handler handler, AuditSink audit = nullptr);
    ~ProtoServer();

    void start();
    void stop();

    std::uint16_t port() const { return listener_.port(); }
    std::string address() const { return listener_.address(); }

private:
    void accept_loop();
    void serve(net::TcpConn& conn);

    net::TcpListener listener_;
    Roster roster_;
    std::string server_id_;
    Handler handler_;
    AuditSink audit_;
    std::thread accept_thread_;
    std::atomic<bool> stopping_{false};

    std::mutex conns_mu_;
    std::list<std::pair<std::shared_ptr<net::TcpConn>, std::thread>> conns_;
};

}  // namespace mfed::proto

#endif
