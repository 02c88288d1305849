#ifndef MFED_NET_HPP
#define MFED_NET_HPP

#include <memory>
#include <optional>
#include <string>

#include "mfed/frame.hpp"
#include "mfed/util.hpp"

namespace mfed::net {

// Blocking TCP stream. Owns the fd.
class TcpConn {
public:
    explicit TcpConn(int fd) : fd_(fd) {}
    ~TcpConn();
    TcpConn(const TcpConn&) = delete;
    TcpConn& operator=(const TcpConn&) = delete;
    TcpConn(TcpConn&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }

    int fd() const { return fd_; }
    void close();
    // Half-close/abort from another thread; unblocks pending reads.
    void shutdown();

    void set_recv_timeout_ms(int ms);

    void send_all(const void* data, std::size_t len);
    void send_all(const util::Bytes& b) { send_all(b.data(), b.size()); }

    // Reads one full frame. Returns nullopt on orderly peer close at a frame
    // boundary. Throws FedError on truncation mid-frame, oversize, unknown
    // kind, malformed body, or socket error.
    std::optional<proto::Frame> read_frame();

    void write_frame(proto::Kind kind, std::string_view body);

private:
    bool fill(std::size_t target);

    int fd_;
    util::Bytes rbuf_;
};

// Listening socket bound to host:port (port 0 picks a free one).
class TcpListener {
public:
    TcpListener(const std::string& host, std::uint16_t port);
    ~TcpListener();
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    std::uint16_t port() const { return port_; }
    std::string address() const;  // "host:port"

    // Blocks; returns nullptr once close() is called.
    std::unique_ptr<TcpConn> accept();
    void close();

private:
    int fd_;
    std::string host_;
    std::uint16_t port_;
};

// "host:port" -> connection. Throws FedError(Internal) when unreachable.
std::unique_ptr<TcpConn> dial(const std::string& address, int timeout_ms = 5000);

std::pair<std::string, std::uint16_t> split_address(const std::string& address);

}  // namespace mfed::net

#endif
