#include "mfed/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "mfed/errors.hpp"

namespace mfed::net {

namespace {

sockaddr_in make_addr(const std::string& host, std::uint16_t port) {
    sockaddr_in a{};
    a.sin_family = AF_INET;
    a.sin_port = htons(port);
    if (inet_pton(AF_INET, host.c_str(), &a.sin_addr) != 1)
        throw err_malformed("bad IPv4 address: " + host);
    return a;
}

}  // namespace

TcpConn::~TcpConn() { close(); }

void TcpConn::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

void TcpConn::shutdown() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void TcpConn::set_recv_timeout_ms(int ms) {
    timeval tv{ms / 1000, (ms % 1000) * 1000};
    setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
}

void TcpConn::send_all(const void* data, std::size_t len) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    while (len > 0) {
        ssize_t n = ::send(fd_, p, len, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw err_internal(std::string("send: ") + std::strerror(errno));
        }
        p += n;
        len -= static_cast<std::size_t>(n);
    }
}

bool TcpConn::fill(std::size_t target) {
    while (rbuf_.size() < target) {
        std::uint8_t tmp[16384];
        ssize_t n = ::recv(fd_, tmp, sizeof tmp, 0);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw err_internal(std::string("recv: ") + std::strerror(errno));
        }
        if (n == 0) return false;  // peer closed
        rbuf_.insert(rbuf_.end(), tmp, tmp + n);
    }
    return true;
}

std::optional<proto::Frame> TcpConn::read_frame() {
    if (!fill(proto::kHeaderSize)) {
        if (rbuf_.empty()) return std::nullopt;
        throw err_malformed("truncated frame: connection closed inside header");
    }
    for (;;) {
        auto r = proto::decode_frame(rbuf_);
        switch (r.status) {
            case proto::DecodeStatus::Ok: {
                rbuf_.erase(rbuf_.begin(), rbuf_.begin() + static_cast<long>(r.consumed));
                return std::move(r.frame);
            }
            case proto::DecodeStatus::NeedMore:
                if (!fill(r.needed))
                    throw err_malformed("truncated frame: connection closed inside body");
                break;
            case proto::DecodeStatus::Oversize:
                throw FedError(ErrorCode::Oversize, "declared frame length exceeds 64 MiB");
            case proto::DecodeStatus::UnknownKind:
                throw err_malformed("unregistered message kind");
            case proto::DecodeStatus::MalformedBody:
                throw err_malformed("frame body is not valid structured text");
        }
    }
}

void TcpConn::write_frame(proto::Kind kind, std::string_view body) {
    send_all(proto::encode_frame(kind, body));
}

TcpListener::TcpListener(const std::string& host, std::uint16_t port) : host_(host) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw err_internal("socket failed");
    int on = 1;
    setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &on, sizeof on);
    sockaddr_in a = make_addr(host, port);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&a), sizeof a) != 0) {
        ::close(fd_);
        throw err_internal("bind " + host + ":" + std::to_string(port) + ": " +
                           std::strerror(errno));
    }
    socklen_t alen = sizeof a;
    getsockname(fd_, reinterpret_cast<sockaddr*>(&a), &alen);
    port_ = ntohs(a.sin_port);
    if (::listen(fd_, 64) != 0) {
        ::close(fd_);
        throw err_internal("listen failed");
    }
}

TcpListener::~TcpListener() { close(); }

std::string TcpListener::address() const { return host_ + ":" + std::to_string(port_); }

std::unique_ptr<TcpConn> TcpListener::accept() {
    for (;;) {
        int c = ::accept(fd_, nullptr, nullptr);
        if (c >= 0) return std::make_unique<TcpConn>(c);
        if (errno == EINTR) continue;
        return nullptr;  // listener closed
    }
}

void TcpListener::close() {
    if (fd_ >= 0) {
        ::shutdown(fd_, SHUT_RDWR);
        ::close(fd_);
        fd_ = -1;
    }
}

std::pair<std::string, std::uint16_t> split_address(const std::string& address) {
    auto pos = address.rfind(':');
    if (pos == std::string::npos || pos + 1 >= address.size())
        throw err_malformed("address must be host:port, got: " + address);
    int port = 0;
    try {
        port = std::stoi(address.substr(pos + 1));
    } catch (const std::exception&) {
        throw err_malformed("bad port in address: " + address);
    }
    if (port < 0 || port > 65535) throw err_malformed("bad port in address: " + address);
    return {address.substr(0, pos), static_cast<std::uint16_t>(port)};
}

std::unique_ptr<TcpConn> dial(const std::string& address, int timeout_ms) {
    auto [host, port] = split_address(address);
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw err_internal("socket failed");
    sockaddr_in a = make_addr(host, port);

    int flags = fcntl(fd, F_GETFL, 0);
    fcntl(fd, F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd, reinterpret_cast<sockaddr*>(&a), sizeof a);
    if (rc != 0 && errno != EINPROGRESS) {
        ::close(fd);
        throw err_internal("connect " + address + ": " + std::strerror(errno));
    }
    if (rc != 0) {
        pollfd pfd{fd, POLLOUT, 0};
        int pr = ::poll(&pfd, 1, timeout_ms);
        if (pr <= 0) {
            ::close(fd);
            throw err_internal("connect " + address + ": timeout");
        }
        int soerr = 0;
        socklen_t slen = sizeof soerr;
        getsockopt(fd, SOL_SOCKET, SO_ERROR, &soerr, &slen);
        if (soerr != 0) {
            ::close(fd);
            throw err_internal("connect " + address + ": " + std::strerror(soerr));
        }
    }
    fcntl(fd, F_SETFL, flags);
    int on = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &on, sizeof on);
    return std::make_unique<TcpConn>(fd);
}

}  // namespace mfed::net
