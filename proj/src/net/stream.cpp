#include "mqttz/net/stream.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

#include "mqttz/net/tcp_stream.hpp"

namespace mqttz::net {

namespace {
// Broken pipes are reported through write errors, not signals.
struct SigpipeIgnorer {
    SigpipeIgnorer() { ::signal(SIGPIPE, SIG_IGN); }
} sigpipe_ignorer;
}  // namespace

TcpStream::TcpStream(int fd) : fd_(fd) {
    int flag = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &flag, sizeof(flag));
}

TcpStream::~TcpStream() {
    if (fd_ >= 0) ::close(fd_);
}

Stream::ReadResult TcpStream::read_some(std::span<uint8_t> buf, int timeout_ms) {
    if (timeout_ms >= 0) {
        pollfd pfd{fd_, POLLIN, 0};
        int rc = ::poll(&pfd, 1, timeout_ms);
        if (rc == 0) return {ReadStatus::Timeout, 0};
        if (rc < 0) return {ReadStatus::Eof, 0};
    }
    ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
    if (n > 0) return {ReadStatus::Data, static_cast<size_t>(n)};
    return {ReadStatus::Eof, 0};
}

bool TcpStream::write_all(ByteView data) {
    size_t off = 0;
    while (off < data.size()) {
        ssize_t n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
        if (n <= 0) {
            if (n < 0 && errno == EINTR) continue;
            return false;
        }
        off += static_cast<size_t>(n);
    }
    return true;
}

void TcpStream::shutdown() {
    ::shutdown(fd_, SHUT_RDWR);
}

std::unique_ptr<Stream> tcp_connect(const std::string& host, uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    std::string port_str = std::to_string(port);
    if (::getaddrinfo(host.c_str(), port_str.c_str(), &hints, &res) != 0 || !res)
        throw NetError("cannot resolve " + host);
    int fd = -1;
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw NetError("cannot connect to " + host + ":" + port_str);
    return std::make_unique<TcpStream>(fd);
}

Listener::Listener(const std::string& host, uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    std::string port_str = std::to_string(port);
    if (::getaddrinfo(host.empty() ? nullptr : host.c_str(), port_str.c_str(), &hints, &res) != 0 ||
        !res)
        throw NetError("cannot resolve bind address " + host);
    int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (fd < 0) {
        ::freeaddrinfo(res);
        throw NetError("socket: " + std::string(strerror(errno)));
    }
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(fd, res->ai_addr, res->ai_addrlen) != 0 || ::listen(fd, 128) != 0) {
        std::string why = strerror(errno);
        ::close(fd);
        ::freeaddrinfo(res);
        throw NetError("bind " + host + ":" + port_str + ": " + why);
    }
    ::freeaddrinfo(res);

    sockaddr_storage bound{};
    socklen_t len = sizeof(bound);
    if (::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len) == 0) {
        if (bound.ss_family == AF_INET)
            port_ = ntohs(reinterpret_cast<sockaddr_in*>(&bound)->sin_port);
        else if (bound.ss_family == AF_INET6)
            port_ = ntohs(reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port);
    }
    fd_ = fd;
}

Listener::~Listener() {
    close();
    if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<Stream> accept_stream(int listen_fd) {
    int fd = ::accept(listen_fd, nullptr, nullptr);
    if (fd < 0) return nullptr;
    return std::make_unique<TcpStream>(fd);
}

std::unique_ptr<Stream> Listener::accept() {
    if (fd_ < 0) return nullptr;
    return accept_stream(fd_);
}

void Listener::close() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);  // wakes a blocked accept()
}

std::pair<std::string, uint16_t> parse_host_port(const std::string& address,
                                                 uint16_t default_port) {
    auto colon = address.rfind(':');
    if (colon == std::string::npos) return {address, default_port};
    std::string host = address.substr(0, colon);
    std::string_view port_sv(address.data() + colon + 1, address.size() - colon - 1);
    uint16_t port = 0;
    auto [ptr, ec] = std::from_chars(port_sv.begin(), port_sv.end(), port);
    if (ec != std::errc{} || ptr != port_sv.end() || port == 0)
        throw NetError("bad port in address: " + address);
    return {host, port};
}

}  // namespace mqttz::net
