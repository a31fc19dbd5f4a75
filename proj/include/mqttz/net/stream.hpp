#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>

#include "mqttz/bytes.hpp"

namespace mqttz::net {

struct NetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Byte stream over a connected socket (plain or TLS).
class Stream {
public:
    enum class ReadStatus { Data, Eof, Timeout };
    struct ReadResult {
        ReadStatus status = ReadStatus::Eof;
        size_t n = 0;
    };

    virtual ~Stream() = default;

    /// Reads up to buf.size() bytes. timeout_ms < 0 blocks indefinitely.
    /// Eof covers both orderly close and connection errors.
    virtual ReadResult read_some(std::span<uint8_t> buf, int timeout_ms) = 0;

    /// Writes the whole buffer; false once the peer is gone.
    virtual bool write_all(ByteView data) = 0;

    /// Unblocks any reader on another thread; further IO fails.
    virtual void shutdown() = 0;
};

/// Blocking TCP connect (getaddrinfo-based).
std::unique_ptr<Stream> tcp_connect(const std::string& host, uint16_t port);

class Listener {
public:
    /// Binds and listens; port 0 picks an ephemeral port. Throws NetError.
    Listener(const std::string& host, uint16_t port);
    ~Listener();

    Listener(const Listener&) = delete;
    Listener& operator=(const Listener&) = delete;

    /// Accepted connection, or nullptr after close().
    std::unique_ptr<Stream> accept();

    void close();
    uint16_t port() const { return port_; }

private:
    int fd_ = -1;
    uint16_t port_ = 0;
};

/// Splits "host:port". Throws NetError on bad input.
std::pair<std::string, uint16_t> parse_host_port(const std::string& address,
                                                 uint16_t default_port = 1883);

}  // namespace mqttz::net
