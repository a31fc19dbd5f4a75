#pragma once

#include "mqttz/net/stream.hpp"

namespace mqttz::net {

class TcpStream final : public Stream {
public:
    explicit TcpStream(int fd);
    ~TcpStream() override;

    TcpStream(const TcpStream&) = delete;
    TcpStream& operator=(const TcpStream&) = delete;

    ReadResult read_some(std::span<uint8_t> buf, int timeout_ms) override;
    bool write_all(ByteView data) override;
    void shutdown() override;

    int fd() const { return fd_; }
    /// Transfers ownership of the descriptor (used when upgrading to TLS).
    int release_fd() {
        int fd = fd_;
        fd_ = -1;
        return fd;
    }

private:
    int fd_;
};

}  // namespace mqttz::net
