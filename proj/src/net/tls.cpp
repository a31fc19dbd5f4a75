#include "mqttz/net/tls.hpp"

#include <arpa/inet.h>
#include <openssl/err.h>
#include <openssl/ssl.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include "mqttz/net/tcp_stream.hpp"

namespace mqttz::net {

namespace {

std::string openssl_error() {
    char buf[256];
    ERR_error_string_n(ERR_get_error(), buf, sizeof(buf));
    ERR_clear_error();
    return buf;
}

class TlsStream final : public Stream {
public:
    TlsStream(SSL* ssl, int fd) : ssl_(ssl), fd_(fd) {}

    ~TlsStream() override {
        SSL_free(ssl_);
        if (fd_ >= 0) ::close(fd_);
    }

    ReadResult read_some(std::span<uint8_t> buf, int timeout_ms) override {
        if (timeout_ms >= 0 && SSL_pending(ssl_) == 0) {
            pollfd pfd{fd_, POLLIN, 0};
            int rc = ::poll(&pfd, 1, timeout_ms);
            if (rc == 0) return {ReadStatus::Timeout, 0};
            if (rc < 0) return {ReadStatus::Eof, 0};
        }
        int n = SSL_read(ssl_, buf.data(), static_cast<int>(buf.size()));
        if (n > 0) return {ReadStatus::Data, static_cast<size_t>(n)};
        ERR_clear_error();
        return {ReadStatus::Eof, 0};
    }

    bool write_all(ByteView data) override {
        size_t off = 0;
        while (off < data.size()) {
            int n = SSL_write(ssl_, data.data() + off, static_cast<int>(data.size() - off));
            if (n <= 0) {
                ERR_clear_error();
                return false;
            }
            off += static_cast<size_t>(n);
        }
        return true;
    }

    void shutdown() override { ::shutdown(fd_, SHUT_RDWR); }

private:
    SSL* ssl_;
    int fd_;
};

struct CtxFree {
    void operator()(SSL_CTX* p) const { SSL_CTX_free(p); }
};
using CtxPtr = std::unique_ptr<SSL_CTX, CtxFree>;

}  // namespace

struct TlsServerContext::Impl {
    CtxPtr ctx;
};

TlsServerContext::TlsServerContext(const std::string& cert_path, const std::string& key_path)
    : impl_(std::make_unique<Impl>()) {
    impl_->ctx.reset(SSL_CTX_new(TLS_server_method()));
    if (!impl_->ctx) throw NetError("SSL_CTX_new: " + openssl_error());
    SSL_CTX_set_min_proto_version(impl_->ctx.get(), TLS1_2_VERSION);
    if (SSL_CTX_use_certificate_chain_file(impl_->ctx.get(), cert_path.c_str()) != 1)
        throw NetError("cannot load certificate " + cert_path + ": " + openssl_error());
    if (SSL_CTX_use_PrivateKey_file(impl_->ctx.get(), key_path.c_str(), SSL_FILETYPE_PEM) != 1)
        throw NetError("cannot load key " + key_path + ": " + openssl_error());
    if (SSL_CTX_check_private_key(impl_->ctx.get()) != 1)
        throw NetError("certificate/key mismatch: " + openssl_error());
}

TlsServerContext::~TlsServerContext() = default;

std::unique_ptr<Stream> TlsServerContext::accept(std::unique_ptr<Stream> plain) {
    auto* tcp = dynamic_cast<TcpStream*>(plain.get());
    if (!tcp) return nullptr;
    int fd = tcp->release_fd();
    SSL* ssl = SSL_new(impl_->ctx.get());
    if (!ssl) {
        ::close(fd);
        return nullptr;
    }
    SSL_set_fd(ssl, fd);
    if (SSL_accept(ssl) != 1) {
        ERR_clear_error();
        SSL_free(ssl);
        ::close(fd);
        return nullptr;
    }
    return std::make_unique<TlsStream>(ssl, fd);
}

std::unique_ptr<Stream> tls_connect(const std::string& host, uint16_t port,
                                    const std::string& ca_file) {
    CtxPtr ctx(SSL_CTX_new(TLS_client_method()));
    if (!ctx) throw NetError("SSL_CTX_new: " + openssl_error());
    SSL_CTX_set_min_proto_version(ctx.get(), TLS1_2_VERSION);
    if (!ca_file.empty()) {
        if (SSL_CTX_load_verify_locations(ctx.get(), ca_file.c_str(), nullptr) != 1)
            throw NetError("cannot load trust root " + ca_file + ": " + openssl_error());
    } else {
        SSL_CTX_set_default_verify_paths(ctx.get());
    }
    SSL_CTX_set_verify(ctx.get(), SSL_VERIFY_PEER, nullptr);

    auto plain = tcp_connect(host, port);
    int fd = static_cast<TcpStream*>(plain.get())->release_fd();

    SSL* ssl = SSL_new(ctx.get());
    if (!ssl) {
        ::close(fd);
        throw NetError("SSL_new: " + openssl_error());
    }
    // Hostname (or IP) must match the server certificate.
    in6_addr scratch6;
    in_addr scratch4;
    X509_VERIFY_PARAM* param = SSL_get0_param(ssl);
    if (inet_pton(AF_INET, host.c_str(), &scratch4) == 1 ||
        inet_pton(AF_INET6, host.c_str(), &scratch6) == 1)
        X509_VERIFY_PARAM_set1_ip_asc(param, host.c_str());
    else
        SSL_set1_host(ssl, host.c_str());
    SSL_set_tlsext_host_name(ssl, host.c_str());
    SSL_set_fd(ssl, fd);
    if (SSL_connect(ssl) != 1) {
        std::string why = openssl_error();
        SSL_free(ssl);
        ::close(fd);
        throw NetError("TLS handshake with " + host + " failed: " + why);
    }
    return std::make_unique<TlsStream>(ssl, fd);
}

}  // namespace mqttz::net
