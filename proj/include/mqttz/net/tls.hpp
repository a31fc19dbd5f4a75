#pragma once

#include <memory>
#include <string>

#include "mqttz/net/stream.hpp"

namespace mqttz::net {

/// Server-side TLS context (certificate + private key in PEM files).
class TlsServerContext {
public:
    /// Throws NetError when the cert/key cannot be loaded or do not match.
    TlsServerContext(const std::string& cert_path, const std::string& key_path);
    ~TlsServerContext();

    TlsServerContext(const TlsServerContext&) = delete;
    TlsServerContext& operator=(const TlsServerContext&) = delete;

    /// Runs the TLS handshake over an accepted plain stream. nullptr when the
    /// handshake fails (the connection is dropped).
    std::unique_ptr<Stream> accept(std::unique_ptr<Stream> plain);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Client-side TLS connect with server-certificate verification against
/// `ca_file` (or the system defaults when empty). Throws NetError.
std::unique_ptr<Stream> tls_connect(const std::string& host, uint16_t port,
                                    const std::string& ca_file);

}  // namespace mqttz::net
