#pragma once

#include <atomic>
#include <condition_variable>
#include <fstream>
#include <memory>
#include <set>
#include <thread>

#include "mqttz/broker/core.hpp"
#include "mqttz/net/stream.hpp"
#include "mqttz/net/tls.hpp"

namespace mqttz::broker {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BrokerConfig {
    std::string listen_address = "127.0.0.1:1883";
    std::string tls_cert_path;  // TLS needs both paths; otherwise set plaintext
    std::string tls_key_path;
    bool plaintext = false;
    std::string acl_path;
    Bytes root_key;  // 32 bytes
    std::string storage_dir;
    size_t cache_capacity = 128;
    size_t max_payload = 1 << 20;        // largest accepted publish payload
    std::string metrics_csv_path;        // empty: no CSV
    size_t session_queue_limit = 1000;   // outbound packets per session
};

/// 32-byte root key from a 64-hex-char file, or from MQTTZ_ROOT_KEY when the
/// path is empty. Throws ConfigError.
Bytes load_root_key(const std::string& path);

/// The REE-side broker service: accepts connections (TLS or plaintext),
/// drives BrokerCore, samples metrics at 1 Hz.
class Broker {
public:
    /// Validates config, loads the ACL and initializes the trusted core.
    /// Throws ConfigError on any of them.
    explicit Broker(BrokerConfig config);
    ~Broker();

    Broker(const Broker&) = delete;
    Broker& operator=(const Broker&) = delete;

    /// Binds and starts serving. Throws ConfigError (tls), net::NetError (bind).
    void start();

    /// Closes the listener and all sessions, flushes metrics. Idempotent.
    void stop();

    uint16_t port() const { return port_; }
    std::array<uint8_t, 32> tee_public_identity() const;

    BrokerMetrics& metrics() { return metrics_; }
    MetricsSample sample_metrics() const { return metrics_copy_last(); }
    size_t live_sessions() const;

private:
    class Session;
    friend class Session;

    void accept_loop();
    void sampler_loop();
    void write_sample_csv(const MetricsSample& sample);
    MetricsSample metrics_copy_last() const;
    void session_finished(const std::shared_ptr<Session>& session);

    BrokerConfig config_;
    BrokerMetrics metrics_;
    std::unique_ptr<tee::TrustedCore> trusted_core_;
    std::unique_ptr<BrokerCore> core_;
    std::unique_ptr<net::TlsServerContext> tls_;
    std::unique_ptr<net::Listener> listener_;
    uint16_t port_ = 0;

    std::thread accept_thread_;
    std::thread sampler_thread_;
    std::atomic<bool> stopping_{false};
    bool started_ = false;

    mutable std::mutex sessions_mu_;
    std::condition_variable sessions_cv_;
    std::set<std::shared_ptr<Session>> sessions_;

    std::ofstream metrics_csv_;
};

}  // namespace mqttz::broker
