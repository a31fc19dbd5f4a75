#include "mqttz/broker/server.hpp"

#include <cstdlib>
#include <deque>

#include "mqttz/wire/envelope.hpp"

namespace mqttz::broker {

Bytes load_root_key(const std::string& path) {
    std::string hex;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read root key file " + path);
        in >> hex;
    } else {
        const char* env = std::getenv("MQTTZ_ROOT_KEY");
        if (!env)
            throw ConfigError("no root key: give --root-key <file> or set MQTTZ_ROOT_KEY");
        hex = env;
    }
    auto bytes = hex_decode(hex);
    if (!bytes || bytes->size() != tee::kRootKeyLen)
        throw ConfigError("root key must be 64 hex characters");
    return *bytes;
}

// ---------------------------------------------------------------------------
// Session: one connection, one reader thread, one writer thread draining a
// bounded queue (drop-oldest on overflow). Delivery order per subscriber is
// the enqueue order.
// ---------------------------------------------------------------------------
class Broker::Session : public SessionSink, public std::enable_shared_from_this<Session> {
public:
    Session(Broker& broker, std::unique_ptr<net::Stream> stream)
        : broker_(broker), stream_(std::move(stream)) {}

    void start() {
        auto self = shared_from_this();
        std::thread([self] { self->run_reader(); }).detach();
        std::thread([self] { self->run_writer(); }).detach();
    }

    void enqueue(const wire::Packet& packet) override {
        Bytes encoded;
        try {
            encoded = wire::encode_packet(packet);
        } catch (const wire::EncodeError&) {
            return;  // nothing sane to send
        }
        std::lock_guard lock(mu_);
        if (draining_ || closing_) return;
        if (queue_.size() >= broker_.config_.session_queue_limit) {
            queue_.pop_front();  // drop-oldest for slow subscribers
            broker_.metrics_.counters.queue_overflow.fetch_add(1, std::memory_order_relaxed);
            broker_.metrics_.counters.publishes_dropped.fetch_add(1, std::memory_order_relaxed);
        }
        queue_.push_back(std::move(encoded));
        cv_.notify_all();
    }

    // drain the outbound queue, then close
    void request_close() override {
        std::lock_guard lock(mu_);
        draining_ = true;
        cv_.notify_all();
    }

    // immediate teardown
    void abort_close() {
        {
            std::lock_guard lock(mu_);
            closing_ = true;
            cv_.notify_all();
        }
        stream_->shutdown();
    }

private:
    bool should_stop() {
        std::lock_guard lock(mu_);
        return draining_ || closing_;
    }

    void run_reader() {
        Bytes buffer;
        std::array<uint8_t, 16384> chunk;
        const uint32_t max_frame =
            static_cast<uint32_t>(broker_.config_.max_payload) + 65536;

        while (!should_stop()) {
            auto r = stream_->read_some(chunk, 250);
            if (r.status == net::Stream::ReadStatus::Timeout) continue;
            if (r.status == net::Stream::ReadStatus::Eof) break;
            buffer.insert(buffer.end(), chunk.begin(), chunk.begin() + r.n);

            size_t off = 0;
            bool fatal = false;
            while (off < buffer.size()) {
                auto d = wire::decode_packet(
                    ByteView(buffer.data() + off, buffer.size() - off), max_frame);
                if (d.status == wire::DecodeStatus::NeedMore) break;
                if (d.status != wire::DecodeStatus::Ok) {
                    fatal = true;  // protocol violation: close the connection
                    break;
                }
                off += d.consumed;
                if (!dispatch(d.packet)) {
                    fatal = true;
                    break;
                }
            }
            buffer.erase(buffer.begin(), buffer.begin() + static_cast<ptrdiff_t>(off));
            if (fatal) break;
        }

        if (connected_) broker_.core_->session_closed(client_id_, token_);
        request_close();
        reader_done_ = true;
    }

    // false closes the connection (after the queue drains)
    bool dispatch(const wire::Packet& packet) {
        if (!connected_) {
            auto* connect = std::get_if<wire::Connect>(&packet);
            if (!connect) return false;  // anything before CONNECT is a violation
            auto outcome = broker_.core_->handle_connect(*connect, shared_from_this());
            enqueue(outcome.ack);
            if (!outcome.accepted) return false;
            connected_ = true;
            client_id_ = connect->client_id;
            token_ = outcome.token;
            bytes_out_ = broker_.metrics_.client_bytes_counter(client_id_);
            return true;
        }
        if (std::holds_alternative<wire::Connect>(packet)) return false;  // second CONNECT
        if (auto* publish = std::get_if<wire::Publish>(&packet)) {
            broker_.core_->handle_publish(client_id_, *publish);
            return true;
        }
        if (auto* subscribe = std::get_if<wire::Subscribe>(&packet)) {
            auto ack = broker_.core_->handle_subscribe(client_id_, *subscribe);
            if (!ack) return false;  // malformed filter or session gone
            enqueue(*ack);
            return true;
        }
        if (std::holds_alternative<wire::PingReq>(packet)) {
            enqueue(wire::PingResp{});
            return true;
        }
        if (std::holds_alternative<wire::Disconnect>(packet)) return false;  // orderly close
        return false;  // CONNACK/SUBACK/PINGRESP have no business arriving here
    }

    void run_writer() {
        while (true) {
            Bytes next;
            {
                std::unique_lock lock(mu_);
                cv_.wait(lock, [this] { return !queue_.empty() || draining_ || closing_; });
                if (closing_) break;
                if (queue_.empty()) {
                    if (draining_) break;
                    continue;
                }
                next = std::move(queue_.front());
                queue_.pop_front();
            }
            if (!stream_->write_all(next)) {
                std::lock_guard lock(mu_);
                closing_ = true;
                break;
            }
            if (bytes_out_) bytes_out_->fetch_add(next.size(), std::memory_order_relaxed);
        }
        stream_->shutdown();
        // the writer exits last on the drain path; wait for the reader too
        while (!reader_done_) std::this_thread::sleep_for(std::chrono::milliseconds(10));
        broker_.session_finished(shared_from_this());
    }

    Broker& broker_;
    std::unique_ptr<net::Stream> stream_;

    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Bytes> queue_;
    bool draining_ = false;
    bool closing_ = false;
    std::atomic<bool> reader_done_{false};

    bool connected_ = false;
    std::string client_id_;
    uint64_t token_ = 0;
    std::shared_ptr<std::atomic<uint64_t>> bytes_out_;
};

// ---------------------------------------------------------------------------
// Broker
// ---------------------------------------------------------------------------

Broker::Broker(BrokerConfig config) : config_(std::move(config)) {
    bool tls = !config_.tls_cert_path.empty() || !config_.tls_key_path.empty();
    if (tls && config_.plaintext)
        throw ConfigError("tls-config-error: both TLS and plaintext mode requested");
    if (!tls && !config_.plaintext)
        throw ConfigError(
            "tls-config-error: choose --tls-cert/--tls-key or explicit --plaintext");
    if (tls && (config_.tls_cert_path.empty() || config_.tls_key_path.empty()))
        throw ConfigError("tls-config-error: need both --tls-cert and --tls-key");
    if (config_.max_payload < wire::EncryptedEnvelope::kMinLen)
        throw ConfigError("max payload must be at least 47 bytes (one empty envelope)");
    if (config_.cache_capacity < 1) throw ConfigError("cache capacity must be >= 1");
    if (config_.storage_dir.empty()) throw ConfigError("storage directory required");

    AclRuleSet acl;
    try {
        acl = AclRuleSet::load(config_.acl_path);
    } catch (const AclParseError& e) {
        throw ConfigError(e.what());
    }

    if (tls) {
        try {
            tls_ = std::make_unique<net::TlsServerContext>(config_.tls_cert_path,
                                                           config_.tls_key_path);
        } catch (const net::NetError& e) {
            throw ConfigError("tls-config-error: " + std::string(e.what()));
        }
    }

    auto init = tee::TrustedCore::init(config_.root_key, config_.storage_dir,
                                       config_.cache_capacity);
    if (init.status != tee::CoreStatus::Ok)
        throw ConfigError(std::string("trusted-core-init-failure: ") + tee::to_string(init.status));
    trusted_core_ = std::move(init.core);

    core_ = std::make_unique<BrokerCore>(std::move(acl), *trusted_core_, metrics_,
                                         config_.max_payload);
}

Broker::~Broker() {
    stop();
}

void Broker::start() {
    auto [host, port] = net::parse_host_port(config_.listen_address);
    listener_ = std::make_unique<net::Listener>(host, port);
    port_ = listener_->port();

    if (!config_.metrics_csv_path.empty()) {
        metrics_csv_.open(config_.metrics_csv_path, std::ios::trunc);
        if (!metrics_csv_)
            throw ConfigError("cannot write metrics csv " + config_.metrics_csv_path);
        metrics_csv_ << "unix_ts,client_id,bytes_out,cpu_user_pct,cpu_sys_pct\n";
    }

    started_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
    sampler_thread_ = std::thread([this] { sampler_loop(); });
}

void Broker::stop() {
    if (!started_ || stopping_.exchange(true)) return;
    listener_->close();
    if (accept_thread_.joinable()) accept_thread_.join();

    std::vector<std::shared_ptr<Session>> live;
    {
        std::lock_guard lock(sessions_mu_);
        live.assign(sessions_.begin(), sessions_.end());
    }
    for (auto& s : live) s->request_close();
    {
        std::unique_lock lock(sessions_mu_);
        if (!sessions_cv_.wait_for(lock, std::chrono::seconds(3),
                                   [this] { return sessions_.empty(); })) {
            for (auto& s : sessions_) s->abort_close();
            sessions_cv_.wait(lock, [this] { return sessions_.empty(); });
        }
    }

    if (sampler_thread_.joinable()) sampler_thread_.join();
    write_sample_csv(metrics_.sample());  // final flush
    if (metrics_csv_.is_open()) metrics_csv_.close();
}

std::array<uint8_t, 32> Broker::tee_public_identity() const {
    return trusted_core_->public_identity();
}

size_t Broker::live_sessions() const {
    return core_->live_sessions();
}

void Broker::accept_loop() {
    while (!stopping_) {
        auto stream = listener_->accept();
        if (!stream) break;
        if (tls_) {
            stream = tls_->accept(std::move(stream));
            if (!stream) continue;  // failed TLS handshake
        }
        auto session = std::make_shared<Session>(*this, std::move(stream));
        {
            std::lock_guard lock(sessions_mu_);
            sessions_.insert(session);
        }
        session->start();
    }
}

void Broker::session_finished(const std::shared_ptr<Session>& session) {
    std::lock_guard lock(sessions_mu_);
    sessions_.erase(session);
    sessions_cv_.notify_all();
}

void Broker::sampler_loop() {
    auto next = std::chrono::steady_clock::now() + std::chrono::seconds(1);
    while (!stopping_) {
        std::this_thread::sleep_until(next);
        next += std::chrono::seconds(1);
        if (stopping_) break;
        write_sample_csv(metrics_.sample());
    }
}

void Broker::write_sample_csv(const MetricsSample& sample) {
    if (!metrics_csv_.is_open()) return;
    auto cpu_cols = [&]() -> std::string {
        std::string out = ",";
        if (sample.cpu_user_pct) out += std::to_string(*sample.cpu_user_pct);
        out += ",";
        if (sample.cpu_sys_pct) out += std::to_string(*sample.cpu_sys_pct);
        return out;
    };
    if (sample.clients.empty()) {
        metrics_csv_ << sample.unix_ts << ",,0" << cpu_cols() << "\n";
    } else {
        for (const auto& c : sample.clients)
            metrics_csv_ << sample.unix_ts << "," << c.client_id << "," << c.bytes_out
                         << cpu_cols() << "\n";
    }
    metrics_csv_.flush();
}

MetricsSample Broker::metrics_copy_last() const {
    return metrics_.last_sample();
}

}  // namespace mqttz::broker
