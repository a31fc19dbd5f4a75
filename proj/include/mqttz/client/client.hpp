#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>

#include "mqttz/crypto/primitives.hpp"
#include "mqttz/net/stream.hpp"
#include "mqttz/wire/packet.hpp"

namespace mqttz::client {

struct ClientConfig {
    std::string broker_host = "127.0.0.1";
    uint16_t broker_port = 1883;
    std::string client_id;
    crypto::Key256 key{};         // this client's symmetric key
    crypto::X25519Key tee_public{};  // pinned broker TEE identity
    bool plaintext_transport = false;
    std::string ca_file;          // TLS trust root; empty = system default
    int handshake_timeout_ms = 5000;
    size_t max_payload = 1 << 20;
    uint16_t keep_alive = 0;
};

struct ClientError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class HandshakeStatus { Ok, RejectedBadBlob, RejectedInternal, Timeout };

/// One instance, one connection. Calls on an instance are serialized by the
/// caller; independent instances run concurrently.
class MqttClient {
public:
    explicit MqttClient(ClientConfig config);
    ~MqttClient();

    /// Establishes transport + MQTT session. A pre-connected stream can be
    /// injected (tests wrap one with a byte tap).
    void connect(std::unique_ptr<net::Stream> stream = nullptr);
    void disconnect();
    bool connected() const { return stream_ != nullptr; }

    /// Two-step handshake, client side: subscribe to the private response
    /// topic, publish the wrapped key to the handshake topic, await the
    /// 1-byte status. Safe to repeat (re-keying).
    HandshakeStatus handshake();
    bool provisioned() const { return provisioned_; }

    /// Seals `plaintext` into an envelope under this client's key and
    /// publishes it (QoS 0). Requires a completed handshake.
    void publish_encrypted(std::string_view topic, ByteView plaintext);

    /// True when the broker granted the filter.
    bool subscribe(std::string_view filter);

    struct Message {
        std::string topic;
        Bytes plaintext;
    };
    struct MessageError {
        std::string topic;
        std::string reason;
    };
    using Event = std::variant<Message, MessageError>;

    /// Processes inbound traffic until one decrypted message (or per-message
    /// error) is available or `timeout_ms` elapses. Throws ClientError when
    /// the connection is gone.
    std::optional<Event> poll(int timeout_ms);

    /// Subscribes and pumps events into `sink` until it returns false or the
    /// connection drops. Per-message failures are reported, not fatal.
    void subscribe_decrypting(std::string_view filter, const std::function<bool(Event)>& sink);

private:
    std::optional<wire::Packet> read_packet(int timeout_ms);
    void send(const wire::Packet& packet);
    std::optional<Event> to_event(const wire::Publish& publish);

    ClientConfig config_;
    std::unique_ptr<net::Stream> stream_;
    Bytes inbound_;
    std::deque<Event> pending_;
    bool provisioned_ = false;
    uint16_t next_packet_id_ = 1;
};

}  // namespace mqttz::client
