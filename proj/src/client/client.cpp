#include "mqttz/client/client.hpp"

#include <chrono>

#include "mqttz/client/key_wrap.hpp"
#include "mqttz/crypto/envelope_seal.hpp"
#include "mqttz/net/tls.hpp"
#include "mqttz/wire/envelope.hpp"
#include "mqttz/wire/topic.hpp"

namespace mqttz::client {

using Clock = std::chrono::steady_clock;

MqttClient::MqttClient(ClientConfig config) : config_(std::move(config)) {
    if (!wire::valid_client_id(config_.client_id) ||
        config_.client_id.size() > wire::EncryptedEnvelope::kOriginIdLen)
        throw ClientError("invalid client id '" + config_.client_id + "'");
}

MqttClient::~MqttClient() {
    try {
        disconnect();
    } catch (...) {
    }
}

void MqttClient::connect(std::unique_ptr<net::Stream> stream) {
    if (stream_) throw ClientError("already connected");
    if (stream)
        stream_ = std::move(stream);
    else if (config_.plaintext_transport)
        stream_ = net::tcp_connect(config_.broker_host, config_.broker_port);
    else
        stream_ = net::tls_connect(config_.broker_host, config_.broker_port, config_.ca_file);

    wire::Connect c;
    c.client_id = config_.client_id;
    c.keep_alive = config_.keep_alive;
    send(c);

    auto reply = read_packet(config_.handshake_timeout_ms);
    if (!reply) throw ClientError("timeout waiting for CONNACK");
    auto* ack = std::get_if<wire::ConnAck>(&*reply);
    if (!ack) throw ClientError("expected CONNACK");
    if (ack->reason_code != wire::reason::kSuccess) {
        stream_.reset();
        throw ClientError("connection refused, reason 0x" +
                          hex_encode(Bytes{ack->reason_code}));
    }
}

void MqttClient::disconnect() {
    if (!stream_) return;
    send(wire::Disconnect{});
    stream_->shutdown();
    stream_.reset();
    inbound_.clear();
}

void MqttClient::send(const wire::Packet& packet) {
    if (!stream_) throw ClientError("not connected");
    if (!stream_->write_all(wire::encode_packet(packet)))
        throw ClientError("connection lost while writing");
}

std::optional<wire::Packet> MqttClient::read_packet(int timeout_ms) {
    if (!stream_) throw ClientError("not connected");
    auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
    std::array<uint8_t, 16384> chunk;
    while (true) {
        auto d = wire::decode_packet(inbound_,
                                     static_cast<uint32_t>(config_.max_payload) + 65536);
        if (d.status == wire::DecodeStatus::Ok) {
            inbound_.erase(inbound_.begin(), inbound_.begin() + static_cast<ptrdiff_t>(d.consumed));
            return std::move(d.packet);
        }
        if (d.status != wire::DecodeStatus::NeedMore)
            throw ClientError("protocol error from broker: " + d.error);

        auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - Clock::now());
        if (remaining.count() <= 0) return std::nullopt;
        auto r = stream_->read_some(chunk, static_cast<int>(remaining.count()));
        if (r.status == net::Stream::ReadStatus::Timeout) return std::nullopt;
        if (r.status == net::Stream::ReadStatus::Eof)
            throw ClientError("connection closed by broker");
        inbound_.insert(inbound_.end(), chunk.begin(), chunk.begin() + r.n);
    }
}

bool MqttClient::subscribe(std::string_view filter) {
    if (!wire::valid_topic_filter(filter)) throw ClientError("invalid topic filter");
    wire::Subscribe sub;
    sub.packet_id = next_packet_id_++;
    if (next_packet_id_ == 0) next_packet_id_ = 1;
    sub.entries.push_back({std::string(filter), 0});
    send(sub);

    auto deadline = Clock::now() + std::chrono::milliseconds(config_.handshake_timeout_ms);
    while (true) {
        auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - Clock::now());
        if (remaining.count() <= 0) throw ClientError("timeout waiting for SUBACK");
        auto packet = read_packet(static_cast<int>(remaining.count()));
        if (!packet) throw ClientError("timeout waiting for SUBACK");
        if (auto* ack = std::get_if<wire::SubAck>(&*packet)) {
            if (ack->packet_id != sub.packet_id) continue;
            return !ack->reason_codes.empty() &&
                   ack->reason_codes[0] == wire::reason::kGrantedQos0;
        }
        if (auto* publish = std::get_if<wire::Publish>(&*packet)) {
            if (auto ev = to_event(*publish)) pending_.push_back(std::move(*ev));
            continue;
        }
        if (std::holds_alternative<wire::Disconnect>(*packet))
            throw ClientError("broker disconnected the session");
        // PINGRESP and anything else benign: keep waiting
    }
}

HandshakeStatus MqttClient::handshake() {
    const std::string resp_topic = std::string(wire::kResponseTopicPrefix) + config_.client_id;
    if (!subscribe(resp_topic))
        throw ClientError("broker denied the response-topic subscription");

    Bytes correlation(8);
    crypto::random_bytes(correlation);

    wire::Publish request;
    request.topic = std::string(wire::kHandshakeTopic);
    request.properties.response_topic = resp_topic;
    request.properties.correlation_data = correlation;
    request.payload = wrap_key(config_.key, config_.tee_public, config_.client_id);
    send(request);

    auto deadline = Clock::now() + std::chrono::milliseconds(config_.handshake_timeout_ms);
    while (true) {
        auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - Clock::now());
        if (remaining.count() <= 0) return HandshakeStatus::Timeout;
        auto packet = read_packet(static_cast<int>(remaining.count()));
        if (!packet) return HandshakeStatus::Timeout;
        auto* publish = std::get_if<wire::Publish>(&*packet);
        if (!publish) {
            if (std::holds_alternative<wire::Disconnect>(*packet))
                throw ClientError("broker disconnected the session");
            continue;
        }
        if (publish->topic != resp_topic) {
            if (auto ev = to_event(*publish)) pending_.push_back(std::move(*ev));
            continue;
        }
        if (publish->properties.correlation_data &&
            *publish->properties.correlation_data != correlation)
            continue;  // stale reply from an earlier attempt
        if (publish->payload.empty()) return HandshakeStatus::RejectedInternal;
        switch (publish->payload[0]) {
            case 0x00:
                provisioned_ = true;
                return HandshakeStatus::Ok;
            case 0x01:
                return HandshakeStatus::RejectedBadBlob;
            default:
                return HandshakeStatus::RejectedInternal;
        }
    }
}

void MqttClient::publish_encrypted(std::string_view topic, ByteView plaintext) {
    if (!provisioned_) throw ClientError("not-provisioned: run handshake() first");
    if (plaintext.size() + wire::EncryptedEnvelope::kMinLen > config_.max_payload)
        throw ClientError("payload-too-large");
    auto env = crypto::seal_envelope(config_.key, config_.client_id, plaintext);
    wire::Publish p;
    p.topic = std::string(topic);
    p.payload = wire::encode_envelope(env);
    send(p);
}

std::optional<MqttClient::Event> MqttClient::to_event(const wire::Publish& publish) {
    // control-plane replies are consumed by handshake(), not surfaced
    if (publish.topic.starts_with(wire::kReservedPrefix)) return std::nullopt;
    auto decoded = wire::decode_envelope(publish.payload);
    if (!decoded.ok) return MessageError{publish.topic, "envelope-decode-failure"};
    auto plaintext = crypto::open_envelope(config_.key, decoded.envelope);
    if (!plaintext) return MessageError{publish.topic, "auth-failure"};
    return Message{publish.topic, std::move(*plaintext)};
}

std::optional<MqttClient::Event> MqttClient::poll(int timeout_ms) {
    if (!pending_.empty()) {
        Event ev = std::move(pending_.front());
        pending_.pop_front();
        return ev;
    }
    auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
    while (true) {
        auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - Clock::now());
        if (remaining.count() < 0) return std::nullopt;
        auto packet = read_packet(static_cast<int>(remaining.count()));
        if (!packet) return std::nullopt;
        if (auto* publish = std::get_if<wire::Publish>(&*packet)) {
            if (auto ev = to_event(*publish)) return ev;
            continue;
        }
        if (std::holds_alternative<wire::Disconnect>(*packet))
            throw ClientError("broker disconnected the session");
        // PINGRESP etc: ignore
    }
}

void MqttClient::subscribe_decrypting(std::string_view filter,
                                      const std::function<bool(Event)>& sink) {
    if (!subscribe(filter)) throw ClientError("subscription not authorized");
    while (true) {
        auto ev = poll(250);
        if (!ev) continue;
        if (!sink(std::move(*ev))) return;
    }
}

}  // namespace mqttz::client
