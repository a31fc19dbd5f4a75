#include "mqttz/broker/core.hpp"

#include "mqttz/wire/envelope.hpp"
#include "mqttz/wire/topic.hpp"

namespace mqttz::broker {

namespace {
// Client ids must also fit the envelope's 16-byte origin field, or the
// session could never publish nor be provisioned.
bool usable_client_id(const std::string& id) {
    return wire::valid_client_id(id) && id.size() <= wire::EncryptedEnvelope::kOriginIdLen;
}
}  // namespace

BrokerCore::BrokerCore(AclRuleSet acl, tee::TrustedCore& trusted_core, BrokerMetrics& metrics,
                       size_t max_payload)
    : acl_(std::move(acl)),
      trusted_core_(trusted_core),
      metrics_(metrics),
      max_payload_(max_payload) {}

BrokerCore::ConnectOutcome BrokerCore::handle_connect(const wire::Connect& connect,
                                                      std::shared_ptr<SessionSink> sink) {
    ConnectOutcome out;
    if (!usable_client_id(connect.client_id)) {
        out.ack.reason_code = wire::reason::kClientIdNotValid;
        return out;
    }

    std::shared_ptr<SessionSink> displaced;
    {
        std::lock_guard lock(mu_);
        auto it = sessions_.find(connect.client_id);
        if (it != sessions_.end()) {
            displaced = it->second.sink;
            subscriptions_.remove_session(connect.client_id);
            sessions_.erase(it);
        }
        SessionEntry entry;
        entry.token = next_token_++;
        entry.sink = std::move(sink);
        out.token = entry.token;
        sessions_.emplace(connect.client_id, std::move(entry));
    }
    if (displaced) {
        displaced->enqueue(wire::Disconnect{wire::reason::kSessionTakenOver});
        displaced->request_close();
    }
    out.ack.reason_code = wire::reason::kSuccess;
    out.accepted = true;
    return out;
}

std::optional<wire::SubAck> BrokerCore::handle_subscribe(const std::string& client_id,
                                                         const wire::Subscribe& subscribe) {
    wire::SubAck ack;
    ack.packet_id = subscribe.packet_id;
    std::lock_guard lock(mu_);
    auto session = sessions_.find(client_id);
    if (session == sessions_.end()) return std::nullopt;
    for (const auto& entry : subscribe.entries) {
        if (!wire::valid_topic_filter(entry.filter)) return std::nullopt;  // malformed-filter
        if (acl_.check(client_id, AclAction::Sub, entry.filter)) {
            subscriptions_.add(entry.filter, client_id);
            session->second.granted_filters.insert(entry.filter);
            ack.reason_codes.push_back(wire::reason::kGrantedQos0);
        } else {
            ack.reason_codes.push_back(wire::reason::kNotAuthorized);
        }
    }
    return ack;
}

void BrokerCore::handle_publish(const std::string& client_id, const wire::Publish& publish) {
    metrics_.counters.publishes_received.fetch_add(1, std::memory_order_relaxed);

    if (publish.topic == wire::kHandshakeTopic) {
        handle_handshake(client_id, publish);
        return;
    }

    if (publish.payload.size() > max_payload_) {
        metrics_.counters.envelope_malformed.fetch_add(1, std::memory_order_relaxed);
        metrics_.counters.publishes_dropped.fetch_add(1, std::memory_order_relaxed);
        return;
    }
    auto decoded = wire::decode_envelope(publish.payload);
    if (!decoded.ok) {
        metrics_.counters.envelope_malformed.fetch_add(1, std::memory_order_relaxed);
        metrics_.counters.publishes_dropped.fetch_add(1, std::memory_order_relaxed);
        return;
    }
    // the envelope must name the authenticated session as its origin
    if (decoded.envelope.origin_id_string() != client_id) {
        metrics_.counters.origin_mismatch.fetch_add(1, std::memory_order_relaxed);
        metrics_.counters.publishes_dropped.fetch_add(1, std::memory_order_relaxed);
        return;
    }
    if (!acl_.check(client_id, AclAction::Pub, publish.topic)) {
        metrics_.counters.acl_denied.fetch_add(1, std::memory_order_relaxed);
        metrics_.counters.publishes_dropped.fetch_add(1, std::memory_order_relaxed);
        return;
    }

    // snapshot matching subscribers, then re-encrypt outside the state lock
    std::vector<std::pair<std::string, std::shared_ptr<SessionSink>>> targets;
    {
        std::lock_guard lock(mu_);
        for (const auto& id : subscriptions_.subscribers_for(publish.topic)) {
            auto it = sessions_.find(id);
            if (it != sessions_.end()) targets.emplace_back(id, it->second.sink);
        }
    }

    for (auto& [subscriber_id, sink] : targets) {
        auto res = trusted_core_.reencrypt(client_id, subscriber_id, decoded.envelope);
        if (res.status != tee::CoreStatus::Ok) {
            // e.g. a subscriber that never provisioned a key: drop this one
            // delivery, the rest of the fan-out is unaffected
            metrics_.counters.reencrypt_failures.fetch_add(1, std::memory_order_relaxed);
            metrics_.counters.publishes_dropped.fetch_add(1, std::memory_order_relaxed);
            continue;
        }
        uint64_t total_ns = res.timings.retrieve_dec_key_ns + res.timings.decrypt_ns +
                            res.timings.retrieve_enc_key_ns + res.timings.encrypt_ns;
        metrics_.reencrypt_latency.record(total_ns);

        wire::Publish out;
        out.topic = publish.topic;
        out.payload = wire::encode_envelope(res.envelope);
        sink->enqueue(out);
        metrics_.counters.publishes_forwarded.fetch_add(1, std::memory_order_relaxed);
    }
}

void BrokerCore::handle_handshake(const std::string& client_id, const wire::Publish& publish) {
    const auto& response_topic = publish.properties.response_topic;
    if (!response_topic) {
        // no way to answer; drop
        metrics_.counters.handshakes_failed.fetch_add(1, std::memory_order_relaxed);
        return;
    }
    std::string expected = std::string(wire::kResponseTopicPrefix) + client_id;
    if (*response_topic != expected) {
        // a reply would be routed to some other client's response topic
        metrics_.counters.handshakes_failed.fetch_add(1, std::memory_order_relaxed);
        return;
    }

    auto status = trusted_core_.provision_key(client_id, publish.payload);
    uint8_t code;
    switch (status) {
        case tee::CoreStatus::Ok:
            code = 0x00;
            metrics_.counters.handshakes_ok.fetch_add(1, std::memory_order_relaxed);
            break;
        case tee::CoreStatus::BadBlobLength:
        case tee::CoreStatus::AuthFailure:
        case tee::CoreStatus::BadArgument:
            code = 0x01;
            metrics_.counters.handshakes_failed.fetch_add(1, std::memory_order_relaxed);
            break;
        default:
            code = 0x02;
            metrics_.counters.handshakes_failed.fetch_add(1, std::memory_order_relaxed);
            break;
    }

    wire::Publish reply;
    reply.topic = expected;
    reply.payload = {code};
    if (publish.properties.correlation_data)
        reply.properties.correlation_data = publish.properties.correlation_data;
    deliver_plain(expected, reply);
}

void BrokerCore::deliver_plain(const std::string& topic, const wire::Publish& packet) {
    std::vector<std::shared_ptr<SessionSink>> targets;
    {
        std::lock_guard lock(mu_);
        for (const auto& id : subscriptions_.subscribers_for(topic)) {
            auto it = sessions_.find(id);
            if (it != sessions_.end()) targets.push_back(it->second.sink);
        }
    }
    for (auto& sink : targets) sink->enqueue(packet);
}

void BrokerCore::session_closed(const std::string& client_id, uint64_t token) {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(client_id);
    if (it == sessions_.end() || it->second.token != token) return;
    subscriptions_.remove_session(client_id);
    sessions_.erase(it);
}

size_t BrokerCore::live_sessions() const {
    std::lock_guard lock(mu_);
    return sessions_.size();
}

}  // namespace mqttz::broker
