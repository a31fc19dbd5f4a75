#pragma once

#include <memory>
#include <mutex>
#include <string>

#include "mqttz/broker/acl.hpp"
#include "mqttz/broker/metrics.hpp"
#include "mqttz/broker/subscriptions.hpp"
#include "mqttz/tee/trusted_core.hpp"
#include "mqttz/wire/packet.hpp"

namespace mqttz::broker {

/// Where the core hands packets for delivery. Implemented by the transport
/// layer as a bounded per-session outbound queue.
class SessionSink {
public:
    virtual ~SessionSink() = default;
    virtual void enqueue(const wire::Packet& packet) = 0;
    virtual void request_close() = 0;
};

/// Connection-handling logic with no transport attached: session registry,
/// subscription table, ACL enforcement and the per-publish re-encryption
/// fan-out. The payload stays an opaque ciphertext envelope throughout; the
/// only component that can transform it is the trusted core behind its own
/// boundary.
class BrokerCore {
public:
    BrokerCore(AclRuleSet acl, tee::TrustedCore& trusted_core, BrokerMetrics& metrics,
               size_t max_payload);

    struct ConnectOutcome {
        wire::ConnAck ack;
        bool accepted = false;
        uint64_t token = 0;  // registration handle for session_closed()
    };

    /// Registers the session (replacing a live session with the same id, which
    /// is told to disconnect). A rejected connect only yields the failure ack.
    ConnectOutcome handle_connect(const wire::Connect& connect,
                                  std::shared_ptr<SessionSink> sink);

    /// Per-filter ACL grants; nullopt when the packet violates filter rules
    /// (protocol error, the caller must close).
    std::optional<wire::SubAck> handle_subscribe(const std::string& client_id,
                                                 const wire::Subscribe& subscribe);

    /// Fig-style pipeline: handshake routing, envelope + origin checks, ACL,
    /// subscriber lookup, one trusted-core re-encryption per subscriber, then
    /// delivery. Per-subscriber failures drop that delivery only.
    void handle_publish(const std::string& client_id, const wire::Publish& publish);

    /// Removes the registration and its subscriptions; `token` ensures a late
    /// close after an id takeover does not remove the successor.
    void session_closed(const std::string& client_id, uint64_t token);

    size_t live_sessions() const;

private:
    void handle_handshake(const std::string& client_id, const wire::Publish& publish);
    void deliver_plain(const std::string& topic, const wire::Publish& packet);

    struct SessionEntry {
        uint64_t token = 0;
        std::shared_ptr<SessionSink> sink;
        std::set<std::string> granted_filters;
    };

    AclRuleSet acl_;
    tee::TrustedCore& trusted_core_;
    BrokerMetrics& metrics_;
    size_t max_payload_;

    mutable std::mutex mu_;
    uint64_t next_token_ = 1;
    std::map<std::string, SessionEntry> sessions_;
    SubscriptionTable subscriptions_;
};

}  // namespace mqttz::broker
