#pragma once

#include <string_view>
#include <vector>

namespace mqttz::wire {

/// Levels reserved for the broker's own control topics. Filters whose first
/// level is a wildcard never match names under this prefix.
inline constexpr std::string_view kReservedPrefix = "$mqttz/";
inline constexpr std::string_view kHandshakeTopic = "$mqttz/handshake";
inline constexpr std::string_view kResponseTopicPrefix = "$mqttz/resp/";

std::vector<std::string_view> split_levels(std::string_view topic);

/// Topic name: non-empty, no wildcards, no NUL.
bool valid_topic_name(std::string_view name);

/// Topic filter: '+' occupies a whole level, '#' only as the final level.
bool valid_topic_filter(std::string_view filter);

/// MQTT match semantics plus the reserved-prefix rule above.
/// Both arguments must already satisfy their validity predicates.
bool topic_matches(std::string_view filter, std::string_view name);

/// True when every name matched by `requested` is also matched by `rule`.
/// Used for ACL checks on subscription filters.
bool filter_covers(std::string_view rule, std::string_view requested);

/// Client identifier rule for CONNECT: 1..23 bytes of [0-9a-zA-Z_-].
bool valid_client_id(std::string_view id);

}  // namespace mqttz::wire
