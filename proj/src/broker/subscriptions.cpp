#include "mqttz/broker/subscriptions.hpp"

#include "mqttz/wire/topic.hpp"

namespace mqttz::broker {

std::set<std::string> SubscriptionTable::subscribers_for(std::string_view topic) const {
    std::set<std::string> out;
    for (const auto& [filter, ids] : filters_) {
        if (!wire::topic_matches(filter, topic)) continue;
        out.insert(ids.begin(), ids.end());
    }
    return out;
}

}  // namespace mqttz::broker
