#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>

namespace mqttz::broker {

/// Topic-filter to subscriber mapping (the "MQTT DB" of the untrusted side).
/// Holds only live sessions; the caller synchronizes.
class SubscriptionTable {
public:
    void add(const std::string& filter, const std::string& client_id) {
        filters_[filter].insert(client_id);
    }

    void remove_session(const std::string& client_id) {
        for (auto it = filters_.begin(); it != filters_.end();) {
            it->second.erase(client_id);
            if (it->second.empty())
                it = filters_.erase(it);
            else
                ++it;
        }
    }

    /// Sessions holding at least one filter matching `topic`.
    std::set<std::string> subscribers_for(std::string_view topic) const;

    size_t filter_count() const { return filters_.size(); }

private:
    std::map<std::string, std::set<std::string>> filters_;
};

}  // namespace mqttz::broker
