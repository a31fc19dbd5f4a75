#include "mqttz/broker/acl.hpp"

#include <fstream>
#include <sstream>

#include "mqttz/wire/topic.hpp"

namespace mqttz::broker {

AclRuleSet AclRuleSet::parse(std::string_view text) {
    std::vector<AclRule> rules;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;

        std::istringstream fields(line);
        std::string principal, action, filter, extra;
        fields >> principal >> action >> filter;
        auto fail = [&](const std::string& why) {
            throw AclParseError("acl line " + std::to_string(line_no) + ": " + why);
        };
        if (filter.empty()) fail("expected <principal> <pub|sub|pubsub> <filter>");
        if (fields >> extra) fail("trailing token '" + extra + "'");
        if (principal != "*" && !wire::valid_client_id(principal))
            fail("bad principal '" + principal + "'");
        if (!wire::valid_topic_filter(filter)) fail("bad topic filter '" + filter + "'");

        AclRule rule;
        rule.principal = principal;
        rule.filter = filter;
        if (action == "pub")
            rule.allow_pub = true;
        else if (action == "sub")
            rule.allow_sub = true;
        else if (action == "pubsub")
            rule.allow_pub = rule.allow_sub = true;
        else
            fail("bad action '" + action + "'");
        rules.push_back(std::move(rule));
    }
    return AclRuleSet(std::move(rules));
}

AclRuleSet AclRuleSet::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw AclParseError("cannot read acl file " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse(text);
}

bool AclRuleSet::check(std::string_view client_id, AclAction action,
                       std::string_view topic) const {
    // built-ins guard the reserved namespace regardless of file rules
    if (topic == wire::kHandshakeTopic) return action == AclAction::Pub;
    if (topic.starts_with(wire::kResponseTopicPrefix)) {
        return action == AclAction::Sub &&
               topic.substr(wire::kResponseTopicPrefix.size()) == client_id;
    }
    if (topic == "$mqttz" || topic.starts_with(wire::kReservedPrefix)) return false;

    for (const auto& rule : rules_) {
        if (rule.principal != "*" && rule.principal != client_id) continue;
        bool action_ok = action == AclAction::Pub ? rule.allow_pub : rule.allow_sub;
        if (!action_ok) continue;
        bool topic_ok = action == AclAction::Pub ? wire::topic_matches(rule.filter, topic)
                                                 : wire::filter_covers(rule.filter, topic);
        if (topic_ok) return true;
    }
    return false;
}

}  // namespace mqttz::broker
