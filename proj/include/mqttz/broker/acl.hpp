#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mqttz::broker {

enum class AclAction { Pub, Sub };

struct AclRule {
    std::string principal;  // client id or "*"
    bool allow_pub = false;
    bool allow_sub = false;
    std::string filter;
};

struct AclParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Ordered allow rules with implicit built-ins for the handshake topics.
/// Built-ins are evaluated before file rules, first match wins, and anything
/// not matched is denied:
///   - "$mqttz/handshake" is publish-only, for every principal;
///   - "$mqttz/resp/<id>" is subscribe-only, for principal <id> exactly;
///   - every other access under "$mqttz" is denied outright.
class AclRuleSet {
public:
    AclRuleSet() = default;
    explicit AclRuleSet(std::vector<AclRule> rules) : rules_(std::move(rules)) {}

    /// `<client-id|*> <pub|sub|pubsub> <topic-filter>` per line, '#'-prefixed
    /// comment lines and blank lines ignored. Throws AclParseError.
    static AclRuleSet parse(std::string_view text);
    static AclRuleSet load(const std::string& path);

    /// For Pub, `topic` is a concrete topic name matched against rule
    /// filters; for Sub it is the requested filter, which a rule grants only
    /// when it covers every name the request could match.
    bool check(std::string_view client_id, AclAction action, std::string_view topic) const;

    const std::vector<AclRule>& rules() const { return rules_; }

private:
    std::vector<AclRule> rules_;
};

}  // namespace mqttz::broker
