#include "mqttz/wire/topic.hpp"

namespace mqttz::wire {

std::vector<std::string_view> split_levels(std::string_view topic) {
    std::vector<std::string_view> levels;
    size_t start = 0;
    while (true) {
        size_t slash = topic.find('/', start);
        if (slash == std::string_view::npos) {
            levels.push_back(topic.substr(start));
            break;
        }
        levels.push_back(topic.substr(start, slash - start));
        start = slash + 1;
    }
    return levels;
}

bool valid_topic_name(std::string_view name) {
    if (name.empty()) return false;
    for (char c : name)
        if (c == '+' || c == '#' || c == '\0') return false;
    return true;
}

bool valid_topic_filter(std::string_view filter) {
    if (filter.empty()) return false;
    if (filter.find('\0') != std::string_view::npos) return false;
    auto levels = split_levels(filter);
    for (size_t i = 0; i < levels.size(); ++i) {
        auto level = levels[i];
        if (level == "+") continue;
        if (level == "#") {
            if (i + 1 != levels.size()) return false;
            continue;
        }
        if (level.find('+') != std::string_view::npos ||
            level.find('#') != std::string_view::npos)
            return false;
    }
    return true;
}

bool topic_matches(std::string_view filter, std::string_view name) {
    auto f = split_levels(filter);
    auto n = split_levels(name);
    if (name.starts_with(kReservedPrefix) && (f[0] == "+" || f[0] == "#"))
        return false;
    size_t i = 0;
    for (;; ++i) {
        if (i == f.size()) return i == n.size();
        // '#' stands for zero or more levels, so "a/#" also matches "a"
        if (f[i] == "#") return true;
        if (i == n.size()) return false;
        if (f[i] == "+") continue;
        if (f[i] != n[i]) return false;
    }
}

bool filter_covers(std::string_view rule, std::string_view requested) {
    auto r = split_levels(rule);
    auto q = split_levels(requested);
    size_t i = 0;
    for (;; ++i) {
        bool r_end = i == r.size();
        bool q_end = i == q.size();
        if (r_end && q_end) return true;
        if (r_end) return false;
        if (r[i] == "#") return true;  // covers the remainder, including "a" for rule "a/#"
        if (q_end) return false;
        if (q[i] == "#") {
            // The request spans zero or more levels from here; zero-level
            // (parent) matches only exist when some level precedes the '#',
            // since topic names are non-empty. The rule must span them all:
            // '#' outright, or '+' chains only while no parent match is owed.
            bool parent_owed = i > 0;
            for (size_t j = i;; ++j) {
                if (j == r.size()) return false;
                if (r[j] == "#") return true;
                if (parent_owed || r[j] != "+") return false;
                parent_owed = true;
            }
        }
        if (r[i] == "+") continue;       // one whole level, literal or '+'
        if (r[i] != q[i]) return false;  // a literal never covers '+'
    }
}

bool valid_client_id(std::string_view id) {
    if (id.empty() || id.size() > 23) return false;
    for (char c : id) {
        bool ok = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
                  (c >= 'A' && c <= 'Z') || c == '_' || c == '-';
        if (!ok) return false;
    }
    return true;
}

}  // namespace mqttz::wire
