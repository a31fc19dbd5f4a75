#include "mqttz/broker/metrics.hpp"

#include <unistd.h>

#include <chrono>
#include <fstream>
#include <sstream>

namespace mqttz::broker {

uint64_t LatencyHistogram::quantile_upper_bound(double p) const {
    auto snap = snapshot();
    uint64_t total = 0;
    for (auto v : snap) total += v;
    if (total == 0) return 0;
    uint64_t target = static_cast<uint64_t>(p * static_cast<double>(total));
    if (target == 0) target = 1;
    uint64_t seen = 0;
    for (size_t i = 0; i < snap.size(); ++i) {
        seen += snap[i];
        if (seen >= target) return 1ull << (i + 1);
    }
    return 1ull << kBuckets;
}

std::shared_ptr<std::atomic<uint64_t>> BrokerMetrics::client_bytes_counter(
    const std::string& client_id) {
    std::lock_guard lock(mu_);
    auto& slot = clients_[client_id];
    if (!slot) slot = std::make_shared<std::atomic<uint64_t>>(0);
    return slot;
}

std::optional<BrokerMetrics::CpuTimes> BrokerMetrics::read_cpu_times() {
    std::ifstream stat("/proc/self/stat");
    if (!stat) return std::nullopt;
    std::string content;
    std::getline(stat, content);
    // comm (field 2) may contain spaces; skip past the closing paren
    auto paren = content.rfind(')');
    if (paren == std::string::npos) return std::nullopt;
    std::istringstream rest(content.substr(paren + 1));
    std::string field;
    CpuTimes t;
    for (int i = 3; i <= 15 && rest >> field; ++i) {
        if (i == 14) t.user_jiffies = std::stoull(field);
        if (i == 15) {
            t.sys_jiffies = std::stoull(field);
            return t;
        }
    }
    return std::nullopt;
}

MetricsSample BrokerMetrics::sample() {
    std::lock_guard lock(mu_);
    MetricsSample out;
    out.unix_ts = std::chrono::duration_cast<std::chrono::seconds>(
                      std::chrono::system_clock::now().time_since_epoch())
                      .count();

    for (const auto& [id, counter] : clients_) {
        uint64_t cum = counter->load(std::memory_order_relaxed);
        uint64_t prev = last_seen_[id];
        last_seen_[id] = cum;
        out.clients.push_back({id, cum - prev});
        out.total_bytes_out += cum - prev;
    }

    if (!cpu_unsupported_) {
        auto now = std::chrono::steady_clock::now();
        auto cpu = read_cpu_times();
        if (!cpu) {
            cpu_unsupported_ = true;
        } else if (last_cpu_ && last_cpu_at_) {
            double elapsed = std::chrono::duration<double>(now - *last_cpu_at_).count();
            long hz = sysconf(_SC_CLK_TCK);
            if (elapsed > 0 && hz > 0) {
                double scale = 100.0 / (static_cast<double>(hz) * elapsed);
                out.cpu_user_pct = (cpu->user_jiffies - last_cpu_->user_jiffies) * scale;
                out.cpu_sys_pct = (cpu->sys_jiffies - last_cpu_->sys_jiffies) * scale;
            }
        }
        if (cpu) {
            last_cpu_ = cpu;
            last_cpu_at_ = now;
        }
    }

    last_sample_ = out;
    return out;
}

MetricsSample BrokerMetrics::last_sample() const {
    std::lock_guard lock(mu_);
    return last_sample_;
}

}  // namespace mqttz::broker
