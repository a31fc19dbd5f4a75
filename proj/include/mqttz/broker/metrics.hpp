#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace mqttz::broker {

/// Shared counters written from session threads, sampled at 1 Hz.
struct BrokerCounters {
    std::atomic<uint64_t> publishes_received{0};
    std::atomic<uint64_t> publishes_forwarded{0};
    std::atomic<uint64_t> publishes_dropped{0};
    std::atomic<uint64_t> acl_denied{0};
    std::atomic<uint64_t> envelope_malformed{0};
    std::atomic<uint64_t> origin_mismatch{0};
    std::atomic<uint64_t> reencrypt_failures{0};
    std::atomic<uint64_t> queue_overflow{0};
    std::atomic<uint64_t> handshakes_ok{0};
    std::atomic<uint64_t> handshakes_failed{0};
};

/// log2-bucketed re-encryption latency histogram (ns), buckets 2^0..2^39.
class LatencyHistogram {
public:
    static constexpr size_t kBuckets = 40;

    void record(uint64_t ns) {
        size_t b = 0;
        while (b + 1 < kBuckets && (1ull << (b + 1)) <= ns) ++b;
        buckets_[b].fetch_add(1, std::memory_order_relaxed);
    }

    std::array<uint64_t, kBuckets> snapshot() const {
        std::array<uint64_t, kBuckets> out{};
        for (size_t i = 0; i < kBuckets; ++i)
            out[i] = buckets_[i].load(std::memory_order_relaxed);
        return out;
    }

    /// Upper bucket bound of the p-quantile (0 < p <= 1), 0 when empty.
    uint64_t quantile_upper_bound(double p) const;

private:
    std::array<std::atomic<uint64_t>, kBuckets> buckets_{};
};

struct ClientSample {
    std::string client_id;
    uint64_t bytes_out = 0;  // in the sampled window
};

struct MetricsSample {
    int64_t unix_ts = 0;
    std::vector<ClientSample> clients;
    uint64_t total_bytes_out = 0;
    std::optional<double> cpu_user_pct;
    std::optional<double> cpu_sys_pct;
};

/// Per-client outbound byte counters plus the 1 Hz sampler state.
class BrokerMetrics {
public:
    BrokerCounters counters;
    LatencyHistogram reencrypt_latency;

    /// Cumulative outbound-bytes counter for a client; created on first use.
    std::shared_ptr<std::atomic<uint64_t>> client_bytes_counter(const std::string& client_id);

    /// One sampling step: window deltas per client plus process CPU use.
    /// Returns rows for the window; CPU columns empty when unsupported.
    MetricsSample sample();

    MetricsSample last_sample() const;

private:
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<std::atomic<uint64_t>>> clients_;
    std::map<std::string, uint64_t> last_seen_;
    MetricsSample last_sample_;

    struct CpuTimes {
        uint64_t user_jiffies = 0;
        uint64_t sys_jiffies = 0;
    };
    std::optional<CpuTimes> last_cpu_;
    std::optional<std::chrono::steady_clock::time_point> last_cpu_at_;
    bool cpu_unsupported_ = false;

    static std::optional<CpuTimes> read_cpu_times();
};

}  // namespace mqttz::broker
