#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <mutex>

namespace apls::cluster {

/// Token bucket shared by all threads of one direction (egress or ingress)
/// of a daemon. Tokens are bytes; they refill at rate/8 per second up to
/// `burst`. acquire() may run the balance negative and then sleeps until the
/// debt is repaid, so concurrent callers are served roughly in arrival order
/// and the long-run rate is exact.
class TokenBucket {
public:
    using Clock = std::chrono::steady_clock;

    /// rate in bits/s (infinity disables the gate), burst in bytes.
    TokenBucket(double rate_bits, std::size_t burst_bytes);

    /// Default burst: 64 KiB or 10 ms worth of tokens, whichever is larger.
    static std::size_t default_burst(double rate_bits);

    /// Blocks until `bytes` may pass. Requests above the burst are taken in
    /// burst-sized pieces.
    void acquire(std::size_t bytes);

    double rate() const noexcept { return rate_bits_; }
    std::size_t burst() const noexcept { return burst_; }
    std::uint64_t total() const;

private:
    void take(std::size_t bytes);

    double rate_bits_;
    double bytes_per_second_;
    std::size_t burst_;
    mutable std::mutex mutex_;
    double tokens_;
    Clock::time_point last_;
    std::uint64_t total_ = 0;
};

} // namespace apls::cluster
