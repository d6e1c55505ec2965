#include "apls/cluster/throttle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace apls::cluster {

TokenBucket::TokenBucket(double rate_bits, std::size_t burst_bytes)
    : rate_bits_(rate_bits), bytes_per_second_(rate_bits / 8.0), burst_(std::max<std::size_t>(burst_bytes, 1)),
      tokens_(static_cast<double>(burst_)), last_(Clock::now()) {
    if (!(rate_bits > 0)) {
        throw std::invalid_argument("throttle rate must be positive");
    }
}

std::size_t TokenBucket::default_burst(double rate_bits) {
    if (std::isinf(rate_bits)) {
        return 64 * 1024;
    }
    return std::max<std::size_t>(64 * 1024, static_cast<std::size_t>(rate_bits / 8.0 * 0.01));
}

void TokenBucket::acquire(std::size_t bytes) {
    if (std::isinf(bytes_per_second_)) {
        std::lock_guard lock(mutex_);
        total_ += bytes;
        return;
    }
    while (bytes > 0) {
        const std::size_t piece = std::min(bytes, burst_);
        take(piece);
        bytes -= piece;
    }
}

void TokenBucket::take(std::size_t bytes) {
    double debt = 0;
    {
        std::lock_guard lock(mutex_);
        const auto now = Clock::now();
        const double elapsed = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        tokens_ = std::min(static_cast<double>(burst_), tokens_ + elapsed * bytes_per_second_);
        tokens_ -= static_cast<double>(bytes);
        total_ += bytes;
        debt = -tokens_;
    }
    if (debt > 0) {
        std::this_thread::sleep_for(std::chrono::duration<double>(debt / bytes_per_second_));
    }
}

std::uint64_t TokenBucket::total() const {
    std::lock_guard lock(mutex_);
    return total_;
}

} // namespace apls::cluster
