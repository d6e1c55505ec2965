#pragma once

#include <spdlog/spdlog.h>

#include <csignal>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>

namespace apls::tools {

/// APLS_SEED, when set, fixes every random choice of a run.
inline std::optional<std::uint64_t> env_seed() {
    const char* v = std::getenv("APLS_SEED");
    if (v == nullptr || *v == '\0') {
        return std::nullopt;
    }
    try {
        return std::stoull(v);
    } catch (const std::exception&) {
        throw std::invalid_argument(std::string("APLS_SEED is not an unsigned integer: ") + v);
    }
}

inline void set_log_level(const std::string& level) { spdlog::set_level(spdlog::level::from_str(level)); }

/// Blocks SIGINT/SIGTERM in the calling thread (and threads started after
/// it); wait_for_signal() then returns when one arrives.
inline sigset_t block_stop_signals() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    return set;
}

inline int wait_for_signal(const sigset_t& set) {
    int sig = 0;
    sigwait(&set, &sig);
    return sig;
}

} // namespace apls::tools
