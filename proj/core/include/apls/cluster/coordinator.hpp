#pragma once

#include "apls/cluster/manifest.hpp"
#include "apls/cluster/messages.hpp"
#include "apls/cluster/socket.hpp"
#include "apls/plan.hpp"

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <thread>

namespace apls::cluster {

struct CoordinatorOptions {
    double load_window = 60.0; // seconds of request history kept per node
    plan::StarterSelector::Policy starter_policy{};
    std::uint64_t seed = 1;
};

/// Chunk directory and degraded-read planner. handle_read_request() is the
/// whole decision procedure; serve() only moves frames.
class Coordinator {
public:
    Coordinator(ClusterManifest manifest, CoordinatorOptions options = {});
    ~Coordinator();

    Coordinator(const Coordinator&) = delete;
    Coordinator& operator=(const Coordinator&) = delete;

    /// Normal redirect, degraded plan, or error. Every answered request is
    /// recorded in the load table. `now` is in seconds.
    ReadResponse handle_read_request(const ReadRequest& request, plan::Timestamp now);

    /// Marks a chunk failed (or available again).
    void set_failed(std::uint32_t stripe, std::uint32_t chunk, bool failed = true);

    /// Direct access for tests and tools; not synchronised with serve().
    plan::LoadTable& load() noexcept { return load_; }
    ClusterManifest manifest() const;

    /// Accepts connections on `listener` on a background thread until stop().
    void start(Listener listener);
    void stop();
    Address address() const;

    /// Seconds since construction, the clock used by the served requests.
    plan::Timestamp clock() const;

private:
    void handle_connection(Socket& socket);

    ClusterManifest manifest_;
    CoordinatorOptions options_;
    plan::LoadTable load_;
    plan::StarterSelector selector_;
    std::mt19937_64 rng_;
    gf::Matrix generator_;
    std::uint64_t next_read_id_ = 1;
    mutable std::mutex mutex_;
    std::chrono::steady_clock::time_point epoch_;

    struct Server;
    std::unique_ptr<Server> server_;
};

} // namespace apls::cluster
