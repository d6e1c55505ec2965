#pragma once

#include "apls/cluster/manifest.hpp"
#include "apls/cluster/socket.hpp"

#include <chrono>
#include <cstdint>
#include <memory>

namespace apls::cluster {

struct HelperOptions {
    /// Egress and ingress caps in bits/s; infinity means unthrottled.
    double up_bw = std::numeric_limits<double>::infinity();
    double down_bw = std::numeric_limits<double>::infinity();
    /// How long a read may wait for a predecessor's packet.
    std::chrono::milliseconds timeout{30000};
};

struct HelperStats {
    std::uint64_t egress_bytes = 0;  // bytes through the egress gate
    std::uint64_t ingress_bytes = 0; // bytes through the ingress gate
    std::uint64_t reads_completed = 0;
    std::uint64_t reads_failed = 0;
    std::uint64_t connections_dropped = 0; // malformed input
};

/// Storage daemon. Serves normal reads of the chunks it hosts and executes
/// its part of degraded reads: on a SUBREQ_CMD it caches its whole chunk,
/// rebuilds the plan and data flow from the command, then runs its own steps
/// in step order, receiving predecessor packets, combining them with its
/// scaled slices and forwarding over one connection per destination.
class HelperServer {
public:
    HelperServer(ClusterManifest manifest, NodeId id, Listener listener, HelperOptions options = {});
    ~HelperServer();

    HelperServer(const HelperServer&) = delete;
    HelperServer& operator=(const HelperServer&) = delete;

    NodeId id() const noexcept;
    Address address() const;
    HelperStats stats() const;

    /// Stops accepting, interrupts connections and waits for running reads.
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace apls::cluster
