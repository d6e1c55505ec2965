#pragma once

#include "apls/cluster/manifest.hpp"
#include "apls/cluster/messages.hpp"
#include "apls/strategy.hpp"

#include <chrono>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

namespace apls::cluster {

class ReadError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RequestorOptions {
    Address coordinator;
    std::string listen_host = "127.0.0.1";
    /// Ingress cap in bits/s for everything the requestor receives.
    double down_bw = std::numeric_limits<double>::infinity();
    plan::Strategy strategy = plan::Strategy::APLSPipelined;
    ReadMode mode = ReadMode::Auto;
    StarterMode starter = StarterMode::Self;
    std::uint32_t source_limit = 0;
    std::uint64_t offset = 0;
    std::uint64_t length = 0; // 0: rest of the chunk
    std::chrono::milliseconds timeout{30000};
    /// Wait for every helper's DONE (with byte counters) after the data.
    bool collect_counters = true;
};

struct ReadResult {
    rs::Buffer data;
    bool degraded = false;
    std::uint64_t read_id = 0;
    double latency = 0;         // seconds, request sent to last byte received
    double coordinator_rtt = 0; // seconds, part of latency
    NodeId starter = 0;
    plan::SubRequestCommand command; // degraded reads only
    /// Payload bytes each helper reported for this read.
    std::map<NodeId, flow::NodeBytes> node_bytes;
};

/// Reads chunk `chunk` of stripe `stripe`. A degraded read dispatches the
/// coordinator's sub-request command to every agent and reassembles the
/// packets by index. Throws ReadError on refusal, helper errors or timeout.
ReadResult requestor_read(std::uint32_t stripe, std::uint32_t chunk, const RequestorOptions& options);

} // namespace apls::cluster
