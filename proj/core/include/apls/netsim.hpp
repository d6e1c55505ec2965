#pragma once

#include "apls/strategy.hpp"

#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

// Fluid flow-level simulation of a DataFlowGraph over nodes with capped
// upstream and downstream bandwidth, plus the closed-form latency model.
namespace apls::sim {

using NodeId = flow::NodeId;

inline constexpr double kUnlimited = std::numeric_limits<double>::infinity();

/// Usable bandwidth in bits per second, already scaled by the share left
/// for the degraded read. kUnlimited is allowed.
struct NodeProfile {
    double up_bw = 0;
    double down_bw = 0;
};

struct SimOptions {
    /// Fixed per-transfer setup time on its channel before bytes flow.
    double hop_latency = 0;
};

struct StepTiming {
    double start = 0;  // all dependencies satisfied
    double finish = 0; // payload present at the destination
};

struct SimResult {
    double latency = 0; // last transfer into the starter
    std::map<NodeId, flow::NodeBytes> bytes;
    std::vector<StepTiming> steps;
};

/// Event-driven run: transfers active at the same time share each node's up
/// and down capacity by max-min fairness, recomputed whenever a transfer
/// starts or finishes. Compute steps take no time. Throws
/// std::invalid_argument for a node without a profile or a non-positive
/// bandwidth.
SimResult simulate(const flow::DataFlowGraph& graph, const std::map<NodeId, NodeProfile>& profiles,
                   const SimOptions& options = {});

/// Max-min fair rates for flows given as (src, dst) pairs.
std::vector<double> max_min_rates(const std::vector<std::pair<NodeId, NodeId>>& flows,
                                  const std::map<NodeId, NodeProfile>& profiles);

/// Starter-bound latency: c / (theta_s * B), with c in bytes and B in bit/s.
double predict_latency_starter_bound(double chunk_bytes, double theta_s, double bandwidth);

/// All-survivor latency: k * c / (q * theta_s * B). Throws when q < k.
double predict_latency_apls(std::size_t k, std::size_t q, double chunk_bytes, double theta_s, double bandwidth);

struct CsvRecord {
    std::string strategy;
    std::size_t k = 0;
    std::size_t m = 0;
    std::size_t q = 0;
    std::size_t chunk_bytes = 0;
    std::size_t packet_bytes = 0;
    double helper_bw = 0;
    double starter_bw = 0;
    double latency_s = 0;
};

std::string csv_header();
std::string csv_row(const CsvRecord& record);

} // namespace apls::sim
