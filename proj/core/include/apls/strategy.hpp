#pragma once

#include "apls/plan.hpp"
#include "apls/rscode.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

// Strategy-neutral data-flow graphs for a degraded read: which node sends
// which packet-sized payload to whom, and which linear combination each node
// computes. The same graph drives the local executor, the simulator and the
// helper daemons.
namespace apls::flow {

using NodeId = plan::NodeId;
using PayloadId = std::uint32_t;
using StepId = std::uint32_t;

/// One addend of a compute step: either a slice of a chunk stored on the
/// computing node or a payload already present there.
struct Term {
    enum class Source : std::uint8_t { Local, Payload };

    Source source = Source::Local;
    PayloadId payload = 0;   // Source::Payload
    rs::ChunkIndex chunk = 0; // Source::Local
    std::size_t offset = 0;  // Source::Local, byte offset into the chunk
    gf::Element coeff = 1;

    bool operator==(const Term&) const = default;
};

/// Moves a payload from src to dst. Transfers between the same pair are
/// chained through dependencies, so each pair behaves like one FIFO connection.
struct TransferStep {
    NodeId src = 0;
    NodeId dst = 0;
    PayloadId payload = 0;
    std::size_t bytes = 0;

    bool operator==(const TransferStep&) const = default;
};

/// output = sum of coeff * input over all terms, computed on `node`.
struct ComputeStep {
    NodeId node = 0;
    std::vector<Term> inputs;
    PayloadId output = 0;
    std::size_t bytes = 0;

    bool operator==(const ComputeStep&) const = default;
};

struct Step {
    StepId id = 0;
    std::variant<TransferStep, ComputeStep> op;
    std::vector<StepId> deps;
    // Scheduling labels carried into packet frames.
    std::uint32_t list = 0;
    std::uint32_t packet = 0;
    std::uint32_t stage = 0;

    bool is_transfer() const { return std::holds_alternative<TransferStep>(op); }
    const TransferStep& transfer() const { return std::get<TransferStep>(op); }
    const ComputeStep& compute() const { return std::get<ComputeStep>(op); }

    bool operator==(const Step&) const = default;
};

/// Where the starter finds reconstructed packet `packet` of the read range.
struct Output {
    std::size_t packet = 0;
    PayloadId payload = 0;
    StepId step = 0; // last step producing the payload at the starter

    bool operator==(const Output&) const = default;
};

struct DataFlowGraph {
    std::size_t packet_size = 0;
    std::size_t read_offset = 0;
    std::size_t read_length = 0;
    NodeId starter = 0;
    std::vector<Step> steps; // ids equal positions
    std::vector<Output> outputs; // ordered by packet

    bool operator==(const DataFlowGraph&) const = default;
};

/// Compiles a plan into its strategy's data flow:
///  - Traditional: k-1 sources send raw packets to the starter (last source).
///  - PPR: balanced binary aggregation tree rooted at the starter (last source).
///  - ECPipe / ECPipe-B / APLS-pipelined: chained partial sums along every
///    list, the last member forwarding to the starter.
///  - APLS-parallel: non-final list members send raw packets to the list's
///    aggregator, which applies all k coefficients and forwards.
/// Steps are emitted in round order, so id order is a valid schedule.
DataFlowGraph build_flow(const plan::ReconstructionPlan& plan);

/// Most partial sums any node of the PPR tree over k sources receives per
/// packet. With packets pipelined through the tree this node sets the pace.
std::size_t ppr_max_fan_in(std::size_t k);

/// A plain read: `source` streams chunk `chunk` to `starter` packet by packet.
DataFlowGraph build_normal_read_flow(NodeId source, rs::ChunkIndex chunk, NodeId starter, std::size_t packet_size,
                                     std::size_t read_offset, std::size_t read_length);

/// Kahn topological order, ties broken by step id. Throws
/// std::invalid_argument on cycles or dangling dependencies.
std::vector<StepId> topological_order(const DataFlowGraph& graph);

/// Structural checks: acyclic, every transfer payload produced at its source,
/// one output per packet. Throws std::invalid_argument describing the first
/// violation.
void validate(const DataFlowGraph& graph);

/// Runs the graph in one process over the given surviving chunks and returns
/// the bytes assembled at the starter.
rs::Buffer execute_local(const DataFlowGraph& graph, const std::map<rs::ChunkIndex, rs::Buffer>& chunk_store);

struct NodeBytes {
    std::uint64_t ingress = 0;
    std::uint64_t egress = 0;

    bool operator==(const NodeBytes&) const = default;
};

/// Network bytes per node, summed over transfer steps.
std::map<NodeId, NodeBytes> flow_byte_summary(const DataFlowGraph& graph);

/// Longest chain of transfers ending in each output, maximised over outputs.
std::size_t transfer_depth(const DataFlowGraph& graph);

/// Text dump, one step per line; parse_flow_text reads it back.
std::string to_text(const DataFlowGraph& graph);
DataFlowGraph parse_flow_text(std::string_view text);

} // namespace apls::flow
