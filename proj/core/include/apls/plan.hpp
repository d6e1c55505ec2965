#pragma once

#include "apls/gf.hpp"
#include "apls/rscode.hpp"

#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Degraded-read planning: which survivors take part, how the requested range
// is split into packets and reconstruction lists, which coefficients each list
// applies, and which node receives the result.
namespace apls::plan {

using NodeId = std::uint32_t;
using Timestamp = double; // seconds on the caller's clock
using ChunkIndex = rs::ChunkIndex;

enum class Strategy : std::uint8_t {
    Traditional = 0,
    PPR = 1,
    ECPipe = 2,
    ECPipeMulti = 3, // ECPipe with k-1 helpers delivering to the starter (EC-B)
    APLSParallel = 4,
    APLSPipelined = 5,
};

std::string_view to_string(Strategy s);
/// Accepts the names printed by to_string plus "apls" (pipelined). Throws
/// std::invalid_argument on anything else.
Strategy parse_strategy(std::string_view name);

/// True for strategies that spread packets over every available survivor.
constexpr bool uses_all_survivors(Strategy s) {
    return s == Strategy::APLSParallel || s == Strategy::APLSPipelined;
}

/// True when the node receiving the reconstructed bytes sits outside the
/// source set. Traditional and PPR reconstruct on one of the sources.
constexpr bool has_external_starter(Strategy s) {
    return s != Strategy::Traditional && s != Strategy::PPR;
}

/// Windowed per-node request history kept by the coordinator.
class LoadTable {
public:
    struct Entry {
        Timestamp at;
        std::uint64_t bytes;
    };

    explicit LoadTable(double window_seconds = 60.0);

    double window() const noexcept { return window_; }

    /// Appends an entry and evicts whatever has fallen out of the window.
    void record(NodeId node, std::uint64_t bytes, Timestamp now);

    /// Drops entries older than `now - window`.
    void evict(Timestamp now);

    /// Per-node byte totals inside the window (evicts first).
    std::map<NodeId, std::uint64_t> totals(Timestamp now);

    std::size_t entry_count() const noexcept;

private:
    double window_;
    std::map<NodeId, std::deque<Entry>> entries_;
};

LoadTable& record_request(LoadTable& table, NodeId node, std::uint64_t bytes, Timestamp now);

/// Candidates whose windowed byte total is at most the `fraction` quantile
/// (nearest-rank) of the candidates' totals. Never empty for nonempty input.
std::vector<NodeId> light_set(const std::map<NodeId, std::uint64_t>& totals, std::span<const NodeId> candidates,
                              double fraction);

/// Uniform pick from the light set of `candidates`.
NodeId select_starter(LoadTable& table, std::span<const NodeId> candidates, Timestamp now, std::mt19937_64& rng,
                      double fraction = 0.25);

/// select_starter with the load snapshot refreshed at most once per
/// refresh interval, the way the coordinator uses it.
class StarterSelector {
public:
    struct Policy {
        double fraction = 0.25;
        double refresh_interval = 1.0;
    };

    StarterSelector(Policy policy, std::uint64_t seed);

    NodeId select(LoadTable& table, std::span<const NodeId> candidates, Timestamp now);

    /// Forces the next select() to take a fresh snapshot.
    void invalidate() noexcept { snapshot_at_.reset(); }

private:
    Policy policy_;
    std::mt19937_64 rng_;
    std::map<NodeId, std::uint64_t> snapshot_;
    std::optional<Timestamp> snapshot_at_;
};

/// q reconstruction lists over agent positions 0..q-1. List i is
/// [(i-k+1) mod q, ..., i mod q]; its last member aggregates. Throws
/// std::invalid_argument("insufficient source nodes") when q < k.
std::vector<std::vector<std::size_t>> build_lists(std::size_t k, std::size_t q);

/// Packet i of the range goes to list i mod q.
std::vector<std::size_t> assign_packets(std::size_t chunk_size, std::size_t packet_size, std::size_t q);

struct ByteBudget {
    double recv_from_agents = 0;
    double send_to_agents = 0;
    double send_to_starter = 0;
    double starter_recv = 0;
};

/// Per-agent traffic of an all-survivor read with q agents over c bytes.
ByteBudget byte_budget(std::size_t k, std::size_t q, double chunk_bytes);

struct Agent {
    NodeId node = 0;
    ChunkIndex chunk = 0;

    bool operator==(const Agent&) const = default;
};

struct ReconstructionPlan {
    rs::CodeParams params;
    ChunkIndex lost_chunk = 0;
    Strategy strategy = Strategy::APLSPipelined;
    std::size_t read_offset = 0; // bytes into the chunk, packet aligned
    std::size_t read_length = 0; // bytes, packet aligned
    std::size_t q = 0;
    std::vector<Agent> agents; // ordered by agent position
    std::vector<std::vector<std::size_t>> lists;
    std::size_t packet_count = 0;
    std::vector<std::size_t> packet_assignment; // packet -> list
    std::vector<rs::CoefficientList> coefficient_lists; // one per list, in list member order
    NodeId starter = 0;
};

/// Deterministic plan for an already chosen agent order and starter. Helpers
/// rebuild the coordinator's plan from a sub-request command through this.
///
/// Agent order conventions: for Traditional and PPR the last agent is the
/// starter; for ECPipe the chain runs in agent order.
ReconstructionPlan make_plan(const rs::CodeParams& params, const gf::Matrix& generator, ChunkIndex lost,
                             Strategy strategy, std::vector<Agent> agents, NodeId starter, std::size_t read_offset,
                             std::size_t read_length);

struct PlanOptions {
    /// Caps q for all-survivor strategies (q sweeps); never below k.
    std::optional<std::size_t> source_limit;
    /// Fixed receiver for external-starter strategies; otherwise one is
    /// selected from `starter_candidates`.
    std::optional<NodeId> starter;
    std::vector<NodeId> starter_candidates;
    double light_fraction = 0.25;
    std::size_t read_offset = 0;
    std::optional<std::size_t> read_length;
};

/// Chooses sources and a starter, then builds the plan. All-survivor
/// strategies use q = min(|available|, k+m-1); the others use k sources.
/// Throws std::runtime_error("unrecoverable") with fewer than k survivors.
ReconstructionPlan build_plan(const rs::CodeParams& params, const gf::Matrix& generator, ChunkIndex lost,
                              std::span<const Agent> available, Strategy strategy, LoadTable& load, Timestamp now,
                              std::mt19937_64& rng, const PlanOptions& options = {});

/// The command the partitioning side sends to every agent. Field order
/// follows the command contents of the read protocol.
struct SubRequestCommand {
    std::uint64_t start_position = 0;
    std::uint64_t read_length = 0;
    std::uint32_t k = 0;
    std::uint32_t m = 0;
    std::uint32_t agent_count = 0;
    std::vector<std::string> agent_locations;
    std::vector<std::uint32_t> chunk_indices;
    std::uint32_t lost_chunk_index = 0;
    Strategy reconstruction_method = Strategy::APLSPipelined;
    std::uint64_t packet_size = 0;

    bool operator==(const SubRequestCommand&) const = default;
};

} // namespace apls::plan
