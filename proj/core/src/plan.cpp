#include "apls/plan.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace apls::plan {

namespace {

struct StrategyName {
    Strategy strategy;
    std::string_view name;
};

constexpr StrategyName kStrategyNames[] = {
    {Strategy::Traditional, "traditional"},     {Strategy::PPR, "ppr"},
    {Strategy::ECPipe, "ecpipe"},               {Strategy::ECPipeMulti, "ecpipe-b"},
    {Strategy::APLSParallel, "apls-parallel"},  {Strategy::APLSPipelined, "apls-pipelined"},
};

} // namespace

std::string_view to_string(Strategy s) {
    for (const auto& n : kStrategyNames) {
        if (n.strategy == s) {
            return n.name;
        }
    }
    return "unknown";
}

Strategy parse_strategy(std::string_view name) {
    for (const auto& n : kStrategyNames) {
        if (n.name == name) {
            return n.strategy;
        }
    }
    if (name == "apls") {
        return Strategy::APLSPipelined;
    }
    if (name == "ecpipe-a") {
        return Strategy::ECPipe;
    }
    throw std::invalid_argument("unknown strategy '" + std::string(name) + "'");
}

LoadTable::LoadTable(double window_seconds) : window_(window_seconds) {
    if (!(window_seconds > 0)) {
        throw std::invalid_argument("load window must be positive");
    }
}

void LoadTable::record(NodeId node, std::uint64_t bytes, Timestamp now) {
    entries_[node].push_back({now, bytes});
    evict(now);
}

void LoadTable::evict(Timestamp now) {
    const Timestamp cutoff = now - window_;
    for (auto it = entries_.begin(); it != entries_.end();) {
        auto& q = it->second;
        while (!q.empty() && q.front().at < cutoff) {
            q.pop_front();
        }
        it = q.empty() ? entries_.erase(it) : std::next(it);
    }
}

std::map<NodeId, std::uint64_t> LoadTable::totals(Timestamp now) {
    evict(now);
    std::map<NodeId, std::uint64_t> out;
    for (const auto& [node, q] : entries_) {
        std::uint64_t sum = 0;
        for (const auto& e : q) {
            sum += e.bytes;
        }
        out[node] = sum;
    }
    return out;
}

std::size_t LoadTable::entry_count() const noexcept {
    std::size_t n = 0;
    for (const auto& [node, q] : entries_) {
        n += q.size();
    }
    return n;
}

LoadTable& record_request(LoadTable& table, NodeId node, std::uint64_t bytes, Timestamp now) {
    table.record(node, bytes, now);
    return table;
}

std::vector<NodeId> light_set(const std::map<NodeId, std::uint64_t>& totals, std::span<const NodeId> candidates,
                              double fraction) {
    if (candidates.empty()) {
        return {};
    }
    auto load_of = [&](NodeId n) -> std::uint64_t {
        auto it = totals.find(n);
        return it == totals.end() ? 0 : it->second;
    };
    std::vector<std::uint64_t> loads;
    loads.reserve(candidates.size());
    for (auto c : candidates) {
        loads.push_back(load_of(c));
    }
    std::sort(loads.begin(), loads.end());
    const double f = std::clamp(fraction, 0.0, 1.0);
    auto rank = static_cast<std::size_t>(std::ceil(f * static_cast<double>(loads.size())));
    rank = std::clamp<std::size_t>(rank, 1, loads.size());
    const std::uint64_t threshold = loads[rank - 1];

    std::vector<NodeId> out;
    for (auto c : candidates) {
        if (load_of(c) <= threshold) {
            out.push_back(c);
        }
    }
    if (out.empty()) {
        out.assign(candidates.begin(), candidates.end());
    }
    return out;
}

namespace {

NodeId pick(std::span<const NodeId> set, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> dist(0, set.size() - 1);
    return set[dist(rng)];
}

} // namespace

NodeId select_starter(LoadTable& table, std::span<const NodeId> candidates, Timestamp now, std::mt19937_64& rng,
                      double fraction) {
    if (candidates.empty()) {
        throw std::invalid_argument("no starter candidates");
    }
    const auto set = light_set(table.totals(now), candidates, fraction);
    return pick(set, rng);
}

StarterSelector::StarterSelector(Policy policy, std::uint64_t seed) : policy_(policy), rng_(seed) {}

NodeId StarterSelector::select(LoadTable& table, std::span<const NodeId> candidates, Timestamp now) {
    if (candidates.empty()) {
        throw std::invalid_argument("no starter candidates");
    }
    if (!snapshot_at_ || now - *snapshot_at_ >= policy_.refresh_interval || now < *snapshot_at_) {
        snapshot_ = table.totals(now);
        snapshot_at_ = now;
    }
    const auto set = light_set(snapshot_, candidates, policy_.fraction);
    return pick(set, rng_);
}

std::vector<std::vector<std::size_t>> build_lists(std::size_t k, std::size_t q) {
    if (k == 0) {
        throw std::invalid_argument("k must be at least 1");
    }
    if (q < k) {
        throw std::invalid_argument("insufficient source nodes");
    }
    std::vector<std::vector<std::size_t>> lists(q);
    for (std::size_t i = 0; i < q; ++i) {
        lists[i].reserve(k);
        // (i - k + 1 + l) mod q, kept non-negative.
        for (std::size_t l = 0; l < k; ++l) {
            lists[i].push_back((i + q - k + 1 + l) % q);
        }
    }
    return lists;
}

std::vector<std::size_t> assign_packets(std::size_t chunk_size, std::size_t packet_size, std::size_t q) {
    if (packet_size == 0 || chunk_size % packet_size != 0) {
        throw std::invalid_argument("packet size must divide the chunk size");
    }
    if (q == 0) {
        throw std::invalid_argument("q must be at least 1");
    }
    const std::size_t d = chunk_size / packet_size;
    std::vector<std::size_t> out(d);
    for (std::size_t i = 0; i < d; ++i) {
        out[i] = i % q;
    }
    return out;
}

ByteBudget byte_budget(std::size_t k, std::size_t q, double chunk_bytes) {
    if (k == 0 || q < k) {
        throw std::invalid_argument("insufficient source nodes");
    }
    const double share = chunk_bytes / static_cast<double>(q);
    ByteBudget b;
    b.recv_from_agents = static_cast<double>(k - 1) * share;
    b.send_to_agents = static_cast<double>(k - 1) * share;
    b.send_to_starter = share;
    b.starter_recv = chunk_bytes;
    return b;
}

ReconstructionPlan make_plan(const rs::CodeParams& params, const gf::Matrix& generator, ChunkIndex lost,
                             Strategy strategy, std::vector<Agent> agents, NodeId starter, std::size_t read_offset,
                             std::size_t read_length) {
    params.validate();
    const std::size_t k = params.k;
    if (lost >= params.width()) {
        throw std::invalid_argument("lost chunk index out of range");
    }
    if (read_length == 0 || read_offset % params.packet_size != 0 || read_length % params.packet_size != 0 ||
        read_offset + read_length > params.chunk_size) {
        throw std::invalid_argument("read range must be nonempty, packet aligned and inside the chunk");
    }
    std::vector<bool> seen(params.width(), false);
    for (const auto& a : agents) {
        if (a.chunk >= params.width() || a.chunk == lost || seen[a.chunk]) {
            throw std::invalid_argument("agent chunk indices must be distinct survivors of the stripe");
        }
        seen[a.chunk] = true;
    }

    ReconstructionPlan plan;
    plan.params = params;
    plan.lost_chunk = lost;
    plan.strategy = strategy;
    plan.read_offset = read_offset;
    plan.read_length = read_length;
    plan.q = agents.size();
    plan.packet_count = read_length / params.packet_size;
    plan.starter = starter;

    if (uses_all_survivors(strategy)) {
        plan.lists = build_lists(k, plan.q);
    } else {
        if (agents.size() != k) {
            throw std::invalid_argument(std::string(to_string(strategy)) + " uses exactly k sources");
        }
        if (strategy == Strategy::ECPipeMulti && k > 1) {
            plan.lists = build_lists(k, k);
            plan.lists.pop_back();
        } else {
            std::vector<std::size_t> all(k);
            for (std::size_t i = 0; i < k; ++i) {
                all[i] = i;
            }
            plan.lists = {all};
        }
    }
    if (!has_external_starter(strategy) && starter != agents.back().node) {
        throw std::invalid_argument("traditional and PPR reconstruct on the last source");
    }
    plan.agents = std::move(agents);
    plan.packet_assignment = assign_packets(read_length, params.packet_size, plan.lists.size());

    plan.coefficient_lists.reserve(plan.lists.size());
    for (const auto& list : plan.lists) {
        std::vector<ChunkIndex> helpers;
        helpers.reserve(list.size());
        for (auto pos : list) {
            helpers.push_back(plan.agents[pos].chunk);
        }
        plan.coefficient_lists.push_back(rs::decoding_coefficients(params, generator, lost, helpers));
    }
    return plan;
}

ReconstructionPlan build_plan(const rs::CodeParams& params, const gf::Matrix& generator, ChunkIndex lost,
                              std::span<const Agent> available, Strategy strategy, LoadTable& load, Timestamp now,
                              std::mt19937_64& rng, const PlanOptions& options) {
    params.validate();
    std::vector<Agent> survivors;
    std::vector<bool> seen(params.width(), false);
    for (const auto& a : available) {
        if (a.chunk < params.width() && a.chunk != lost && !seen[a.chunk]) {
            seen[a.chunk] = true;
            survivors.push_back(a);
        }
    }
    if (survivors.size() < params.k) {
        throw std::runtime_error("unrecoverable");
    }
    std::sort(survivors.begin(), survivors.end(), [](const Agent& a, const Agent& b) { return a.chunk < b.chunk; });

    std::size_t q = params.k;
    if (uses_all_survivors(strategy)) {
        q = std::min(survivors.size(), params.width() - 1);
        if (options.source_limit) {
            q = std::min(q, std::max(*options.source_limit, params.k));
        }
    }
    survivors.resize(q);

    NodeId starter = 0;
    if (has_external_starter(strategy)) {
        if (options.starter) {
            starter = *options.starter;
        } else {
            starter = select_starter(load, options.starter_candidates, now, rng, options.light_fraction);
        }
    } else {
        // The lowest-index survivor reconstructs; it goes last in agent order.
        std::rotate(survivors.begin(), survivors.begin() + 1, survivors.end());
        starter = survivors.back().node;
    }

    const std::size_t length = options.read_length.value_or(params.chunk_size - std::min(options.read_offset, params.chunk_size));
    return make_plan(params, generator, lost, strategy, std::move(survivors), starter, options.read_offset, length);
}

} // namespace apls::plan
