#include "apls/strategy.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>

namespace apls::flow {

namespace {

struct Labels {
    std::uint32_t list = 0;
    std::uint32_t packet = 0;
    std::uint32_t stage = 0;
};

// Appends steps while tracking where each payload is available and the last
// transfer on every (src, dst) channel.
class Builder {
public:
    explicit Builder(DataFlowGraph& graph) : graph_(graph) {}

    PayloadId compute(NodeId node, std::vector<Term> inputs, Labels labels) {
        std::vector<StepId> deps;
        for (const auto& t : inputs) {
            if (t.source == Term::Source::Payload) {
                deps.push_back(available_at(t.payload, node));
            }
        }
        const PayloadId out = next_payload_++;
        const StepId id = push(ComputeStep{node, std::move(inputs), out, graph_.packet_size}, std::move(deps), labels);
        availability_[{out, node}] = id;
        return out;
    }

    StepId transfer(NodeId src, NodeId dst, PayloadId payload, Labels labels) {
        if (src == dst) {
            throw std::invalid_argument("transfer source and destination coincide");
        }
        std::vector<StepId> deps{available_at(payload, src)};
        auto channel = channels_.find({src, dst});
        if (channel != channels_.end()) {
            deps.push_back(channel->second);
        }
        const StepId id = push(TransferStep{src, dst, payload, graph_.packet_size}, std::move(deps), labels);
        channels_[{src, dst}] = id;
        availability_[{payload, dst}] = id;
        return id;
    }

    StepId producer(PayloadId payload, NodeId node) const { return available_at(payload, node); }

    void output(std::size_t packet, PayloadId payload) {
        graph_.outputs.push_back({packet, payload, available_at(payload, graph_.starter)});
    }

private:
    StepId available_at(PayloadId payload, NodeId node) const {
        auto it = availability_.find({payload, node});
        if (it == availability_.end()) {
            throw std::logic_error("payload " + std::to_string(payload) + " not available on node " +
                                   std::to_string(node));
        }
        return it->second;
    }

    StepId push(std::variant<TransferStep, ComputeStep> op, std::vector<StepId> deps, Labels labels) {
        const auto id = static_cast<StepId>(graph_.steps.size());
        std::sort(deps.begin(), deps.end());
        deps.erase(std::unique(deps.begin(), deps.end()), deps.end());
        graph_.steps.push_back(Step{id, std::move(op), std::move(deps), labels.list, labels.packet, labels.stage});
        return id;
    }

    DataFlowGraph& graph_;
    PayloadId next_payload_ = 0;
    std::map<std::pair<PayloadId, NodeId>, StepId> availability_;
    std::map<std::pair<NodeId, NodeId>, StepId> channels_;
};

Term local(rs::ChunkIndex chunk, std::size_t offset, gf::Element coeff) {
    return Term{Term::Source::Local, 0, chunk, offset, coeff};
}

Term received(PayloadId payload, gf::Element coeff) {
    return Term{Term::Source::Payload, payload, 0, 0, coeff};
}

// Position of every packet inside its list's packet sequence.
std::vector<std::size_t> sequence_numbers(const plan::ReconstructionPlan& plan) {
    std::vector<std::size_t> seq(plan.packet_count);
    std::vector<std::size_t> next(plan.lists.size(), 0);
    for (std::size_t p = 0; p < plan.packet_count; ++p) {
        seq[p] = next[plan.packet_assignment[p]]++;
    }
    return seq;
}

std::size_t packet_offset(const plan::ReconstructionPlan& plan, std::size_t p) {
    return plan.read_offset + p * plan.params.packet_size;
}

void build_traditional(const plan::ReconstructionPlan& plan, Builder& b) {
    const auto& members = plan.lists.front();
    const auto& coeffs = plan.coefficient_lists.front().coefficients;
    const std::size_t k = members.size();
    const auto& root = plan.agents[members.back()];
    for (std::size_t p = 0; p < plan.packet_count; ++p) {
        const std::size_t off = packet_offset(plan, p);
        const auto packet = static_cast<std::uint32_t>(p);
        std::vector<Term> terms;
        for (std::size_t l = 0; l + 1 < k; ++l) {
            const auto& a = plan.agents[members[l]];
            const PayloadId raw = b.compute(a.node, {local(a.chunk, off, 1)}, {0, packet, 0});
            b.transfer(a.node, root.node, raw, {0, packet, 0});
            terms.push_back(received(raw, coeffs[l]));
        }
        terms.push_back(local(root.chunk, off, coeffs[k - 1]));
        b.output(p, b.compute(root.node, std::move(terms), {0, packet, 1}));
    }
}

struct PprTree {
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> levels; // (sender, receiver)
    std::vector<std::vector<std::size_t>> children;
    std::size_t root = 0;
};

// Pair neighbours level by level; the higher position receives and an
// unpaired tail is carried up, so the last position ends as the root.
PprTree ppr_tree(std::size_t k) {
    PprTree t;
    t.children.resize(k);
    std::vector<std::size_t> current(k);
    for (std::size_t i = 0; i < k; ++i) {
        current[i] = i;
    }
    while (current.size() > 1) {
        std::vector<std::size_t> next;
        auto& level = t.levels.emplace_back();
        for (std::size_t i = 0; i < current.size(); i += 2) {
            if (i + 1 < current.size()) {
                level.emplace_back(current[i], current[i + 1]);
                t.children[current[i + 1]].push_back(current[i]);
                next.push_back(current[i + 1]);
            } else {
                next.push_back(current[i]);
            }
        }
        current = std::move(next);
    }
    t.root = current.empty() ? 0 : current.front();
    return t;
}

void build_ppr(const plan::ReconstructionPlan& plan, Builder& b) {
    const auto& members = plan.lists.front();
    const auto& coeffs = plan.coefficient_lists.front().coefficients;
    const std::size_t k = members.size();

    const auto tree = ppr_tree(k);
    const auto& levels = tree.levels;
    const auto& children = tree.children;
    const std::size_t root = tree.root;
    const std::size_t depth = levels.size();

    std::vector<std::vector<PayloadId>> partial(plan.packet_count, std::vector<PayloadId>(k, 0));
    auto combine = [&](std::size_t p, std::size_t pos, std::uint32_t stage) {
        const auto& a = plan.agents[members[pos]];
        std::vector<Term> terms{local(a.chunk, packet_offset(plan, p), coeffs[pos])};
        for (auto c : children[pos]) {
            terms.push_back(received(partial[p][c], 1));
        }
        return b.compute(a.node, std::move(terms), {0, static_cast<std::uint32_t>(p), stage});
    };

    const std::size_t rounds = plan.packet_count + depth;
    for (std::size_t r = 0; r < rounds; ++r) {
        for (std::size_t level = 0; level <= depth; ++level) {
            if (r < level || r - level >= plan.packet_count) {
                continue;
            }
            const std::size_t p = r - level;
            const auto stage = static_cast<std::uint32_t>(level);
            if (level == depth) {
                b.output(p, combine(p, root, stage));
                continue;
            }
            for (const auto& [sender, receiver] : levels[level]) {
                partial[p][sender] = combine(p, sender, stage);
                b.transfer(plan.agents[members[sender]].node, plan.agents[members[receiver]].node,
                           partial[p][sender], {0, static_cast<std::uint32_t>(p), stage});
            }
        }
    }
}

void build_pipelined(const plan::ReconstructionPlan& plan, Builder& b) {
    const std::size_t k = plan.params.k;
    const auto seq = sequence_numbers(plan);

    // (round, hop, list, packet); hop h of a packet runs in round seq + h.
    std::vector<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>> items;
    items.reserve(plan.packet_count * k);
    for (std::size_t p = 0; p < plan.packet_count; ++p) {
        for (std::size_t h = 0; h < k; ++h) {
            items.emplace_back(seq[p] + h, h, plan.packet_assignment[p], p);
        }
    }
    std::sort(items.begin(), items.end());

    std::vector<PayloadId> carried(plan.packet_count, 0);
    for (const auto& [round, h, j, p] : items) {
        const auto& members = plan.lists[j];
        const auto& a = plan.agents[members[h]];
        const Labels labels{static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(p),
                            static_cast<std::uint32_t>(h)};
        std::vector<Term> terms{local(a.chunk, packet_offset(plan, p), plan.coefficient_lists[j].coefficients[h])};
        if (h > 0) {
            terms.push_back(received(carried[p], 1));
        }
        carried[p] = b.compute(a.node, std::move(terms), labels);
        const NodeId next = h + 1 < k ? plan.agents[members[h + 1]].node : plan.starter;
        b.transfer(a.node, next, carried[p], labels);
        if (h + 1 == k) {
            b.output(p, carried[p]);
        }
    }
}

void build_parallel(const plan::ReconstructionPlan& plan, Builder& b) {
    const std::size_t k = plan.params.k;
    const auto seq = sequence_numbers(plan);
    const std::size_t groups = plan.packet_count == 0 ? 0 : *std::max_element(seq.begin(), seq.end()) + 1;

    std::vector<std::vector<PayloadId>> raw(plan.packet_count);
    for (std::size_t r = 0; r <= groups; ++r) {
        // Raw slices of group r travel to their aggregators.
        for (std::size_t p = 0; p < plan.packet_count; ++p) {
            if (seq[p] != r) {
                continue;
            }
            const std::size_t j = plan.packet_assignment[p];
            const auto& members = plan.lists[j];
            const NodeId aggregator = plan.agents[members.back()].node;
            const Labels labels{static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(p), 0};
            for (std::size_t l = 0; l + 1 < k; ++l) {
                const auto& a = plan.agents[members[l]];
                raw[p].push_back(b.compute(a.node, {local(a.chunk, packet_offset(plan, p), 1)}, labels));
                b.transfer(a.node, aggregator, raw[p].back(), labels);
            }
        }
        // Aggregators of group r-1 decode and forward.
        for (std::size_t p = 0; p < plan.packet_count; ++p) {
            if (r == 0 || seq[p] != r - 1) {
                continue;
            }
            const std::size_t j = plan.packet_assignment[p];
            const auto& members = plan.lists[j];
            const auto& coeffs = plan.coefficient_lists[j].coefficients;
            const auto& agg = plan.agents[members.back()];
            const Labels labels{static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(p), 1};
            std::vector<Term> terms;
            for (std::size_t l = 0; l + 1 < k; ++l) {
                terms.push_back(received(raw[p][l], coeffs[l]));
            }
            terms.push_back(local(agg.chunk, packet_offset(plan, p), coeffs[k - 1]));
            const PayloadId full = b.compute(agg.node, std::move(terms), labels);
            b.transfer(agg.node, plan.starter, full, labels);
            b.output(p, full);
        }
    }
}

} // namespace

DataFlowGraph build_flow(const plan::ReconstructionPlan& plan) {
    if (plan.packet_assignment.size() != plan.packet_count || plan.coefficient_lists.size() != plan.lists.size()) {
        throw std::invalid_argument("inconsistent reconstruction plan");
    }
    if (plan::has_external_starter(plan.strategy)) {
        for (const auto& a : plan.agents) {
            if (a.node == plan.starter) {
                throw std::invalid_argument("starter must not be one of the agents for " +
                                            std::string(plan::to_string(plan.strategy)));
            }
        }
    }

    DataFlowGraph graph;
    graph.packet_size = plan.params.packet_size;
    graph.read_offset = plan.read_offset;
    graph.read_length = plan.read_length;
    graph.starter = plan.starter;
    Builder b(graph);

    switch (plan.strategy) {
    case plan::Strategy::Traditional:
        build_traditional(plan, b);
        break;
    case plan::Strategy::PPR:
        build_ppr(plan, b);
        break;
    case plan::Strategy::ECPipe:
    case plan::Strategy::ECPipeMulti:
    case plan::Strategy::APLSPipelined:
        build_pipelined(plan, b);
        break;
    case plan::Strategy::APLSParallel:
        build_parallel(plan, b);
        break;
    default:
        throw std::invalid_argument("unknown strategy");
    }
    std::sort(graph.outputs.begin(), graph.outputs.end(),
              [](const Output& a, const Output& c) { return a.packet < c.packet; });
    return graph;
}

std::size_t ppr_max_fan_in(std::size_t k) {
    std::size_t most = 0;
    for (const auto& c : ppr_tree(k).children) {
        most = std::max(most, c.size());
    }
    return most;
}

DataFlowGraph build_normal_read_flow(NodeId source, rs::ChunkIndex chunk, NodeId starter, std::size_t packet_size,
                                     std::size_t read_offset, std::size_t read_length) {
    if (packet_size == 0 || read_length % packet_size != 0) {
        throw std::invalid_argument("read length must be a multiple of the packet size");
    }
    DataFlowGraph graph;
    graph.packet_size = packet_size;
    graph.read_offset = read_offset;
    graph.read_length = read_length;
    graph.starter = starter;
    Builder b(graph);
    for (std::size_t p = 0; p < read_length / packet_size; ++p) {
        const Labels labels{0, static_cast<std::uint32_t>(p), 0};
        const PayloadId raw = b.compute(source, {local(chunk, read_offset + p * packet_size, 1)}, labels);
        if (source != starter) {
            b.transfer(source, starter, raw, labels);
        }
        b.output(p, raw);
    }
    return graph;
}

std::vector<StepId> topological_order(const DataFlowGraph& graph) {
    const std::size_t n = graph.steps.size();
    std::vector<std::size_t> pending(n, 0);
    std::vector<std::vector<StepId>> dependents(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = graph.steps[i];
        if (s.id != i) {
            throw std::invalid_argument("step ids must equal their positions");
        }
        for (auto d : s.deps) {
            if (d >= n) {
                throw std::invalid_argument("step " + std::to_string(i) + " depends on unknown step " +
                                            std::to_string(d));
            }
            dependents[d].push_back(static_cast<StepId>(i));
            ++pending[i];
        }
    }
    std::priority_queue<StepId, std::vector<StepId>, std::greater<>> ready;
    for (std::size_t i = 0; i < n; ++i) {
        if (pending[i] == 0) {
            ready.push(static_cast<StepId>(i));
        }
    }
    std::vector<StepId> order;
    order.reserve(n);
    while (!ready.empty()) {
        const StepId s = ready.top();
        ready.pop();
        order.push_back(s);
        for (auto d : dependents[s]) {
            if (--pending[d] == 0) {
                ready.push(d);
            }
        }
    }
    if (order.size() != n) {
        throw std::invalid_argument("flow graph has a cycle");
    }
    return order;
}

void validate(const DataFlowGraph& graph) {
    const auto order = topological_order(graph);
    std::map<std::pair<PayloadId, NodeId>, StepId> where;
    std::map<PayloadId, StepId> produced;
    auto require = [&](PayloadId p, NodeId node, const Step& s) {
        auto it = where.find({p, node});
        if (it == where.end()) {
            throw std::invalid_argument("step " + std::to_string(s.id) + " uses payload " + std::to_string(p) +
                                        " not present on node " + std::to_string(node));
        }
        if (std::find(s.deps.begin(), s.deps.end(), it->second) == s.deps.end()) {
            throw std::invalid_argument("step " + std::to_string(s.id) + " lacks a dependency on step " +
                                        std::to_string(it->second));
        }
    };
    for (auto id : order) {
        const auto& s = graph.steps[id];
        if (s.is_transfer()) {
            const auto& t = s.transfer();
            if (t.bytes == 0) {
                throw std::invalid_argument("transfer " + std::to_string(id) + " moves zero bytes");
            }
            require(t.payload, t.src, s);
            where[{t.payload, t.dst}] = id;
        } else {
            const auto& c = s.compute();
            for (const auto& term : c.inputs) {
                if (term.source == Term::Source::Payload) {
                    require(term.payload, c.node, s);
                }
            }
            if (!produced.emplace(c.output, id).second) {
                throw std::invalid_argument("payload " + std::to_string(c.output) + " produced twice");
            }
            where[{c.output, c.node}] = id;
        }
    }
    if (graph.packet_size == 0 || graph.read_length != graph.outputs.size() * graph.packet_size) {
        throw std::invalid_argument("outputs do not cover the read range");
    }
    for (std::size_t i = 0; i < graph.outputs.size(); ++i) {
        const auto& o = graph.outputs[i];
        if (o.packet != i) {
            throw std::invalid_argument("outputs must list every packet once, in order");
        }
        auto it = where.find({o.payload, graph.starter});
        if (it == where.end() || it->second != o.step) {
            throw std::invalid_argument("output of packet " + std::to_string(i) + " does not reach the starter");
        }
    }
}

rs::Buffer execute_local(const DataFlowGraph& graph, const std::map<rs::ChunkIndex, rs::Buffer>& chunk_store) {
    const auto order = topological_order(graph);
    std::map<PayloadId, rs::Buffer> payloads;
    for (auto id : order) {
        const auto& s = graph.steps[id];
        if (s.is_transfer()) {
            if (!payloads.contains(s.transfer().payload)) {
                throw std::invalid_argument("transfer of a payload that was never computed");
            }
            continue;
        }
        const auto& c = s.compute();
        rs::Buffer out(c.bytes, 0);
        for (const auto& term : c.inputs) {
            if (term.source == Term::Source::Local) {
                auto it = chunk_store.find(term.chunk);
                if (it == chunk_store.end()) {
                    throw std::runtime_error("missing chunk " + std::to_string(term.chunk));
                }
                if (term.offset + c.bytes > it->second.size()) {
                    throw std::runtime_error("slice beyond the end of chunk " + std::to_string(term.chunk));
                }
                gf::mul_add_region(term.coeff, std::span(it->second).subspan(term.offset, c.bytes), out);
            } else {
                auto it = payloads.find(term.payload);
                if (it == payloads.end()) {
                    throw std::invalid_argument("compute input payload missing");
                }
                gf::mul_add_region(term.coeff, it->second, out);
            }
        }
        payloads[c.output] = std::move(out);
    }
    rs::Buffer result(graph.read_length, 0);
    for (const auto& o : graph.outputs) {
        const auto& data = payloads.at(o.payload);
        const std::size_t at = o.packet * graph.packet_size;
        if (at + data.size() > result.size()) {
            throw std::invalid_argument("output packet beyond the read range");
        }
        std::copy(data.begin(), data.end(), result.begin() + static_cast<std::ptrdiff_t>(at));
    }
    return result;
}

std::map<NodeId, NodeBytes> flow_byte_summary(const DataFlowGraph& graph) {
    std::map<NodeId, NodeBytes> out;
    for (const auto& s : graph.steps) {
        if (!s.is_transfer()) {
            continue;
        }
        const auto& t = s.transfer();
        out[t.src].egress += t.bytes;
        out[t.dst].ingress += t.bytes;
    }
    return out;
}

std::size_t transfer_depth(const DataFlowGraph& graph) {
    // Hops a payload has travelled, following data movement only (channel
    // ordering dependencies do not count).
    std::map<std::pair<PayloadId, NodeId>, std::size_t> hops;
    for (auto id : topological_order(graph)) {
        const auto& s = graph.steps[id];
        if (s.is_transfer()) {
            const auto& t = s.transfer();
            hops[{t.payload, t.dst}] = hops[{t.payload, t.src}] + 1;
        } else {
            const auto& c = s.compute();
            std::size_t h = 0;
            for (const auto& term : c.inputs) {
                if (term.source == Term::Source::Payload) {
                    h = std::max(h, hops[{term.payload, c.node}]);
                }
            }
            hops[{c.output, c.node}] = h;
        }
    }
    std::size_t depth = 0;
    for (const auto& o : graph.outputs) {
        depth = std::max(depth, hops[{o.payload, graph.starter}]);
    }
    return depth;
}

} // namespace apls::flow
