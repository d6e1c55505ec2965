#include "apls/netsim.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>

namespace apls::sim {

namespace {

// Progressive filling over dense resource indices. Each flow touches exactly
// two resources: the sender's up link and the receiver's down link.
void fill_rates(const std::vector<std::pair<std::size_t, std::size_t>>& flows, const std::vector<double>& capacity,
                std::vector<double>& rates) {
    const std::size_t nflows = flows.size();
    rates.assign(nflows, 0.0);
    if (nflows == 0) {
        return;
    }
    std::vector<double> cap = capacity;
    std::vector<std::size_t> count(cap.size(), 0);
    std::vector<std::vector<std::size_t>> users(cap.size());
    for (std::size_t f = 0; f < nflows; ++f) {
        users[flows[f].first].push_back(f);
        users[flows[f].second].push_back(f);
        ++count[flows[f].first];
        ++count[flows[f].second];
    }
    std::vector<bool> frozen(nflows, false);
    std::size_t left = nflows;
    while (left > 0) {
        std::size_t best = cap.size();
        double share = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < cap.size(); ++r) {
            if (count[r] == 0) {
                continue;
            }
            const double s = std::max(cap[r], 0.0) / static_cast<double>(count[r]);
            if (s < share) {
                share = s;
                best = r;
            }
        }
        if (best == cap.size()) {
            for (std::size_t f = 0; f < nflows; ++f) {
                if (!frozen[f]) {
                    rates[f] = std::numeric_limits<double>::infinity();
                }
            }
            return;
        }
        for (auto f : users[best]) {
            if (frozen[f]) {
                continue;
            }
            frozen[f] = true;
            rates[f] = share;
            --left;
            for (auto r : {flows[f].first, flows[f].second}) {
                if (std::isfinite(cap[r])) {
                    cap[r] -= share;
                }
                --count[r];
            }
        }
    }
}

void check_profile(NodeId node, const NodeProfile& p) {
    if (!(p.up_bw > 0) || !(p.down_bw > 0)) {
        throw std::invalid_argument("node " + std::to_string(node) + " needs positive bandwidth");
    }
}

} // namespace

std::vector<double> max_min_rates(const std::vector<std::pair<NodeId, NodeId>>& flows,
                                  const std::map<NodeId, NodeProfile>& profiles) {
    std::map<NodeId, std::size_t> index;
    std::vector<double> capacity;
    auto idx = [&](NodeId n) {
        auto [it, inserted] = index.emplace(n, index.size());
        if (inserted) {
            auto p = profiles.find(n);
            if (p == profiles.end()) {
                throw std::invalid_argument("missing profile for node " + std::to_string(n));
            }
            check_profile(n, p->second);
            capacity.push_back(p->second.up_bw);
            capacity.push_back(p->second.down_bw);
        }
        return it->second;
    };
    std::vector<std::pair<std::size_t, std::size_t>> dense;
    for (auto [s, d] : flows) {
        dense.emplace_back(2 * idx(s), 2 * idx(d) + 1);
    }
    std::vector<double> rates;
    fill_rates(dense, capacity, rates);
    return rates;
}

SimResult simulate(const flow::DataFlowGraph& graph, const std::map<NodeId, NodeProfile>& profiles,
                   const SimOptions& options) {
    const std::size_t n = graph.steps.size();
    if (options.hop_latency < 0) {
        throw std::invalid_argument("hop latency must be non-negative");
    }

    std::map<NodeId, std::size_t> index;
    std::vector<double> capacity;
    auto idx = [&](NodeId node) {
        auto [it, inserted] = index.emplace(node, index.size());
        if (inserted) {
            auto p = profiles.find(node);
            if (p == profiles.end()) {
                throw std::invalid_argument("missing profile for node " + std::to_string(node));
            }
            check_profile(node, p->second);
            capacity.push_back(p->second.up_bw);
            capacity.push_back(p->second.down_bw);
        }
        return it->second;
    };

    std::vector<std::size_t> pending(n, 0);
    std::vector<std::vector<flow::StepId>> dependents(n);
    std::vector<std::pair<std::size_t, std::size_t>> resources(n, {0, 0});
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = graph.steps[i];
        if (s.id != i) {
            throw std::invalid_argument("step ids must equal their positions");
        }
        if (s.is_transfer()) {
            const auto& t = s.transfer();
            resources[i] = {2 * idx(t.src), 2 * idx(t.dst) + 1};
        } else {
            idx(s.compute().node);
        }
        for (auto d : s.deps) {
            if (d >= n) {
                throw std::invalid_argument("dangling dependency in flow graph");
            }
            dependents[d].push_back(static_cast<flow::StepId>(i));
            ++pending[i];
        }
    }
    idx(graph.starter);

    SimResult result;
    result.steps.assign(n, StepTiming{});
    result.bytes = flow::flow_byte_summary(graph);

    struct Active {
        std::size_t step;
        double remaining; // bits
        double total;
    };
    std::vector<Active> active;
    using Timer = std::pair<double, std::size_t>;
    std::priority_queue<Timer, std::vector<Timer>, std::greater<>> timers;
    std::vector<std::size_t> released;
    std::size_t done = 0;
    double now = 0.0;

    auto activate = [&](std::size_t step) {
        const double bits = 8.0 * static_cast<double>(graph.steps[step].transfer().bytes);
        active.push_back({step, bits, bits});
    };

    // Completes a step and everything that becomes ready at the same instant.
    auto complete = [&](std::size_t first) {
        released.push_back(first);
        while (!released.empty()) {
            const std::size_t s = released.back();
            released.pop_back();
            result.steps[s].finish = now;
            ++done;
            for (auto d : dependents[s]) {
                if (--pending[d] != 0) {
                    continue;
                }
                result.steps[d].start = now;
                if (!graph.steps[d].is_transfer()) {
                    released.push_back(d);
                } else if (options.hop_latency > 0) {
                    timers.emplace(now + options.hop_latency, d);
                } else {
                    activate(d);
                }
            }
        }
    };

    std::vector<std::size_t> roots;
    for (std::size_t i = 0; i < n; ++i) {
        if (pending[i] == 0) {
            roots.push_back(i);
        }
    }
    for (auto i : roots) {
        result.steps[i].start = 0.0;
        if (!graph.steps[i].is_transfer()) {
            complete(i);
        } else if (options.hop_latency > 0) {
            timers.emplace(options.hop_latency, i);
        } else {
            activate(i);
        }
    }

    std::vector<std::pair<std::size_t, std::size_t>> flows;
    std::vector<double> rates;
    std::vector<std::size_t> finished;
    while (!active.empty() || !timers.empty()) {
        flows.clear();
        for (const auto& a : active) {
            flows.push_back(resources[a.step]);
        }
        fill_rates(flows, capacity, rates);

        double dt = std::numeric_limits<double>::infinity();
        for (std::size_t f = 0; f < active.size(); ++f) {
            const double t = std::isinf(rates[f]) ? 0.0 : active[f].remaining / rates[f];
            dt = std::min(dt, t);
        }
        if (!timers.empty()) {
            dt = std::min(dt, timers.top().first - now);
        }
        dt = std::max(dt, 0.0);

        now += dt;
        finished.clear();
        for (std::size_t f = 0; f < active.size(); ++f) {
            auto& a = active[f];
            a.remaining = std::isinf(rates[f]) ? 0.0 : a.remaining - rates[f] * dt;
            if (a.remaining <= 1e-9 * a.total || (!std::isinf(rates[f]) && a.remaining / rates[f] <= 1e-12)) {
                finished.push_back(f);
            }
        }
        std::vector<std::size_t> starting;
        while (!timers.empty() && timers.top().first <= now + 1e-15) {
            starting.push_back(timers.top().second);
            timers.pop();
        }
        // Remove finished flows before completing them; completions may
        // activate new flows.
        std::vector<std::size_t> completed;
        for (auto it = finished.rbegin(); it != finished.rend(); ++it) {
            completed.push_back(active[*it].step);
            active.erase(active.begin() + static_cast<std::ptrdiff_t>(*it));
        }
        std::sort(completed.begin(), completed.end());
        for (auto s : starting) {
            activate(s);
        }
        for (auto s : completed) {
            complete(s);
        }
    }

    if (done != n) {
        throw std::invalid_argument("flow graph has a cycle");
    }

    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = graph.steps[i];
        if (s.is_transfer() && s.transfer().dst == graph.starter) {
            result.latency = std::max(result.latency, result.steps[i].finish);
        }
    }
    return result;
}

double predict_latency_starter_bound(double chunk_bytes, double theta_s, double bandwidth) {
    if (!(chunk_bytes > 0) || !(theta_s > 0) || !(bandwidth > 0)) {
        throw std::invalid_argument("latency model arguments must be positive");
    }
    return 8.0 * chunk_bytes / (theta_s * bandwidth);
}

double predict_latency_apls(std::size_t k, std::size_t q, double chunk_bytes, double theta_s, double bandwidth) {
    if (k == 0 || q < k) {
        throw std::invalid_argument("q must be at least k");
    }
    return static_cast<double>(k) * predict_latency_starter_bound(chunk_bytes, theta_s, bandwidth) /
           static_cast<double>(q);
}

namespace {

std::string rate_text(double bw) { return std::isinf(bw) ? std::string("inf") : fmt::format("{:.0f}", bw); }

} // namespace

std::string csv_header() { return "strategy,k,m,q,chunk_bytes,packet_bytes,helper_bw,starter_bw,latency_s"; }

std::string csv_row(const CsvRecord& r) {
    return fmt::format("{},{},{},{},{},{},{},{},{:.6f}", r.strategy, r.k, r.m, r.q, r.chunk_bytes, r.packet_bytes,
                       rate_text(r.helper_bw), rate_text(r.starter_bw), r.latency_s);
}

} // namespace apls::sim
