// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include "apls/bench.hpp"
#include "apls/cluster/requestor.hpp"
#include "apls/cluster/store.hpp"
#include "apls/netsim.hpp"
#include "apls/units.hpp"

#include "support/process.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <thread>

namespace {

using namespace apls;
using plan::Strategy;
using units::Mbit;
using units::MiB;
using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::uint64_t run_seed() {
    if (const char* s = std::getenv("APLS_SEED")) {
        return std::strtoull(s, nullptr, 10);
    }
    return 1;
}

constexpr Strategy kStrategies[] = {Strategy::Traditional, Strategy::PPR, Strategy::ECPipe, Strategy::APLSParallel,
                                    Strategy::APLSPipelined};

rs::Stripe random_stripe(const rs::CodeParams& p, std::mt19937_64& rng) {
    std::vector<rs::Buffer> data(p.k, rs::Buffer(p.chunk_size));
    for (auto& c : data) {
        for (std::size_t i = 0; i < c.size(); i += 8) {
            const auto v = rng();
            std::memcpy(c.data() + i, &v, std::min<std::size_t>(8, c.size() - i));
        }
    }
    return rs::make_stripe(p, std::move(data));
}

Outcome decode_correctness() {
    std::mt19937_64 rng(run_seed());
    std::size_t graphs = 0;
    std::size_t subsets = 0;
    for (auto [k, m] : {std::pair<std::size_t, std::size_t>{4, 2}, {6, 3}, {10, 4}, {6, 6}}) {
        const rs::CodeParams p{k, m, MiB, 64 * 1024};
        const auto g = gf::build_generator_matrix(k, m);
        const auto stripe = random_stripe(p, rng);
        for (rs::ChunkIndex lost = 0; lost < p.width(); ++lost) {
            std::map<rs::ChunkIndex, rs::Buffer> store;
            std::vector<plan::Agent> survivors;
            for (rs::ChunkIndex c = 0; c < p.width(); ++c) {
                if (c != lost) {
                    store[c] = stripe.chunks[c];
                    survivors.push_back({static_cast<plan::NodeId>(c), c});
                }
            }
            for (auto s : kStrategies) {
                plan::LoadTable load;
                plan::PlanOptions opts;
                opts.starter = 1000;
                const auto plan = plan::build_plan(p, g, lost, survivors, s, load, 0, rng, opts);
                if (flow::execute_local(flow::build_flow(plan), store) != stripe.chunks[lost]) {
                    return {false, fmt::format("{} RS({},{}) lost {} mismatched", plan::to_string(s), k, m, lost)};
                }
                ++graphs;
            }
        }
        if (k + m > 12) {
            continue;
        }
        // Every k-subset rebuilds each chunk outside it.
        const std::size_t n = k + m;
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
            if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) {
                continue;
            }
            std::vector<rs::ChunkIndex> helpers;
            std::vector<rs::Buffer> slices;
            for (rs::ChunkIndex c = 0; c < n; ++c) {
                if (mask & (1u << c)) {
                    helpers.push_back(c);
                    slices.push_back(stripe.chunks[c]);
                }
            }
            for (rs::ChunkIndex lost = 0; lost < n; ++lost) {
                if (mask & (1u << lost)) {
                    continue;
                }
                const auto coeffs = rs::decoding_coefficients(p, g, lost, helpers);
                if (rs::reconstruct_words(coeffs, slices) != stripe.chunks[lost]) {
                    return {false, fmt::format("RS({},{}) subset {:#x} failed on chunk {}", k, m, mask, lost)};
                }
            }
            ++subsets;
        }
    }
    return {true, fmt::format("{} strategy graphs and {} k-subsets bit-exact", graphs, subsets)};
}

Outcome single_transfer() {
    const auto g = flow::build_normal_read_flow(1, 0, 2, 64 * MiB, 0, 64 * MiB);
    const auto r = sim::simulate(g, {{1, {100 * Mbit, 100 * Mbit}}, {2, {100 * Mbit, 100 * Mbit}}});
    const double err = std::abs(r.latency - 5.12) / 5.12;
    return {err <= 0.01, fmt::format("64MB at 100Mbit/s: {:.6f} s (expected 5.12 s, error {:.4f}%)", r.latency,
                                     100 * err)};
}

sim::SimResult simulate_rs66(Strategy s, std::size_t q, std::size_t chunk, std::size_t packet, double helper_bw,
                             double starter_bw, double hop_latency) {
    const rs::CodeParams p{6, 6, chunk, packet};
    const auto g = gf::build_generator_matrix(6, 6);
    std::vector<plan::Agent> survivors;
    std::map<plan::NodeId, sim::NodeProfile> prof;
    for (rs::ChunkIndex c = 1; c < 12; ++c) {
        survivors.push_back({static_cast<plan::NodeId>(c), c});
        prof[static_cast<plan::NodeId>(c)] = {helper_bw, helper_bw};
    }
    constexpr plan::NodeId starter = 100000;
    prof[starter] = {starter_bw, starter_bw};
    plan::LoadTable load;
    std::mt19937_64 rng(run_seed());
    plan::PlanOptions opts;
    opts.starter = starter;
    opts.source_limit = q;
    const auto plan = plan::build_plan(p, g, 0, survivors, s, load, 0, rng, opts);
    return sim::simulate(flow::build_flow(plan), prof, {hop_latency});
}

Outcome apls_over_q() {
    const std::size_t chunk = 64 * MiB;
    const std::size_t packet = 64 * 1024; // d = 1024 >= 10q
    const double bw = 100 * Mbit;
    const auto normal =
        sim::simulate(flow::build_normal_read_flow(1, 0, 2, packet, 0, chunk), {{1, {bw, bw}}, {2, {bw, bw}}});
    bool ok = true;
    std::string detail;
    for (std::size_t q = 7; q <= 11; ++q) {
        const auto r = simulate_rs66(Strategy::APLSPipelined, q, chunk, packet, bw, sim::kUnlimited, 0);
        const double normalized = r.latency / normal.latency;
        const double target = 6.0 / static_cast<double>(q);
        const double err = std::abs(normalized - target) / target;
        ok = ok && err <= 0.02;
        detail += fmt::format("{}q={}: {:.4f} vs {:.4f}", detail.empty() ? "" : ", ", q, normalized, target);
    }
    return {ok, detail};
}

Outcome byte_accounting() {
    std::mt19937 rng(static_cast<std::mt19937::result_type>(run_seed()));
    for (int t = 0; t < 200; ++t) {
        const std::size_t k = 1 + rng() % 10;
        const std::size_t m = 1 + rng() % 6;
        const std::size_t q = k + rng() % m;
        const std::size_t d = q * (1 + rng() % 6);
        const std::size_t packet = 16;
        const rs::CodeParams p{k, m, d * packet, packet};
        const auto g = gf::build_generator_matrix(k, m);
        const rs::ChunkIndex lost = rng() % (k + m);
        std::vector<plan::Agent> survivors;
        for (rs::ChunkIndex c = 0; c < p.width(); ++c) {
            if (c != lost) {
                survivors.push_back({static_cast<plan::NodeId>(c), c});
            }
        }
        const double c = static_cast<double>(p.chunk_size);
        const auto budget = plan::byte_budget(k, q, c);
        for (auto s : {Strategy::APLSParallel, Strategy::APLSPipelined}) {
            plan::LoadTable load;
            std::mt19937_64 prng(t);
            plan::PlanOptions opts;
            opts.starter = 1000;
            opts.source_limit = q;
            const auto plan = plan::build_plan(p, g, lost, survivors, s, load, 0, prng, opts);
            const auto bytes = flow::flow_byte_summary(flow::build_flow(plan));
            auto at = [&](plan::NodeId n) {
                auto it = bytes.find(n);
                return it == bytes.end() ? flow::NodeBytes{} : it->second;
            };
            for (const auto& a : plan.agents) {
                const auto b = at(a.node);
                if (static_cast<double>(b.ingress) != budget.recv_from_agents ||
                    static_cast<double>(b.egress) != budget.send_to_agents + budget.send_to_starter) {
                    return {false, fmt::format("{} k={} q={} d={}: agent {} moved {}/{} bytes, budget {}/{}",
                                               plan::to_string(s), k, q, d, a.node, b.ingress, b.egress,
                                               budget.recv_from_agents,
                                               budget.send_to_agents + budget.send_to_starter)};
                }
            }
            if (static_cast<double>(at(1000).ingress) != budget.starter_recv) {
                return {false, fmt::format("{} k={} q={} d={}: starter received {}", plan::to_string(s), k, q, d,
                                           at(1000).ingress)};
            }
        }
    }
    return {true, "200 random (k, q, d) tuples match the byte budget for both APLS variants"};
}

Outcome packet_size_trend() {
    const double bw = 100 * Mbit;
    const double hop = 1e-4;
    const auto small = simulate_rs66(Strategy::APLSPipelined, 11, 64 * MiB, 16 * 1024, bw, sim::kUnlimited, hop);
    const auto large = simulate_rs66(Strategy::APLSPipelined, 11, 64 * MiB, 256 * 1024, bw, sim::kUnlimited, hop);
    return {small.latency > large.latency,
            fmt::format("APLS 64MB, hop latency {} s: 16KB packets {:.4f} s, 256KB packets {:.4f} s", hop,
                        small.latency, large.latency)};
}

// Criteria 4 and 5 share one batch on a throttled multi-process cluster.
struct ClusterBatch {
    std::vector<double> apls;
    std::vector<double> ecpipe;
    std::vector<double> normal;
    std::string error;
};

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

ClusterBatch run_cluster_batch() {
    ClusterBatch out;
    const auto dir = std::filesystem::temp_directory_path() / fmt::format("apls-accept-{}", ::getpid());
    std::filesystem::create_directories(dir);
    try {
        cluster::ClusterManifest m;
        m.params = {6, 6, 8 * MiB, 64 * 1024};
        m.stripe_dir = dir / "stripes";
        m.seed = run_seed();
        m.coordinator = {"127.0.0.1", cluster::Listener::bind("127.0.0.1", 0).port()};
        for (cluster::NodeId i = 0; i < 13; ++i) {
            m.helpers[i] = {{"127.0.0.1", cluster::Listener::bind("127.0.0.1", 0).port()}, 100 * Mbit, 100 * Mbit};
        }
        cluster::store_stripes(m, 1, m.seed);
        const auto manifest_path = dir / "cluster.manifest";
        cluster::save_manifest(m, manifest_path);

        std::vector<proc::Process> procs;
        procs.emplace_back(APLS_COORDINATOR_BIN,
                           std::vector<std::string>{"--manifest", manifest_path.string(), "--log-level", "warn"});
        for (const auto& [id, h] : m.helpers) {
            procs.emplace_back(APLS_HELPER_BIN,
                               std::vector<std::string>{"--manifest", manifest_path.string(), "--id",
                                                        std::to_string(id), "--up-bw", "100M", "--down-bw", "100M",
                                                        "--log-level", "warn"});
        }
        // Socket::connect retries refused connections, so this waits for the daemons.
        cluster::Socket::connect(m.coordinator, std::chrono::seconds(10));
        for (const auto& [id, h] : m.helpers) {
            cluster::Socket::connect(h.address, std::chrono::seconds(10));
        }

        cluster::RequestorOptions base;
        base.coordinator = m.coordinator;
        base.down_bw = 1500 * Mbit;
        base.timeout = std::chrono::seconds(60);
        base.collect_counters = false;
        const auto expected = cluster::generate_stripe_data(m.params, m.seed, 0)[0];
        auto read = [&](cluster::ReadMode mode, Strategy s, std::size_t q) {
            auto o = base;
            o.mode = mode;
            o.strategy = s;
            o.source_limit = static_cast<std::uint32_t>(q);
            const auto r = cluster::requestor_read(0, 0, o);
            if (r.data != expected) {
                throw std::runtime_error(fmt::format("{} read returned wrong bytes", plan::to_string(s)));
            }
            return r.latency;
        };
        const auto apls = [&] { return read(cluster::ReadMode::Degraded, Strategy::APLSPipelined, 11); };
        const auto ecpipe = [&] { return read(cluster::ReadMode::Degraded, Strategy::ECPipe, 0); };
        const auto normal = [&] { return read(cluster::ReadMode::Normal, Strategy::ECPipe, 0); };
        // Warm page cache and connections, then interleave the timed runs.
        apls();
        ecpipe();
        normal();
        for (int i = 0; i < 10; ++i) {
            out.apls.push_back(apls());
            out.ecpipe.push_back(ecpipe());
            out.normal.push_back(normal());
        }
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
    return out;
}

Outcome cluster_improvement(const ClusterBatch& b) {
    if (!b.error.empty()) {
        return {false, "cluster run failed: " + b.error};
    }
    const double ratio = mean(b.apls) / mean(b.ecpipe);
    return {ratio <= 0.70, fmt::format("RS(6,6) 8MB, q=11: APLS mean {:.4f} s, ECPipe mean {:.4f} s, ratio {:.3f} "
                                       "(limit 0.70, model 0.545)",
                                       mean(b.apls), mean(b.ecpipe), ratio)};
}

Outcome degraded_beats_normal(const ClusterBatch& b) {
    if (!b.error.empty()) {
        return {false, "cluster run failed: " + b.error};
    }
    return {mean(b.apls) < mean(b.normal),
            fmt::format("APLS degraded mean {:.4f} s, normal read mean {:.4f} s", mean(b.apls), mean(b.normal))};
}

} // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, double budget_s, const std::function<Outcome()>& fn) {
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
        if (elapsed > budget_s) {
            o.pass = false;
            o.detail += fmt::format("; runtime {:.1f} s over the {:.0f} s budget", elapsed, budget_s);
        }
        failures += o.pass ? 0 : 1;
        fmt::print("criterion {} {}: {} [{:.1f} s]\n", id, o.pass ? "PASS" : "FAIL", o.detail, elapsed);
        std::fflush(stdout);
    };

    report(1, 120, decode_correctness);
    report(2, 1, single_transfer);
    report(3, 10, apls_over_q);
    ClusterBatch batch;
    report(4, 900, [&] {
        batch = run_cluster_batch();
        return cluster_improvement(batch);
    });
    report(5, 1, [&] { return degraded_beats_normal(batch); });
    report(6, 10, byte_accounting);
    report(7, 10, packet_size_trend);
    fmt::print("{} of 7 criteria passed\n", 7 - failures);
    return failures == 0 ? 0 : 1;
}
