// Experiment runner, report comparison and flow-graph utilities.
#include "common.hpp"

#include "apls/bench.hpp"
#include "apls/netsim.hpp"
#include "apls/strategy.hpp"
#include "apls/units.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace apls;

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int do_run(const std::string& spec_path, const std::string& out_path) {
    auto spec = bench::load_spec(spec_path);
    if (auto seed = tools::env_seed()) {
        spec.seed = *seed;
    }
    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!out_path.empty() && out_path != "-") {
        file.open(out_path, std::ios::trunc);
        if (!file) {
            throw std::runtime_error("cannot write " + out_path);
        }
        out = &file;
    }
    *out << bench::csv_header() << '\n' << std::flush;
    bench::run_experiment(spec, [&](const bench::Row& r) {
        *out << bench::to_csv(r) << '\n' << std::flush;
        if (out != &std::cout) {
            fmt::print(stderr, "{} RS({},{}) q={} chunk={} packet={}: {:.6f}s ({:.3f} of normal)\n", r.strategy, r.k,
                       r.m, r.q, r.chunk_bytes, r.packet_bytes, r.latency_mean, r.normalized);
        }
    });
    return 0;
}

int do_compare(const std::string& in_path, const std::string& baseline) {
    const auto rows = bench::parse_csv(slurp(in_path));
    fmt::print("{}", bench::format_comparison(bench::compare_strategies(rows, plan::parse_strategy(baseline))));
    return 0;
}

int do_graph(std::size_t k, std::size_t m, const std::string& chunk, const std::string& packet,
             const std::string& strategy, std::size_t lost, std::size_t q) {
    const rs::CodeParams params{k, m, units::parse_size(chunk), units::parse_size(packet)};
    const auto generator = gf::build_generator_matrix(k, m);
    std::vector<plan::Agent> survivors;
    for (std::size_t c = 0; c < params.width(); ++c) {
        if (c != lost) {
            survivors.push_back({static_cast<plan::NodeId>(c), c});
        }
    }
    plan::LoadTable load;
    std::mt19937_64 rng(tools::env_seed().value_or(1));
    plan::PlanOptions opts;
    opts.starter = static_cast<plan::NodeId>(params.width());
    if (q != 0) {
        opts.source_limit = q;
    }
    const auto p = plan::build_plan(params, generator, lost, survivors, plan::parse_strategy(strategy), load, 0.0, rng,
                                    opts);
    fmt::print("{}", flow::to_text(flow::build_flow(p)));
    return 0;
}

int do_simulate(const std::string& graph_path, const std::string& helper_bw, const std::string& starter_bw,
                double hop_latency) {
    const auto graph = flow::parse_flow_text(slurp(graph_path));
    flow::validate(graph);
    std::map<plan::NodeId, sim::NodeProfile> profiles;
    const double hb = units::parse_rate(helper_bw);
    for (const auto& s : graph.steps) {
        const auto node = s.is_transfer() ? s.transfer().src : s.compute().node;
        profiles[node] = {hb, hb};
        if (s.is_transfer()) {
            profiles[s.transfer().dst] = {hb, hb};
        }
    }
    const double sb = units::parse_rate(starter_bw);
    profiles[graph.starter] = {sb, sb};
    const auto result = sim::simulate(graph, profiles, {hop_latency});
    fmt::print("latency_s={:.6f}\n", result.latency);
    for (const auto& [node, b] : result.bytes) {
        fmt::print("node {} ingress={} egress={}\n", node, b.ingress, b.egress);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bench: degraded-read experiments"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run an experiment spec and write CSV");
    std::string spec_path;
    std::string out_path = "-";
    run->add_option("--spec", spec_path, "Experiment spec file")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_path, "CSV output ('-' for stdout)")->capture_default_str();

    auto* compare = app.add_subcommand("compare", "Ratios against a baseline strategy and normal reads");
    std::string in_path;
    std::string baseline = "ecpipe";
    compare->add_option("--in", in_path, "CSV written by 'bench run'")->required()->check(CLI::ExistingFile);
    compare->add_option("--baseline", baseline, "Baseline strategy")->capture_default_str();

    auto* graph = app.add_subcommand("graph", "Print the data-flow graph of one degraded read");
    std::size_t k = 6;
    std::size_t m = 3;
    std::string chunk = "1M";
    std::string packet = "256K";
    std::string strategy = "apls";
    std::size_t lost = 0;
    std::size_t q = 0;
    graph->add_option("--k", k)->capture_default_str();
    graph->add_option("--m", m)->capture_default_str();
    graph->add_option("--chunk", chunk, "Chunk size")->capture_default_str();
    graph->add_option("--packet", packet, "Packet size")->capture_default_str();
    graph->add_option("--strategy", strategy)->capture_default_str();
    graph->add_option("--lost", lost, "Lost chunk index")->capture_default_str();
    graph->add_option("--q", q, "Source cap for all-survivor strategies (0: all)");

    auto* simulate = app.add_subcommand("simulate", "Simulate a graph printed by 'bench graph'");
    std::string graph_path;
    std::string helper_bw = "100M";
    std::string starter_bw = "inf";
    double hop_latency = 0;
    simulate->add_option("--graph", graph_path, "Flow text file")->required()->check(CLI::ExistingFile);
    simulate->add_option("--helper-bw", helper_bw, "Per-node cap in bits/s")->capture_default_str();
    simulate->add_option("--starter-bw", starter_bw, "Starter cap in bits/s")->capture_default_str();
    simulate->add_option("--hop-latency", hop_latency, "Per-transfer setup time in seconds")->capture_default_str();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) {
            return do_run(spec_path, out_path);
        }
        if (*compare) {
            return do_compare(in_path, baseline);
        }
        if (*graph) {
            return do_graph(k, m, chunk, packet, strategy, lost, q);
        }
        return do_simulate(graph_path, helper_bw, starter_bw, hop_latency);
    } catch (const std::exception& e) {
        fmt::print(stderr, "bench: {}\n", e.what());
        return 1;
    }
}
