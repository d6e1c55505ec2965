// Client: reads chunks (normal or degraded) and loads stripes into a cluster.
#include "common.hpp"

#include "apls/cluster/requestor.hpp"
#include "apls/cluster/store.hpp"
#include "apls/units.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <iostream>

namespace {

using namespace apls;

int do_read(const std::string& manifest_path, const std::string& coordinator, const std::string& chunk_id,
            const std::string& strategy, const std::string& mode, const std::string& starter,
            const std::string& down_bw, std::uint32_t q, double timeout, const std::string& out, bool verify,
            bool verbose) {
    std::optional<cluster::ClusterManifest> manifest;
    if (!manifest_path.empty()) {
        manifest = cluster::load_manifest(manifest_path);
    }
    cluster::RequestorOptions opts;
    if (!coordinator.empty()) {
        opts.coordinator = cluster::parse_address(coordinator);
    } else if (manifest) {
        opts.coordinator = manifest->coordinator;
    } else {
        throw std::invalid_argument("need --manifest or --coordinator");
    }
    opts.strategy = plan::parse_strategy(strategy);
    if (mode == "auto") {
        opts.mode = cluster::ReadMode::Auto;
    } else if (mode == "normal") {
        opts.mode = cluster::ReadMode::Normal;
    } else if (mode == "degraded") {
        opts.mode = cluster::ReadMode::Degraded;
    } else {
        throw std::invalid_argument("mode must be auto, normal or degraded");
    }
    if (starter == "self") {
        opts.starter = cluster::StarterMode::Self;
    } else if (starter == "auto") {
        opts.starter = cluster::StarterMode::Auto;
    } else {
        throw std::invalid_argument("starter must be self or auto");
    }
    if (!down_bw.empty()) {
        opts.down_bw = units::parse_rate(down_bw);
    }
    opts.source_limit = q;
    opts.timeout = std::chrono::milliseconds(static_cast<long long>(timeout * 1000));

    const auto [stripe, index] = cluster::parse_chunk_id(chunk_id);
    const auto result = cluster::requestor_read(stripe, index, opts);

    fmt::print("read {}:{} {} strategy={} bytes={} latency={:.6f}s\n", stripe, index,
               result.degraded ? "degraded" : "normal", result.degraded ? strategy : "-", result.data.size(),
               result.latency);
    if (verbose) {
        fmt::print("read_id={} coordinator_rtt={:.6f}s\n", result.read_id, result.coordinator_rtt);
        if (result.degraded) {
            fmt::print("starter={} agents={}\n",
                       result.starter == cluster::kRequestorNode ? std::string("requestor")
                                                                 : std::to_string(result.starter),
                       fmt::join(result.command.agent_locations, " "));
        }
        for (const auto& [node, b] : result.node_bytes) {
            fmt::print("helper {} ingress={} egress={}\n", node, b.ingress, b.egress);
        }
    }
    if (!out.empty()) {
        std::ofstream f(out, std::ios::binary | std::ios::trunc);
        f.write(reinterpret_cast<const char*>(result.data.data()), static_cast<std::streamsize>(result.data.size()));
        if (!f) {
            throw std::runtime_error("cannot write " + out);
        }
    }
    if (verify) {
        if (!manifest) {
            throw std::invalid_argument("--verify needs --manifest");
        }
        const auto& params = manifest->params;
        auto data = cluster::generate_stripe_data(params, manifest->seed, stripe);
        const auto expected = index < params.k ? data[index] : rs::encode(params, data)[index - params.k];
        const auto at = static_cast<std::ptrdiff_t>(result.command.start_position);
        const bool ok = result.degraded ? std::equal(result.data.begin(), result.data.end(), expected.begin() + at)
                                        : result.data == expected;
        fmt::print("verify: {}\n", ok ? "ok" : "MISMATCH");
        return ok ? 0 : 3;
    }
    return 0;
}

int do_store(const std::string& manifest_path, std::uint32_t stripes, std::optional<std::uint64_t> seed) {
    auto manifest = cluster::load_manifest(manifest_path);
    const auto s = seed ? *seed : tools::env_seed().value_or(manifest.seed);
    cluster::store_stripes(manifest, stripes, s);
    cluster::save_manifest(manifest, manifest_path);
    fmt::print("stored {} stripes of RS({},{}) with seed {} under {}\n", stripes, manifest.params.k,
               manifest.params.m, s, manifest.stripe_dir.string());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Requestor: reads chunks from the cluster"};
    app.require_subcommand(1);
    std::string log_level = "warn";
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error")->capture_default_str();

    auto* read = app.add_subcommand("read", "Read one chunk, reconstructing it when unavailable");
    std::string manifest_path;
    std::string coordinator;
    std::string chunk_id;
    std::string strategy = "apls";
    std::string mode = "auto";
    std::string starter = "self";
    std::string down_bw;
    std::uint32_t q = 0;
    double timeout = 30.0;
    std::string out;
    bool verify = false;
    bool verbose = false;
    read->add_option("--manifest", manifest_path, "Cluster manifest (gives the coordinator address)");
    read->add_option("--coordinator", coordinator, "Coordinator host:port");
    read->add_option("--chunk", chunk_id, "stripe:index")->required();
    read->add_option("--strategy", strategy,
                     "traditional|ppr|ecpipe|ecpipe-b|apls-parallel|apls-pipelined|apls")
        ->capture_default_str();
    read->add_option("--mode", mode, "auto|normal|degraded")->capture_default_str();
    read->add_option("--starter", starter, "self: receive here; auto: coordinator picks a light helper")
        ->capture_default_str();
    read->add_option("--down-bw", down_bw, "Ingress cap in bits/s");
    read->add_option("--q", q, "Cap on the number of sources (0: all survivors)");
    read->add_option("--timeout", timeout, "Seconds before giving up")->capture_default_str();
    read->add_option("--out", out, "Write the chunk bytes here");
    read->add_flag("--verify", verify, "Compare against the seeded original (needs --manifest)");
    read->add_flag("-v,--verbose", verbose, "Print coordinator RTT, agents and byte counters");

    auto* store = app.add_subcommand("store", "Generate, encode and place stripes; updates the manifest");
    std::string store_manifest;
    std::uint32_t stripes = 1;
    std::optional<std::uint64_t> seed;
    store->add_option("--manifest", store_manifest, "Cluster manifest")->required()->check(CLI::ExistingFile);
    store->add_option("--stripes", stripes, "Number of stripes")->capture_default_str();
    store->add_option("--seed", seed, "Data seed (default: APLS_SEED, then the manifest seed)");

    CLI11_PARSE(app, argc, argv);
    try {
        tools::set_log_level(log_level);
        if (*read) {
            return do_read(manifest_path, coordinator, chunk_id, strategy, mode, starter, down_bw, q, timeout, out,
                           verify, verbose);
        }
        return do_store(store_manifest, stripes, seed);
    } catch (const std::exception& e) {
        fmt::print(stderr, "requestor: {}\n", e.what());
        return 1;
    }
}
