// Chunk directory and degraded-read planner daemon.
#include "common.hpp"

#include "apls/cluster/coordinator.hpp"

#include <CLI11.hpp>

int main(int argc, char** argv) {
    CLI::App app{"Coordinator: locates chunks and plans degraded reads"};
    std::string manifest_path;
    std::string log_level = "info";
    double window = 60.0;
    double fraction = 0.25;
    double refresh = 1.0;
    app.add_option("--manifest", manifest_path, "Cluster manifest")->required()->check(CLI::ExistingFile);
    app.add_option("--load-window", window, "Seconds of request history per node")->capture_default_str();
    app.add_option("--light-fraction", fraction, "Quantile defining light-loaded starters")->capture_default_str();
    app.add_option("--refresh", refresh, "Seconds between load snapshots")->capture_default_str();
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    try {
        apls::tools::set_log_level(log_level);
        const auto signals = apls::tools::block_stop_signals();
        auto manifest = apls::cluster::load_manifest(manifest_path);
        apls::cluster::CoordinatorOptions opts;
        opts.load_window = window;
        opts.starter_policy = {fraction, refresh};
        opts.seed = apls::tools::env_seed().value_or(manifest.seed);
        const auto address = manifest.coordinator;
        apls::cluster::Coordinator coordinator(std::move(manifest), opts);
        coordinator.start(apls::cluster::Listener::bind(address.host, address.port));
        spdlog::info("coordinator listening on {}", coordinator.address().to_string());
        const int sig = apls::tools::wait_for_signal(signals);
        spdlog::info("coordinator stopping on signal {}", sig);
        coordinator.stop();
    } catch (const std::exception& e) {
        spdlog::error("coordinator: {}", e.what());
        return 1;
    }
    return 0;
}
