// Storage helper daemon.
#include "common.hpp"

#include "apls/cluster/helper.hpp"
#include "apls/units.hpp"

#include <CLI11.hpp>

int main(int argc, char** argv) {
    CLI::App app{"Helper: serves chunks and executes sub-request commands"};
    std::string manifest_path;
    apls::cluster::NodeId id = 0;
    std::string up_bw;
    std::string down_bw;
    std::string log_level = "info";
    double timeout = 30.0;
    app.add_option("--manifest", manifest_path, "Cluster manifest")->required()->check(CLI::ExistingFile);
    app.add_option("--id", id, "Helper id in the manifest")->required();
    app.add_option("--up-bw", up_bw, "Egress cap in bits/s (e.g. 100M, inf); default from the manifest");
    app.add_option("--down-bw", down_bw, "Ingress cap in bits/s; default from the manifest");
    app.add_option("--timeout", timeout, "Seconds to wait for a predecessor packet")->capture_default_str();
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    try {
        apls::tools::set_log_level(log_level);
        const auto signals = apls::tools::block_stop_signals();
        auto manifest = apls::cluster::load_manifest(manifest_path);
        const auto info = manifest.helper(id);
        apls::cluster::HelperOptions opts;
        opts.up_bw = up_bw.empty() ? info.up_bw : apls::units::parse_rate(up_bw);
        opts.down_bw = down_bw.empty() ? info.down_bw : apls::units::parse_rate(down_bw);
        opts.timeout = std::chrono::milliseconds(static_cast<long long>(timeout * 1000));
        apls::cluster::HelperServer helper(std::move(manifest), id,
                                           apls::cluster::Listener::bind(info.address.host, info.address.port), opts);
        spdlog::info("helper {} listening on {} (up {} bit/s, down {} bit/s)", id, helper.address().to_string(),
                     opts.up_bw, opts.down_bw);
        const int sig = apls::tools::wait_for_signal(signals);
        const auto st = helper.stats();
        spdlog::info("helper {} stopping on signal {}: {} reads done, {} failed, {} bytes out, {} bytes in", id, sig,
                     st.reads_completed, st.reads_failed, st.egress_bytes, st.ingress_bytes);
        helper.stop();
    } catch (const std::exception& e) {
        spdlog::error("helper {}: {}", id, e.what());
        return 1;
    }
    return 0;
}
