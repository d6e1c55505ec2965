#include "apls/cluster/local_cluster.hpp"

#include "apls/cluster/store.hpp"

#include <random>
#include <unistd.h>

namespace apls::cluster {

namespace {

std::filesystem::path make_temp_dir() {
    std::random_device rd;
    const auto base = std::filesystem::temp_directory_path();
    for (int attempt = 0; attempt < 100; ++attempt) {
        auto p = base / ("apls-cluster-" + std::to_string(::getpid()) + "-" + std::to_string(rd()));
        if (std::filesystem::create_directory(p)) {
            return p;
        }
    }
    throw std::runtime_error("cannot create a temporary directory");
}

} // namespace

LocalCluster::LocalCluster(LocalClusterOptions options) : options_(std::move(options)) {
    options_.params.validate();
    if (options_.dir.empty()) {
        options_.dir = make_temp_dir();
        owns_dir_ = true;
    }
    const std::size_t count = options_.helpers == 0 ? options_.params.width() + 1 : options_.helpers;

    // Bind everything first so the manifest can carry the real ports.
    auto coordinator_listener = Listener::bind("127.0.0.1", 0);
    std::vector<Listener> listeners;
    manifest_.coordinator = coordinator_listener.address();
    manifest_.params = options_.params;
    manifest_.stripe_dir = options_.dir / "stripes";
    for (std::size_t i = 0; i < count; ++i) {
        listeners.push_back(Listener::bind("127.0.0.1", 0));
        manifest_.helpers[static_cast<NodeId>(i)] =
            HelperInfo{listeners.back().address(), options_.helper_up_bw, options_.helper_down_bw};
    }
    store_stripes(manifest_, options_.stripes, options_.seed);
    save_manifest(manifest_, options_.dir / "cluster.manifest");

    CoordinatorOptions copts;
    copts.seed = options_.seed;
    coordinator_ = std::make_unique<Coordinator>(manifest_, copts);
    coordinator_->start(std::move(coordinator_listener));
    for (std::size_t i = 0; i < count; ++i) {
        HelperOptions hopts;
        hopts.up_bw = options_.helper_up_bw;
        hopts.down_bw = options_.helper_down_bw;
        hopts.timeout = options_.timeout;
        helpers_.push_back(
            std::make_unique<HelperServer>(manifest_, static_cast<NodeId>(i), std::move(listeners[i]), hopts));
    }
}

LocalCluster::~LocalCluster() {
    coordinator_.reset();
    helpers_.clear();
    if (owns_dir_) {
        std::error_code ec;
        std::filesystem::remove_all(options_.dir, ec);
    }
}

HelperServer& LocalCluster::helper(NodeId id) {
    if (id >= helpers_.size()) {
        throw std::out_of_range("no helper " + std::to_string(id));
    }
    return *helpers_[id];
}

RequestorOptions LocalCluster::requestor_options() const {
    RequestorOptions r;
    r.coordinator = manifest_.coordinator;
    r.timeout = options_.timeout;
    return r;
}

ReadResult LocalCluster::read(std::uint32_t stripe, std::uint32_t chunk, RequestorOptions options) {
    options.coordinator = manifest_.coordinator;
    return requestor_read(stripe, chunk, options);
}

rs::Buffer LocalCluster::original(std::uint32_t stripe, std::uint32_t chunk) const {
    auto data = generate_stripe_data(manifest_.params, options_.seed, stripe);
    if (chunk < manifest_.params.k) {
        return data[chunk];
    }
    return rs::encode(manifest_.params, data)[chunk - manifest_.params.k];
}

void LocalCluster::erase_chunk(std::uint32_t stripe, std::uint32_t chunk) {
    std::filesystem::remove(chunk_path(manifest_, manifest_.placement.at(stripe).at(chunk), stripe, chunk));
}

} // namespace apls::cluster
