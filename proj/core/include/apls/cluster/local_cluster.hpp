#pragma once

#include "apls/cluster/coordinator.hpp"
#include "apls/cluster/helper.hpp"
#include "apls/cluster/requestor.hpp"

#include <filesystem>
#include <memory>
#include <vector>

namespace apls::cluster {

struct LocalClusterOptions {
    rs::CodeParams params;
    std::size_t helpers = 0; // 0: k + m + 1
    std::uint32_t stripes = 1;
    std::uint64_t seed = 1;
    double helper_up_bw = std::numeric_limits<double>::infinity();
    double helper_down_bw = std::numeric_limits<double>::infinity();
    /// Working directory; empty creates (and later removes) a temporary one.
    std::filesystem::path dir;
    std::chrono::milliseconds timeout{30000};
};

/// Coordinator and helpers running on loopback inside this process, over
/// freshly stored stripes. Used by tests and the bench cluster backend.
class LocalCluster {
public:
    explicit LocalCluster(LocalClusterOptions options);
    ~LocalCluster();

    LocalCluster(const LocalCluster&) = delete;
    LocalCluster& operator=(const LocalCluster&) = delete;

    const ClusterManifest& manifest() const noexcept { return manifest_; }
    Coordinator& coordinator() noexcept { return *coordinator_; }
    HelperServer& helper(NodeId id);

    /// Requestor options pointing at this cluster's coordinator.
    RequestorOptions requestor_options() const;
    ReadResult read(std::uint32_t stripe, std::uint32_t chunk, RequestorOptions options);

    /// Original bytes of a chunk, regenerated from the seed.
    rs::Buffer original(std::uint32_t stripe, std::uint32_t chunk) const;

    void fail_chunk(std::uint32_t stripe, std::uint32_t chunk) { coordinator_->set_failed(stripe, chunk); }
    /// Deletes the chunk's file.
    void erase_chunk(std::uint32_t stripe, std::uint32_t chunk);

private:
    LocalClusterOptions options_;
    bool owns_dir_ = false;
    ClusterManifest manifest_;
    std::unique_ptr<Coordinator> coordinator_;
    std::vector<std::unique_ptr<HelperServer>> helpers_;
};

} // namespace apls::cluster
