#pragma once

#include "apls/cluster/socket.hpp"
#include "apls/plan.hpp"
#include "apls/rscode.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// Cluster description shared by every process, stored as key = value lines:
//
//   coordinator = 127.0.0.1:7000
//   k = 6
//   m = 6
//   chunk_size = 8M
//   packet_size = 64K
//   stripe_dir = /var/tmp/apls
//   seed = 1
//   helper.0 = 127.0.0.1:7100
//   helper.0.up_bw = 100M          (optional, bits/s; default unlimited)
//   helper.0.down_bw = 100M
//   stripes = 2
//   placement.0 = 0,1,2,3,4,5,...  (helper id of each chunk of stripe 0)
//   failed = 0:3,1:0               (stripe:chunk pairs)
//
// Blank lines and lines starting with '#' are ignored.
namespace apls::cluster {

using NodeId = plan::NodeId;

/// Node id used for a requestor acting as the starter.
inline constexpr NodeId kRequestorNode = 0xFFFFFFFEu;

struct HelperInfo {
    Address address;
    double up_bw = std::numeric_limits<double>::infinity(); // bits/s
    double down_bw = std::numeric_limits<double>::infinity();

    bool operator==(const HelperInfo&) const = default;
};

struct ClusterManifest {
    Address coordinator;
    rs::CodeParams params;
    std::filesystem::path stripe_dir;
    std::uint64_t seed = 1;
    std::map<NodeId, HelperInfo> helpers;
    std::vector<std::vector<NodeId>> placement; // [stripe][chunk] -> helper
    std::set<std::pair<std::uint32_t, std::uint32_t>> failed; // (stripe, chunk)

    std::size_t stripe_count() const noexcept { return placement.size(); }

    /// Helper whose address equals `address`, if any.
    std::optional<NodeId> node_of(const Address& address) const;
    const HelperInfo& helper(NodeId id) const;

    /// Throws std::invalid_argument describing the first inconsistency.
    void validate() const;

    bool operator==(const ClusterManifest&) const = default;
};

ClusterManifest parse_manifest(std::string_view text);
std::string format_manifest(const ClusterManifest& manifest);

ClusterManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const ClusterManifest& manifest, const std::filesystem::path& path);

/// Where helper `id` keeps chunk `chunk` of stripe `stripe`.
std::filesystem::path chunk_path(const ClusterManifest& manifest, NodeId helper, std::uint32_t stripe,
                                 std::uint32_t chunk);

/// "stripe:index". Throws std::invalid_argument.
std::pair<std::uint32_t, std::uint32_t> parse_chunk_id(std::string_view text);

} // namespace apls::cluster
