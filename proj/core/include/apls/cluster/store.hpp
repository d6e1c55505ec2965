#pragma once

#include "apls/cluster/manifest.hpp"
#include "apls/rscode.hpp"

#include <cstdint>
#include <optional>

namespace apls::cluster {

/// Data chunks of stripe `stripe`, a pure function of (params, seed, stripe).
std::vector<rs::Buffer> generate_stripe_data(const rs::CodeParams& params, std::uint64_t seed, std::uint32_t stripe);

/// Encodes `count` stripes and writes every chunk into the directory of its
/// helper under manifest.stripe_dir. Chunk c of stripe s goes to the
/// ((s + c) mod H)-th helper in id order. Fills manifest.placement; throws
/// std::runtime_error when there are fewer than k+m helpers.
void store_stripes(ClusterManifest& manifest, std::uint32_t count, std::uint64_t seed);

/// Bytes of one chunk file, or std::nullopt when the file is missing.
std::optional<rs::Buffer> read_chunk_file(const ClusterManifest& manifest, NodeId helper, std::uint32_t stripe,
                                          std::uint32_t chunk);

void write_chunk_file(const ClusterManifest& manifest, NodeId helper, std::uint32_t stripe, std::uint32_t chunk,
                      const rs::Buffer& data);

/// True when the chunk is neither marked failed nor missing on disk.
bool chunk_available(const ClusterManifest& manifest, std::uint32_t stripe, std::uint32_t chunk);

} // namespace apls::cluster
