#include "apls/cluster/store.hpp"

#include <fstream>
#include <random>
#include <stdexcept>

namespace apls::cluster {

std::vector<rs::Buffer> generate_stripe_data(const rs::CodeParams& params, std::uint64_t seed, std::uint32_t stripe) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stripe};
    std::mt19937_64 rng(seq);
    std::vector<rs::Buffer> data(params.k, rs::Buffer(params.chunk_size));
    for (auto& chunk : data) {
        std::size_t i = 0;
        for (; i + 8 <= chunk.size(); i += 8) {
            const auto v = rng();
            for (std::size_t b = 0; b < 8; ++b) {
                chunk[i + b] = static_cast<std::uint8_t>(v >> (8 * b));
            }
        }
        for (auto v = rng(); i < chunk.size(); ++i, v >>= 8) {
            chunk[i] = static_cast<std::uint8_t>(v);
        }
    }
    return data;
}

void store_stripes(ClusterManifest& manifest, std::uint32_t count, std::uint64_t seed) {
    manifest.params.validate();
    std::vector<NodeId> ids;
    for (const auto& [id, h] : manifest.helpers) {
        ids.push_back(id);
    }
    if (ids.size() < manifest.params.width()) {
        throw std::runtime_error("placement impossible: " + std::to_string(ids.size()) + " helpers for " +
                                 std::to_string(manifest.params.width()) + " chunks per stripe");
    }
    const auto generator = gf::build_generator_matrix(manifest.params.k, manifest.params.m);
    manifest.placement.assign(count, {});
    manifest.seed = seed;
    for (std::uint32_t s = 0; s < count; ++s) {
        auto stripe = rs::make_stripe(manifest.params, generate_stripe_data(manifest.params, seed, s));
        auto& row = manifest.placement[s];
        for (std::uint32_t c = 0; c < manifest.params.width(); ++c) {
            row.push_back(ids[(s + c) % ids.size()]);
            write_chunk_file(manifest, row.back(), s, c, stripe.chunks[c]);
        }
    }
}

std::optional<rs::Buffer> read_chunk_file(const ClusterManifest& manifest, NodeId helper, std::uint32_t stripe,
                                          std::uint32_t chunk) {
    std::ifstream in(chunk_path(manifest, helper, stripe, chunk), std::ios::binary);
    if (!in) {
        return std::nullopt;
    }
    rs::Buffer data(manifest.params.chunk_size);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (static_cast<std::size_t>(in.gcount()) != data.size()) {
        throw std::runtime_error("chunk file " + chunk_path(manifest, helper, stripe, chunk).string() +
                                 " is shorter than chunk_size");
    }
    return data;
}

void write_chunk_file(const ClusterManifest& manifest, NodeId helper, std::uint32_t stripe, std::uint32_t chunk,
                      const rs::Buffer& data) {
    const auto path = chunk_path(manifest, helper, stripe, chunk);
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
}

bool chunk_available(const ClusterManifest& manifest, std::uint32_t stripe, std::uint32_t chunk) {
    if (stripe >= manifest.placement.size() || chunk >= manifest.placement[stripe].size()) {
        return false;
    }
    if (manifest.failed.contains({stripe, chunk})) {
        return false;
    }
    return std::filesystem::exists(chunk_path(manifest, manifest.placement[stripe][chunk], stripe, chunk));
}

} // namespace apls::cluster
