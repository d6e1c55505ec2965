#pragma once

#include "apls/gf.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace apls::rs {

using Buffer = std::vector<std::uint8_t>;
using ChunkIndex = std::size_t;

/// RS(k, m) layout of one stripe. Sizes are in bytes; a word is one byte.
struct CodeParams {
    std::size_t k = 0;
    std::size_t m = 0;
    std::size_t chunk_size = 0;
    std::size_t packet_size = 0;

    std::size_t width() const noexcept { return k + m; }
    std::size_t packet_count() const noexcept { return packet_size == 0 ? 0 : chunk_size / packet_size; }

    /// Throws std::invalid_argument unless 1 <= k, k+m <= 256, packet_size >= 1
    /// and packet_size divides chunk_size.
    void validate() const;

    bool operator==(const CodeParams&) const = default;
};

/// Data chunks 0..k-1 followed by parity chunks k..k+m-1.
struct Stripe {
    CodeParams params;
    std::vector<Buffer> chunks;
};

/// Decoding coefficients for one lost chunk over k helper chunks:
/// lost[i] = sum_j coefficients[j] * chunk[helper_chunk_indices[j]][i].
struct CoefficientList {
    std::vector<ChunkIndex> helper_chunk_indices;
    std::vector<gf::Element> coefficients;

    bool operator==(const CoefficientList&) const = default;
};

/// Computes the m parity chunks. `generator` must be build_generator_matrix(k, m).
std::vector<Buffer> encode(const CodeParams& params, const gf::Matrix& generator, std::span<const Buffer> data);
std::vector<Buffer> encode(const CodeParams& params, std::span<const Buffer> data);

/// Encodes `data` into a full stripe.
Stripe make_stripe(const CodeParams& params, std::vector<Buffer> data);

/// Coefficients reproducing chunk `lost` from the chunks in `helpers` (in that
/// order). The result is row `lost` of the generator times the inverse of the
/// helpers' generator rows.
CoefficientList decoding_coefficients(const CodeParams& params, const gf::Matrix& generator, ChunkIndex lost,
                                      std::span<const ChunkIndex> helpers);

/// output[i] = sum_j coeffs.coefficients[j] * slices[j][i].
Buffer reconstruct_words(const CoefficientList& coeffs, std::span<const std::span<const std::uint8_t>> slices);
Buffer reconstruct_words(const CoefficientList& coeffs, std::span<const Buffer> slices);

/// True iff every parity chunk equals the re-encoding of the data chunks.
bool verify_stripe(const Stripe& stripe, const gf::Matrix& generator);

} // namespace apls::rs
