#include "apls/rscode.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace apls::rs {

void CodeParams::validate() const {
    if (k < 1) {
        throw std::invalid_argument("k must be at least 1");
    }
    if (k + m > gf::kFieldSize) {
        throw std::invalid_argument("k + m must not exceed 256");
    }
    if (packet_size < 1) {
        throw std::invalid_argument("packet_size must be at least 1 byte");
    }
    if (chunk_size % packet_size != 0) {
        throw std::invalid_argument("packet_size " + std::to_string(packet_size) + " does not divide chunk_size " +
                                    std::to_string(chunk_size));
    }
}

std::vector<Buffer> encode(const CodeParams& params, const gf::Matrix& generator, std::span<const Buffer> data) {
    if (data.size() != params.k) {
        throw std::invalid_argument("encode expects exactly k data buffers");
    }
    for (const auto& d : data) {
        if (d.size() != params.chunk_size) {
            throw std::invalid_argument("data buffer length differs from chunk_size");
        }
    }
    if (generator.rows() != params.width() || generator.cols() != params.k) {
        throw std::invalid_argument("generator shape does not match code parameters");
    }
    std::vector<Buffer> parity(params.m, Buffer(params.chunk_size, 0));
    for (std::size_t j = 0; j < params.m; ++j) {
        auto row = generator.row(params.k + j);
        for (std::size_t l = 0; l < params.k; ++l) {
            gf::mul_add_region(row[l], data[l], parity[j]);
        }
    }
    return parity;
}

std::vector<Buffer> encode(const CodeParams& params, std::span<const Buffer> data) {
    return encode(params, gf::build_generator_matrix(params.k, params.m), data);
}

Stripe make_stripe(const CodeParams& params, std::vector<Buffer> data) {
    Stripe stripe{params, std::move(data)};
    auto parity = encode(params, stripe.chunks);
    for (auto& p : parity) {
        stripe.chunks.push_back(std::move(p));
    }
    return stripe;
}

CoefficientList decoding_coefficients(const CodeParams& params, const gf::Matrix& generator, ChunkIndex lost,
                                      std::span<const ChunkIndex> helpers) {
    const std::size_t n = params.width();
    if (helpers.size() != params.k) {
        throw std::invalid_argument("decoding needs exactly k helper chunks");
    }
    if (lost >= n) {
        throw std::invalid_argument("lost chunk index out of range");
    }
    std::vector<bool> seen(n, false);
    for (auto h : helpers) {
        if (h >= n) {
            throw std::invalid_argument("helper chunk index out of range");
        }
        if (h == lost) {
            throw std::invalid_argument("lost chunk cannot be its own helper");
        }
        if (seen[h]) {
            throw std::invalid_argument("helper chunk indices must be distinct");
        }
        seen[h] = true;
    }
    if (generator.rows() != n || generator.cols() != params.k) {
        throw std::invalid_argument("generator shape does not match code parameters");
    }

    const gf::Matrix decoding = gf::invert(generator.select_rows(helpers));
    const ChunkIndex lost_row[] = {lost};
    const gf::Matrix coeffs = gf::multiply(generator.select_rows(lost_row), decoding);

    CoefficientList out;
    out.helper_chunk_indices.assign(helpers.begin(), helpers.end());
    out.coefficients.assign(coeffs.data().begin(), coeffs.data().end());
    return out;
}

Buffer reconstruct_words(const CoefficientList& coeffs, std::span<const std::span<const std::uint8_t>> slices) {
    if (slices.size() != coeffs.coefficients.size()) {
        throw std::invalid_argument("slice count differs from coefficient count");
    }
    const std::size_t len = slices.empty() ? 0 : slices.front().size();
    Buffer out(len, 0);
    for (std::size_t j = 0; j < slices.size(); ++j) {
        if (slices[j].size() != len) {
            throw std::invalid_argument("slice lengths differ");
        }
        gf::mul_add_region(coeffs.coefficients[j], slices[j], out);
    }
    return out;
}

Buffer reconstruct_words(const CoefficientList& coeffs, std::span<const Buffer> slices) {
    std::vector<std::span<const std::uint8_t>> views(slices.begin(), slices.end());
    return reconstruct_words(coeffs, views);
}

bool verify_stripe(const Stripe& stripe, const gf::Matrix& generator) {
    const auto& p = stripe.params;
    if (stripe.chunks.size() != p.width()) {
        return false;
    }
    for (const auto& c : stripe.chunks) {
        if (c.size() != p.chunk_size) {
            return false;
        }
    }
    std::span<const Buffer> data(stripe.chunks.data(), p.k);
    const auto parity = encode(p, generator, data);
    for (std::size_t j = 0; j < p.m; ++j) {
        if (parity[j] != stripe.chunks[p.k + j]) {
            return false;
        }
    }
    return true;
}

} // namespace apls::rs
