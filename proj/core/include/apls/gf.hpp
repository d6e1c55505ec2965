#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

// Arithmetic in GF(2^8) and dense matrices over it.
//
// Elements are bytes read as polynomials over GF(2) modulo x^8+x^4+x^3+x^2+1.
// Multiplication goes through a 256x256 product table built once from
// log/antilog tables on first use; initialization is thread-safe and
// happens-before any call that returns.
namespace apls::gf {

using Element = std::uint8_t;

inline constexpr unsigned kFieldPolynomial = 0x11D;
inline constexpr std::size_t kFieldSize = 256;

constexpr Element add(Element a, Element b) noexcept { return static_cast<Element>(a ^ b); }

Element mul(Element a, Element b) noexcept;

/// Multiplicative inverse. Throws std::domain_error("no inverse of zero") for 0.
Element inv(Element a);

/// a / b. Throws std::domain_error when b is zero.
Element div(Element a, Element b);

/// a raised to the n-th power, with 0^0 == 1.
Element pow(Element a, unsigned n) noexcept;

/// dst[i] ^= c * src[i]. Sizes must match (std::invalid_argument otherwise).
void mul_add_region(Element c, std::span<const std::uint8_t> src, std::span<std::uint8_t> dst);

/// dst[i] = c * src[i].
void mul_region(Element c, std::span<const std::uint8_t> src, std::span<std::uint8_t> dst);

/// Row-major matrix of field elements.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols);
    Matrix(std::size_t rows, std::size_t cols, std::vector<Element> data);

    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    Element& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    Element operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<const Element> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::span<Element> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

    const std::vector<Element>& data() const noexcept { return data_; }

    /// New matrix built from the given rows, in the given order.
    Matrix select_rows(std::span<const std::size_t> indices) const;

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Element> data_;
};

/// Matrix product. Throws std::invalid_argument when a.cols() != b.rows().
Matrix multiply(const Matrix& a, const Matrix& b);

/// Gauss-Jordan inverse. Throws std::invalid_argument for non-square input and
/// std::domain_error("matrix not invertible") for singular input.
Matrix invert(const Matrix& a);

/// Systematic (k+m) x k generator: the extended Vandermonde matrix over the
/// points 0..k+m-1, right-multiplied by the inverse of its top k x k block.
/// The top block is the identity and every k-row subset is invertible.
Matrix build_generator_matrix(std::size_t k, std::size_t m);

} // namespace apls::gf
