#include "apls/gf.hpp"

#include <array>
#include <stdexcept>
#include <string>
#include <utility>

namespace apls::gf {
namespace {

struct Tables {
    std::array<Element, 512> exp{};
    std::array<unsigned, 256> log{};
    std::array<std::array<Element, 256>, 256> product{};
    std::array<Element, 256> inverse{};

    Tables() {
        // 2 is primitive modulo 0x11D, so its powers walk every nonzero element.
        unsigned x = 1;
        for (unsigned i = 0; i < 255; ++i) {
            exp[i] = static_cast<Element>(x);
            log[x] = i;
            x <<= 1;
            if (x & 0x100) {
                x ^= kFieldPolynomial;
            }
        }
        for (unsigned i = 255; i < exp.size(); ++i) {
            exp[i] = exp[i - 255];
        }
        for (unsigned a = 1; a < 256; ++a) {
            for (unsigned b = 1; b < 256; ++b) {
                product[a][b] = exp[log[a] + log[b]];
            }
            inverse[a] = exp[255 - log[a]];
        }
    }
};

const Tables& tables() {
    static const Tables t;
    return t;
}

} // namespace

Element mul(Element a, Element b) noexcept { return tables().product[a][b]; }

Element inv(Element a) {
    if (a == 0) {
        throw std::domain_error("no inverse of zero");
    }
    return tables().inverse[a];
}

Element div(Element a, Element b) {
    if (b == 0) {
        throw std::domain_error("division by zero");
    }
    return mul(a, tables().inverse[b]);
}

Element pow(Element a, unsigned n) noexcept {
    if (n == 0) {
        return 1;
    }
    if (a == 0) {
        return 0;
    }
    const auto& t = tables();
    return t.exp[(static_cast<unsigned long>(t.log[a]) * n) % 255];
}

void mul_add_region(Element c, std::span<const std::uint8_t> src, std::span<std::uint8_t> dst) {
    if (src.size() != dst.size()) {
        throw std::invalid_argument("region size mismatch");
    }
    if (c == 0) {
        return;
    }
    const std::size_t n = src.size();
    const std::uint8_t* s = src.data();
    std::uint8_t* d = dst.data();
    if (c == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            d[i] ^= s[i];
        }
        return;
    }
    const auto& row = tables().product[c];
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        d[i + 0] ^= row[s[i + 0]];
        d[i + 1] ^= row[s[i + 1]];
        d[i + 2] ^= row[s[i + 2]];
        d[i + 3] ^= row[s[i + 3]];
        d[i + 4] ^= row[s[i + 4]];
        d[i + 5] ^= row[s[i + 5]];
        d[i + 6] ^= row[s[i + 6]];
        d[i + 7] ^= row[s[i + 7]];
    }
    for (; i < n; ++i) {
        d[i] ^= row[s[i]];
    }
}

void mul_region(Element c, std::span<const std::uint8_t> src, std::span<std::uint8_t> dst) {
    if (src.size() != dst.size()) {
        throw std::invalid_argument("region size mismatch");
    }
    const auto& row = tables().product[c];
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = row[src[i]];
    }
}

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<Element> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw std::invalid_argument("matrix data length does not match dimensions");
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1;
    }
    return m;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= rows_) {
            throw std::out_of_range("row index " + std::to_string(indices[i]) + " out of range");
        }
        auto src = row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matrix dimension mismatch");
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t i = 0; i < a.cols(); ++i) {
            mul_add_region(a(r, i), b.row(i), out.row(r));
        }
    }
    return out;
}

Matrix invert(const Matrix& a) {
    if (a.rows() != a.cols()) {
        throw std::invalid_argument("cannot invert a non-square matrix");
    }
    const std::size_t n = a.rows();
    Matrix work = a;
    Matrix out = Matrix::identity(n);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        while (pivot < n && work(pivot, col) == 0) {
            ++pivot;
        }
        if (pivot == n) {
            throw std::domain_error("matrix not invertible");
        }
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) {
                std::swap(work(pivot, c), work(col, c));
                std::swap(out(pivot, c), out(col, c));
            }
        }
        const Element scale = inv(work(col, col));
        if (scale != 1) {
            mul_region(scale, work.row(col), work.row(col));
            mul_region(scale, out.row(col), out.row(col));
        }
        for (std::size_t r = 0; r < n; ++r) {
            const Element f = work(r, col);
            if (r == col || f == 0) {
                continue;
            }
            mul_add_region(f, work.row(col), work.row(r));
            mul_add_region(f, out.row(col), out.row(r));
        }
    }
    return out;
}

Matrix build_generator_matrix(std::size_t k, std::size_t m) {
    if (k < 1 || k + m > kFieldSize) {
        throw std::invalid_argument("generator parameters out of range: need 1 <= k and k + m <= 256");
    }
    const std::size_t n = k + m;
    Matrix vandermonde(n, k);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < k; ++c) {
            vandermonde(r, c) = pow(static_cast<Element>(r), static_cast<unsigned>(c));
        }
    }
    Matrix top(k, k, std::vector<Element>(vandermonde.data().begin(),
                                          vandermonde.data().begin() + static_cast<std::ptrdiff_t>(k * k)));
    return multiply(vandermonde, invert(top));
}

} // namespace apls::gf
