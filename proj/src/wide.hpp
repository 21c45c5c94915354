#pragma once

// 113-bit (binary128) scalars for the ill-conditioned parts of the capacity
// formulas, plus the small dense inverse they need. Eigen's decompositions do
// not instantiate cleanly for boost::multiprecision::complex128, and the
// matrices here are reservoir-sized, so a plain Gauss-Jordan is enough.

#include <complex>
#include <cstddef>
#include <vector>

#include <boost/multiprecision/complex128.hpp>
#include <boost/multiprecision/float128.hpp>

namespace rescap::detail {

using wide_real = boost::multiprecision::float128;
using wide_complex = boost::multiprecision::complex128;

inline wide_complex widen(std::complex<double> z) { return wide_complex(wide_real(z.real()), wide_real(z.imag())); }

inline std::complex<double> narrow(const wide_complex& z) {
    return {static_cast<double>(z.real()), static_cast<double>(z.imag())};
}

inline const wide_real& wide_pi() {
    static const wide_real pi = boost::multiprecision::acos(wide_real(-1));
    return pi;
}

/// Row-major square matrix.
template <class T>
class SquareMatrix {
public:
    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t n) : n_(n), a_(n * n, T(0)) {}

    std::size_t size() const { return n_; }
    T& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

private:
    std::size_t n_ = 0;
    std::vector<T> a_;
};

/// Gauss-Jordan inverse with partial pivoting. Returns false when a pivot
/// falls below `singular_ratio` times the largest entry of the input.
template <class T>
bool invert(SquareMatrix<T> m, SquareMatrix<T>& inverse, const wide_real& singular_ratio) {
    using boost::multiprecision::abs;
    const std::size_t n = m.size();
    inverse = SquareMatrix<T>(n);
    for (std::size_t i = 0; i < n; ++i) inverse(i, i) = T(1);

    wide_real scale(0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (abs(m(i, j)) > scale) scale = abs(m(i, j));
    if (scale == 0) return n == 0;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        wide_real best = abs(m(col, col));
        for (std::size_t r = col + 1; r < n; ++r) {
            const wide_real a = abs(m(r, col));
            if (a > best) {
                best = a;
                pivot = r;
            }
        }
        if (best <= singular_ratio * scale) return false;
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(m(col, j), m(pivot, j));
                std::swap(inverse(col, j), inverse(pivot, j));
            }
        }
        const T inv_pivot = T(1) / m(col, col);
        for (std::size_t j = 0; j < n; ++j) {
            m(col, j) *= inv_pivot;
            inverse(col, j) *= inv_pivot;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const T factor = m(r, col);
            if (factor == T(0)) continue;
            for (std::size_t j = 0; j < n; ++j) {
                m(r, j) -= factor * m(col, j);
                inverse(r, j) -= factor * inverse(col, j);
            }
        }
    }
    return true;
}

}  // namespace rescap::detail
