#pragma once

#include <cstddef>
#include <vector>

#include "rescap/hmm_input.hpp"

namespace rescap {

/// Power spectral density S(f) = sum_l A(l) (1 - l^2) / |1 - l e^{-if}|^2
/// (Wiener-Khinchin transform of the decomposition). A lambda = 0 term is a
/// flat component. Throws when S(f) < -1e-8.
double psd(const AutocorrDecomposition& decomp, double f);

/// Rectangle rule on the periodic interval [-pi, pi); exact for
/// trigonometric polynomials of degree < n_points.
struct QuadratureGrid {
    std::vector<double> nodes;
    double weight = 0.0;

    std::size_t size() const { return nodes.size(); }

    template <class F>
    auto integrate(F&& fn) const {
        decltype(fn(0.0)) sum{};
        for (double f : nodes) sum += fn(f);
        return sum * weight;
    }
};

/// n_points must be a power of two and at least 16.
QuadratureGrid quadrature_grid(std::size_t n_points);

}  // namespace rescap
