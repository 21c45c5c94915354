#include "rescap/spectral.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "rescap/errors.hpp"

namespace rescap {

double psd(const AutocorrDecomposition& decomp, double f) {
    const Complex e_minus = std::polar(1.0, -f);
    const Complex e_plus = std::polar(1.0, f);
    Complex s{0.0, 0.0};
    for (const auto& term : decomp.terms) {
        const Complex l = term.lambda;
        s += term.weight * (1.0 - l * l) / ((1.0 - l * e_minus) * (1.0 - l * e_plus));
    }
    if (std::abs(s.imag()) > 1e-10 * std::max(1.0, std::abs(s.real())))
        throw model_error("complex_psd", fmt::format("S({}) has imaginary residue {:.3g}", f, s.imag()));
    if (s.real() < -1e-8)
        throw model_error("negative_psd",
                          fmt::format("invalid autocovariance (negative PSD): S({}) = {:.6g}", f, s.real()));
    return s.real();
}

QuadratureGrid quadrature_grid(std::size_t n_points) {
    if (n_points < 16 || (n_points & (n_points - 1)) != 0)
        throw config_error("invalid_grid", fmt::format("quadrature size {} must be a power of two >= 16", n_points));
    constexpr double pi = std::numbers::pi;
    QuadratureGrid grid;
    grid.weight = 2.0 * pi / static_cast<double>(n_points);
    grid.nodes.resize(n_points);
    for (std::size_t k = 0; k < n_points; ++k)
        grid.nodes[k] = -pi + grid.weight * static_cast<double>(k);
    return grid;
}

}  // namespace rescap
