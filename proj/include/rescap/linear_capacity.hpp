#pragma once

// Exact memory and predictive capacities of linear reservoirs
//     x(n+1) = W x(n) + s(n) v
// driven by input with R(t) = sum_l A(l) l^|t|.
//
// Everything is evaluated in the eigenbasis of W: with W = P diag(d) P^-1 and
// omega = P^-1 v the capacities are those of the diagonal reservoir (d, omega),
// because m(k) = p_kᵀ C^-1 p_k is unchanged by any invertible change of state
// coordinates. Complex quantities use the plain transpose throughout.

#include <cstddef>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rescap/hmm_input.hpp"
#include "rescap/spectral.hpp"

namespace rescap {

struct ReservoirSpec {
    Eigen::VectorXcd d;      // eigenvalues of W
    Eigen::VectorXcd omega;  // P^-1 v

    Eigen::Index size() const { return d.size(); }
};

/// Shapes, finiteness, max|d| < 1, and conjugate-closed eigenvalues.
void validate(const ReservoirSpec& spec);

/// Diagonalizes W (eigenvector condition number must stay below 1e8).
ReservoirSpec reduce_to_diagonal(const Eigen::MatrixXd& w, const Eigen::VectorXd& v);

/// Merges nodes whose eigenvalues agree within 1e-12 (their states are
/// proportional, so the merged node carries the summed weight) and drops
/// nodes with zero input weight. Capacities are unchanged.
ReservoirSpec canonicalize(const ReservoirSpec& spec);

struct QuadratureOptions {
    std::size_t initial_points = 4096;
    std::size_t max_points = std::size_t{1} << 16;
    double rel_tol = 1e-10;
};

struct QuadratureB {
    Eigen::MatrixXcd b;
    std::size_t n_points = 0;
    double rel_change = 0.0;  // Frobenius change at the last doubling
};

/// B = ∫ S(f) (omega / (e^{-if} - d)) (omega / (e^{if} - d))ᵀ df on one grid.
Eigen::MatrixXcd compute_B(const AutocorrDecomposition& decomp, const ReservoirSpec& spec,
                           const QuadratureGrid& grid);

/// Same integral with grid doubling until the relative Frobenius change is
/// below rel_tol; throws "B integral not converged" past max_points.
QuadratureB compute_B(const AutocorrDecomposition& decomp, const ReservoirSpec& spec,
                      const QuadratureOptions& options = {});

/// Closed form of the same matrix from summing the lag-domain covariance:
///   B_ij = 2π ω_i ω_j Σ_l A(l) [1 + d_i l/(1 - d_i l) + d_j l/(1 - d_j l)] / (1 - d_i d_j).
Eigen::MatrixXcd compute_B_series(const AutocorrDecomposition& decomp, const ReservoirSpec& spec);

Eigen::MatrixXcd compute_D_PC(const AutocorrDecomposition& decomp, const ReservoirSpec& spec);
Eigen::MatrixXcd compute_D_MC(const AutocorrDecomposition& decomp, const ReservoirSpec& spec);

enum class CovarianceRoute { series, quadrature };

struct CapacityOptions {
    CovarianceRoute route = CovarianceRoute::series;
    QuadratureOptions quadrature{};
};

/// Capacities of one (input, reservoir) pair. The reservoir is canonicalized
/// and B is factorized once on construction. B, D_PC, D_MC and the solves
/// run in 113-bit floating point: random reservoirs with nearby eigenvalues
/// routinely give cond(B) ~ 1e15 and beyond, which double precision cannot
/// resolve.
class CapacityModel {
public:
    CapacityModel(const AutocorrDecomposition& decomp, const ReservoirSpec& spec, const CapacityOptions& options = {});
    ~CapacityModel();
    CapacityModel(CapacityModel&&) noexcept;
    CapacityModel& operator=(CapacityModel&&) noexcept;

    /// PC = 2π ωᵀ (D_PC ⊙ B^-1) ω.
    double predictive_capacity() const;
    /// MC = 2π ωᵀ (D_MC ⊙ B^-1) ω.
    double memory_capacity() const;
    /// m(k) = p_kᵀ C^-1 p_k with p_k = <s(n-k) x(n)>; k <= 0 is forecasting.
    double memory_function(long k) const;

    double b_condition() const;
    /// Largest imaginary part discarded by any evaluation so far.
    double imag_residue() const;
    const ReservoirSpec& reduced_spec() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

double predictive_capacity(const AutocorrDecomposition& decomp, const ReservoirSpec& spec,
                           const CapacityOptions& options = {});
double memory_capacity(const AutocorrDecomposition& decomp, const ReservoirSpec& spec,
                       const CapacityOptions& options = {});
double memory_function(const AutocorrDecomposition& decomp, const ReservoirSpec& spec, long k,
                       const CapacityOptions& options = {});

struct CapacityReport {
    double mc = 0.0;
    double pc = 0.0;
    std::vector<std::pair<long, double>> memory_function;  // k = -max_lag .. max_lag
    double b_condition = 0.0;
    double imag_residue = 0.0;
};

CapacityReport capacity_report(const AutocorrDecomposition& decomp, const ReservoirSpec& spec, long max_lag = 20,
                               const CapacityOptions& options = {});

/// One node driven by R(t) = e^{-alpha |t|}:
///   MC = (e^{4a} - 2e^{a}W + 2e^{3a}W - W^2) / ((e^{2a} - 1)(e^{2a} - W^2))
///   PC = e^{2a}(1 - W^2) / ((e^{2a} - 1)(e^{2a} - W^2))
double one_node_exponential_mc(double w, double alpha);
double one_node_exponential_pc(double w, double alpha);

struct OneNodeOptimum {
    double w = 0.0;
    double pc = 0.0;
};

/// Maximizes PC over one-node reservoirs d = (W), omega = (1) with
/// W in [-1 + eps, 1 - eps]: a 401-point scan, then golden-section search
/// around the best grid point down to |ΔW| < 1e-6.
OneNodeOptimum optimize_one_node(const AutocorrDecomposition& decomp, double eps = 1e-4);

}  // namespace rescap
