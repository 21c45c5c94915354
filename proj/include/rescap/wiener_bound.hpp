#pragma once

// Upper bound on the predictive capacity of any linear reservoir: the sum over
// horizons of the squared correlation achieved by the optimal causal linear
// (Wiener) predictor built from the last L inputs.

#include <vector>

#include <Eigen/Dense>

#include "rescap/hmm_input.hpp"

namespace rescap {

/// R_ij = R(i - j) on L lags, factorized once and reused for every horizon.
class ToeplitzSystem {
public:
    ToeplitzSystem(const AutocorrDecomposition& decomp, int length);

    int length() const { return length_; }
    const Eigen::MatrixXd& matrix() const { return r_; }

    /// (r_tau)_i = R(tau + i), i = 1..L.
    Eigen::VectorXd rhs(int tau) const;
    /// Wiener coefficients k_tau = R^-1 r_tau (least squares if R is singular).
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
    /// r_tauᵀ R^-1 r_tau, the squared correlation of the horizon-tau forecast.
    double horizon_score(int tau) const;

private:
    AutocorrDecomposition decomp_;
    int length_;
    Eigen::MatrixXd r_;
    Eigen::LDLT<Eigen::MatrixXd> ldlt_;
    bool deficient_ = false;
    Eigen::MatrixXd pseudo_factor_;  // V diag(1/sqrt(ev)) on the retained eigenspace
    Eigen::MatrixXd basis_;
};

Eigen::VectorXd wiener_coefficients(const AutocorrDecomposition& decomp, int tau, int length);

/// Solves R x = b for every column of b by Levinson recursion, O(L^2) per
/// column; R is given by its first column r (r[0] = 1). Throws
/// "invalid autocovariance" if R is not positive definite.
Eigen::MatrixXd levinson_solve(const Eigen::VectorXd& r, const Eigen::MatrixXd& b);

struct BoundResult {
    double bound = 0.0;
    int length_used = 0;
    int tau_max_used = 0;
    std::vector<double> per_tau;
    /// Set when L reached 2^14 before converging and the bound is the Aitken
    /// limit of the last doublings (slow 1/L convergence, e.g. a spectral zero).
    bool extrapolated = false;
};

/// Sum over tau = 0..tau_max of r_tauᵀ R^-1 r_tau. Since r_tau is a
/// combination of the vectors (lambda^i)_i, all horizons follow from one
/// small matrix of their R^-1 inner products. tau_max doubles until the
/// remaining horizons add < 1e-9, then L doubles until the bound moves by
/// < 1e-8; throws "bound not converged" if that fails by L = 2^14 and the
/// extrapolated limit is not stable to 1e-6.
BoundResult pc_upper_bound(const AutocorrDecomposition& decomp, int length = 256, int tau_max = 256);

}  // namespace rescap
