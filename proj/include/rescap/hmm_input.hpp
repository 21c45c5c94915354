#pragma once

// Countable hidden Markov input processes and the exponential-sum form of
// their autocorrelation, R(t) = sum_l A(l) l^|t|.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace rescap {

using Complex = std::complex<double>;

/// Hidden Markov model with emissions on transitions. matrices[x](i, j) is the
/// joint probability of emitting symbols[x] and moving to hidden state i,
/// given hidden state j. The summed transition matrix is column-stochastic.
struct LabeledHmm {
    std::vector<double> symbols;
    std::vector<Eigen::MatrixXd> matrices;

    int n_states() const { return matrices.empty() ? 0 : static_cast<int>(matrices.front().rows()); }
    Eigen::MatrixXd transition() const;
    /// Sum over symbols of symbol * T^(x).
    Eigen::MatrixXd weighted_transition() const;
};

/// Checks shape, nonnegativity, and column sums (within 1e-12). Throws
/// config errors; irreducibility is checked by stationary_distribution.
void validate(const LabeledHmm& hmm);

struct AutocorrTerm {
    Complex lambda;
    Complex weight;  // A(lambda)
};

/// R(t) = sum over terms of weight * lambda^|t|, with 0^0 = 1 so that a
/// lambda = 0 term is a lag-0 (white-noise) component.
struct AutocorrDecomposition {
    std::vector<AutocorrTerm> terms;
};

/// |lambda| < 1, sum of weights equal to 1, real R(t). Throws model errors.
void validate(const AutocorrDecomposition& decomp);

Eigen::VectorXd stationary_distribution(const LabeledHmm& hmm);

struct SymbolMoments {
    double mean;
    double variance;
};

/// Exact stationary mean and variance of the emitted symbol.
SymbolMoments stationary_moments(const LabeledHmm& hmm);

/// Affinely rescales the symbols to zero stationary mean and unit variance.
LabeledHmm standardize_symbols(const LabeledHmm& hmm);

/// Spectral expansion of the lag-t autocovariance of a standardized HMM.
///
/// For t >= 1 the probability of emitting a at time 0 and b at time t is
/// 1ᵀ T^(b) T^(t-1) T^(a) p_eq, so with T = P diag(mu) P^-1 and O the
/// symbol-weighted transition matrix,
///     R(t) = sum_i c_i mu_i^(t-1),   c_i = (1ᵀ O P)_i (P^-1 O p_eq)_i.
/// Each nonzero mu_i becomes a term (mu_i, c_i / mu_i); the shortfall
/// 1 - sum A is carried by a lambda = 0 term so that R(0) = 1.
AutocorrDecomposition autocorr_decomposition(const LabeledHmm& hmm);

double autocorr(const AutocorrDecomposition& decomp, long t);

/// Emits `length` symbols from the stationary chain after discarding
/// `burn_in` emissions. Deterministic in `seed`.
std::vector<double> sample_sequence(const LabeledHmm& hmm, std::size_t length, std::size_t burn_in,
                                    std::uint64_t seed);

/// Two-state Even Process, standardized; R(0) = 1, R(t) = -(1/2)(-1/2)^|t|.
/// State 0 (A): emit 0 and stay w.p. 1/2, emit 1 and go to B w.p. 1/2.
/// State 1 (B): emit 1 and go to A w.p. 1.
LabeledHmm even_process();

/// Same topology with raw symbols {0, 1}.
LabeledHmm even_process_raw();

/// HMM realization of a decomposition whose terms all have real lambda in
/// (-1, 1) and positive real weight: a product of independent symmetric
/// two-state chains, each flipping sign with probability (1 - lambda)/2 and
/// emitting its state ±1, the output being sum_k sqrt(A_k) * state_k.
/// At most 12 terms.
LabeledHmm telegraph_mixture(const AutocorrDecomposition& decomp);

/// {(e^-alpha, 1)}.
AutocorrDecomposition exponential_autocorr(double alpha);

/// Mixture of exponentials sum_k w_k e^{-alpha_k |t|}.
AutocorrDecomposition exponential_mixture(std::span<const double> alphas, std::span<const double> weights);

/// {(0, 1)}: unit-variance white noise.
AutocorrDecomposition white_noise();

}  // namespace rescap
