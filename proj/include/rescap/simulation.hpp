#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rescap/hmm_input.hpp"
#include "rescap/linear_capacity.hpp"

namespace rescap {

enum class Nonlinearity { identity, tanh };

/// x(n+1) = f(W x(n) + s(n) v), applied elementwise.
struct NetworkRealization {
    Eigen::MatrixXd w;
    Eigen::VectorXd v;
    Nonlinearity f = Nonlinearity::identity;

    Eigen::Index size() const { return v.size(); }
};

void validate(const NetworkRealization& net);

struct EstimationConfig {
    std::size_t sequence_length = 1'000'000;  // samples entering the covariances
    std::size_t burn_in = 1'000;
    int max_lag = 100;  // M
    std::uint64_t seed = 0;
    /// Non-overlapping blocks for the block bootstrap; must be much longer
    /// than the correlation time of input and state.
    std::size_t block_length = 10'000;
    int bootstrap_replicates = 200;
};

void validate(const EstimationConfig& config);

/// States x(burn_in + 1), ..., x(input.size()) starting from x(0) = 0, one
/// row each; row r was produced after consuming input[burn_in + r].
/// Throws "divergent trajectory" if the state norm exceeds 1e12.
Eigen::MatrixXd run_network(const NetworkRealization& net, std::span<const double> input, std::size_t burn_in = 0);

struct CapacityEstimate {
    double mc = 0.0;
    double pc = 0.0;
    /// m_hat(k) for k = -M..M; index k + M.
    std::vector<double> memory_function;
    double mc_stderr = 0.0;  // block-bootstrap standard errors
    double pc_stderr = 0.0;
    double covariance_condition = 1.0;
    bool pseudo_inverse = false;  // covariance condition above 1e10

    double m(long k) const { return memory_function.at(static_cast<std::size_t>(k + max_lag())); }
    long max_lag() const { return static_cast<long>(memory_function.size() / 2); }
};

/// Sample-covariance estimates
///   mc_hat = Σ_{k=1..M} p_kᵀ C^-1 p_k,  pc_hat = Σ_{k=0..M} p_{-k}ᵀ C^-1 p_{-k},
/// with p_k the 1/T covariance of s(n-k) and x(n). The input is the
/// standardized HMM; sampling uses config.seed.
CapacityEstimate estimate_capacities(const NetworkRealization& net, const LabeledHmm& hmm,
                                     const EstimationConfig& config);

/// Same estimator on a caller-supplied standardized input. Needs
/// input.size() >= max(burn_in, M) + sequence_length + M.
CapacityEstimate estimate_capacities(const NetworkRealization& net, std::span<const double> input,
                                     const EstimationConfig& config);

/// d_i ~ U[-1, 1], omega_i ~ U[0, 1], i.i.d.
ReservoirSpec random_linear_reservoir(int n, std::uint64_t seed);

/// W_ij, v_i ~ U[0, 1], W rescaled to spectral radius 1/1.1, tanh units.
NetworkRealization random_nonlinear_reservoir(int n, std::uint64_t seed);

/// Real linear network for a reservoir given directly by (W, v).
NetworkRealization linear_network(const Eigen::MatrixXd& w, const Eigen::VectorXd& v);

double spectral_radius(const Eigen::MatrixXd& w);

enum class EnsembleKind { linear, nonlinear };

struct EnsembleRow {
    EnsembleKind kind;
    int n;
    int trial;
    std::uint64_t seed;
    double mc;
    double pc;
    std::string flags;  // empty, "pinv", or "error:<code>"
};

struct EnsembleConfig {
    EnsembleKind kind = EnsembleKind::linear;
    int n_min = 1;
    int n_max = 10;
    int trials = 25;
    std::uint64_t seed = 0;
    unsigned threads = 0;  // 0: hardware concurrency
    EstimationConfig estimation{};
    CapacityOptions capacity{};  // linear kind only
};

/// Linear ensembles use the closed-form capacities of random_linear_reservoir
/// draws; nonlinear ensembles simulate random_nonlinear_reservoir draws on
/// `hmm`. Trial seeds derive from (seed, N, trial) so rows do not depend on
/// thread scheduling. Per-trial failures become flagged rows.
std::vector<EnsembleRow> ensemble_sweep(const EnsembleConfig& config, const AutocorrDecomposition& decomp,
                                        const LabeledHmm* hmm);

/// Raw little-endian float64 rows, N values per step.
void write_states_binary(const std::string& path, const Eigen::MatrixXd& states);

}  // namespace rescap
