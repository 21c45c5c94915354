#pragma once

// Commands behind the rescap CLI. Each returns the full output text (CSV or
// JSON); configs are validated and inputs loaded before any computation.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rescap/errors.hpp"
#include "rescap/io.hpp"

namespace rescap {

struct ExperimentConfig {
    std::optional<std::string> input;  // bundled name or file path
    std::optional<Json> inline_input;  // decomposition or HMM object from a config file
    std::uint64_t seed = 0;
    std::string out;
    std::optional<int> grid;
    std::optional<std::pair<int, int>> n_range;
    std::optional<int> trials;
    std::optional<std::size_t> length;
    std::optional<std::size_t> burn_in;
    std::optional<int> max_lag;
    unsigned threads = 0;
    std::optional<std::size_t> quadrature;  // quadrature route with this many initial points
    std::string reservoir;                 // reservoir file for capacity / simulate
    std::string dump_states;
    bool tanh = false;  // simulate: tanh units instead of linear
};

/// Parses "a..b".
std::pair<int, int> parse_n_range(const std::string& text);

/// Reads a config object whose keys mirror the long flags ("input", "seed",
/// "n-range", "burn-in", ...). Unknown keys are config errors.
ExperimentConfig config_from_json(const Json& j);

/// W grid of the one-node sweep: W_i = -1 + 2(i + 1)/(n + 1), i = 0..n-1.
std::vector<double> sweep_grid(int n);

std::string cmd_sweep_w(const ExperimentConfig& config);
std::string cmd_random_ensemble(const ExperimentConfig& config);
std::string cmd_nonlinear_ensemble(const ExperimentConfig& config);
std::string cmd_bound(const ExperimentConfig& config);
std::string cmd_optimize(const ExperimentConfig& config);
std::string cmd_capacity(const ExperimentConfig& config);
std::string cmd_autocorr(const ExperimentConfig& config);
std::string cmd_psd(const ExperimentConfig& config);
/// Simulates the reservoir file on sampled input and reports the estimated
/// capacities; writes the trajectory when dump_states is set.
std::string cmd_simulate(const ExperimentConfig& config);

/// Runs a command by name; throws a config error for unknown names.
std::string run_command(const std::string& name, const ExperimentConfig& config);

/// Process exit code for an error: 2 config, 3 convergence, 4 model.
int exit_code(const Error& e);
Json error_json(const std::string& code, const std::string& detail);

}  // namespace rescap
