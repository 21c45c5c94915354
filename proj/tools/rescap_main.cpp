#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "rescap/experiments.hpp"

namespace {

struct Flags {
    std::string config;
    std::string input;
    std::uint64_t seed = 0;
    std::string out;
    int grid = 0;
    std::string n_range;
    int trials = 0;
    std::size_t length = 0;
    std::size_t burn_in = 0;
    int max_lag = 0;
    unsigned threads = 0;
    std::size_t quadrature = 0;
    std::string reservoir;
    std::string dump_states;
    bool tanh = false;
};

void add_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "JSON config file; flags override it");
    cmd->add_option("--input", f.input, "exp01, mix, even, or an HMM / decomposition JSON file");
    cmd->add_option("--seed", f.seed, "master seed");
    cmd->add_option("--out", f.out, "output path (default stdout)");
    cmd->add_option("--grid", f.grid, "number of grid points");
    cmd->add_option("--n-range", f.n_range, "reservoir sizes a..b");
    cmd->add_option("--trials", f.trials, "trials per N");
    cmd->add_option("--length", f.length, "simulated samples entering the estimates");
    cmd->add_option("--burn-in", f.burn_in, "discarded initial steps");
    cmd->add_option("--max-lag", f.max_lag, "largest lag M");
    cmd->add_option("--threads", f.threads, "worker threads (0: all cores)");
    cmd->add_option("--quadrature", f.quadrature, "integrate B on a grid of this many points");
    cmd->add_option("--reservoir", f.reservoir, "reservoir JSON file");
    cmd->add_option("--dump-states", f.dump_states, "write the state trajectory as little-endian float64");
    cmd->add_flag("--tanh", f.tanh, "simulate tanh units");
}

rescap::ExperimentConfig merge(const CLI::App* cmd, const Flags& f) {
    rescap::ExperimentConfig c;
    if (!f.config.empty()) c = rescap::config_from_json(rescap::read_json_file(f.config));
    auto given = [&](const char* name) { return cmd->get_option(name)->count() > 0; };
    if (given("--input")) {
        c.input = f.input;
        c.inline_input.reset();
    }
    if (given("--seed")) c.seed = f.seed;
    if (given("--out")) c.out = f.out;
    if (given("--grid")) c.grid = f.grid;
    if (given("--n-range")) c.n_range = rescap::parse_n_range(f.n_range);
    if (given("--trials")) c.trials = f.trials;
    if (given("--length")) c.length = f.length;
    if (given("--burn-in")) c.burn_in = f.burn_in;
    if (given("--max-lag")) c.max_lag = f.max_lag;
    if (given("--threads")) c.threads = f.threads;
    if (given("--quadrature")) c.quadrature = f.quadrature;
    if (given("--reservoir")) c.reservoir = f.reservoir;
    if (given("--dump-states")) c.dump_states = f.dump_states;
    if (given("--tanh")) c.tanh = f.tanh;
    return c;
}

int fail(const std::string& code, const std::string& detail, int status) {
    std::cerr << rescap::error_json(code, detail).dump() << '\n';
    return status;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Memory and predictive capacity of reservoirs driven by hidden Markov input"};
    app.require_subcommand(1);

    const std::map<std::string, std::string> commands = {
        {"sweep-w", "one-node MC and PC over a W grid (CSV)"},
        {"random-ensemble", "closed-form capacities of random linear reservoirs (CSV)"},
        {"nonlinear-ensemble", "simulated capacities of random tanh networks (CSV)"},
        {"bound", "Wiener upper bound on PC (JSON)"},
        {"optimize", "best one-node W for PC (JSON)"},
        {"capacity", "closed-form capacities of a reservoir file (JSON)"},
        {"autocorr", "autocorrelation decomposition of the input (JSON)"},
        {"psd", "power spectral density on a frequency grid (CSV)"},
        {"simulate", "simulated capacities of a reservoir file (JSON)"},
    };
    Flags flags;
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, help] : commands) {
        subs[name] = app.add_subcommand(name, help);
        add_flags(subs[name], flags);
    }
    subs["bound"]->alias("wiener-bound");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("invalid_arguments", e.what(), 2);
    }

    for (const auto& [name, cmd] : subs) {
        if (!cmd->parsed()) continue;
        try {
            const auto config = merge(cmd, flags);
            const std::string text = rescap::run_command(name, config);
            if (config.out.empty()) {
                std::cout << text;
            } else {
                std::ofstream file(config.out, std::ios::binary);
                file << text;
                if (!file) return fail("io_error", "cannot write " + config.out, 2);
            }
            return 0;
        } catch (const rescap::Error& e) {
            return fail(e.code(), e.what(), rescap::exit_code(e));
        } catch (const std::exception& e) {
            return fail("internal_error", e.what(), 1);
        }
    }
    return 0;
}
