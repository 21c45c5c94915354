#include "rescap/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>

#include <fmt/format.h>

#include "rescap/simulation.hpp"
#include "rescap/spectral.hpp"
#include "rescap/wiener_bound.hpp"

namespace rescap {

namespace {

std::string num(double x) { return fmt::format("{:.17g}", x); }

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

InputProcess inline_input(const Json& j) {
    if (j.is_object() && j.contains("terms")) {
        InputProcess in{"inline", decomposition_from_json(j), std::nullopt};
        try {
            in.hmm = telegraph_mixture(in.decomp);
        } catch (const Error&) {
        }
        return in;
    }
    auto hmm = standardize_symbols(hmm_from_json(j));
    auto decomp = autocorr_decomposition(hmm);
    return InputProcess{"inline", std::move(decomp), std::move(hmm)};
}

InputProcess resolve_input(const ExperimentConfig& c, const char* fallback) {
    if (c.input && c.inline_input)
        throw config_error("ambiguous_input", "give either an input name/path or an inline input, not both");
    if (c.inline_input) return inline_input(*c.inline_input);
    return load_input(c.input.value_or(fallback));
}

CapacityOptions capacity_options(const ExperimentConfig& c) {
    CapacityOptions opts;
    if (c.quadrature) {
        quadrature_grid(*c.quadrature);  // validates the point count
        opts.route = CovarianceRoute::quadrature;
        opts.quadrature.initial_points = *c.quadrature;
        opts.quadrature.max_points = std::max(opts.quadrature.max_points, *c.quadrature);
    }
    return opts;
}

EstimationConfig estimation_config(const ExperimentConfig& c) {
    EstimationConfig est;
    if (c.length) est.sequence_length = *c.length;
    if (c.burn_in) est.burn_in = *c.burn_in;
    if (c.max_lag) est.max_lag = *c.max_lag;
    est.seed = c.seed;
    validate(est);
    return est;
}

int positive(std::optional<int> v, int fallback, const char* what) {
    const int x = v.value_or(fallback);
    if (x < 1) throw config_error("invalid_" + std::string(what), fmt::format("{} must be at least 1", what));
    return x;
}

std::string ensemble_csv(const std::vector<EnsembleRow>& rows, double bound) {
    std::string out = "kind,N,trial,seed,mc,pc,flags,bound\n";
    for (const auto& r : rows)
        out += fmt::format("{},{},{},{},{},{},{},{}\n", r.kind == EnsembleKind::linear ? "linear" : "nonlinear", r.n,
                           r.trial, r.seed, num(r.mc), num(r.pc), r.flags, num(bound));
    return out;
}

EnsembleConfig ensemble_config(const ExperimentConfig& c, EnsembleKind kind) {
    EnsembleConfig e;
    e.kind = kind;
    const auto [a, b] = c.n_range.value_or(std::pair{1, 10});
    if (a < 1 || b < a) throw config_error("invalid_range", "N range must satisfy 1 <= a <= b");
    e.n_min = a;
    e.n_max = b;
    e.trials = positive(c.trials, 25, "trials");
    e.seed = c.seed;
    e.threads = c.threads;
    if (kind == EnsembleKind::nonlinear) e.estimation = estimation_config(c);
    e.capacity = capacity_options(c);
    return e;
}

NetworkRealization network_from(const ReservoirInput& r, bool tanh) {
    NetworkRealization net;
    if (r.w) {
        net.w = *r.w;
        net.v = *r.v;
    } else {
        if (r.spec.d.imag().cwiseAbs().maxCoeff() > 0 || r.spec.omega.imag().cwiseAbs().maxCoeff() > 0)
            throw config_error("needs_real_reservoir", "simulation needs a real reservoir: give \"W\" and \"v\"");
        net.w = r.spec.d.real().asDiagonal();
        net.v = r.spec.omega.real();
    }
    net.f = tanh ? Nonlinearity::tanh : Nonlinearity::identity;
    validate(net);
    return net;
}

std::size_t to_size(const Json& v, const char* key) {
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw config_error("invalid_config", fmt::format("\"{}\" must be a nonnegative integer", key));
    return v.get<std::size_t>();
}

int to_int(const Json& v, const char* key) {
    if (!v.is_number_integer()) throw config_error("invalid_config", fmt::format("\"{}\" must be an integer", key));
    return v.get<int>();
}

std::string to_string(const Json& v, const char* key) {
    if (!v.is_string()) throw config_error("invalid_config", fmt::format("\"{}\" must be a string", key));
    return v.get<std::string>();
}

}  // namespace

std::pair<int, int> parse_n_range(const std::string& text) {
    const auto dots = text.find("..");
    auto parse = [&](std::string_view s) {
        int v = 0;
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size() || s.empty())
            throw config_error("invalid_range", fmt::format("cannot parse N range \"{}\" (expected a..b)", text));
        return v;
    };
    if (dots == std::string::npos) {
        const int v = parse(text);
        return {v, v};
    }
    const std::string_view sv(text);
    return {parse(sv.substr(0, dots)), parse(sv.substr(dots + 2))};
}

ExperimentConfig config_from_json(const Json& j) {
    if (!j.is_object()) throw config_error("invalid_config", "config file must be a JSON object");
    ExperimentConfig c;
    for (const auto& [key, v] : j.items()) {
        if (key == "input") {
            if (v.is_string())
                c.input = v.get<std::string>();
            else if (v.is_object())
                c.inline_input = v;
            else
                throw config_error("invalid_config", "\"input\" must be a name, a path or an inline object");
        } else if (key == "seed") {
            if (!v.is_number_unsigned()) throw config_error("invalid_config", "\"seed\" must be a nonnegative integer");
            c.seed = v.get<std::uint64_t>();
        } else if (key == "out") {
            c.out = to_string(v, "out");
        } else if (key == "grid") {
            c.grid = to_int(v, "grid");
        } else if (key == "n-range") {
            if (v.is_string())
                c.n_range = parse_n_range(v.get<std::string>());
            else if (v.is_array() && v.size() == 2)
                c.n_range = std::pair{to_int(v[0], "n-range"), to_int(v[1], "n-range")};
            else
                throw config_error("invalid_config", "\"n-range\" must be \"a..b\" or [a, b]");
        } else if (key == "trials") {
            c.trials = to_int(v, "trials");
        } else if (key == "length") {
            c.length = to_size(v, "length");
        } else if (key == "burn-in") {
            c.burn_in = to_size(v, "burn-in");
        } else if (key == "max-lag") {
            c.max_lag = to_int(v, "max-lag");
        } else if (key == "threads") {
            c.threads = static_cast<unsigned>(to_size(v, "threads"));
        } else if (key == "quadrature") {
            c.quadrature = to_size(v, "quadrature");
        } else if (key == "reservoir") {
            c.reservoir = to_string(v, "reservoir");
        } else if (key == "dump-states") {
            c.dump_states = to_string(v, "dump-states");
        } else if (key == "tanh") {
            if (!v.is_boolean()) throw config_error("invalid_config", "\"tanh\" must be a boolean");
            c.tanh = v.get<bool>();
        } else {
            throw config_error("invalid_config", fmt::format("unknown config key \"{}\"", key));
        }
    }
    return c;
}

std::vector<double> sweep_grid(int n) {
    if (n < 1) throw config_error("invalid_grid", "grid must have at least 1 point");
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = -1.0 + 2.0 * (i + 1) / (n + 1);
    return w;
}

std::string cmd_sweep_w(const ExperimentConfig& config) {
    const auto grid = sweep_grid(config.grid.value_or(199));
    const auto opts = capacity_options(config);
    const auto in = resolve_input(config, "exp01");

    std::string out = "W,MC,PC\n";
    for (double w : grid) {
        ReservoirSpec spec;
        spec.d = Eigen::VectorXcd::Constant(1, w);
        spec.omega = Eigen::VectorXcd::Constant(1, 1.0);
        const CapacityModel model(in.decomp, spec, opts);
        out += fmt::format("{},{},{}\n", num(w), num(model.memory_capacity()), num(model.predictive_capacity()));
    }
    return out;
}

std::string cmd_random_ensemble(const ExperimentConfig& config) {
    const auto ens = ensemble_config(config, EnsembleKind::linear);
    const auto in = resolve_input(config, "mix");
    const double bound = pc_upper_bound(in.decomp).bound;
    return ensemble_csv(ensemble_sweep(ens, in.decomp, nullptr), bound);
}

std::string cmd_nonlinear_ensemble(const ExperimentConfig& config) {
    const auto ens = ensemble_config(config, EnsembleKind::nonlinear);
    const auto in = resolve_input(config, "even");
    if (!in.hmm) throw config_error("needs_hmm", "nonlinear ensembles need an input with an HMM realization");
    const double bound = pc_upper_bound(in.decomp).bound;
    return ensemble_csv(ensemble_sweep(ens, in.decomp, &*in.hmm), bound);
}

std::string cmd_bound(const ExperimentConfig& config) {
    const auto in = resolve_input(config, "mix");
    const auto r = pc_upper_bound(in.decomp);
    return dump(Json{{"bound", r.bound}, {"L_used", r.length_used}, {"tau_max_used", r.tau_max_used},
                     {"per_tau", r.per_tau}, {"extrapolated", r.extrapolated}});
}

std::string cmd_optimize(const ExperimentConfig& config) {
    const auto in = resolve_input(config, "mix");
    const auto r = optimize_one_node(in.decomp);
    return dump(Json{{"W", r.w}, {"pc", r.pc}});
}

std::string cmd_capacity(const ExperimentConfig& config) {
    if (config.reservoir.empty()) throw config_error("needs_reservoir", "capacity needs --reservoir <file>");
    const auto opts = capacity_options(config);
    const int max_lag = config.max_lag.value_or(20);
    if (max_lag < 0) throw config_error("invalid_max_lag", "max lag must be nonnegative");
    const auto res = reservoir_from_json(read_json_file(config.reservoir));
    const auto in = resolve_input(config, "mix");
    return dump(to_json(capacity_report(in.decomp, res.spec, max_lag, opts)));
}

std::string cmd_autocorr(const ExperimentConfig& config) {
    const auto in = resolve_input(config, "even");
    return dump(to_json(in.decomp));
}

std::string cmd_psd(const ExperimentConfig& config) {
    const int n = config.grid.value_or(512);
    if (n < 2) throw config_error("invalid_grid", "psd grid needs at least 2 points");
    const auto in = resolve_input(config, "mix");
    const double pi = std::acos(-1.0);
    std::string out = "f,S\n";
    for (int k = 0; k < n; ++k) {
        const double f = -pi + 2.0 * pi * k / n;
        out += fmt::format("{},{}\n", num(f), num(psd(in.decomp, f)));
    }
    return out;
}

std::string cmd_simulate(const ExperimentConfig& config) {
    if (config.reservoir.empty()) throw config_error("needs_reservoir", "simulate needs --reservoir <file>");
    const auto est = estimation_config(config);
    const auto net = network_from(reservoir_from_json(read_json_file(config.reservoir)), config.tanh);
    const auto in = resolve_input(config, "mix");
    if (!in.hmm) throw config_error("needs_hmm", "simulation needs an input with an HMM realization");

    const std::size_t start = std::max<std::size_t>(est.burn_in, static_cast<std::size_t>(est.max_lag));
    const auto input = sample_sequence(*in.hmm, start + est.sequence_length + static_cast<std::size_t>(est.max_lag),
                                       0, est.seed);
    const auto r = estimate_capacities(net, input, est);
    if (!config.dump_states.empty()) {
        const std::span<const double> driven(input.data(), start + est.sequence_length);
        write_states_binary(config.dump_states, run_network(net, driven, est.burn_in));
    }

    Json mf = Json::array();
    for (long k = -r.max_lag(); k <= r.max_lag(); ++k) mf.push_back(Json::array({k, r.m(k)}));
    return dump(Json{{"mc", r.mc},
                     {"pc", r.pc},
                     {"mc_stderr", r.mc_stderr},
                     {"pc_stderr", r.pc_stderr},
                     {"memory_function", std::move(mf)},
                     {"covariance_condition", r.covariance_condition},
                     {"pseudo_inverse", r.pseudo_inverse},
                     {"length", est.sequence_length},
                     {"burn_in", est.burn_in},
                     {"max_lag", est.max_lag},
                     {"seed", est.seed}});
}

std::string run_command(const std::string& name, const ExperimentConfig& config) {
    if (name == "sweep-w") return cmd_sweep_w(config);
    if (name == "random-ensemble") return cmd_random_ensemble(config);
    if (name == "nonlinear-ensemble") return cmd_nonlinear_ensemble(config);
    if (name == "bound" || name == "wiener-bound") return cmd_bound(config);
    if (name == "optimize") return cmd_optimize(config);
    if (name == "capacity") return cmd_capacity(config);
    if (name == "autocorr") return cmd_autocorr(config);
    if (name == "psd") return cmd_psd(config);
    if (name == "simulate") return cmd_simulate(config);
    throw config_error("unknown_command", fmt::format("unknown command \"{}\"", name));
}

int exit_code(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::config: return 2;
        case ErrorKind::convergence: return 3;
        case ErrorKind::model: return 4;
    }
    return 1;
}

Json error_json(const std::string& code, const std::string& detail) {
    return Json{{"error", code}, {"detail", detail}};
}

}  // namespace rescap
