#include "rescap/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <thread>

#include <fmt/format.h>

#include "rescap/errors.hpp"
#include "rescap/rng.hpp"

namespace rescap {

namespace {

constexpr double kDivergenceNorm = 1e12;
constexpr double kPinvCondition = 1e10;

// Sufficient statistics of one block of samples n.
struct BlockStats {
    double count = 0.0;
    Eigen::VectorXd sum_x;
    Eigen::MatrixXd sum_xx;
    Eigen::VectorXd sum_s;  // Σ s(n-k), row k + M
    Eigen::MatrixXd sum_sx;  // Σ s(n-k) x(n)ᵀ, row k + M

    BlockStats(Eigen::Index n, int max_lag)
        : sum_x(Eigen::VectorXd::Zero(n)),
          sum_xx(Eigen::MatrixXd::Zero(n, n)),
          sum_s(Eigen::VectorXd::Zero(2 * max_lag + 1)),
          sum_sx(Eigen::MatrixXd::Zero(2 * max_lag + 1, n)) {}

    BlockStats& operator+=(const BlockStats& o) {
        count += o.count;
        sum_x += o.sum_x;
        sum_xx += o.sum_xx;
        sum_s += o.sum_s;
        sum_sx += o.sum_sx;
        return *this;
    }
};

struct QuadraticForms {
    std::vector<double> m;  // k = -M..M
    double condition = 1.0;
    bool pseudo_inverse = false;
};

QuadraticForms quadratic_forms(const BlockStats& s, int max_lag) {
    const double t = s.count;
    const Eigen::VectorXd mean_x = s.sum_x / t;
    const Eigen::MatrixXd cov = s.sum_xx / t - mean_x * mean_x.transpose();
    const Eigen::VectorXd mean_s = s.sum_s / t;
    const Eigen::MatrixXd p = s.sum_sx / t - mean_s * mean_x.transpose();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    const Eigen::VectorXd ev = es.eigenvalues();
    const double largest = ev.maxCoeff();
    QuadraticForms out;
    out.condition = ev.minCoeff() > 0.0 ? largest / ev.minCoeff() : INFINITY;
    out.pseudo_inverse = !(out.condition <= kPinvCondition);
    const double cutoff = out.pseudo_inverse ? 1e-10 * largest : 0.0;

    Eigen::MatrixXd factor(cov.rows(), 0);
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) <= cutoff) continue;
        factor.conservativeResize(Eigen::NoChange, factor.cols() + 1);
        factor.col(factor.cols() - 1) = es.eigenvectors().col(i) / std::sqrt(ev(i));
    }
    const Eigen::MatrixXd projected = p * factor;  // row k: (F ᵀ p_k)ᵀ
    out.m.resize(static_cast<std::size_t>(2 * max_lag + 1));
    for (int r = 0; r < 2 * max_lag + 1; ++r) out.m[static_cast<std::size_t>(r)] = projected.row(r).squaredNorm();
    return out;
}

std::pair<double, double> capacities_from(const std::vector<double>& m, int max_lag) {
    double mc = 0.0, pc = 0.0;
    for (int k = 1; k <= max_lag; ++k) mc += m[static_cast<std::size_t>(k + max_lag)];
    for (int k = 0; k <= max_lag; ++k) pc += m[static_cast<std::size_t>(max_lag - k)];
    return {mc, pc};
}

double stddev(const std::vector<double>& xs) {
    if (xs.size() < 2) return NAN;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

void check_finite_state(const Eigen::VectorXd& x) {
    if (!(x.squaredNorm() <= kDivergenceNorm * kDivergenceNorm))
        throw model_error("divergent_trajectory", "divergent trajectory: state norm exceeded 1e12");
}

}  // namespace

void validate(const NetworkRealization& net) {
    if (net.w.rows() != net.w.cols() || net.w.rows() != net.v.size() || net.v.size() == 0)
        throw config_error("invalid_network", "W must be square and match the length of v");
    if (!net.w.allFinite() || !net.v.allFinite())
        throw config_error("invalid_network", "network has non-finite weights");
}

void validate(const EstimationConfig& config) {
    if (config.sequence_length == 0) throw config_error("invalid_length", "sequence length must be positive");
    if (config.max_lag < 0) throw config_error("invalid_max_lag", "max lag must be nonnegative");
    if (static_cast<double>(config.max_lag) >= static_cast<double>(config.sequence_length) / 100.0)
        throw config_error("invalid_max_lag", "max lag must be below sequence_length / 100");
    if (config.block_length == 0) throw config_error("invalid_block", "block length must be positive");
    if (config.bootstrap_replicates < 0) throw config_error("invalid_bootstrap", "replicates must be nonnegative");
}

Eigen::MatrixXd run_network(const NetworkRealization& net, std::span<const double> input, std::size_t burn_in) {
    validate(net);
    if (input.empty()) throw config_error("empty_input", "input sequence is empty");
    if (burn_in >= input.size()) throw config_error("invalid_burn_in", "burn-in consumes the whole input");
    const auto n = net.size();
    Eigen::MatrixXd states(static_cast<Eigen::Index>(input.size() - burn_in), n);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd next(n);
    for (std::size_t t = 0; t < input.size(); ++t) {
        next.noalias() = net.w * x;
        next += input[t] * net.v;
        if (net.f == Nonlinearity::tanh) next = next.array().tanh();
        x.swap(next);
        check_finite_state(x);
        if (t >= burn_in) states.row(static_cast<Eigen::Index>(t - burn_in)) = x.transpose();
    }
    return states;
}

CapacityEstimate estimate_capacities(const NetworkRealization& net, std::span<const double> input,
                                     const EstimationConfig& config) {
    validate(net);
    validate(config);
    const int lag = config.max_lag;
    const std::size_t start = std::max<std::size_t>(config.burn_in, static_cast<std::size_t>(lag));
    const std::size_t total = config.sequence_length;
    if (input.size() < start + total + static_cast<std::size_t>(lag))
        throw config_error("short_input", fmt::format("input has {} samples, estimator needs {}", input.size(),
                                                      start + total + static_cast<std::size_t>(lag)));
    const auto n = net.size();

    std::size_t block = config.block_length;
    if (total / block < 10) block = std::max<std::size_t>(1, total / 10);

    // x(m) is the state after consuming s(m - 1); samples use m in [start, start + total).
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd next(n);
    auto advance = [&](std::size_t m) {  // x(m) -> x(m + 1)
        next.noalias() = net.w * x;
        next += input[m] * net.v;
        if (net.f == Nonlinearity::tanh) next = next.array().tanh();
        x.swap(next);
        check_finite_state(x);
    };
    for (std::size_t m = 0; m + 1 <= start; ++m) advance(m);  // now x = x(start)

    const Eigen::Map<const Eigen::VectorXd> s(input.data(), static_cast<Eigen::Index>(input.size()));
    std::vector<BlockStats> blocks;
    Eigen::MatrixXd xb(static_cast<Eigen::Index>(block), n);
    for (std::size_t first = start; first < start + total; first += block) {
        const std::size_t len = std::min(block, start + total - first);
        const auto rows = static_cast<Eigen::Index>(len);
        for (std::size_t r = 0; r < len; ++r) {
            xb.row(static_cast<Eigen::Index>(r)) = x.transpose();
            advance(first + r);
        }
        const auto xs = xb.topRows(rows);
        BlockStats st(n, lag);
        st.count = static_cast<double>(len);
        st.sum_x = xs.colwise().sum().transpose();
        st.sum_xx.noalias() = xs.transpose() * xs;
        for (int k = -lag; k <= lag; ++k) {
            const auto seg = s.segment(static_cast<Eigen::Index>(first) - k, rows);
            st.sum_s(k + lag) = seg.sum();
            st.sum_sx.row(k + lag).noalias() = (xs.transpose() * seg).transpose();
        }
        blocks.push_back(std::move(st));
    }

    BlockStats all(n, lag);
    for (const auto& b : blocks) all += b;
    const auto forms = quadratic_forms(all, lag);

    CapacityEstimate est;
    est.memory_function = forms.m;
    std::tie(est.mc, est.pc) = capacities_from(forms.m, lag);
    est.covariance_condition = forms.condition;
    est.pseudo_inverse = forms.pseudo_inverse;

    Rng rng(derive_seed(config.seed, 0xb0075742ULL));
    std::vector<double> mcs, pcs;
    const auto k = blocks.size();
    for (int rep = 0; rep < config.bootstrap_replicates; ++rep) {
        BlockStats agg(n, lag);
        for (std::size_t i = 0; i < k; ++i) agg += blocks[static_cast<std::size_t>(rng() % k)];
        const auto [mc, pc] = capacities_from(quadratic_forms(agg, lag).m, lag);
        mcs.push_back(mc);
        pcs.push_back(pc);
    }
    est.mc_stderr = stddev(mcs);
    est.pc_stderr = stddev(pcs);
    return est;
}

CapacityEstimate estimate_capacities(const NetworkRealization& net, const LabeledHmm& hmm,
                                     const EstimationConfig& config) {
    validate(net);
    validate(config);
    const LabeledHmm standardized = standardize_symbols(hmm);
    const std::size_t start = std::max<std::size_t>(config.burn_in, static_cast<std::size_t>(config.max_lag));
    const auto input = sample_sequence(standardized, start + config.sequence_length + static_cast<std::size_t>(config.max_lag),
                                       0, config.seed);
    return estimate_capacities(net, input, config);
}

ReservoirSpec random_linear_reservoir(int n, std::uint64_t seed) {
    if (n < 1) throw config_error("invalid_size", "reservoir size must be at least 1");
    Rng rng(seed);
    ReservoirSpec spec{Eigen::VectorXcd(n), Eigen::VectorXcd(n)};
    for (int i = 0; i < n; ++i) {
        double d;
        do {
            d = uniform(rng, -1.0, 1.0);
        } while (std::abs(d) >= 1.0);
        spec.d(i) = Complex{d, 0.0};
    }
    for (int i = 0; i < n; ++i) spec.omega(i) = Complex{uniform01(rng), 0.0};
    return spec;
}

double spectral_radius(const Eigen::MatrixXd& w) {
    if (w.size() == 0) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(w, false);
    if (es.info() != Eigen::Success) throw convergence_error("eigen_failed", "eigenvalues of W failed");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

NetworkRealization random_nonlinear_reservoir(int n, std::uint64_t seed) {
    if (n < 1) throw config_error("invalid_size", "reservoir size must be at least 1");
    Rng rng(seed);
    NetworkRealization net{Eigen::MatrixXd(n, n), Eigen::VectorXd(n), Nonlinearity::tanh};
    double radius = 0.0;
    while (!(radius > 0.0)) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) net.w(i, j) = uniform01(rng);
        radius = spectral_radius(net.w);
    }
    for (int i = 0; i < n; ++i) net.v(i) = uniform01(rng);
    net.w *= (1.0 / 1.1) / radius;
    return net;
}

NetworkRealization linear_network(const Eigen::MatrixXd& w, const Eigen::VectorXd& v) {
    NetworkRealization net{w, v, Nonlinearity::identity};
    validate(net);
    if (!(spectral_radius(w) < 1.0))
        throw model_error("echo_state_violated", "echo state property violated: spectral radius >= 1");
    return net;
}

std::vector<EnsembleRow> ensemble_sweep(const EnsembleConfig& config, const AutocorrDecomposition& decomp,
                                        const LabeledHmm* hmm) {
    if (config.n_min < 1 || config.n_max < config.n_min)
        throw config_error("invalid_range", "N range must satisfy 1 <= a <= b");
    if (config.trials < 1) throw config_error("invalid_trials", "trials per N must be at least 1");
    if (config.kind == EnsembleKind::nonlinear) {
        if (hmm == nullptr) throw config_error("needs_hmm", "nonlinear ensembles need an HMM input");
        validate(config.estimation);
        validate(*hmm);
    } else {
        validate(decomp);
    }

    std::vector<EnsembleRow> rows;
    for (int n = config.n_min; n <= config.n_max; ++n)
        for (int t = 0; t < config.trials; ++t)
            rows.push_back({config.kind, n, t,
                            derive_seed(config.seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(t)), NAN,
                            NAN, ""});

    auto run_row = [&](EnsembleRow& row) {
        try {
            if (config.kind == EnsembleKind::linear) {
                const CapacityModel model(decomp, random_linear_reservoir(row.n, row.seed), config.capacity);
                row.mc = model.memory_capacity();
                row.pc = model.predictive_capacity();
            } else {
                EstimationConfig est = config.estimation;
                est.seed = derive_seed(row.seed, 1);
                const auto result = estimate_capacities(random_nonlinear_reservoir(row.n, row.seed), *hmm, est);
                row.mc = result.mc;
                row.pc = result.pc;
                if (result.pseudo_inverse) row.flags = "pinv";
            }
        } catch (const Error& e) {
            row.flags = "error:" + e.code();
        }
    };

    unsigned threads = config.threads != 0 ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(rows.size()));
    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < threads; ++i) {
            pool.emplace_back([&] {
                for (std::size_t idx = next++; idx < rows.size(); idx = next++) run_row(rows[idx]);
            });
        }
    }
    return rows;
}

void write_states_binary(const std::string& path, const Eigen::MatrixXd& states) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("io_error", fmt::format("cannot open {} for writing", path));
    for (Eigen::Index r = 0; r < states.rows(); ++r) {
        for (Eigen::Index c = 0; c < states.cols(); ++c) {
            std::uint64_t bits = std::bit_cast<std::uint64_t>(states(r, c));
            if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
            char bytes[8];
            std::memcpy(bytes, &bits, 8);
            out.write(bytes, 8);
        }
    }
    if (!out) throw config_error("io_error", fmt::format("failed writing {}", path));
}

}  // namespace rescap
