#include "rescap/hmm_input.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include <fmt/format.h>

#include "complex_util.hpp"
#include "rescap/errors.hpp"
#include "rescap/rng.hpp"

namespace rescap {

namespace {

constexpr double kStochasticTol = 1e-12;
constexpr double kDropTol = 1e-12;
constexpr double kDiagonalizableCond = 1e8;
constexpr double kZeroEigenvalue = 1e-12;
constexpr double kMergeTol = 1e-9;

}  // namespace

Eigen::MatrixXd LabeledHmm::transition() const {
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n_states(), n_states());
    for (const auto& m : matrices) t += m;
    return t;
}

Eigen::MatrixXd LabeledHmm::weighted_transition() const {
    Eigen::MatrixXd o = Eigen::MatrixXd::Zero(n_states(), n_states());
    for (std::size_t x = 0; x < matrices.size(); ++x) o += symbols[x] * matrices[x];
    return o;
}

void validate(const LabeledHmm& hmm) {
    if (hmm.symbols.empty()) throw config_error("invalid_hmm", "HMM has no symbols");
    if (hmm.symbols.size() != hmm.matrices.size())
        throw config_error("invalid_hmm", "HMM needs exactly one labeled matrix per symbol");
    const auto n = hmm.matrices.front().rows();
    if (n < 1) throw config_error("invalid_hmm", "HMM needs at least one hidden state");
    for (std::size_t x = 0; x < hmm.matrices.size(); ++x) {
        const auto& m = hmm.matrices[x];
        if (m.rows() != n || m.cols() != n)
            throw config_error("invalid_hmm", fmt::format("labeled matrix {} is not {}x{}", x, n, n));
        if (!m.allFinite() || (m.array() < 0.0).any())
            throw config_error("invalid_hmm", fmt::format("labeled matrix {} has negative or non-finite entries", x));
        if (!std::isfinite(hmm.symbols[x])) throw config_error("invalid_hmm", "symbol values must be finite");
    }
    const Eigen::RowVectorXd sums = hmm.transition().colwise().sum();
    for (Eigen::Index j = 0; j < n; ++j) {
        if (std::abs(sums(j) - 1.0) > kStochasticTol)
            throw config_error("invalid_hmm",
                               fmt::format("transition matrix column {} sums to {:.17g}, not 1", j, sums(j)));
    }
}

void validate(const AutocorrDecomposition& decomp) {
    Complex total{0.0, 0.0};
    for (const auto& term : decomp.terms) {
        if (!std::isfinite(term.lambda.real()) || !std::isfinite(term.lambda.imag()) ||
            !std::isfinite(term.weight.real()) || !std::isfinite(term.weight.imag()))
            throw config_error("invalid_decomposition", "decomposition has non-finite entries");
        if (std::abs(term.lambda) >= 1.0)
            throw model_error("non_mixing_component",
                              fmt::format("non-mixing correlation component: |lambda| = {:.17g} >= 1",
                                          std::abs(term.lambda)));
        total += term.weight;
    }
    if (std::abs(total.real() - 1.0) > 1e-10 || std::abs(total.imag()) > 1e-10)
        throw model_error("not_normalized",
                          fmt::format("decomposition weights sum to ({:.12g}, {:.12g}), expected R(0) = 1",
                                      total.real(), total.imag()));
    // Conjugate pairing makes R(t) real; checking a few lags catches unpaired terms.
    for (long t = 1; t <= 4; ++t) {
        Complex r{0.0, 0.0};
        for (const auto& term : decomp.terms) r += term.weight * detail::ipow(term.lambda, t);
        if (std::abs(r.imag()) > 1e-10)
            throw model_error("complex_autocorrelation",
                              "complex terms must occur in conjugate pairs with conjugate weights");
    }
}

Eigen::VectorXd stationary_distribution(const LabeledHmm& hmm) {
    validate(hmm);
    const Eigen::MatrixXd t = hmm.transition();
    Eigen::EigenSolver<Eigen::MatrixXd> es(t);
    if (es.info() != Eigen::Success) throw convergence_error("eigen_failed", "eigendecomposition of T failed");
    const Eigen::VectorXcd mu = es.eigenvalues();

    // Irreducible and aperiodic <=> exactly one eigenvalue on the unit circle.
    int on_circle = 0;
    Eigen::Index unit = 0;
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
        if (std::abs(mu(i)) > 1.0 - 1e-9) {
            ++on_circle;
            unit = i;
        }
    }
    if (on_circle != 1 || std::abs(mu(unit) - 1.0) > 1e-9)
        throw model_error("reducible_or_periodic", "reducible or periodic HMM");

    Eigen::VectorXd p = es.eigenvectors().col(unit).real();
    p /= p.sum();
    for (auto& x : p)
        if (x < 0.0) x = 0.0;  // roundoff only; the Perron vector is nonnegative
    p /= p.sum();
    return p;
}

SymbolMoments stationary_moments(const LabeledHmm& hmm) {
    const Eigen::VectorXd p = stationary_distribution(hmm);
    double mean = 0.0;
    double second = 0.0;
    for (std::size_t x = 0; x < hmm.symbols.size(); ++x) {
        const double prob = hmm.matrices[x].colwise().sum().dot(p);
        mean += prob * hmm.symbols[x];
        second += prob * hmm.symbols[x] * hmm.symbols[x];
    }
    return {mean, second - mean * mean};
}

LabeledHmm standardize_symbols(const LabeledHmm& hmm) {
    const auto [mean, variance] = stationary_moments(hmm);
    double scale = 0.0;
    for (double s : hmm.symbols) scale = std::max(scale, std::abs(s));
    if (!(variance > 1e-14 * std::max(1.0, scale * scale)))
        throw model_error("degenerate_input", "degenerate input process: stationary symbol variance is zero");
    LabeledHmm out = hmm;
    const double sd = std::sqrt(variance);
    for (auto& s : out.symbols) s = (s - mean) / sd;
    return out;
}

AutocorrDecomposition autocorr_decomposition(const LabeledHmm& hmm) {
    const Eigen::VectorXd p = stationary_distribution(hmm);
    const auto moments = stationary_moments(hmm);
    if (std::abs(moments.mean) > 1e-9 || std::abs(moments.variance - 1.0) > 1e-9)
        throw config_error("not_standardized",
                           fmt::format("HMM symbols must be standardized (mean {:.3g}, variance {:.6g})",
                                       moments.mean, moments.variance));

    Eigen::EigenSolver<Eigen::MatrixXd> es(hmm.transition());
    if (es.info() != Eigen::Success) throw convergence_error("eigen_failed", "eigendecomposition of T failed");
    const Eigen::VectorXcd mu = es.eigenvalues();
    const Eigen::MatrixXcd basis = es.eigenvectors();

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(basis);
    const auto& sv = svd.singularValues();
    const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
    if (!(cond <= kDiagonalizableCond))
        throw model_error("non_diagonalizable",
                          fmt::format("non-diagonalizable transition matrix (eigenvector condition {:.3g})", cond));

    const Eigen::MatrixXcd weighted = hmm.weighted_transition().cast<Complex>();
    const Eigen::RowVectorXcd left = Eigen::RowVectorXcd::Ones(mu.size()) * weighted * basis;
    const Eigen::VectorXcd right = basis.partialPivLu().solve(weighted * p.cast<Complex>());

    std::vector<AutocorrTerm> terms;
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
        const Complex c = left(i) * right(i);
        if (std::abs(mu(i)) < kZeroEigenvalue) {
            // A zero eigenvalue contributes c * delta(t, 1), which no exponential
            // sum can express.
            if (std::abs(c) > kDropTol)
                throw model_error("lag_one_component",
                                  "zero-eigenvalue correlation component at lag 1 is not representable as "
                                  "sum A(lambda) lambda^|t|");
            continue;
        }
        const Complex a = c / mu(i);
        if (std::abs(a) < kDropTol) continue;
        if (std::abs(mu(i)) >= 1.0 - 1e-12)
            throw model_error("non_mixing_component",
                              fmt::format("non-mixing correlation component (|lambda| = {:.17g})", std::abs(mu(i))));
        auto it = std::find_if(terms.begin(), terms.end(),
                               [&](const AutocorrTerm& t) { return std::abs(t.lambda - mu(i)) < kMergeTol; });
        if (it != terms.end())
            it->weight += a;
        else
            terms.push_back({mu(i), a});
    }
    std::erase_if(terms, [](const AutocorrTerm& t) { return std::abs(t.weight) < kDropTol; });
    for (auto& t : terms) {
        if (t.lambda.imag() == 0.0 && std::abs(t.weight.imag()) < 1e-10) t.weight.imag(0.0);
    }

    Complex total{0.0, 0.0};
    for (const auto& t : terms) total += t.weight;
    const Complex lag0 = Complex{1.0, 0.0} - total;
    if (std::abs(lag0) >= kDropTol) terms.push_back({Complex{0.0, 0.0}, Complex{lag0.real(), 0.0}});

    std::sort(terms.begin(), terms.end(), [](const AutocorrTerm& a, const AutocorrTerm& b) {
        if (std::abs(a.lambda) != std::abs(b.lambda)) return std::abs(a.lambda) > std::abs(b.lambda);
        if (a.lambda.real() != b.lambda.real()) return a.lambda.real() > b.lambda.real();
        return a.lambda.imag() > b.lambda.imag();
    });

    AutocorrDecomposition out{std::move(terms)};
    validate(out);
    return out;
}

double autocorr(const AutocorrDecomposition& decomp, long t) {
    const long lag = t < 0 ? -t : t;
    Complex r{0.0, 0.0};
    for (const auto& term : decomp.terms) r += term.weight * detail::ipow(term.lambda, lag);
    if (std::abs(r.imag()) >= 1e-10)
        throw model_error("complex_autocorrelation", fmt::format("R({}) has imaginary part {:.3g}", t, r.imag()));
    return r.real();
}

std::vector<double> sample_sequence(const LabeledHmm& hmm, std::size_t length, std::size_t burn_in,
                                    std::uint64_t seed) {
    const Eigen::VectorXd p = stationary_distribution(hmm);
    const int n = hmm.n_states();

    struct Edge {
        double cumulative;
        double symbol;
        int next;
    };
    std::vector<std::vector<Edge>> edges(n);
    for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t x = 0; x < hmm.matrices.size(); ++x) {
            for (int i = 0; i < n; ++i) {
                const double w = hmm.matrices[x](i, j);
                if (w <= 0.0) continue;
                acc += w;
                edges[j].push_back({acc, hmm.symbols[x], i});
            }
        }
        edges[j].back().cumulative = 2.0;  // absorb column-sum roundoff
    }

    Rng rng(seed);
    int state = n - 1;
    {
        const double u = uniform01(rng);
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            acc += p(i);
            if (u < acc) {
                state = i;
                break;
            }
        }
    }

    auto step = [&]() {
        const double u = uniform01(rng);
        const auto& out = edges[state];
        const auto it = std::upper_bound(out.begin(), out.end(), u,
                                         [](double value, const Edge& e) { return value < e.cumulative; });
        state = it->next;
        return it->symbol;
    };

    for (std::size_t k = 0; k < burn_in; ++k) step();
    std::vector<double> seq(length);
    for (auto& s : seq) s = step();
    return seq;
}

LabeledHmm even_process_raw() {
    Eigen::MatrixXd zero(2, 2), one(2, 2);
    zero << 0.5, 0.0,
            0.0, 0.0;
    one << 0.0, 1.0,
           0.5, 0.0;
    return LabeledHmm{{0.0, 1.0}, {zero, one}};
}

LabeledHmm even_process() { return standardize_symbols(even_process_raw()); }

LabeledHmm telegraph_mixture(const AutocorrDecomposition& decomp) {
    validate(decomp);
    const auto k = decomp.terms.size();
    if (k == 0 || k > 12)
        throw config_error("unrealizable", "telegraph realization supports 1 to 12 terms");
    std::vector<double> lambdas, amps;
    for (const auto& t : decomp.terms) {
        if (t.lambda.imag() != 0.0 || t.weight.imag() != 0.0 || !(t.weight.real() > 0.0))
            throw config_error("unrealizable",
                               "telegraph realization needs real lambda and positive real weights");
        lambdas.push_back(t.lambda.real());
        amps.push_back(std::sqrt(t.weight.real()));
    }

    const int n = 1 << k;
    auto spin = [](int state, std::size_t bit) { return (state >> bit) & 1 ? -1.0 : 1.0; };
    Eigen::MatrixXd t(n, n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            double prob = 1.0;
            for (std::size_t b = 0; b < k; ++b) {
                const double stay = 0.5 * (1.0 + lambdas[b]);
                prob *= spin(i, b) == spin(j, b) ? stay : 1.0 - stay;
            }
            t(i, j) = prob;
        }
    }

    std::vector<double> state_symbol(n);
    for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t b = 0; b < k; ++b) s += amps[b] * spin(j, b);
        state_symbol[j] = s;
    }

    LabeledHmm out;
    for (int j = 0; j < n; ++j) {
        auto it = std::find_if(out.symbols.begin(), out.symbols.end(),
                               [&](double s) { return std::abs(s - state_symbol[j]) < 1e-12; });
        std::size_t x;
        if (it == out.symbols.end()) {
            out.symbols.push_back(state_symbol[j]);
            out.matrices.push_back(Eigen::MatrixXd::Zero(n, n));
            x = out.symbols.size() - 1;
        } else {
            x = static_cast<std::size_t>(it - out.symbols.begin());
        }
        out.matrices[x].col(j) = t.col(j);
    }
    return out;
}

AutocorrDecomposition exponential_autocorr(double alpha) {
    if (!(alpha > 0.0)) throw config_error("invalid_alpha", "decay rate alpha must be positive");
    return AutocorrDecomposition{{{Complex{std::exp(-alpha), 0.0}, Complex{1.0, 0.0}}}};
}

AutocorrDecomposition exponential_mixture(std::span<const double> alphas, std::span<const double> weights) {
    if (alphas.size() != weights.size() || alphas.empty())
        throw config_error("invalid_mixture", "alphas and weights must be nonempty and of equal length");
    AutocorrDecomposition out;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (!(alphas[i] > 0.0)) throw config_error("invalid_alpha", "decay rate alpha must be positive");
        out.terms.push_back({Complex{std::exp(-alphas[i]), 0.0}, Complex{weights[i], 0.0}});
    }
    validate(out);
    return out;
}

AutocorrDecomposition white_noise() { return AutocorrDecomposition{{{Complex{0.0, 0.0}, Complex{1.0, 0.0}}}}; }

}  // namespace rescap
