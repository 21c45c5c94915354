#include "rescap/wiener_bound.hpp"

#include <cmath>
#include <numeric>
#include <optional>

#include <fmt/format.h>

#include "rescap/errors.hpp"

namespace rescap {

namespace {

constexpr int kMaxLength = 1 << 14;
constexpr int kMaxHorizon = 1 << 22;
constexpr double kHorizonTol = 1e-9;
constexpr double kLengthTol = 1e-8;
constexpr double kExtrapolationTol = 1e-6;

}  // namespace

ToeplitzSystem::ToeplitzSystem(const AutocorrDecomposition& decomp, int length)
    : decomp_(decomp), length_(length) {
    if (length < 1) throw config_error("invalid_length", "filter length L must be at least 1");
    validate(decomp_);
    std::vector<double> lags(static_cast<std::size_t>(length));
    for (int t = 0; t < length; ++t) lags[static_cast<std::size_t>(t)] = autocorr(decomp_, t);
    r_.resize(length, length);
    for (int i = 0; i < length; ++i)
        for (int j = 0; j < length; ++j) r_(i, j) = lags[static_cast<std::size_t>(std::abs(i - j))];

    ldlt_.compute(r_);
    const Eigen::VectorXd diag = ldlt_.vectorD();
    const double largest = diag.cwiseAbs().maxCoeff();
    if (ldlt_.info() != Eigen::Success || diag.minCoeff() < -1e-10 * std::max(1.0, largest)) {
        // LDLT pivots are not eigenvalues; confirm indefiniteness before failing.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r_);
        if (es.eigenvalues().minCoeff() < -1e-10)
            throw model_error("invalid_autocovariance",
                              fmt::format("invalid autocovariance: Toeplitz matrix has eigenvalue {:.3g}",
                                          es.eigenvalues().minCoeff()));
        deficient_ = true;
    } else if (diag.minCoeff() < 1e-12 * largest) {
        deficient_ = true;
    }

    if (deficient_) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r_);
        const Eigen::VectorXd ev = es.eigenvalues();
        const double cutoff = 1e-12 * ev.maxCoeff();
        std::vector<Eigen::Index> keep;
        for (Eigen::Index i = 0; i < ev.size(); ++i)
            if (ev(i) > cutoff) keep.push_back(i);
        basis_.resize(length, static_cast<Eigen::Index>(keep.size()));
        pseudo_factor_.resize(length, static_cast<Eigen::Index>(keep.size()));
        for (std::size_t c = 0; c < keep.size(); ++c) {
            const auto col = static_cast<Eigen::Index>(c);
            basis_.col(col) = es.eigenvectors().col(keep[c]);
            pseudo_factor_.col(col) = basis_.col(col) / std::sqrt(ev(keep[c]));
        }
    }
}

Eigen::VectorXd ToeplitzSystem::rhs(int tau) const {
    if (tau < 0) throw config_error("invalid_horizon", "horizon tau must be nonnegative");
    Eigen::VectorXd r(length_);
    for (int i = 0; i < length_; ++i) r(i) = autocorr(decomp_, static_cast<long>(tau) + i + 1);
    return r;
}

Eigen::VectorXd ToeplitzSystem::solve(const Eigen::VectorXd& b) const {
    if (!deficient_) return ldlt_.solve(b);
    return pseudo_factor_ * (pseudo_factor_.transpose() * b);
}

double ToeplitzSystem::horizon_score(int tau) const {
    const Eigen::VectorXd r = rhs(tau);
    if (!deficient_) return r.dot(ldlt_.solve(r));
    return (pseudo_factor_.transpose() * r).squaredNorm();
}

Eigen::VectorXd wiener_coefficients(const AutocorrDecomposition& decomp, int tau, int length) {
    const ToeplitzSystem system(decomp, length);
    return system.solve(system.rhs(tau));
}

Eigen::MatrixXd levinson_solve(const Eigen::VectorXd& r, const Eigen::MatrixXd& b) {
    const Eigen::Index n = r.size();
    if (n < 1 || b.rows() != n) throw config_error("invalid_length", "Toeplitz system and right-hand side disagree");
    if (!(r(0) > 0.0)) throw model_error("invalid_autocovariance", "invalid autocovariance: R(0) <= 0");
    const Eigen::VectorXd rn = r / r(0);
    const Eigen::MatrixXd bn = b / r(0);

    // Golub & Van Loan, Algorithm 4.7.2, run for all columns at once; y holds
    // the Yule-Walker solution of the current order.
    Eigen::MatrixXd x(n, b.cols());
    x.row(0) = bn.row(0);
    if (n == 1) return x;
    Eigen::VectorXd y(n);
    y(0) = -rn(1);
    double alpha = -rn(1);
    double beta = 1.0;
    for (Eigen::Index k = 1; k < n; ++k) {
        beta *= 1.0 - alpha * alpha;
        if (!(beta > 1e-14))
            throw model_error("invalid_autocovariance",
                              fmt::format("invalid autocovariance: Toeplitz matrix not positive definite at order {}", k));
        const Eigen::RowVectorXd mu =
            (bn.row(k) - rn.segment(1, k).transpose() * x.topRows(k).colwise().reverse()) / beta;
        x.topRows(k) += y.head(k).reverse() * mu;
        x.row(k) = mu;
        if (k < n - 1) {
            alpha = (-rn(k + 1) - rn.segment(1, k).dot(y.head(k).reverse())) / beta;
            const Eigen::VectorXd flipped = y.head(k).reverse();
            y.head(k) += alpha * flipped;
            y(k) = alpha;
        }
    }
    return x;
}

namespace {

// With u_l = (l^i)_{i=1..L}, r_tau = sum_l A_l l^tau u_l, so
//     r_tauᵀ R^-1 r_tau = Re sum_{a,b} c_ab z_ab^tau,
// c_ab = A_a A_b u_aᵀ R^-1 u_b, z_ab = l_a l_b. Lambda = 0 terms drop out.
struct HorizonSeries {
    std::vector<Complex> z;
    std::vector<Complex> c;

    double score(long tau) const {
        Complex s{0.0, 0.0};
        for (std::size_t i = 0; i < z.size(); ++i) s += c[i] * std::pow(z[i], static_cast<double>(tau));
        return s.real();
    }

    // Sum of score(tau) over tau >= from.
    double tail(long from) const {
        Complex s{0.0, 0.0};
        for (std::size_t i = 0; i < z.size(); ++i)
            s += c[i] * std::pow(z[i], static_cast<double>(from)) / (1.0 - z[i]);
        return s.real();
    }
};

HorizonSeries horizon_series(const AutocorrDecomposition& decomp, int length) {
    std::vector<AutocorrTerm> terms;
    for (const auto& t : decomp.terms)
        if (t.lambda != Complex{0.0, 0.0}) terms.push_back(t);
    HorizonSeries out;
    if (terms.empty()) return out;

    const auto k = static_cast<Eigen::Index>(terms.size());
    Eigen::MatrixXd u(length, 2 * k);  // real parts, then imaginary parts
    for (Eigen::Index a = 0; a < k; ++a) {
        Complex p = terms[static_cast<std::size_t>(a)].lambda;
        for (int i = 0; i < length; ++i) {
            u(i, a) = p.real();
            u(i, k + a) = p.imag();
            p *= terms[static_cast<std::size_t>(a)].lambda;
        }
    }
    Eigen::VectorXd r(length);
    for (int t = 0; t < length; ++t) r(t) = autocorr(decomp, t);

    Eigen::MatrixXd x;
    try {
        x = levinson_solve(r, u);
    } catch (const Error&) {
        // Singular but valid R: least-squares solve on the retained eigenspace.
        // The dense constructor rejects indefinite R.
        if (length > 4096) throw;
        const ToeplitzSystem dense(decomp, length);
        x.resize(length, 2 * k);
        for (Eigen::Index c = 0; c < 2 * k; ++c) x.col(c) = dense.solve(u.col(c));
    }

    const Eigen::MatrixXd g = u.transpose() * x;  // real blocks of the bilinear form
    for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = 0; b < k; ++b) {
            const Complex q{g(a, b) - g(k + a, k + b), g(a, k + b) + g(k + a, b)};
            const auto& ta = terms[static_cast<std::size_t>(a)];
            const auto& tb = terms[static_cast<std::size_t>(b)];
            out.z.push_back(ta.lambda * tb.lambda);
            out.c.push_back(ta.weight * tb.weight * q);
        }
    }
    return out;
}

BoundResult bound_at_length(const AutocorrDecomposition& decomp, int length, int tau_max) {
    const HorizonSeries series = horizon_series(decomp, length);
    long last = tau_max;
    while (std::abs(series.tail(last + 1)) >= kHorizonTol) {
        last = std::max(2 * last, 1L);
        if (last > kMaxHorizon)
            throw convergence_error("bound_not_converged", "bound not converged: horizon sum still growing");
    }
    BoundResult r;
    r.per_tau.resize(static_cast<std::size_t>(last) + 1);
    for (long t = 0; t <= last; ++t) r.per_tau[static_cast<std::size_t>(t)] = series.score(t);
    r.bound = std::accumulate(r.per_tau.begin(), r.per_tau.end(), 0.0);
    r.length_used = length;
    r.tau_max_used = static_cast<int>(last);
    return r;
}

// Aitken limit of b0, b1, b2 when the differences shrink geometrically.
std::optional<double> aitken(double b0, double b1, double b2) {
    const double d1 = b1 - b0;
    const double d2 = b2 - b1;
    if (d1 == 0.0) return std::nullopt;
    const double ratio = d2 / d1;
    if (!(ratio > 0.0 && ratio < 0.9)) return std::nullopt;
    return b2 + d2 * ratio / (1.0 - ratio);
}

}  // namespace

BoundResult pc_upper_bound(const AutocorrDecomposition& decomp, int length, int tau_max) {
    validate(decomp);
    if (length < 1) throw config_error("invalid_length", "filter length L must be at least 1");
    if (tau_max < 0) throw config_error("invalid_horizon", "tau_max must be nonnegative");

    std::vector<double> history;
    BoundResult current = bound_at_length(decomp, length, tau_max);
    history.push_back(current.bound);
    while (true) {
        const int next_length = 2 * current.length_used;
        if (next_length > kMaxLength) break;
        BoundResult next = bound_at_length(decomp, next_length, tau_max);
        const double change = std::abs(next.bound - current.bound);
        current = std::move(next);
        history.push_back(current.bound);
        if (change < kLengthTol) return current;
    }

    const std::size_t h = history.size();
    if (h >= 4) {
        const auto last = aitken(history[h - 3], history[h - 2], history[h - 1]);
        const auto prev = aitken(history[h - 4], history[h - 3], history[h - 2]);
        if (last && prev && std::abs(*last - *prev) < kExtrapolationTol) {
            current.bound = *last;
            current.extrapolated = true;
            return current;
        }
    }
    throw convergence_error("bound_not_converged", fmt::format("bound not converged at L = {}", current.length_used));
}

}  // namespace rescap
