#pragma once

// Reference computations for the tests. None of them goes through the
// library's spectral expansions or closed forms.

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "rescap/hmm_input.hpp"

namespace oracle {

inline Eigen::VectorXd power_iteration(const Eigen::MatrixXd& t, int iterations = 20000) {
    Eigen::VectorXd p = Eigen::VectorXd::Constant(t.rows(), 1.0 / static_cast<double>(t.rows()));
    for (int i = 0; i < iterations; ++i) p = 0.5 * (p + t * p);  // lazy chain: same fixed point, no periodicity
    return p / p.sum();
}

/// <s(0) s(t)> from joint path probabilities 1ᵀ T^(b) T^(t-1) T^(a) p.
inline double hmm_lag_moment(const rescap::LabeledHmm& hmm, long t) {
    const Eigen::VectorXd p = power_iteration(hmm.transition());
    const Eigen::RowVectorXd ones = Eigen::RowVectorXd::Ones(hmm.n_states());
    double sum = 0.0;
    if (t == 0) {
        for (std::size_t x = 0; x < hmm.symbols.size(); ++x)
            sum += hmm.symbols[x] * hmm.symbols[x] * (ones * hmm.matrices[x] * p)(0);
        return sum;
    }
    Eigen::MatrixXd mid = Eigen::MatrixXd::Identity(hmm.n_states(), hmm.n_states());
    for (long i = 1; i < t; ++i) mid = hmm.transition() * mid;
    for (std::size_t a = 0; a < hmm.symbols.size(); ++a)
        for (std::size_t b = 0; b < hmm.symbols.size(); ++b)
            sum += hmm.symbols[a] * hmm.symbols[b] * (ones * hmm.matrices[b] * mid * hmm.matrices[a] * p)(0);
    return sum;
}

/// Capacities of a real linear network x(n) = sum_{m>=1} W^{m-1} v s(n-m),
/// from truncated lag sums of the autocorrelation.
struct LagSums {
    Eigen::MatrixXd h;  // columns W^{m-1} v, m = 1..M
    Eigen::MatrixXd c;
    std::vector<double> table;  // R(0..3M)

    double r(long t) const { return table.at(static_cast<std::size_t>(std::abs(t))); }

    LagSums(const Eigen::MatrixXd& w, const Eigen::VectorXd& v, const std::function<double(long)>& autocorr, int terms) {
        for (long t = 0; t <= 3L * terms; ++t) table.push_back(autocorr(t));
        const auto n = v.size();
        h.resize(n, terms);
        Eigen::VectorXd col = v;
        for (int m = 0; m < terms; ++m) {
            h.col(m) = col;
            col = w * col;
        }
        Eigen::MatrixXd toeplitz(terms, terms);
        for (int i = 0; i < terms; ++i)
            for (int j = 0; j < terms; ++j) toeplitz(i, j) = r(i - j);
        c = h * toeplitz * h.transpose();
    }

    /// <s(n-k) x(n)>
    Eigen::VectorXd p(long k) const {
        Eigen::VectorXd rk(h.cols());
        for (Eigen::Index m = 0; m < h.cols(); ++m) rk(m) = r(m + 1 - k);
        return h * rk;
    }

    double m(long k) const {
        const Eigen::VectorXd pk = p(k);
        return pk.dot(c.ldlt().solve(pk));
    }

    double mc(int lags) const {
        double s = 0.0;
        for (int k = 1; k <= lags; ++k) s += m(k);
        return s;
    }

    double pc(int lags) const {
        double s = 0.0;
        for (int k = 0; k <= lags; ++k) s += m(-k);
        return s;
    }
};

/// Wiener coefficients by dense least squares on the explicit Toeplitz system.
inline Eigen::VectorXd wiener_least_squares(const std::function<double(long)>& r, int tau, int length) {
    Eigen::MatrixXd big(length, length);
    Eigen::VectorXd rhs(length);
    for (int i = 0; i < length; ++i) {
        rhs(i) = r(tau + i + 1);
        for (int j = 0; j < length; ++j) big(i, j) = r(i - j);
    }
    return big.completeOrthogonalDecomposition().solve(rhs);
}

inline std::function<double(long)> as_function(const rescap::AutocorrDecomposition& d) {
    // Powers by repeated multiplication, tabulated as lags are requested.
    auto table = std::make_shared<std::vector<std::vector<std::complex<double>>>>();
    return [d, table](long t) {
        const auto lag = static_cast<std::size_t>(std::abs(t));
        auto& powers = *table;
        if (powers.empty()) powers.assign(d.terms.size(), {std::complex<double>{1.0, 0.0}});
        std::complex<double> s{0.0, 0.0};
        for (std::size_t k = 0; k < d.terms.size(); ++k) {
            while (powers[k].size() <= lag) powers[k].push_back(powers[k].back() * d.terms[k].lambda);
            s += d.terms[k].weight * powers[k][lag];
        }
        return s.real();
    };
}

}  // namespace oracle
