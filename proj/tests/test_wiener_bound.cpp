#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "rescap/linear_capacity.hpp"
#include "rescap/rng.hpp"
#include "rescap/simulation.hpp"
#include "rescap/wiener_bound.hpp"
#include "test_util.hpp"

using namespace rescap;

namespace {

AutocorrDecomposition mix() {
    const double alphas[] = {0.1, 1.0};
    const double weights[] = {0.5, 0.5};
    return exponential_mixture(alphas, weights);
}

AutocorrDecomposition neg_half() { return {{{Complex(-0.5, 0.0), Complex(1.0, 0.0)}}}; }

// Σ_{tau=0..taus-1} r_tauᵀ R^-1 r_tau with one dense factorization.
double dense_bound(const AutocorrDecomposition& d, int length, int taus) {
    const auto r = oracle::as_function(d);
    Eigen::MatrixXd big(length, length), rhs(length, taus);
    for (int i = 0; i < length; ++i) {
        for (int j = 0; j < length; ++j) big(i, j) = r(i - j);
        for (int t = 0; t < taus; ++t) rhs(i, t) = r(t + i + 1);
    }
    const Eigen::MatrixXd sol = big.ldlt().solve(rhs);
    return rhs.cwiseProduct(sol).sum();
}

}  // namespace

TEST_CASE("Wiener coefficients of a single exponential") {
    for (double l : {0.9, -0.5, 0.3}) {
        const AutocorrDecomposition d{{{Complex(l, 0.0), Complex(1.0, 0.0)}}};
        for (int tau : {0, 1, 5}) {
            const auto k = wiener_coefficients(d, tau, 50);
            const auto ls = oracle::wiener_least_squares(oracle::as_function(d), tau, 50);
            CHECK(k(0) == doctest::Approx(std::pow(l, tau + 1)).epsilon(1e-10));
            CHECK(k.tail(49).cwiseAbs().maxCoeff() < 1e-10);
            CHECK((k - ls).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("Wiener coefficients: white noise and decay") {
    CHECK(wiener_coefficients(white_noise(), 0, 20).cwiseAbs().maxCoeff() == 0.0);
    const auto d = mix();
    double prev = wiener_coefficients(d, 0, 64).norm();
    for (int tau = 20; tau <= 200; tau += 20) {
        const double n = wiener_coefficients(d, tau, 64).norm();
        CHECK(n < prev * std::pow(std::exp(-0.1), 19));
        prev = n;
    }
    const auto ls = oracle::wiener_least_squares(oracle::as_function(d), 3, 64);
    CHECK((wiener_coefficients(d, 3, 64) - ls).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("Levinson solve matches a dense solve") {
    for (const auto& d : {mix(), neg_half(), autocorr_decomposition(even_process())}) {
        const int n = 200;
        const auto r = oracle::as_function(d);
        Eigen::VectorXd first(n);
        Eigen::MatrixXd big(n, n);
        for (int i = 0; i < n; ++i) {
            first(i) = r(i);
            for (int j = 0; j < n; ++j) big(i, j) = r(i - j);
        }
        Rng rng(5);
        Eigen::MatrixXd b(n, 3);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < 3; ++j) b(i, j) = uniform(rng, -1.0, 1.0);
        const Eigen::MatrixXd x = levinson_solve(first, b);
        CHECK((big * x - b).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("bound values") {
    const auto m = pc_upper_bound(mix());
    CHECK(m.bound == doctest::Approx(1.652).epsilon(0.002 / 1.652));
    CHECK(std::abs(m.bound - dense_bound(mix(), m.length_used, m.tau_max_used + 1)) < 1e-9);
    CHECK(!m.extrapolated);

    const auto nh = pc_upper_bound(neg_half());
    CHECK(nh.bound == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
    for (std::size_t t = 0; t < 10; ++t)
        CHECK(nh.per_tau[t] == doctest::Approx(std::pow(0.25, static_cast<double>(t + 1))).epsilon(1e-10));

    CHECK(pc_upper_bound(white_noise()).bound == 0.0);
}

TEST_CASE("per-horizon scores") {
    for (const auto& d : {mix(), exponential_autocorr(0.3)}) {
        const auto r = pc_upper_bound(d);
        for (double s : r.per_tau) {
            CHECK(s >= -1e-12);
            CHECK(s <= 1.0 + 1e-12);
        }
    }
    const auto single = pc_upper_bound(exponential_autocorr(0.3));
    for (std::size_t t = 1; t < single.per_tau.size(); ++t) CHECK(single.per_tau[t] <= single.per_tau[t - 1] + 1e-15);

    // Horizon scores from the reused factorization match fresh solves.
    const ToeplitzSystem sys(mix(), 32);
    for (int tau : {0, 7, 40}) {
        const auto rhs = sys.rhs(tau);
        const auto k = oracle::wiener_least_squares(oracle::as_function(mix()), tau, 32);
        CHECK(sys.horizon_score(tau) == doctest::Approx(rhs.dot(k)).epsilon(1e-10));
    }
}

TEST_CASE("bound is monotone in L") {
    for (const auto& d : {mix(), autocorr_decomposition(even_process())}) {
        double prev = 0.0;
        for (int l = 1; l <= 256; l *= 2) {
            const double b = dense_bound(d, l, 400);
            CHECK(b >= prev - 1e-12);
            prev = b;
        }
    }
}

TEST_CASE("slowly decaying input converges") {
    const auto r = pc_upper_bound(exponential_autocorr(-std::log(0.99)));
    CHECK(r.bound == doctest::Approx(0.99 * 0.99 / (1 - 0.99 * 0.99)).epsilon(1e-7));
}

TEST_CASE("Even Process bound (spectral zero at pi)") {
    // S(pi) = 0 makes the truncated bound approach its limit like 1/L; the
    // limit is 1/3, the one-step structure being that of (-1/2)^|t|.
    const auto d = autocorr_decomposition(even_process());
    const auto r = pc_upper_bound(d);
    CHECK(r.extrapolated);
    CHECK(std::abs(r.bound - 1.0 / 3.0) < 1e-6);
    const double l1024 = dense_bound(d, 1024, 80);
    CHECK(l1024 < r.bound);
    CHECK(l1024 == doctest::Approx(0.3323596).epsilon(1e-6));
}

TEST_CASE("indefinite autocovariance is rejected") {
    const AutocorrDecomposition bad{{{Complex(0.5, 0.0), Complex(2.0, 0.0)}, {Complex(0.0, 0.0), Complex(-1.0, 0.0)}}};
    CHECK(error_code_of([&] { ToeplitzSystem(bad, 64); }) == "invalid_autocovariance");
    CHECK(error_code_of([&] { pc_upper_bound(bad); }) == "invalid_autocovariance");
    CHECK(error_code_of([] { pc_upper_bound(white_noise(), 0); }) == "invalid_length");
    CHECK(error_code_of([] { pc_upper_bound(white_noise(), 4, -1); }) == "invalid_horizon");
}

TEST_CASE("linear reservoirs never beat the bound") {
    const std::vector<AutocorrDecomposition> inputs = {mix(), exponential_autocorr(0.1),
                                                       autocorr_decomposition(even_process()), neg_half()};
    for (const auto& in : inputs) {
        const double bound = pc_upper_bound(in).bound;
        for (std::uint64_t seed = 0; seed < 30; ++seed) {
            const int n = 1 + static_cast<int>(seed % 8);
            CHECK(predictive_capacity(in, random_linear_reservoir(n, seed)) <= bound + 1e-6);
        }
    }
}
