#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "rescap/linear_capacity.hpp"
#include "rescap/rng.hpp"
#include "rescap/wiener_bound.hpp"
#include "test_util.hpp"

using namespace rescap;
using std::numbers::pi;

namespace {

AutocorrDecomposition mix() {
    const double alphas[] = {0.1, 1.0};
    const double weights[] = {0.5, 0.5};
    return exponential_mixture(alphas, weights);
}

AutocorrDecomposition neg_half() { return {{{Complex(-0.5, 0.0), Complex(1.0, 0.0)}}}; }

AutocorrDecomposition even() { return autocorr_decomposition(even_process()); }

ReservoirSpec one_node(double w, double omega = 1.0) {
    return {Eigen::VectorXcd::Constant(1, Complex(w, 0.0)), Eigen::VectorXcd::Constant(1, Complex(omega, 0.0))};
}

// Random real (W, v) with spectral radius `radius`.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> random_network(int n, double radius, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd w(n, n);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) {
        v(i) = uniform(rng, -1.0, 1.0);
        for (int j = 0; j < n; ++j) w(i, j) = uniform(rng, -1.0, 1.0);
    }
    const double rho = Eigen::EigenSolver<Eigen::MatrixXd>(w).eigenvalues().cwiseAbs().maxCoeff();
    return {w * (radius / rho), v};
}

ReservoirSpec random_spec(int n, double max_abs, std::uint64_t seed) {
    Rng rng(seed);
    ReservoirSpec s{Eigen::VectorXcd(n), Eigen::VectorXcd(n)};
    for (int i = 0; i < n; ++i) {
        s.d(i) = uniform(rng, -max_abs, max_abs);
        s.omega(i) = uniform(rng, 0.2, 1.0);
    }
    return s;
}

}  // namespace

TEST_CASE("one-node capacities match the analytic formulas") {
    for (double alpha : {0.1, 0.5, 1.0}) {
        for (double w : {-0.9, -0.5, 0.0, 0.5, 0.9, 0.99}) {
            const CapacityModel m(exponential_autocorr(alpha), one_node(w));
            CHECK(std::abs(m.memory_capacity() - one_node_exponential_mc(w, alpha)) < 1e-9);
            CHECK(std::abs(m.predictive_capacity() - one_node_exponential_pc(w, alpha)) < 1e-9);
        }
    }
}

TEST_CASE("analytic one-node formulas agree with brute-force lag sums") {
    for (double alpha : {0.1, 1.0}) {
        const auto r = oracle::as_function(exponential_autocorr(alpha));
        for (double w : {-0.5, 0.0, 0.5}) {
            const oracle::LagSums sums(Eigen::MatrixXd::Constant(1, 1, w), Eigen::VectorXd::Ones(1), r, 700);
            CHECK(sums.mc(700) == doctest::Approx(one_node_exponential_mc(w, alpha)).epsilon(1e-9));
            CHECK(sums.pc(700) == doctest::Approx(one_node_exponential_pc(w, alpha)).epsilon(1e-9));
        }
    }
}

TEST_CASE("closed forms agree with brute-force lag sums for real networks") {
    // Includes complex-conjugate eigenvalue pairs, which exercise the plain
    // transpose convention.
    const std::vector<AutocorrDecomposition> inputs = {mix(), neg_half(), even()};
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const auto [w, v] = random_network(3, 0.8, seed);
        for (const auto& in : inputs) {
            const CapacityModel model(in, reduce_to_diagonal(w, v));
            const oracle::LagSums sums(w, v, oracle::as_function(in), 900);
            CHECK(model.memory_capacity() == doctest::Approx(sums.mc(900)).epsilon(1e-7));
            CHECK(model.predictive_capacity() == doctest::Approx(sums.pc(900)).epsilon(1e-7));
            for (long k : {-3L, 0L, 1L, 4L}) CHECK(std::abs(model.memory_function(k) - sums.m(k)) < 1e-8);
        }
    }
}

TEST_CASE("B: quadrature matches the series closed form") {
    SUBCASE("white noise, d = 0") {
        const auto b = compute_B(white_noise(), one_node(0.0)).b;
        CHECK(std::abs(b(0, 0) - Complex(2 * pi, 0.0)) < 1e-10);
    }
    SUBCASE("one node on e^{-0.1|t|}") {
        const double l = std::exp(-0.1), d = 0.5;
        const double expected = 2 * pi * (1 + 2 * d * l / (1 - d * l)) / (1 - d * d);
        CHECK(std::abs(compute_B(exponential_autocorr(0.1), one_node(d)).b(0, 0).real() - expected) < 1e-10 * expected);
        CHECK(std::abs(compute_B_series(exponential_autocorr(0.1), one_node(d))(0, 0).real() - expected) <
              1e-12 * expected);
    }
    SUBCASE("random reservoirs") {
        for (std::uint64_t seed = 1; seed <= 6; ++seed) {
            const auto [w, v] = random_network(4, 0.9, seed);
            const auto spec = reduce_to_diagonal(w, v);
            for (const auto& in : {mix(), neg_half(), even()}) {
                const auto quad = compute_B(in, spec).b;
                const auto series = compute_B_series(in, spec);
                CHECK((quad - series).norm() < 1e-9 * series.norm());
            }
        }
    }
    SUBCASE("doubling the grid changes B by < 1e-10") {
        const auto spec = reduce_to_diagonal(random_network(3, 0.9, 9).first, random_network(3, 0.9, 9).second);
        const auto grid = quadrature_grid(4096);
        const auto b1 = compute_B(mix(), spec, grid);
        const auto b2 = compute_B(mix(), spec, quadrature_grid(8192));
        CHECK((b2 - b1).norm() < 1e-10 * b2.norm());
    }
}

TEST_CASE("D_PC") {
    for (double l : {-0.5, 0.3, 0.9}) {
        const AutocorrDecomposition in{{{Complex(l, 0.0), Complex(1.0, 0.0)}}};
        CHECK(std::abs(compute_D_PC(in, one_node(0.0))(0, 0) - Complex(l * l / (1 - l * l), 0.0)) < 1e-14);
    }
    const auto spec = random_spec(4, 0.9, 3);
    CHECK(compute_D_PC(white_noise(), spec).norm() == 0.0);
    const auto dpc = compute_D_PC(mix(), spec);
    CHECK((dpc - dpc.transpose()).norm() < 1e-14 * dpc.norm());
    const auto dmc = compute_D_MC(mix(), spec);
    CHECK((dmc - dmc.transpose()).norm() < 1e-14 * dmc.norm());
}

TEST_CASE("D_MC through one-node MC") {
    for (double alpha : {0.1, 1.0})
        for (double w : {0.0, 0.5, -0.5, 0.9})
            CHECK(std::abs(memory_capacity(exponential_autocorr(alpha), one_node(w)) -
                           one_node_exponential_mc(w, alpha)) < 1e-9);
    // Delay line d = 0: x(n) = s(n-1), so m(k) = R(k-1)^2 and MC = 1/(1 - e^{-0.2}).
    CHECK(memory_capacity(exponential_autocorr(0.1), one_node(0.0)) == doctest::Approx(1 / (1 - std::exp(-0.2))).epsilon(1e-12));
    CHECK(memory_capacity(exponential_autocorr(0.1), one_node(0.0)) == doctest::Approx(one_node_exponential_mc(0.0, 0.1)).epsilon(1e-12));
}

TEST_CASE("white-noise input") {
    CHECK(memory_capacity(white_noise(), one_node(0.0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(memory_function(white_noise(), one_node(0.0), 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(memory_function(white_noise(), one_node(0.0), 2)) < 1e-14);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto spec = random_spec(3, 0.9, seed);
        CHECK(std::abs(predictive_capacity(white_noise(), spec)) < 1e-12);
        // N distinct nodes driven by white noise remember N inputs in total.
        CHECK(memory_capacity(white_noise(), spec) == doctest::Approx(3.0).epsilon(1e-8));
    }
}

TEST_CASE("memory function examples") {
    for (double alpha : {0.1, 1.0}) {
        const CapacityModel m(exponential_autocorr(alpha), one_node(0.0));
        CHECK(m.memory_function(1) == doctest::Approx(1.0).epsilon(1e-12));
        for (long k = 0; k <= 5; ++k)
            CHECK(m.memory_function(-k) == doctest::Approx(std::exp(-2 * alpha * static_cast<double>(k + 1))).epsilon(1e-12));
    }
}

TEST_CASE("memory function partial sums approach the capacities") {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const auto spec = random_spec(3, 0.9, seed + 20);
        for (const auto& in : {mix(), neg_half()}) {
            const CapacityModel m(in, spec);
            double mc = 0.0, pc = 0.0;
            for (long k = 1; k <= 500; ++k) mc += m.memory_function(k);
            for (long k = 0; k <= 500; ++k) pc += m.memory_function(-k);
            CHECK(std::abs(mc - m.memory_capacity()) < 1e-6);
            CHECK(std::abs(pc - m.predictive_capacity()) < 1e-6);
        }
    }
}

TEST_CASE("m(k) lies in [0, 1]") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto [w, v] = random_network(2 + static_cast<int>(seed % 5), 0.95, seed + 100);
        const auto report = capacity_report(seed % 2 ? mix() : even(), reduce_to_diagonal(w, v), 30);
        for (const auto& [k, m] : report.memory_function) {
            CHECK(m >= -1e-10);
            CHECK(m <= 1 + 1e-10);
        }
        CHECK(report.imag_residue < 1e-8);
        CHECK(report.mc >= 0);
        CHECK(report.pc >= 0);
    }
}

TEST_CASE("similarity invariance") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const auto [w, v] = random_network(4, 0.9, seed + 200);
        Rng rng(seed);
        Eigen::MatrixXd m(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) m(i, j) = uniform(rng, -1.0, 1.0) + (i == j ? 2.0 : 0.0);
        const Eigen::MatrixXd w2 = m * w * m.inverse();
        const Eigen::VectorXd v2 = m * v;
        for (const auto& in : {mix(), even()}) {
            const CapacityModel a(in, reduce_to_diagonal(w, v));
            const CapacityModel b(in, reduce_to_diagonal(w2, v2));
            CHECK(std::abs(a.memory_capacity() - b.memory_capacity()) < 1e-8);
            CHECK(std::abs(a.predictive_capacity() - b.predictive_capacity()) < 1e-8);
        }
    }
}

TEST_CASE("eigenvalue permutation invariance") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const auto spec = random_spec(5, 0.95, seed + 300);
        ReservoirSpec perm = spec;
        const int order[] = {3, 0, 4, 1, 2};
        for (int i = 0; i < 5; ++i) {
            perm.d(i) = spec.d(order[i]);
            perm.omega(i) = spec.omega(order[i]);
        }
        const CapacityModel a(mix(), spec), b(mix(), perm);
        CHECK(std::abs(a.memory_capacity() - b.memory_capacity()) < 1e-12 * std::max(1.0, a.memory_capacity()));
        CHECK(std::abs(a.predictive_capacity() - b.predictive_capacity()) < 1e-12);
    }
}

TEST_CASE("Hadamard form equals the double sum over lambda pairs") {
    // PC = 2π Σ_{λ,λ'} A A' / (1 - λλ') u_λᵀ B^-1 u_λ', u_λ = ω / (λ^-1 - d).
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const auto spec = random_spec(3, 0.8, seed + 400);
        for (const auto& in : {mix(), neg_half()}) {
            const Eigen::MatrixXcd binv = compute_B_series(in, spec).inverse();
            Complex sum{0.0, 0.0};
            for (const auto& a : in.terms) {
                for (const auto& b : in.terms) {
                    Eigen::VectorXcd ua(3), ub(3);
                    for (int i = 0; i < 3; ++i) {
                        ua(i) = spec.omega(i) * a.lambda / (1.0 - a.lambda * spec.d(i));
                        ub(i) = spec.omega(i) * b.lambda / (1.0 - b.lambda * spec.d(i));
                    }
                    sum += a.weight * b.weight / (1.0 - a.lambda * b.lambda) * (ua.transpose() * binv * ub)(0);
                }
            }
            CHECK(std::abs(2 * pi * sum.real() - predictive_capacity(in, spec)) < 1e-10);
        }
    }
}

TEST_CASE("quadrature route gives the same capacities") {
    CapacityOptions quad;
    quad.route = CovarianceRoute::quadrature;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto spec = random_spec(3, 0.9, seed + 500);
        const CapacityModel a(mix(), spec), b(mix(), spec, quad);
        CHECK(std::abs(a.memory_capacity() - b.memory_capacity()) < 1e-7);
        CHECK(std::abs(a.predictive_capacity() - b.predictive_capacity()) < 1e-8);
    }
}

TEST_CASE("reduce_to_diagonal") {
    const auto s1 = reduce_to_diagonal(Eigen::MatrixXd::Constant(1, 1, 0.5), Eigen::VectorXd::Ones(1));
    CHECK(std::abs(s1.d(0) - Complex(0.5, 0.0)) < 1e-15);
    CHECK(std::abs(s1.omega(0) - Complex(1.0, 0.0)) < 1e-15);

    Eigen::MatrixXd diag = Eigen::Vector2d(0.3, -0.7).asDiagonal();
    const auto s2 = reduce_to_diagonal(diag, Eigen::Vector2d(1.0, 2.0));
    // Eigen may scale eigenvectors, so compare the invariant products.
    const auto c = CapacityModel(mix(), s2);
    ReservoirSpec direct{Eigen::Vector2cd(0.3, -0.7), Eigen::Vector2cd(1.0, 2.0)};
    CHECK(c.predictive_capacity() == doctest::Approx(predictive_capacity(mix(), direct)).epsilon(1e-12));
    CHECK(std::abs(s2.d(0) - Complex(0.3, 0.0)) < 1e-15);
    CHECK(std::abs(s2.d(1) - Complex(-0.7, 0.0)) < 1e-15);

    CHECK(error_code_of([] { reduce_to_diagonal(Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::VectorXd::Ones(1)); }) ==
          "echo_state_violated");
    Eigen::MatrixXd jordan(2, 2);
    jordan << 0.5, 1.0,
              0.0, 0.5;
    CHECK(error_code_of([&] { reduce_to_diagonal(jordan, Eigen::Vector2d(1.0, 1.0)); }) == "non_diagonalizable");
}

TEST_CASE("validate and canonicalize reservoirs") {
    ReservoirSpec unstable{Eigen::Vector2cd(0.5, -1.0), Eigen::Vector2cd(1.0, 1.0)};
    CHECK(error_code_of([&] { validate(unstable); }) == "echo_state_violated");
    ReservoirSpec unpaired{Eigen::Vector2cd(Complex(0.1, 0.2), 0.3), Eigen::Vector2cd(1.0, 1.0)};
    CHECK(error_code_of([&] { validate(unpaired); }) == "invalid_reservoir");

    // Duplicate eigenvalues merge into one node; zero weights drop out.
    ReservoirSpec dup{Eigen::Vector3cd(0.5, 0.5, -0.2), Eigen::Vector3cd(1.0, 2.0, 0.0)};
    const auto c = canonicalize(dup);
    REQUIRE(c.size() == 1);
    CHECK(std::abs(c.omega(0) - Complex(3.0, 0.0)) < 1e-15);
    CHECK(memory_capacity(mix(), dup) == doctest::Approx(memory_capacity(mix(), one_node(0.5))).epsilon(1e-12));
    CHECK(predictive_capacity(mix(), dup) == doctest::Approx(predictive_capacity(mix(), one_node(0.5, 7.0))).epsilon(1e-12));
}

TEST_CASE("edge of criticality limits") {
    // MC -> coth(alpha / 2) and PC -> 0 as W -> 1.
    const double alpha = 0.1;
    CHECK(memory_capacity(exponential_autocorr(alpha), one_node(1 - 1e-7)) ==
          doctest::Approx(1 / std::tanh(alpha / 2)).epsilon(1e-5));
    CHECK(predictive_capacity(exponential_autocorr(alpha), one_node(0.9999)) < 1e-2);
    CHECK(predictive_capacity(exponential_autocorr(alpha), one_node(1 - 1e-7)) < 1e-5);
    CHECK(predictive_capacity(exponential_autocorr(alpha), one_node(0.0)) == doctest::Approx(1 / (std::exp(0.2) - 1)).epsilon(1e-12));
    CHECK(predictive_capacity(exponential_autocorr(alpha), one_node(0.0)) ==
          doctest::Approx(0.5 * (1 / std::tanh(alpha) - 1)).epsilon(1e-12));
}

TEST_CASE("one-node formulas") {
    CHECK(one_node_exponential_pc(0.0, 0.1) == doctest::Approx(4.5167).epsilon(1e-4));
    CHECK(one_node_exponential_pc(0.999999, 0.5) < 1e-5);
    double prev = one_node_exponential_mc(0.0, 0.1);
    for (int i = 1; i < 100; ++i) {
        const double mc = one_node_exponential_mc(i / 100.0, 0.1);
        CHECK(mc > prev);
        prev = mc;
    }
    CHECK(error_code_of([] { one_node_exponential_mc(1.0, 0.1); }) == "echo_state_violated");
    CHECK(error_code_of([] { one_node_exponential_pc(-1.2, 0.1); }) == "echo_state_violated");
}

TEST_CASE("optimize_one_node") {
    SUBCASE("single exponential: W* = 0") {
        const auto opt = optimize_one_node(exponential_autocorr(0.1));
        CHECK(std::abs(opt.w) < 1e-3);
        CHECK(opt.pc == doctest::Approx(1 / (std::exp(0.2) - 1)).epsilon(1e-9));
    }
    SUBCASE("(-1/2)^|t|: W* = 0, PC* = 1/3") {
        const auto opt = optimize_one_node(neg_half());
        CHECK(std::abs(opt.w) < 1e-3);
        CHECK(opt.pc == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    }
    SUBCASE("mixture input: optimum checked by brute-force lag sums") {
        const auto opt = optimize_one_node(mix());
        const auto r = oracle::as_function(mix());
        auto oracle_pc = [&](double w) {
            return oracle::LagSums(Eigen::MatrixXd::Constant(1, 1, w), Eigen::VectorXd::Ones(1), r, 700).pc(700);
        };
        CHECK(opt.pc == doctest::Approx(oracle_pc(opt.w)).epsilon(1e-9));
        CHECK(oracle_pc(opt.w - 0.01) < opt.pc);
        CHECK(oracle_pc(opt.w + 0.01) < opt.pc);
        CHECK(opt.w == doctest::Approx(0.5346).epsilon(1e-3));
        CHECK(opt.pc == doctest::Approx(1.60354).epsilon(1e-5));
        CHECK(opt.pc < pc_upper_bound(mix()).bound);
    }
}

TEST_CASE("nearly repeated eigenvalues stay accurate") {
    // cond(B) far beyond double precision; quad-precision solve keeps PC
    // consistent with the merged limit and below the bound.
    ReservoirSpec close{Eigen::Vector2cd(0.5, 0.5 + 1e-9), Eigen::Vector2cd(1.0, 1.0)};
    const CapacityModel m(mix(), close);
    CHECK(m.b_condition() > 1e12);
    const double merged = predictive_capacity(mix(), one_node(0.5));
    CHECK(m.predictive_capacity() >= merged - 1e-9);
    CHECK(m.predictive_capacity() <= pc_upper_bound(mix()).bound + 1e-6);
}
