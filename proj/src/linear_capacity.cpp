#include "rescap/linear_capacity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "complex_util.hpp"
#include "rescap/errors.hpp"
#include "wide.hpp"

namespace rescap {

using detail::narrow;
using detail::SquareMatrix;
using detail::wide_complex;
using detail::wide_real;
using detail::widen;

namespace {

constexpr double kMergeTol = 1e-12;
constexpr double kDiagonalizableCond = 1e8;

template <class C>
struct Term {
    C lambda;
    C weight;
};

template <class C>
std::vector<Term<C>> convert_terms(const AutocorrDecomposition& decomp) {
    std::vector<Term<C>> out;
    for (const auto& t : decomp.terms) {
        if constexpr (std::is_same_v<C, Complex>)
            out.push_back({t.lambda, t.weight});
        else
            out.push_back({widen(t.lambda), widen(t.weight)});
    }
    return out;
}

// Σ_{m,m'>=1} d_i^{m-1} d_j^{m'-1} R(m - m') times 2π ω_i ω_j.
template <class C>
C b_series_entry(const C& di, const C& dj, const C& wi, const C& wj, const std::vector<Term<C>>& terms,
                 const C& two_pi) {
    const C one(1);
    C sum(0);
    for (const auto& t : terms) {
        const C& l = t.lambda;
        sum += t.weight * (one + di * l / (one - di * l) + dj * l / (one - dj * l));
    }
    return two_pi * wi * wj * sum / (one - di * dj);
}

template <class C>
C d_pc_entry(const C& di, const C& dj, const std::vector<Term<C>>& terms) {
    const C one(1);
    C sum(0);
    for (const auto& a : terms) {
        for (const auto& b : terms) {
            // 1/(l^-1 - d) written as l/(1 - d l) so l = 0 needs no special case.
            sum += a.weight * b.weight / (one - a.lambda * b.lambda) * (a.lambda / (one - di * a.lambda)) *
                   (b.lambda / (one - dj * b.lambda));
        }
    }
    return sum;
}

// Closed form of Σ_{k>=1} g_i(k) g_j(k) for the k >= 1 branch of p_k. The
// last monomial of the leading numerator is d_i^2 d_j^2 (l l')^3; with that
// term the one-node specialization reduces to the exponential MC formula.
template <class C>
C d_mc_entry(const C& di, const C& dj, const std::vector<Term<C>>& terms) {
    const C one(1);
    const C didj = di * dj;
    C sum(0);
    for (const auto& a : terms) {
        for (const auto& b : terms) {
            const C& l = a.lambda;
            const C& lp = b.lambda;
            const C ll = l * lp;
            const C leading = one + didj * l * lp * lp * lp + didj * lp * l * l * l + didj * ll * ll - didj * ll -
                              didj * lp * lp - didj * l * l - didj * didj * ll * ll * ll;
            const C cross = di * (one - didj) * l * l * lp + dj * (one - didj) * l * lp * lp;
            const C den = (one - ll) * (one - di * l) * (one - di * lp) * (one - dj * l) * (one - dj * lp) * (one - didj);
            sum += a.weight * b.weight * (leading - cross) / den;
        }
    }
    return sum;
}

// (d^k - l^k)/(d - l) = Σ_{j<k} d^j l^{k-1-j}, summed directly when d ≈ l.
wide_complex divided_difference(const wide_complex& d, const wide_complex& l, long k) {
    using boost::multiprecision::abs;
    if (abs(d - l) < wide_real(1e-6)) {
        wide_complex sum(0);
        wide_complex dp(1);
        for (long j = 0; j < k; ++j) {
            sum += dp * detail::ipow(l, k - 1 - j);
            dp *= d;
        }
        return sum;
    }
    return (detail::ipow(d, k) - detail::ipow(l, k)) / (d - l);
}

double condition_number(const Eigen::MatrixXcd& m) {
    if (m.size() == 0) return 1.0;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    const auto& sv = svd.singularValues();
    const double smallest = sv(sv.size() - 1);
    return smallest > 0.0 ? sv(0) / smallest : INFINITY;
}

void check_one_node(double w, double alpha) {
    if (!(std::abs(w) < 1.0)) throw model_error("echo_state_violated", "echo state property violated: |W| >= 1");
    if (!(alpha > 0.0)) throw config_error("invalid_alpha", "decay rate alpha must be positive");
}

}  // namespace

void validate(const ReservoirSpec& spec) {
    if (spec.d.size() != spec.omega.size())
        throw config_error("invalid_reservoir", "d and omega must have equal length");
    if (!spec.d.allFinite() || !spec.omega.allFinite())
        throw config_error("invalid_reservoir", "reservoir has non-finite entries");
    for (Eigen::Index i = 0; i < spec.size(); ++i) {
        if (!(std::abs(spec.d(i)) < 1.0))
            throw model_error("echo_state_violated",
                              fmt::format("echo state property violated: |d_{}| = {:.17g}", i, std::abs(spec.d(i))));
        if (spec.d(i).imag() != 0.0) {
            bool paired = false;
            for (Eigen::Index j = 0; j < spec.size() && !paired; ++j)
                paired = j != i && std::abs(spec.d(j) - std::conj(spec.d(i))) < 1e-9;
            if (!paired)
                throw config_error("invalid_reservoir", "complex eigenvalues must occur in conjugate pairs");
        }
    }
}

ReservoirSpec reduce_to_diagonal(const Eigen::MatrixXd& w, const Eigen::VectorXd& v) {
    if (w.rows() != w.cols() || w.rows() != v.size() || w.rows() == 0)
        throw config_error("invalid_reservoir", "W must be square and match the length of v");
    if (!w.allFinite() || !v.allFinite()) throw config_error("invalid_reservoir", "reservoir has non-finite entries");
    Eigen::EigenSolver<Eigen::MatrixXd> es(w);
    if (es.info() != Eigen::Success) throw convergence_error("eigen_failed", "eigendecomposition of W failed");
    const Eigen::VectorXcd d = es.eigenvalues();
    const double radius = d.cwiseAbs().maxCoeff();
    if (!(radius < 1.0))
        throw model_error("echo_state_violated",
                          fmt::format("echo state property violated: spectral radius {:.17g}", radius));
    const Eigen::MatrixXcd p = es.eigenvectors();
    const double cond = condition_number(p);
    if (!(cond < kDiagonalizableCond))
        throw model_error("non_diagonalizable", fmt::format("non-diagonalizable W (eigenvector condition {:.3g})", cond));
    ReservoirSpec spec{d, p.partialPivLu().solve(v.cast<Complex>())};
    return spec;
}

ReservoirSpec canonicalize(const ReservoirSpec& spec) {
    validate(spec);
    std::vector<Complex> d, omega;
    for (Eigen::Index i = 0; i < spec.size(); ++i) {
        auto it = std::find_if(d.begin(), d.end(), [&](Complex x) { return std::abs(x - spec.d(i)) < kMergeTol; });
        if (it != d.end())
            omega[static_cast<std::size_t>(it - d.begin())] += spec.omega(i);
        else {
            d.push_back(spec.d(i));
            omega.push_back(spec.omega(i));
        }
    }
    double largest = 0.0;
    for (const auto& w : omega) largest = std::max(largest, std::abs(w));
    ReservoirSpec out;
    std::vector<Complex> kept_d, kept_w;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (std::abs(omega[i]) <= 1e-15 * largest || omega[i] == Complex{}) continue;
        kept_d.push_back(d[i]);
        kept_w.push_back(omega[i]);
    }
    out.d = Eigen::Map<Eigen::VectorXcd>(kept_d.data(), static_cast<Eigen::Index>(kept_d.size()));
    out.omega = Eigen::Map<Eigen::VectorXcd>(kept_w.data(), static_cast<Eigen::Index>(kept_w.size()));
    return out;
}

Eigen::MatrixXcd compute_B(const AutocorrDecomposition& decomp, const ReservoirSpec& spec,
                           const QuadratureGrid& grid) {
    const auto n = spec.size();
    Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(n, n);
    Eigen::VectorXcd left(n), right(n);
    for (double f : grid.nodes) {
        const double s = psd(decomp, f);
        const Complex em = std::polar(1.0, -f);
        const Complex ep = std::polar(1.0, f);
        for (Eigen::Index i = 0; i < n; ++i) {
            left(i) = spec.omega(i) / (em - spec.d(i));
            right(i) = spec.omega(i) / (ep - spec.d(i));
        }
        b.noalias() += (s * left) * right.transpose();
    }
    return b * grid.weight;
}

QuadratureB compute_B(const AutocorrDecomposition& decomp, const ReservoirSpec& spec,
                      const QuadratureOptions& options) {
    validate(decomp);
    validate(spec);
    auto grid = quadrature_grid(options.initial_points);
    QuadratureB result{compute_B(decomp, spec, grid), grid.size(), INFINITY};
    for (std::size_t n = 2 * options.initial_points; n <= options.max_points; n *= 2) {
        // The doubled grid's even nodes are the previous grid; only the
        // midpoints need new integrand evaluations.
        QuadratureGrid mid;
        mid.weight = 2.0 * std::numbers::pi / static_cast<double>(n);
        mid.nodes.reserve(n / 2);
        for (std::size_t k = 1; k < n; k += 2) mid.nodes.push_back(-std::numbers::pi + mid.weight * static_cast<double>(k));
        const Eigen::MatrixXcd next = 0.5 * result.b + compute_B(decomp, spec, mid);
        const double scale = next.norm();
        result.rel_change = scale > 0.0 ? (next - result.b).norm() / scale : 0.0;
        result.b = next;
        result.n_points = n;
        if (result.rel_change < options.rel_tol) return result;
    }
    throw convergence_error("b_not_converged",
                            fmt::format("B integral not converged at {} points (relative change {:.3g})",
                                        result.n_points, result.rel_change));
}

Eigen::MatrixXcd compute_B_series(const AutocorrDecomposition& decomp, const ReservoirSpec& spec) {
    validate(decomp);
    validate(spec);
    const auto terms = convert_terms<wide_complex>(decomp);
    const wide_complex two_pi(2 * detail::wide_pi());
    const auto n = spec.size();
    Eigen::MatrixXcd b(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            b(i, j) = narrow(b_series_entry(widen(spec.d(i)), widen(spec.d(j)), widen(spec.omega(i)),
                                            widen(spec.omega(j)), terms, two_pi));
    return b;
}

Eigen::MatrixXcd compute_D_PC(const AutocorrDecomposition& decomp, const ReservoirSpec& spec) {
    validate(decomp);
    validate(spec);
    const auto terms = convert_terms<wide_complex>(decomp);
    const auto n = spec.size();
    Eigen::MatrixXcd out(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) out(i, j) = narrow(d_pc_entry(widen(spec.d(i)), widen(spec.d(j)), terms));
    return out;
}

Eigen::MatrixXcd compute_D_MC(const AutocorrDecomposition& decomp, const ReservoirSpec& spec) {
    validate(decomp);
    validate(spec);
    const auto terms = convert_terms<wide_complex>(decomp);
    const auto n = spec.size();
    Eigen::MatrixXcd out(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) out(i, j) = narrow(d_mc_entry(widen(spec.d(i)), widen(spec.d(j)), terms));
    return out;
}

struct CapacityModel::Impl {
    ReservoirSpec reduced;
    std::vector<Term<wide_complex>> terms;
    std::vector<wide_complex> d;
    std::vector<wide_complex> omega;
    SquareMatrix<wide_complex> b_inverse;
    double b_condition = 1.0;
    mutable double imag_residue = 0.0;

    double realize(const wide_complex& value, const char* what, bool clamp) const {
        const double re = static_cast<double>(value.real());
        const double im = std::abs(static_cast<double>(value.imag()));
        imag_residue = std::max(imag_residue, im);
        if (im > 1e-8 * std::max(1.0, std::abs(re)))
            throw model_error("complex_capacity", fmt::format("{} has imaginary residue {:.3g}", what, im));
        if (clamp && re < 0.0) {
            if (re < -1e-10) throw model_error("negative_capacity", fmt::format("{} is negative ({:.6g})", what, re));
            return 0.0;
        }
        return re;
    }

    template <class EntryFn>
    double hadamard_form(EntryFn&& entry, const char* what) const {
        const std::size_t n = d.size();
        wide_complex sum(0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) sum += omega[i] * entry(d[i], d[j]) * b_inverse(i, j) * omega[j];
        return realize(wide_complex(2 * detail::wide_pi()) * sum, what, true);
    }
};

CapacityModel::CapacityModel(const AutocorrDecomposition& decomp, const ReservoirSpec& spec,
                             const CapacityOptions& options)
    : impl_(std::make_unique<Impl>()) {
    validate(decomp);
    auto& m = *impl_;
    m.reduced = canonicalize(spec);
    m.terms = convert_terms<wide_complex>(decomp);
    const auto n = static_cast<std::size_t>(m.reduced.size());
    for (std::size_t i = 0; i < n; ++i) {
        m.d.push_back(widen(m.reduced.d(static_cast<Eigen::Index>(i))));
        m.omega.push_back(widen(m.reduced.omega(static_cast<Eigen::Index>(i))));
    }
    if (n == 0) return;

    SquareMatrix<wide_complex> b(n);
    if (options.route == CovarianceRoute::series) {
        const wide_complex two_pi(2 * detail::wide_pi());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                b(i, j) = b_series_entry(m.d[i], m.d[j], m.omega[i], m.omega[j], m.terms, two_pi);
    } else {
        const auto quad = compute_B(decomp, m.reduced, options.quadrature);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                b(i, j) = widen(quad.b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }

    Eigen::MatrixXcd b_narrow(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            b_narrow(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = narrow(b(i, j));
    m.b_condition = condition_number(b_narrow);

    // Symmetric diagonal scaling first; the unscaled diagonal of B spans many
    // orders of magnitude when |d_i| approaches 1.
    std::vector<wide_complex> scale(n);
    for (std::size_t i = 0; i < n; ++i) scale[i] = wide_complex(1) / boost::multiprecision::sqrt(wide_complex(abs(b(i, i))));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) b(i, j) *= scale[i] * scale[j];
    SquareMatrix<wide_complex> inverse;
    if (!detail::invert(b, inverse, wide_real(1e-30)))
        throw model_error("ill_conditioned_covariance",
                          fmt::format("ill-conditioned reservoir covariance (cond(B) ~ {:.3g})", m.b_condition));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) inverse(i, j) *= scale[i] * scale[j];
    m.b_inverse = std::move(inverse);
}

CapacityModel::~CapacityModel() = default;
CapacityModel::CapacityModel(CapacityModel&&) noexcept = default;
CapacityModel& CapacityModel::operator=(CapacityModel&&) noexcept = default;

double CapacityModel::predictive_capacity() const {
    if (impl_->d.empty()) return 0.0;
    const auto& terms = impl_->terms;
    return impl_->hadamard_form(
        [&](const wide_complex& di, const wide_complex& dj) { return d_pc_entry(di, dj, terms); }, "PC");
}

double CapacityModel::memory_capacity() const {
    if (impl_->d.empty()) return 0.0;
    const auto& terms = impl_->terms;
    return impl_->hadamard_form(
        [&](const wide_complex& di, const wide_complex& dj) { return d_mc_entry(di, dj, terms); }, "MC");
}

double CapacityModel::memory_function(long k) const {
    const auto& m = *impl_;
    const std::size_t n = m.d.size();
    if (n == 0) return 0.0;
    const wide_complex one(1);
    std::vector<wide_complex> p(n, wide_complex(0));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& d = m.d[i];
        for (const auto& t : m.terms) {
            const auto& l = t.lambda;
            if (k < 1) {
                // Σ_{m>=1} d^{m-1} l^{m-k} = l^{1-k} / (1 - d l)
                p[i] += t.weight * detail::ipow(l, 1 - k) / (one - d * l);
            } else {
                // first k lags inside the window plus the geometric tail
                p[i] += t.weight * (divided_difference(d, l, k) + detail::ipow(d, k) * l / (one - d * l));
            }
        }
        p[i] *= m.omega[i];
    }
    wide_complex q(0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) q += p[i] * m.b_inverse(i, j) * p[j];
    return m.realize(wide_complex(2 * detail::wide_pi()) * q, "m(k)", false);
}

double CapacityModel::b_condition() const { return impl_->b_condition; }
double CapacityModel::imag_residue() const { return impl_->imag_residue; }
const ReservoirSpec& CapacityModel::reduced_spec() const { return impl_->reduced; }

double predictive_capacity(const AutocorrDecomposition& decomp, const ReservoirSpec& spec,
                           const CapacityOptions& options) {
    return CapacityModel(decomp, spec, options).predictive_capacity();
}

double memory_capacity(const AutocorrDecomposition& decomp, const ReservoirSpec& spec, const CapacityOptions& options) {
    return CapacityModel(decomp, spec, options).memory_capacity();
}

double memory_function(const AutocorrDecomposition& decomp, const ReservoirSpec& spec, long k,
                       const CapacityOptions& options) {
    return CapacityModel(decomp, spec, options).memory_function(k);
}

CapacityReport capacity_report(const AutocorrDecomposition& decomp, const ReservoirSpec& spec, long max_lag,
                               const CapacityOptions& options) {
    if (max_lag < 0) throw config_error("invalid_max_lag", "max lag must be nonnegative");
    const CapacityModel model(decomp, spec, options);
    CapacityReport report;
    report.mc = model.memory_capacity();
    report.pc = model.predictive_capacity();
    for (long k = -max_lag; k <= max_lag; ++k) report.memory_function.emplace_back(k, model.memory_function(k));
    report.b_condition = model.b_condition();
    report.imag_residue = model.imag_residue();
    return report;
}

double one_node_exponential_mc(double w, double alpha) {
    check_one_node(w, alpha);
    const double e1 = std::exp(alpha), e2 = std::exp(2 * alpha), e3 = std::exp(3 * alpha), e4 = std::exp(4 * alpha);
    return (e4 - 2 * e1 * w + 2 * e3 * w - w * w) / ((e2 - 1) * (e2 - w * w));
}

double one_node_exponential_pc(double w, double alpha) {
    check_one_node(w, alpha);
    const double e2 = std::exp(2 * alpha);
    return e2 * (1 - w * w) / ((e2 - 1) * (e2 - w * w));
}

OneNodeOptimum optimize_one_node(const AutocorrDecomposition& decomp, double eps) {
    validate(decomp);
    if (!(eps > 0.0 && eps < 0.5)) throw config_error("invalid_eps", "eps must lie in (0, 0.5)");
    auto pc_at = [&](double w) {
        ReservoirSpec spec{Eigen::VectorXcd::Constant(1, Complex{w, 0.0}), Eigen::VectorXcd::Ones(1)};
        return CapacityModel(decomp, spec).predictive_capacity();
    };

    constexpr int kGrid = 401;
    const double lo = -1.0 + eps, hi = 1.0 - eps;
    const double step = (hi - lo) / (kGrid - 1);
    int best = 0;
    double best_pc = -INFINITY;
    for (int i = 0; i < kGrid; ++i) {
        const double pc = pc_at(lo + step * i);
        if (pc > best_pc) {
            best_pc = pc;
            best = i;
        }
    }

    double a = lo + step * std::max(best - 1, 0);
    double b = lo + step * std::min(best + 1, kGrid - 1);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = pc_at(c), fd = pc_at(d);
    while (b - a > 1e-6) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = pc_at(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = pc_at(d);
        }
    }
    OneNodeOptimum out{0.5 * (a + b), 0.0};
    out.pc = pc_at(out.w);
    if (best_pc > out.pc) out = {lo + step * best, best_pc};  // plateau at the grid point
    return out;
}

}  // namespace rescap
