// bath.hpp: Drude spectral density, bath correlation function by quadrature,
// and exponential-series decompositions (Padé and Matsubara) of the correlation
// function used to build the hierarchy.
//
// Units: hbar = k_B = 1. A bath at inverse temperature beta with spectral density
// J(w) has
//
//   C(t) = (1/pi) int_0^inf dw J(w) [coth(beta w / 2) cos(w t) - i sin(w t)]
//
// and every decomposition represents it as sum_l c_l exp(-gamma_l t) plus a
// white-noise term 2 Delta delta(t) in the real part.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include "heomqt/core.hpp"

namespace heomqt {

struct DrudeSpectralDensity {
    double zeta{1.0};  // coupling strength
    double gamma{1.0}; // cutoff frequency

    void validate() const {
        if (!(zeta > 0.0) || !std::isfinite(zeta))
            throw Error("Drude spectral density needs zeta > 0, got " + std::to_string(zeta));
        if (!(gamma > 0.0) || !std::isfinite(gamma))
            throw Error("Drude spectral density needs gamma > 0, got " + std::to_string(gamma));
    }

    double operator()(double w) const { return zeta * gamma * gamma * w / (w * w + gamma * gamma); }

    // J(w) coth(beta w / 2), finite at w = 0
    double symmetrized(double w, double beta) const {
        const double x = beta * w;
        if (std::abs(x) < 1e-6) {
            // coth(x/2) = 2/x + x/6 + O(x^3)
            return zeta * gamma * gamma / (w * w + gamma * gamma) * (2.0 / beta + beta * w * w / 6.0);
        }
        return (*this)(w) / std::tanh(0.5 * x);
    }

    // S(w) = J(w) [coth(beta w / 2) + 1] with J extended as an odd function;
    // C(t) = (1/2pi) int dw S(w) exp(-i w t).
    double spectrum(double w, double beta) const { return symmetrized(w, beta) + (*this)(w); }

    // Im C(0+) of the exponential representation, -zeta gamma^2 / 2.
    double im_c0() const { return -0.5 * zeta * gamma * gamma; }
};

enum class DecompositionScheme { pade, matsubara };

inline std::string to_string(DecompositionScheme s) {
    return s == DecompositionScheme::pade ? "pade" : "matsubara";
}

inline DecompositionScheme parse_scheme(const std::string& s) {
    if (s == "pade") return DecompositionScheme::pade;
    if (s == "matsubara") return DecompositionScheme::matsubara;
    throw Error("unknown decomposition scheme '" + s + "' (expected pade or matsubara)");
}

struct ExpTerm {
    cd amplitude; // c_l
    double rate;  // gamma_l > 0
};

struct BathDecomposition {
    std::vector<ExpTerm> terms;
    double delta_correction{0.0};
    double beta{1.0};
    DrudeSpectralDensity source{};
    DecompositionScheme scheme{DecompositionScheme::pade};
    // max |reconstruction - quadrature| + quadrature tolerance over the
    // validation grid; only filled when validation was requested.
    std::optional<double> error_bound;
    std::vector<std::string> warnings;

    bool disabled() const { return terms.empty(); }

    cd reconstruct(double t) const {
        cd sum = 0.0;
        for (const auto& term : terms) sum += term.amplitude * std::exp(-term.rate * t);
        return sum;
    }

    // sum_l c_l / gamma_l + Delta, the time integral of the represented C(t)
    cd time_integral() const {
        cd sum = delta_correction;
        for (const auto& term : terms) sum += term.amplitude / term.rate;
        return sum;
    }

    double im_c0() const {
        double s = 0.0;
        for (const auto& term : terms) s += term.amplitude.imag();
        return s;
    }
};

struct QuadratureOptions {
    double abs_tol{1e-10};
    std::size_t workspace{4000};
};

namespace detail {

inline void silence_gsl() {
    static std::once_flag flag;
    std::call_once(flag, [] { gsl_set_error_handler_off(); });
}

struct GslWorkspace {
    explicit GslWorkspace(std::size_t n) : ws(gsl_integration_workspace_alloc(n)) {}
    ~GslWorkspace() { gsl_integration_workspace_free(ws); }
    GslWorkspace(const GslWorkspace&) = delete;
    GslWorkspace& operator=(const GslWorkspace&) = delete;
    gsl_integration_workspace* ws;
};

struct QawoTable {
    QawoTable(double omega, gsl_integration_qawo_enum kind)
        : table(gsl_integration_qawo_table_alloc(omega, 1.0, kind, 60)) {}
    ~QawoTable() { gsl_integration_qawo_table_free(table); }
    QawoTable(const QawoTable&) = delete;
    QawoTable& operator=(const QawoTable&) = delete;
    gsl_integration_qawo_table* table;
};

template <typename F>
double gsl_trampoline(double x, void* p) {
    return (*static_cast<F*>(p))(x);
}

// int_0^inf f(u) cos(u) du or sin(...). The first period goes through QAGP
// with break points at the integrand's own scales (features far narrower than
// a period are otherwise never sampled); the tail through QAWF.
template <typename F>
double fourier_integral(F f, gsl_integration_qawo_enum kind, const QuadratureOptions& opt, const char* integrand,
                        std::vector<double> scales = {}) {
    silence_gsl();
    const double split = 2.0 * std::numbers::pi;
    auto osc = [&](double u) { return f(u) * (kind == GSL_INTEG_COSINE ? std::cos(u) : std::sin(u)); };
    using Osc = decltype(osc);
    std::vector<double> pts{0.0};
    std::sort(scales.begin(), scales.end());
    // every decade from the smallest scale up to the split
    const double lo = scales.empty() ? split : std::max(scales.front(), split * 1e-15);
    for (double p = lo; p < split / 1.5; p *= 10.0) pts.push_back(p);
    for (double s : scales)
        if (s > lo && s < split / 1.5) pts.push_back(s);
    std::sort(pts.begin(), pts.end());
    pts.push_back(split);

    GslWorkspace ws(opt.workspace), cycles(opt.workspace);
    gsl_function head{&gsl_trampoline<Osc>, &osc};
    double first = 0.0, err1 = 0.0;
    int status = gsl_integration_qagp(&head, pts.data(), pts.size(), opt.abs_tol * 0.5, 1e-13, opt.workspace, ws.ws,
                                      &first, &err1);
    double rest = 0.0, err2 = 0.0;
    if (status == GSL_SUCCESS) {
        QawoTable table(1.0, kind);
        gsl_function fn{&gsl_trampoline<F>, &f};
        status = gsl_integration_qawf(&fn, split, opt.abs_tol * 0.5, opt.workspace, ws.ws, cycles.ws, table.table,
                                      &rest, &err2);
    }
    const double result = first + rest;
    if (status != GSL_SUCCESS || !std::isfinite(result)) {
        std::ostringstream os;
        os << "quadrature of the " << integrand << " integrand on [0, inf) did not converge ("
           << gsl_strerror(status) << ", error estimate " << err1 + err2 << ")";
        throw Error(os.str());
    }
    return result;
}

// int_a^inf f(x) dx, QUADPACK QAGIU
template <typename F>
double semi_infinite_integral(F f, double a, const QuadratureOptions& opt, const char* integrand) {
    silence_gsl();
    GslWorkspace ws(opt.workspace);
    gsl_function fn{&gsl_trampoline<F>, &f};
    double result = 0.0, abserr = 0.0;
    const int status = gsl_integration_qagiu(&fn, a, opt.abs_tol, 1e-12, opt.workspace, ws.ws, &result, &abserr);
    if (status != GSL_SUCCESS || !std::isfinite(result)) {
        std::ostringstream os;
        os << "quadrature of the " << integrand << " integrand on [" << a << ", inf) did not converge ("
           << gsl_strerror(status) << ", error estimate " << abserr << ")";
        throw Error(os.str());
    }
    return result;
}

} // namespace detail

// Exact C(t) by adaptive Fourier quadrature. Diverges at t = 0 for the Drude
// density (logarithmically), which surfaces as a quadrature error.
inline cd correlation_quadrature(const DrudeSpectralDensity& j, double beta, double t,
                                 const QuadratureOptions& opt = {}) {
    j.validate();
    if (!(beta > 0.0)) throw Error("correlation_quadrature needs beta > 0");
    if (!(t >= 0.0)) throw Error("correlation_quadrature needs t >= 0");
    if (t == 0.0)
        throw Error("quadrature of the J(w)coth(beta w/2)cos(w t)/pi integrand on [0, inf) diverges at t=0");
    // integrate in u = w t so the oscillation has unit period at every t
    const std::vector<double> scales{j.gamma * t, 2.0 * std::numbers::pi * t / beta};
    const double re = detail::fourier_integral(
        [&](double u) { return j.symmetrized(u / t, beta) / (std::numbers::pi * t); }, GSL_INTEG_COSINE, opt,
        "J(w)coth(beta w/2)cos(w t)/pi", scales);
    const double im = -detail::fourier_integral([&](double u) { return j(u / t) / (std::numbers::pi * t); },
                                                GSL_INTEG_SINE, opt, "J(w)sin(w t)/pi", scales);
    return {re, im};
}

// int_0^inf Re C(t) dt = lim_{w->0} J(w) coth(beta w/2) / 2 = zeta / beta
inline double correlation_time_integral(const DrudeSpectralDensity& j, double beta) { return j.zeta / beta; }

// Pole/weight pairs of a sum-over-poles representation of the Bose function,
//   coth(x/2) ~= 2/x + sum_j 4 eta_j x / (x^2 + xi_j^2),
// with xi_j ascending.
struct BosePoles {
    std::vector<double> xi;
    std::vector<double> eta;
};

// [N-1/N] Padé poles from two tridiagonal eigenproblems.
inline BosePoles pade_bose_poles(int n) {
    if (n < 0) throw Error("Padé pole count must be non-negative");
    BosePoles out;
    if (n == 0) return out;

    auto positive_inverse_eigs = [](Eigen::Index size, double shift, Eigen::Index count) {
        Eigen::MatrixXd lam = Eigen::MatrixXd::Zero(size, size);
        for (Eigen::Index m = 1; m < size; ++m) {
            const double b = 1.0 / std::sqrt((2.0 * m + shift) * (2.0 * m + shift + 2.0));
            lam(m - 1, m) = b;
            lam(m, m - 1) = b;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lam, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) throw Error("Padé eigenproblem failed to converge");
        std::vector<double> v;
        const auto& ev = es.eigenvalues(); // ascending
        for (Eigen::Index i = size - count; i < size; ++i) {
            if (!(ev(i) > 0.0)) throw Error("Padé eigenproblem produced a non-positive root");
            v.push_back(2.0 / ev(i));
        }
        std::sort(v.begin(), v.end());
        return v;
    };

    out.xi = positive_inverse_eigs(2 * n, 1.0, n);
    std::vector<double> zeta = n > 1 ? positive_inverse_eigs(2 * n - 1, 3.0, n - 1) : std::vector<double>{};
    out.eta.resize(n);
    const double prefactor = 0.5 * n * (2.0 * n + 3.0);
    for (int j = 0; j < n; ++j) {
        const double xj2 = out.xi[j] * out.xi[j];
        double num = 1.0, den = 1.0;
        for (int k = 0; k < n - 1; ++k) num *= zeta[k] * zeta[k] - xj2;
        for (int k = 0; k < n; ++k)
            if (k != j) den *= out.xi[k] * out.xi[k] - xj2;
        out.eta[j] = prefactor * num / den;
        if (!std::isfinite(out.eta[j])) throw Error("Padé residue is not finite");
    }
    return out;
}

inline BosePoles matsubara_bose_poles(int n) {
    if (n < 0) throw Error("Matsubara pole count must be non-negative");
    BosePoles out;
    for (int l = 1; l <= n; ++l) {
        out.xi.push_back(2.0 * std::numbers::pi * l);
        out.eta.push_back(1.0);
    }
    return out;
}

// 400 log-spaced points on [1e-3/gamma, 10/gamma]
inline std::vector<double> validation_grid(double gamma, std::size_t points = 400) {
    std::vector<double> grid(points);
    const double lo = std::log(1e-3 / gamma), hi = std::log(10.0 / gamma);
    for (std::size_t i = 0; i < points; ++i)
        grid[i] = std::exp(points == 1 ? lo : lo + (hi - lo) * double(i) / double(points - 1));
    return grid;
}

struct ReconstructionError {
    double max_abs{0.0};
    double at_time{0.0};
};

inline ReconstructionError reconstruction_error(const BathDecomposition& d, std::span<const double> grid,
                                                const QuadratureOptions& opt = {}) {
    ReconstructionError out;
    for (double t : grid) {
        const double err = std::abs(d.reconstruct(t) - correlation_quadrature(d.source, d.beta, t, opt));
        if (err > out.max_abs) out = {err, t};
    }
    return out;
}

struct DecompositionOptions {
    bool validate{false};
    double tolerance{1e-6}; // warn when the validated error bound exceeds this
    QuadratureOptions quadrature{};
    double negative_delta_tol{1e-12};
};

namespace detail {

inline BathDecomposition decompose_with_poles(const DrudeSpectralDensity& j, double beta, const BosePoles& poles,
                                              DecompositionScheme scheme, const DecompositionOptions& opt) {
    j.validate();
    if (!(beta > 0.0) || !std::isfinite(beta)) throw Error("decomposition needs beta > 0");

    BathDecomposition out;
    out.beta = beta;
    out.source = j;
    out.scheme = scheme;

    const double g = j.gamma;
    const double half_strength = 0.5 * j.zeta * g * g;
    // Drude pole: residue of J at w = i gamma times the exact coth(i beta gamma/2)
    out.terms.push_back({cd(half_strength / std::tan(0.5 * beta * g), -half_strength), g});
    for (std::size_t l = 0; l < poles.xi.size(); ++l) {
        const double nu = poles.xi[l] / beta;
        if (std::abs(nu - g) < 1e-10 * g)
            throw Error("bath pole at " + std::to_string(nu) + " coincides with the Drude cutoff");
        const double c = 2.0 * poles.eta[l] * j.zeta * g * g * nu / (beta * (nu * nu - g * g));
        out.terms.push_back({cd(c, 0.0), nu});
    }
    if (!std::isfinite(out.terms.front().amplitude.real()))
        throw Error("Drude pole amplitude is not finite (beta*gamma/2 is a multiple of pi)");

    double delta = correlation_time_integral(j, beta);
    for (const auto& t : out.terms) delta -= t.amplitude.real() / t.rate;
    if (delta < 0.0) {
        if (delta < -opt.negative_delta_tol) {
            std::ostringstream os;
            os << "decomposition inconsistency: delta correction " << delta << " is negative ("
               << to_string(scheme) << ", " << poles.xi.size() << " terms, beta=" << beta << ")";
            throw Error(os.str());
        }
        delta = 0.0;
    }
    out.delta_correction = delta;

    if (opt.validate) {
        const auto grid = validation_grid(g);
        const auto err = reconstruction_error(out, grid, opt.quadrature);
        out.error_bound = err.max_abs + opt.quadrature.abs_tol;
        if (*out.error_bound > opt.tolerance) {
            std::ostringstream os;
            os << to_string(scheme) << " decomposition with " << poles.xi.size() << " terms has error bound "
               << *out.error_bound << " above the requested " << opt.tolerance << " (worst at t=" << err.at_time
               << ")";
            out.warnings.push_back(os.str());
        }
    }
    return out;
}

} // namespace detail

// Drude pole plus `terms` [N-1/N] Padé poles of coth.
inline BathDecomposition pade_decompose(const DrudeSpectralDensity& j, double beta, int terms,
                                        const DecompositionOptions& opt = {}) {
    if (terms < 0) throw Error("pade_decompose needs a non-negative term count");
    return detail::decompose_with_poles(j, beta, pade_bose_poles(terms), DecompositionScheme::pade, opt);
}

// Drude pole plus `terms` Matsubara frequencies 2 pi l / beta.
inline BathDecomposition matsubara_decompose(const DrudeSpectralDensity& j, double beta, int terms,
                                             const DecompositionOptions& opt = {}) {
    if (terms < 0) throw Error("matsubara_decompose needs a non-negative term count");
    return detail::decompose_with_poles(j, beta, matsubara_bose_poles(terms), DecompositionScheme::matsubara, opt);
}

// terms < 0 disables the bath: no exponential terms and no correction.
inline BathDecomposition decompose(const DrudeSpectralDensity& j, double beta, DecompositionScheme scheme,
                                   int terms, const DecompositionOptions& opt = {}) {
    if (terms < 0) {
        BathDecomposition off;
        off.beta = beta;
        off.source = j;
        off.scheme = scheme;
        return off;
    }
    return scheme == DecompositionScheme::pade ? pade_decompose(j, beta, terms, opt)
                                               : matsubara_decompose(j, beta, terms, opt);
}

} // namespace heomqt
