// observables.hpp: heat currents, system energy currents and friends from ADOs
//
// With B_k = sum_l rho_{e_{k,l}} (unscaled first-tier ADOs) and the terminator
// strength Delta_k of each bath:
//
//   HC_k  = -sum_l gamma_{k,l} Tr[V_k rho_{e_{k,l}}] + 2 Im C_k(0) Tr[V_k^2 rho]
//           + Delta_k Tr([V_k, H_s][V_k, rho])
//           + Delta_k sum_{k' != k} Tr([V_k, V_k'][V_k, B_k'])
//   SEC_k = Re Tr(i [V_k, H_s] B_k) + Delta_k Tr([V_k, H_s][V_k, rho])
//   <H_int,k> = Tr[V_k B_k]
//
// The Delta terms are the Markovian part of the bath that the terminator
// carries instead of an ADO; they vanish for Pade decompositions.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "heomqt/core.hpp"
#include "heomqt/hierarchy.hpp"
#include "heomqt/operators.hpp"

namespace heomqt {

struct BathCurrents {
    std::string name;
    double beta{1.0};
    double hc{0.0};
    double sec{0.0};
    double eint{0.0};
    double tpc{std::numeric_limits<double>::quiet_NaN()}; // HC - SEC, steady states only
};

struct CurrentsReport {
    std::vector<BathCurrents> baths;
    double power{0.0};
    double first_law_residual{0.0}; // sum_k HC_k + W'
    double entropy_production{0.0}; // -sum_k beta_k HC_k
    bool stationary{false};

    double max_abs_hc() const {
        double m = 0.0;
        for (const auto& b : baths) m = std::max(m, std::abs(b.hc));
        return m;
    }

    const BathCurrents& bath(const std::string& name) const {
        for (const auto& b : baths)
            if (b.name == name) return b;
        throw Error("no bath named '" + name + "' in report");
    }

    static std::vector<std::string> columns(const std::vector<std::string>& names) {
        std::vector<std::string> cols;
        for (const char* q : {"hc", "sec", "tpc", "eint"})
            for (const auto& n : names) cols.push_back(std::string(q) + "_" + n);
        cols.insert(cols.end(), {"power", "entropy_production", "first_law_residual"});
        return cols;
    }

    std::vector<double> values() const {
        std::vector<double> v;
        for (auto field : {&BathCurrents::hc, &BathCurrents::sec, &BathCurrents::tpc, &BathCurrents::eint})
            for (const auto& b : baths) v.push_back(b.*field);
        v.insert(v.end(), {power, entropy_production, first_law_residual});
        return v;
    }
};

namespace detail {

inline void require_first_tier(const HierarchySpace& space) {
    if (space.depth() < 1) throw Error("heat-current readouts need first-tier ADOs (hierarchy depth >= 1)");
}

// sum of unscaled first-tier ADOs of bath k
inline Matrix first_tier_sum(const HeomGenerator& gen, const AdoState& state, std::size_t k) {
    const auto& space = gen.space();
    Matrix b = Matrix::Zero(gen.dim(), gen.dim());
    for (std::size_t a = 0; a < space.num_axes(); ++a)
        if (space.axes()[a].bath == k) b += state.physical(space.first_tier(a));
    return b;
}

inline void check_bath(const HeomGenerator& gen, std::size_t k) {
    if (k >= gen.model().baths().size()) throw Error("bath index out of range");
}

inline double terminator_energy_term(const HeomGenerator& gen, const AdoState& state, std::size_t k, double t) {
    const double delta = gen.decompositions()[k].delta_correction;
    if (delta == 0.0) return 0.0;
    const Matrix& v = gen.model().baths()[k].coupling;
    const Matrix h = gen.model().hamiltonian(t);
    return delta * (ops::commutator(v, h) * ops::commutator(v, state.rho())).trace().real();
}

} // namespace detail

inline double heat_current(const HeomGenerator& gen, const AdoState& state, std::size_t k, double t = 0.0) {
    detail::check_bath(gen, k);
    gen.check_state(state);
    const auto& space = gen.space();
    detail::require_first_tier(space);
    const auto& bath = gen.model().baths()[k];
    const Matrix& v = bath.coupling;
    const Matrix rho = state.rho();
    double hc = 0.0;
    for (std::size_t a = 0; a < space.num_axes(); ++a) {
        const auto& ax = space.axes()[a];
        if (ax.bath != k) continue;
        hc -= ax.rate * (v * state.physical(space.first_tier(a))).trace().real();
    }
    if (!gen.decompositions()[k].disabled())
        hc += 2.0 * bath.density.im_c0() * (v * v * rho).trace().real();
    const double delta = gen.decompositions()[k].delta_correction;
    if (delta != 0.0) {
        hc += detail::terminator_energy_term(gen, state, k, t);
        for (std::size_t kp = 0; kp < gen.model().baths().size(); ++kp) {
            if (kp == k) continue;
            const Matrix& vp = gen.model().baths()[kp].coupling;
            hc += delta * (ops::commutator(v, vp) * ops::commutator(v, detail::first_tier_sum(gen, state, kp)))
                              .trace()
                              .real();
        }
    }
    return hc;
}

inline double system_energy_current(const HeomGenerator& gen, const AdoState& state, std::size_t k, double t = 0.0) {
    detail::check_bath(gen, k);
    gen.check_state(state);
    detail::require_first_tier(gen.space());
    const Matrix& v = gen.model().baths()[k].coupling;
    const Matrix h = gen.model().hamiltonian(t);
    const Matrix b = detail::first_tier_sum(gen, state, k);
    return (I * ops::commutator(v, h) * b).trace().real() + detail::terminator_energy_term(gen, state, k, t);
}

inline double interaction_energy(const HeomGenerator& gen, const AdoState& state, std::size_t k) {
    detail::check_bath(gen, k);
    gen.check_state(state);
    detail::require_first_tier(gen.space());
    const Matrix& v = gen.model().baths()[k].coupling;
    return (v * detail::first_tier_sum(gen, state, k)).trace().real();
}

// ||L x|| / ||x||
inline double stationarity_residual(const HeomGenerator& gen, const AdoState& state, double t = 0.0) {
    gen.check_state(state);
    Vector y(state.data().size());
    gen.apply(t, state.data().data(), y.data());
    return y.norm() / state.data().norm();
}

inline double tpc_residual(const HeomGenerator& gen, const AdoState& state, std::size_t k, double stationary_tol = 1e-6) {
    if (gen.model().time_dependent()) throw Error("TPC residual is only defined for undriven steady states");
    const double r = stationarity_residual(gen, state);
    if (!(r <= stationary_tol)) {
        std::ostringstream os;
        os << "TPC residual needs a stationary state; ||L x||/||x|| = " << r << " exceeds " << stationary_tol;
        throw Error(os.str());
    }
    return heat_current(gen, state, k) - system_energy_current(gen, state, k);
}

// Tr[(dH_s/dt) rho]
inline double power(const SystemModel& model, const AdoState& state, double t) {
    if (!model.time_dependent()) return 0.0;
    return (model.hamiltonian_rate(t) * state.rho()).trace().real();
}

inline CurrentsReport currents(const HeomGenerator& gen, const AdoState& state, double t = 0.0,
                               double stationary_tol = 1e-6) {
    CurrentsReport r;
    const auto& model = gen.model();
    r.stationary = !model.time_dependent() && stationarity_residual(gen, state, t) <= stationary_tol;
    r.power = power(model, state, t);
    double sum_hc = 0.0, entropy = 0.0;
    for (std::size_t k = 0; k < model.baths().size(); ++k) {
        BathCurrents b;
        b.name = model.baths()[k].name;
        b.beta = model.baths()[k].beta;
        b.hc = heat_current(gen, state, k, t);
        b.sec = system_energy_current(gen, state, k, t);
        b.eint = interaction_energy(gen, state, k);
        if (r.stationary) b.tpc = b.hc - b.sec;
        sum_hc += b.hc;
        entropy -= b.beta * b.hc;
        r.baths.push_back(std::move(b));
    }
    r.first_law_residual = sum_hc + r.power;
    r.entropy_production = entropy;
    return r;
}

struct CycleSample {
    double t;
    CurrentsReport report;
    Matrix rho;
};

struct CycleResult {
    std::vector<std::string> names;
    std::vector<double> q_cyc;  // per bath, integral of HC over one period
    double w_cyc{0.0};          // integral of power over one period
    double entropy{0.0};        // -sum_k beta_k Q_cyc,k
    double efficiency{std::numeric_limits<double>::quiet_NaN()}; // -W/Q_h, engine operation only
    double carnot{0.0};         // 1 - beta_h / beta_c
    bool second_law_ok{false};
    bool carnot_ok{false};
};

// Trapezoidal integration over the last `period` of the samples. The reduced
// state at both ends of that window must agree within `periodic_tol`.
inline CycleResult cycle_accumulate(std::span<const CycleSample> samples, double period, double periodic_tol = 1e-6) {
    if (samples.size() < 2) throw Error("cycle accumulation needs at least two samples");
    if (!(period > 0.0)) throw Error("cycle period must be positive");
    const double t_end = samples.back().t;
    const double t_start = t_end - period;
    std::size_t first = samples.size();
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (std::abs(samples[i].t - t_start) <= 1e-9 * std::max(1.0, std::abs(t_start))) {
            first = i;
            break;
        }
    if (first == samples.size()) throw Error("no sample at the start of the last period");
    const double drift = (samples.back().rho - samples[first].rho).cwiseAbs().maxCoeff();
    if (!(drift <= periodic_tol)) {
        std::ostringstream os;
        os << "trajectory is not periodic: reduced state changed by " << drift << " over one period (tolerance "
           << periodic_tol << ")";
        throw Error(os.str());
    }

    const auto& baths0 = samples[first].report.baths;
    CycleResult c;
    c.q_cyc.assign(baths0.size(), 0.0);
    for (const auto& b : baths0) c.names.push_back(b.name);
    for (std::size_t i = first + 1; i < samples.size(); ++i) {
        const double h = samples[i].t - samples[i - 1].t;
        for (std::size_t k = 0; k < baths0.size(); ++k)
            c.q_cyc[k] += 0.5 * h * (samples[i].report.baths[k].hc + samples[i - 1].report.baths[k].hc);
        c.w_cyc += 0.5 * h * (samples[i].report.power + samples[i - 1].report.power);
    }

    std::size_t hot = 0, cold = 0;
    for (std::size_t k = 0; k < baths0.size(); ++k) {
        c.entropy -= baths0[k].beta * c.q_cyc[k];
        if (baths0[k].beta < baths0[hot].beta) hot = k;
        if (baths0[k].beta > baths0[cold].beta) cold = k;
    }
    c.carnot = baths0.empty() ? 0.0 : 1.0 - baths0[hot].beta / baths0[cold].beta;
    if (!baths0.empty() && c.q_cyc[hot] > 0.0) c.efficiency = -c.w_cyc / c.q_cyc[hot];
    c.second_law_ok = c.entropy >= -1e-8;
    c.carnot_ok = std::isnan(c.efficiency) || c.efficiency <= c.carnot + 1e-8;
    return c;
}

struct FidelityOptions {
    double psd_tol{1e-10};
    double trace_tol{1e-10};
    double hermitian_tol{1e-10};
};

namespace detail {

inline Matrix psd_sqrt(const Matrix& rho, const FidelityOptions& opt, const char* which) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rho + rho.adjoint()));
    Eigen::VectorXd ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < -opt.psd_tol) {
            std::ostringstream os;
            os << which << " has eigenvalue " << ev(i) << " below -" << opt.psd_tol;
            throw Error(os.str());
        }
        ev(i) = std::sqrt(std::max(ev(i), 0.0));
    }
    return es.eigenvectors() * ev.cast<cd>().asDiagonal() * es.eigenvectors().adjoint();
}

inline void check_density(const Matrix& rho, const FidelityOptions& opt, const char* which) {
    if (rho.rows() != rho.cols() || rho.rows() == 0) throw Error(std::string(which) + " is not square");
    if (!ops::is_hermitian(rho, opt.hermitian_tol)) throw Error(std::string(which) + " is not Hermitian");
    if (std::abs(rho.trace() - 1.0) > opt.trace_tol) throw Error(std::string(which) + " does not have unit trace");
}

} // namespace detail

// Tr sqrt(sqrt(rho) sigma sqrt(rho))
inline double fidelity(const Matrix& rho, const Matrix& sigma, const FidelityOptions& opt = {}) {
    detail::check_density(rho, opt, "rho");
    detail::check_density(sigma, opt, "sigma");
    if (rho.rows() != sigma.rows()) throw Error("fidelity arguments have different dimensions");
    const Matrix sr = detail::psd_sqrt(rho, opt, "rho");
    detail::psd_sqrt(sigma, opt, "sigma"); // positivity check only
    const Matrix m = sr * sigma * sr;
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
    double f = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) f += std::sqrt(std::max(es.eigenvalues()(i), 0.0));
    return f;
}

} // namespace heomqt
