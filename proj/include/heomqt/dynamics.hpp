// dynamics.hpp: RK4 propagation of the ADO state and the steady-state solver

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "heomqt/core.hpp"
#include "heomqt/hierarchy.hpp"
#include "heomqt/krylov.hpp"
#include "heomqt/operators.hpp"

namespace heomqt {

// 0.01 / max(gamma_{k,l}, spectral radius of H_s)
inline double default_time_step(const HeomGenerator& gen, double t = 0.0) {
    double fastest = ops::spectral_radius_hermitian(gen.model().hamiltonian(t));
    for (const auto& ax : gen.space().axes()) fastest = std::max(fastest, ax.rate);
    if (!(fastest > 0.0)) fastest = 1.0;
    return 0.01 / fastest;
}

struct PropagationOptions {
    double dt{0.0}; // 0 selects default_time_step
    bool adaptive{false};
    double rtol{1e-8};
    double atol{1e-10};
    double min_dt{1e-12};
};

struct Trajectory {
    std::vector<double> times;
    std::vector<AdoState> states;
};

using Observer = std::function<void(double, const AdoState&)>;

namespace detail {

class Rk4 {
public:
    Rk4(const HeomGenerator& gen) : gen_(gen) {
        const auto n = Eigen::Index(gen.dimension());
        k1_.resize(n), k2_.resize(n), k3_.resize(n), k4_.resize(n), tmp_.resize(n);
    }

    void step(double t, double h, const Vector& y, Vector& out) {
        gen_.apply(t, y.data(), k1_.data());
        tmp_ = y + (0.5 * h) * k1_;
        gen_.apply(t + 0.5 * h, tmp_.data(), k2_.data());
        tmp_ = y + (0.5 * h) * k2_;
        gen_.apply(t + 0.5 * h, tmp_.data(), k3_.data());
        tmp_ = y + h * k3_;
        gen_.apply(t + h, tmp_.data(), k4_.data());
        out = y + (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
    }

private:
    const HeomGenerator& gen_;
    Vector k1_, k2_, k3_, k4_, tmp_;
};

inline void check_finite(const Vector& y, double t) {
    if (!y.allFinite()) {
        std::ostringstream os;
        os << "non-finite ADO entries at t = " << t;
        throw Error(os.str());
    }
}

} // namespace detail

// Advance `state` from t0 through each of `samples` (ascending, >= t0), calling
// `observer` at every sample. Returns the state at the last sample.
inline AdoState propagate(const HeomGenerator& gen, AdoState state, double t0, const std::vector<double>& samples,
                          const Observer& observer, const PropagationOptions& opt = {}) {
    gen.check_state(state);
    if (!state.all_finite()) throw Error("initial ADO state is not finite");
    const double h0 = opt.dt > 0.0 ? opt.dt : default_time_step(gen, t0);
    detail::Rk4 rk(gen);
    Vector& y = state.data();
    Vector y1(y.size()), y2(y.size()), mid(y.size());
    double t = t0, h = h0;
    for (double target : samples) {
        if (target < t - 1e-12 * std::max(1.0, std::abs(t))) throw Error("sample times must be ascending and >= t0");
        while (t < target) {
            const double remaining = target - t;
            if (!opt.adaptive) {
                // fixed grid: land exactly on the sample
                const int steps = std::max(1, int(std::ceil(remaining / h0 - 1e-9)));
                const double hs = remaining / steps;
                for (int s = 0; s < steps; ++s) {
                    rk.step(t, hs, y, y1);
                    y.swap(y1);
                    t = (s + 1 == steps) ? target : t + hs;
                    detail::check_finite(y, t);
                }
                break;
            }
            const double hs = std::min(h, remaining);
            rk.step(t, hs, y, y1);
            rk.step(t, 0.5 * hs, y, mid);
            rk.step(t + 0.5 * hs, 0.5 * hs, mid, y2);
            double err = 0.0;
            for (Eigen::Index i = 0; i < y.size(); ++i) {
                const double scale = opt.atol + opt.rtol * std::max(std::abs(y(i)), std::abs(y2(i)));
                err = std::max(err, std::abs(y2(i) - y1(i)) / (15.0 * scale));
            }
            if (!std::isfinite(err)) {
                if (hs <= opt.min_dt) detail::check_finite(y2, t + hs);
                h = 0.25 * hs;
                continue;
            }
            if (err <= 1.0) {
                y = y2 + (y2 - y1) / 15.0;
                t = hs == remaining ? target : t + hs;
                detail::check_finite(y, t);
            }
            const double factor = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 4.0;
            h = hs * std::clamp(factor, 0.2, 4.0);
            if (h < opt.min_dt) {
                std::ostringstream os;
                os << "step size underflow (" << h << ") at t = " << t;
                throw Error(os.str());
            }
        }
        if (observer) observer(t, state);
    }
    return state;
}

inline Trajectory propagate(const HeomGenerator& gen, const AdoState& state0, double t0,
                            const std::vector<double>& samples, const PropagationOptions& opt = {}) {
    Trajectory tr;
    propagate(
        gen, state0, t0, samples,
        [&](double t, const AdoState& s) {
            tr.times.push_back(t);
            tr.states.push_back(s);
        },
        opt);
    return tr;
}

struct SteadyStateOptions {
    double tol{1e-10};
    double target{1e-13};
    int max_iterations{50000};
    int restart{1500};
};

struct SteadyStateResult {
    AdoState state;
    double residual{0.0};        // ||A x|| / ||x|| for the generator itself
    double system_residual{0.0}; // relative residual of the constrained system
    int iterations{0};
    std::vector<double> history;
};

namespace detail {

// Block-Jacobi preconditioner; blocks with equal damping share one inverse.
class BlockJacobi {
public:
    BlockJacobi(const HeomGenerator& gen, const Matrix& block0) : d2_(gen.dim() * gen.dim()) {
        const Eigen::Index d2 = d2_;
        const Matrix base = gen.diagonal_block(0, 0.0);
        const auto& space = gen.space();
        which_.resize(space.size());
        // ADO 0 carries the trace row but is still singular on the population
        // sector when Delta = 0; a shift by the slowest hierarchy rate keeps
        // every direction reachable.
        double shift = 0.0;
        for (const auto& ax : space.axes()) shift = shift > 0.0 ? std::min(shift, ax.rate) : ax.rate;
        if (!(shift > 0.0)) shift = 1.0;
        Matrix b0 = block0;
        for (Eigen::Index r = 1; r < d2; ++r) b0(r, r) -= shift;
        Eigen::FullPivLU<Matrix> lu0(b0);
        inverses_.push_back(lu0.isInvertible() ? Matrix(lu0.inverse())
                                               : Matrix(Eigen::CompleteOrthogonalDecomposition<Matrix>(b0).pseudoInverse()));
        which_[0] = 0;
        std::map<double, std::size_t> seen;
        for (std::size_t i = 1; i < space.size(); ++i) {
            const double s = space.damping(i);
            auto it = seen.find(s);
            if (it == seen.end()) {
                const Matrix blk = base - s * Matrix::Identity(d2, d2);
                Eigen::FullPivLU<Matrix> lu(blk);
                if (!lu.isInvertible()) {
                    std::ostringstream os;
                    os << "singular diagonal block for hierarchy damping " << s;
                    throw Error(os.str());
                }
                inverses_.push_back(lu.inverse());
                it = seen.emplace(s, inverses_.size() - 1).first;
            }
            which_[i] = it->second;
        }
    }

    void operator()(const Vector& in, Vector& out) const {
        for (std::size_t i = 0; i < which_.size(); ++i)
            out.segment(Eigen::Index(i) * d2_, d2_).noalias() =
                inverses_[which_[i]] * in.segment(Eigen::Index(i) * d2_, d2_);
    }

private:
    Eigen::Index d2_;
    std::vector<Matrix> inverses_;
    std::vector<std::size_t> which_;
};

inline double mean_temperature_beta(const SystemModel& m) {
    if (m.baths().empty()) return 1.0;
    double temp = 0.0;
    for (const auto& b : m.baths()) temp += 1.0 / b.beta;
    return double(m.baths().size()) / temp;
}

} // namespace detail

// Solves L x = 0 with Tr rho_0 = 1 by replacing the (0,0) equation of ADO 0
// with the trace row. `guess` (optional) must match the generator's space.
inline SteadyStateResult steady_state(const HeomGenerator& gen, const SteadyStateOptions& opt = {},
                                      const AdoState* guess = nullptr) {
    if (gen.model().time_dependent()) throw Error("steady_state needs a time-independent system Hamiltonian");
    const Eigen::Index d = gen.dim();
    const auto n = Eigen::Index(gen.dimension());

    auto constrained = [&](const Vector& x, Vector& y) {
        gen.apply(0.0, x.data(), y.data());
        cd tr{0.0};
        for (Eigen::Index i = 0; i < d; ++i) tr += x(i * d + i);
        y(0) = tr;
    };

    Matrix block0 = gen.diagonal_block(0, 0.0);
    block0.row(0).setZero();
    for (Eigen::Index i = 0; i < d; ++i) block0(0, i * d + i) = 1.0;
    const detail::BlockJacobi prec(gen, block0);

    Vector b = Vector::Zero(n);
    b(0) = 1.0;
    Vector x0;
    if (guess) {
        gen.check_state(*guess);
        x0 = guess->data();
    } else {
        x0 = gen.make_state(ops::gibbs_state(gen.model().static_hamiltonian(), detail::mean_temperature_beta(gen.model())))
                 .data();
    }

    KrylovOptions kopt;
    kopt.tol = opt.tol;
    kopt.target = std::min(opt.target, opt.tol);
    kopt.max_iterations = opt.max_iterations;
    kopt.restart = opt.restart;
    KrylovResult kr = bicgstab(constrained, prec, b, std::move(x0), kopt);

    SteadyStateResult res;
    res.state = gen.make_state(Matrix::Zero(d, d));
    res.state.data() = std::move(kr.x);
    // enforce exact unit trace and Hermiticity of ADO 0 against round-off
    auto rho = res.state.ado(0);
    rho = (0.5 * (Matrix(rho) + Matrix(rho).adjoint())).eval();
    res.state.data() /= rho.trace();
    res.system_residual = kr.residual;
    res.iterations = kr.iterations;
    res.history = std::move(kr.history);
    Vector ax(n);
    gen.apply(0.0, res.state.data().data(), ax.data());
    res.residual = ax.norm() / res.state.data().norm();
    return res;
}

} // namespace heomqt
