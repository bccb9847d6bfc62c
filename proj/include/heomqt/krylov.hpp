// krylov.hpp: restarted, right-preconditioned BiCGStab for complex systems

#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "heomqt/core.hpp"

namespace heomqt {

struct KrylovOptions {
    double tol{1e-10};        // must reach ||b - A x|| <= tol ||b||
    double target{1e-13};     // keeps refining towards this while it pays off
    int max_iterations{50000};
    int restart{1500};
};

struct KrylovResult {
    Vector x;
    double residual{0.0}; // true relative residual
    int iterations{0};
    std::vector<double> history; // true residual after each cycle
};

// Op: void(const Vector& in, Vector& out) for A; Prec likewise for M^{-1}.
// Solves A M^{-1} y = b, x = M^{-1} y, restarting from the current x.
template <typename Op, typename Prec>
KrylovResult bicgstab(const Op& a, const Prec& prec, const Vector& b, Vector x0, const KrylovOptions& opt = {}) {
    const Eigen::Index n = b.size();
    const double bnorm = b.norm();
    if (bnorm == 0.0) return {Vector::Zero(n), 0.0, 0, {}};

    KrylovResult out;
    out.x = std::move(x0);
    Vector r(n), rhat(n), p(n), v(n), s(n), t(n), ph(n), sh(n), ax(n);

    auto true_residual = [&] {
        a(out.x, ax);
        r = b - ax;
        return r.norm() / bnorm;
    };

    double res = true_residual();
    out.history.push_back(res);
    int stalled = 0;
    while (res > opt.target && out.iterations < opt.max_iterations) {
        const double cycle_start = res;
        rhat = r;
        cd rho{1.0}, alpha{1.0}, omega{1.0};
        v.setZero();
        p.setZero();
        for (int it = 0; it < opt.restart && out.iterations < opt.max_iterations; ++it) {
            ++out.iterations;
            const cd rho_new = rhat.dot(r);
            if (std::abs(rho_new) < std::numeric_limits<double>::min() * 1e10) break; // breakdown, restart
            if (it == 0) {
                p = r;
            } else {
                const cd beta = (rho_new / rho) * (alpha / omega);
                p = r + beta * (p - omega * v);
            }
            rho = rho_new;
            prec(p, ph);
            a(ph, v);
            const cd rv = rhat.dot(v);
            if (rv == cd{0.0}) break;
            alpha = rho / rv;
            s = r - alpha * v;
            if (s.norm() / bnorm <= opt.target * 0.1) {
                out.x += alpha * ph;
                break;
            }
            prec(s, sh);
            a(sh, t);
            const double tt = t.squaredNorm();
            if (tt == 0.0) break;
            omega = t.dot(s) / tt;
            out.x += alpha * ph + omega * sh;
            r = s - omega * t;
            if (r.norm() / bnorm <= opt.target * 0.1) break;
            if (omega == cd{0.0}) break;
        }
        res = true_residual();
        if (!std::isfinite(res)) break;
        out.history.push_back(res);
        // stop refining once restarts stop paying off
        stalled = res > 0.5 * cycle_start ? stalled + 1 : 0;
        if (stalled >= 3 && res <= opt.tol) break;
        if (stalled >= 6) break;
    }
    out.residual = res;
    if (!(res <= opt.tol)) {
        std::ostringstream os;
        os << "BiCGStab did not converge: relative residual " << res << " after " << out.iterations
           << " iterations (tolerance " << opt.tol << ")";
        throw ConvergenceError(os.str(), out.history);
    }
    return out;
}

} // namespace heomqt
