// redfield.hpp: non-secular second-order (Redfield) comparator
//
//   d rho/dt = -i[H_s, rho] - sum_k [V_k, Lambda_k rho - rho Lambda_k^dagger]
//   Lambda_k = int_0^inf dt C_k(t) V_k(-t)
//
// In the eigenbasis of H_s, (Lambda_k)_mn = (V_k)_mn G_k(E_n - E_m) with the
// half-sided transform G(w) = int_0^inf C(t) e^{iwt} dt
//                           = S(w)/2 + (i/2pi) PV int S(w')/(w - w') dw'.

#pragma once

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "heomqt/bath.hpp"
#include "heomqt/core.hpp"
#include "heomqt/models.hpp"
#include "heomqt/operators.hpp"

namespace heomqt {

// int_0^inf C(t) e^{iwt} dt for the Drude bath, by quadrature of the spectrum
inline cd half_fourier_transform(const DrudeSpectralDensity& j, double beta, double w,
                                 const QuadratureOptions& opt = {}) {
    const double s = j.spectrum(w, beta);
    // PV int S(w')/(w - w') dw' = -int_0^inf [S(w + u) - S(w - u)] / u du
    const double pv = -detail::semi_infinite_integral(
        [&](double u) {
            if (u == 0.0) return 0.0;
            return (j.spectrum(w + u, beta) - j.spectrum(w - u, beta)) / u;
        },
        0.0, opt, "[S(w+u) - S(w-u)]/u principal-value");
    return {0.5 * s, pv / (2.0 * std::numbers::pi)};
}

struct RedfieldOptions {
    QuadratureOptions quadrature{};
    double degeneracy_tol{1e-9};
};

class RedfieldGenerator {
public:
    explicit RedfieldGenerator(const SystemModel& model, const RedfieldOptions& opt = {}) : model_(model) {
        if (model.time_dependent()) throw Error("Redfield generator needs a time-independent system Hamiltonian");
        Eigen::SelfAdjointEigenSolver<Matrix> es(model.static_hamiltonian());
        energies_ = es.eigenvalues();
        basis_ = es.eigenvectors();
        const Eigen::Index d = model.dim();
        const double scale = std::max(1.0, energies_.cwiseAbs().maxCoeff());
        std::ostringstream pairs;
        bool degenerate = false;
        for (Eigen::Index a = 0; a < d; ++a)
            for (Eigen::Index b = a + 1; b < d; ++b)
                if (std::abs(energies_(a) - energies_(b)) <= opt.degeneracy_tol * scale) {
                    pairs << (degenerate ? ", " : "") << '(' << a << ',' << b << ')';
                    degenerate = true;
                }
        if (degenerate) throw Error("Redfield generator needs a non-degenerate H_s spectrum; degenerate pairs " + pairs.str());

        for (const auto& bath : model.baths()) {
            if (bath.terms < 0) {
                lambda_.push_back(Matrix::Zero(d, d));
                continue;
            }
            const Matrix v = basis_.adjoint() * bath.coupling * basis_;
            Matrix lam = Matrix::Zero(d, d);
            for (Eigen::Index m = 0; m < d; ++m)
                for (Eigen::Index n = 0; n < d; ++n)
                    if (v(m, n) != cd{0.0})
                        lam(m, n) = v(m, n) *
                                    half_fourier_transform(bath.density, bath.beta, energies_(n) - energies_(m), opt.quadrature);
            lambda_.push_back(basis_ * lam * basis_.adjoint());
        }

        const Matrix& h = model.static_hamiltonian();
        super_ = -I * ops::commutator_super(h);
        for (std::size_t k = 0; k < lambda_.size(); ++k) super_ += dissipator_super(k);
    }

    const SystemModel& model() const { return model_; }
    const Eigen::VectorXd& energies() const { return energies_; }
    const Matrix& eigenbasis() const { return basis_; }
    const Matrix& lambda(std::size_t k) const { return lambda_.at(k); }
    const Matrix& superoperator() const { return super_; }

    // -[V_k, Lambda_k rho - rho Lambda_k^dagger]
    Matrix dissipator(std::size_t k, const Matrix& rho) const {
        const Matrix& v = model_.baths().at(k).coupling;
        const Matrix& lam = lambda_.at(k);
        return -ops::commutator(v, lam * rho - rho * lam.adjoint());
    }

    Matrix apply(const Matrix& rho) const {
        Matrix out = -I * ops::commutator(model_.static_hamiltonian(), rho);
        for (std::size_t k = 0; k < lambda_.size(); ++k) out += dissipator(k, rho);
        return out;
    }

private:
    Matrix dissipator_super(std::size_t k) const {
        const Matrix& v = model_.baths()[k].coupling;
        const Matrix& lam = lambda_[k];
        const Matrix lad = lam.adjoint();
        return -(ops::left_super(v * lam) - ops::left_super(v) * ops::right_super(lad) -
                 ops::left_super(lam) * ops::right_super(v) + ops::right_super(lad * v));
    }

    SystemModel model_;
    Eigen::VectorXd energies_;
    Matrix basis_;
    std::vector<Matrix> lambda_;
    Matrix super_;
};

// Unique trace-one null vector of the Redfield generator.
inline Matrix redfield_steady_state(const RedfieldGenerator& gen) {
    const Eigen::Index d = gen.model().dim();
    Matrix a = gen.superoperator();
    a.row(0).setZero();
    for (Eigen::Index i = 0; i < d; ++i) a(0, i * d + i) = 1.0;
    Vector b = Vector::Zero(d * d);
    b(0) = 1.0;
    Eigen::FullPivLU<Matrix> lu(a);
    if (!lu.isInvertible()) throw Error("Redfield steady state is not unique");
    Matrix rho = ops::unvec(lu.solve(b), d);
    rho = 0.5 * (rho + rho.adjoint());
    return rho / rho.trace();
}

// Tr[H_s D_k(rho)], the energy the system receives from bath k at this order
inline double redfield_heat_current(const RedfieldGenerator& gen, const Matrix& rho, std::size_t k) {
    return (gen.model().static_hamiltonian() * gen.dissipator(k, rho)).trace().real();
}

// Smallest eigenvalue of rho; negative values flag positivity violation.
inline double min_eigenvalue(const Matrix& rho) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

} // namespace heomqt
