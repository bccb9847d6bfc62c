#include <cmath>
#include <complex>

#include <gtest/gtest.h>

#include "heomqt/models.hpp"
#include "heomqt/redfield.hpp"

using namespace heomqt;

namespace {

SystemModel single_bath(double zeta, double beta, double w0 = 1.0) {
    return SystemModel(0.5 * w0 * ops::sigma_z(), {{"b", {zeta, 2.0}, beta, ops::sigma_x()}});
}

} // namespace

TEST(Redfield, HalfFourierTransformAgainstPoleSum) {
    // int_0^inf C(t) e^{iwt} dt = Delta + sum_j c_j / (nu_j - i w) for an
    // exponential expansion; a long Matsubara series with its white-noise
    // remainder converges to ~1e-9 here
    const DrudeSpectralDensity j{0.3, 2.0};
    const double beta = 0.5;
    const BathDecomposition d = matsubara_decompose(j, beta, 2000);
    for (double w : {-2.5, -1.0, -0.2, 0.0, 0.3, 1.0, 4.0}) {
        cd expect = d.delta_correction;
        for (const auto& t : d.terms) expect += t.amplitude / (t.rate - I * w);
        const cd got = half_fourier_transform(j, beta, w);
        EXPECT_NEAR(got.real(), expect.real(), 5e-9) << "w = " << w;
        EXPECT_NEAR(got.imag(), expect.imag(), 5e-9) << "w = " << w;
    }
}

TEST(Redfield, SingleBathRelaxesToGibbs) {
    for (double beta : {0.5, 2.0}) {
        const SystemModel m = single_bath(0.01, beta);
        const RedfieldGenerator gen(m);
        const Matrix rho = redfield_steady_state(gen);
        EXPECT_LT((rho - ops::gibbs_state(m.static_hamiltonian(), beta)).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT((gen.apply(rho)).norm(), 1e-12);
        EXPECT_NEAR(redfield_heat_current(gen, rho, 0), 0.0, 1e-14);
    }
}

TEST(Redfield, GoldenRuleRelaxationRate) {
    const double zeta = 0.01, beta = 1.0, w0 = 1.0;
    const RedfieldGenerator gen(single_bath(zeta, beta, w0));
    const DrudeSpectralDensity j{zeta, 2.0};
    const double expect = 2.0 * j(w0) / std::tanh(0.5 * beta * w0);
    Eigen::ComplexEigenSolver<Matrix> es(gen.superoperator());
    double rate = 0.0;
    double best = 1e300;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const cd ev = es.eigenvalues()(i);
        if (std::abs(ev) < 1e-12) continue;
        if (std::abs(ev.imag()) < best) {
            best = std::abs(ev.imag());
            rate = -ev.real();
        }
    }
    EXPECT_NEAR(rate / expect, 1.0, 0.01);
}

TEST(Redfield, SuperoperatorMatchesApply) {
    const SystemModel m = two_level_model({});
    const RedfieldGenerator gen(m);
    Matrix rho(2, 2);
    rho << 0.6, cd(0.1, 0.3), cd(0.1, -0.3), 0.4;
    EXPECT_LT((ops::unvec(gen.superoperator() * ops::vec(rho), 2) - gen.apply(rho)).norm(), 1e-14);
    // trace preserving
    EXPECT_LT(std::abs(gen.apply(rho).trace()), 1e-15);
}

TEST(Redfield, EqualTemperaturesNearlyCarryNoCurrent) {
    TwoLevelParams p;
    p.zeta_h = p.zeta_c = 0.01;
    p.beta_h = p.beta_c = 0.7;
    const RedfieldGenerator gen(two_level_model(p));
    const Matrix rho = redfield_steady_state(gen);
    // the non-secular equation is not exactly detailed-balanced; the leak is second order in zeta
    EXPECT_LT(std::abs(redfield_heat_current(gen, rho, 0)), 1e-4);
    EXPECT_NEAR(redfield_heat_current(gen, rho, 0) + redfield_heat_current(gen, rho, 1), 0.0, 1e-15);
}

TEST(Redfield, ThermalGradientDrivesHeatFromHotToCold) {
    TwoLevelParams p;
    p.zeta_h = p.zeta_c = 0.01;
    const RedfieldGenerator gen(two_level_model(p));
    const Matrix rho = redfield_steady_state(gen);
    EXPECT_GT(redfield_heat_current(gen, rho, 0), 0.0);
    EXPECT_GT(min_eigenvalue(rho), 0.0);
}

TEST(Redfield, Errors) {
    const Matrix degenerate = Matrix::Identity(3, 3);
    Matrix v = Matrix::Zero(3, 3);
    v(0, 1) = v(1, 0) = 1.0;
    try {
        RedfieldGenerator gen(SystemModel(degenerate, {{"b", {0.1, 1.0}, 1.0, v}}));
        FAIL() << "expected a degeneracy error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("(0,1)"), std::string::npos);
    }
    const SystemModel driven(ops::sigma_z(), {{"b", {0.1, 1.0}, 1.0, ops::sigma_x()}},
                             {{"d", ops::sigma_x(), {WaveformKind::sinusoid, 0.1, 1.0, 0.0, {}}}});
    EXPECT_THROW(RedfieldGenerator{driven}, Error);
}
