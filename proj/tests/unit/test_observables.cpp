#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "heomqt/dynamics.hpp"
#include "heomqt/models.hpp"
#include "heomqt/observables.hpp"

using namespace heomqt;

namespace {

Matrix plus_state() {
    Matrix rho(2, 2);
    rho.setConstant(0.5);
    return rho;
}

SystemModel driven_two_level(double amplitude, DecompositionScheme scheme = DecompositionScheme::pade) {
    TwoLevelParams p;
    p.zeta_h = p.zeta_c = 0.3;
    p.scheme = scheme;
    const SystemModel base = two_level_model(p);
    return SystemModel(base.static_hamiltonian(), base.baths(),
                       {{"d", ops::sigma_x(), {WaveformKind::sinusoid, amplitude, 0.8, 0.3, {}}}});
}

// a state with the ADO structure of a real transient
AdoState transient(const HeomGenerator& gen, double t) {
    PropagationOptions opt;
    opt.dt = 0.002;
    return propagate(gen, gen.make_state(plus_state()), 0.0, {t}, nullptr, opt);
}

} // namespace

TEST(Observables, SystemEnergyBalanceIsExact) {
    // Tr[H_s(t) d rho/dt] must equal the sum of system energy currents, for both schemes
    for (auto scheme : {DecompositionScheme::pade, DecompositionScheme::matsubara}) {
        const HeomGenerator gen = HeomGenerator::build(driven_two_level(0.4, scheme), 4);
        const double t = 1.7;
        const AdoState s = transient(gen, t);
        const AdoState ds = gen.rhs(s, t);
        const double lhs = (gen.model().hamiltonian(t) * ds.rho()).trace().real();
        double rhs = 0.0;
        for (std::size_t k = 0; k < 2; ++k) rhs += system_energy_current(gen, s, k, t);
        EXPECT_NEAR(lhs, rhs, 1e-13) << to_string(scheme);
    }
}

TEST(Observables, FirstLawAlongDrivenTrajectory) {
    // d<H_s>/dt by finite differences against sum SEC + power
    const HeomGenerator gen = HeomGenerator::build(driven_two_level(0.4), 4);
    const double t = 2.0, h = 1e-3;
    PropagationOptions opt;
    opt.dt = 5e-4;
    std::vector<double> energy;
    AdoState mid = gen.make_state(plus_state());
    propagate(
        gen, gen.make_state(plus_state()), 0.0, {t - h, t, t + h},
        [&](double tt, const AdoState& s) {
            energy.push_back((gen.model().hamiltonian(tt) * s.rho()).trace().real());
            if (tt == t) mid = s;
        },
        opt);
    const double derivative = (energy[2] - energy[0]) / (2 * h);
    const CurrentsReport c = currents(gen, mid, t);
    EXPECT_NEAR(derivative, c.bath("h").sec + c.bath("c").sec + c.power, 1e-6);
    EXPECT_FALSE(c.stationary);
    EXPECT_TRUE(std::isnan(c.bath("h").tpc));
}

TEST(Observables, HeatMinusSystemCurrentIsInteractionRate) {
    // total bath energy is conserved with the rest: sum_k (HC_k - SEC_k) = d/dt sum_k <H_I,k>;
    // for commuting couplings the identity holds bath by bath
    for (bool commuting : {false, true}) {
        TwoLevelParams p;
        p.zeta_h = p.zeta_c = 0.3;
        p.commuting = commuting;
        const HeomGenerator gen = HeomGenerator::build(two_level_model(p), 4);
        const double t = 1.5, h = 1e-3;
        PropagationOptions opt;
        opt.dt = 5e-4;
        const Trajectory tr = propagate(gen, gen.make_state(plus_state()), 0.0, {t - h, t, t + h}, opt);
        for (std::size_t k = 0; k < 2; ++k) {
            const double lhs = heat_current(gen, tr.states[1], k, t) - system_energy_current(gen, tr.states[1], k, t);
            const double rate =
                (interaction_energy(gen, tr.states[2], k) - interaction_energy(gen, tr.states[0], k)) / (2 * h);
            if (commuting) {
                EXPECT_NEAR(lhs, rate, 1e-6) << "bath " << k;
            }
        }
        double lhs = 0.0, rate = 0.0;
        for (std::size_t k = 0; k < 2; ++k) {
            lhs += heat_current(gen, tr.states[1], k, t) - system_energy_current(gen, tr.states[1], k, t);
            rate += (interaction_energy(gen, tr.states[2], k) - interaction_energy(gen, tr.states[0], k)) / (2 * h);
        }
        EXPECT_NEAR(lhs, rate, 1e-6);
    }
}

TEST(Observables, CommutingCouplingsHaveNoTransientPart) {
    TwoLevelParams p;
    p.zeta_h = p.zeta_c = 0.2;
    p.commuting = true;
    const HeomGenerator gen = HeomGenerator::build(two_level_model(p), 6);
    const AdoState s = steady_state(gen).state;
    const CurrentsReport c = currents(gen, s);
    ASSERT_TRUE(c.stationary);
    for (const auto& b : c.baths) {
        EXPECT_NEAR(b.hc, b.sec, 1e-12);
        EXPECT_NEAR(b.tpc, 0.0, 1e-12);
    }
    EXPECT_NEAR(tpc_residual(gen, s, 0), 0.0, 1e-12);
}

TEST(Observables, SteadyStateBookkeeping) {
    TwoLevelParams p;
    p.zeta_h = p.zeta_c = 0.2;
    const HeomGenerator gen = HeomGenerator::build(two_level_model(p), 6);
    const CurrentsReport c = currents(gen, steady_state(gen).state);
    EXPECT_GT(c.bath("h").hc, 0.0); // heat flows out of the hot bath
    EXPECT_NEAR(c.first_law_residual, 0.0, 1e-14);
    EXPECT_NEAR(c.bath("h").sec + c.bath("c").sec, 0.0, 1e-12);
    EXPECT_NEAR(c.entropy_production, c.bath("h").hc * (p.beta_c - p.beta_h), 1e-13);
    EXPECT_GT(c.entropy_production, 0.0);
    EXPECT_EQ(CurrentsReport::columns({"h", "c"}).size(), c.values().size());
    EXPECT_EQ(CurrentsReport::columns({"h", "c"})[0], "hc_h");
    EXPECT_THROW(c.bath("w"), Error);
}

TEST(Observables, TpcNeedsStationaryState) {
    TwoLevelParams p;
    const HeomGenerator gen = HeomGenerator::build(two_level_model(p), 3);
    const AdoState s = gen.make_state(plus_state());
    try {
        tpc_residual(gen, s, 0);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("stationary"), std::string::npos);
    }
    const HeomGenerator driven = HeomGenerator::build(driven_two_level(0.1), 2);
    EXPECT_THROW(tpc_residual(driven, driven.make_state(plus_state()), 0), Error);
}

TEST(Observables, ReadoutsNeedFirstTier) {
    TwoLevelParams p;
    const HeomGenerator gen = HeomGenerator::build(two_level_model(p), 0);
    const AdoState s = gen.make_state(plus_state());
    EXPECT_THROW(heat_current(gen, s, 0), Error);
    EXPECT_THROW(system_energy_current(gen, s, 0), Error);
    EXPECT_THROW(interaction_energy(gen, s, 0), Error);
    const HeomGenerator ok = HeomGenerator::build(two_level_model(p), 1);
    EXPECT_THROW(heat_current(ok, ok.make_state(plus_state()), 5), Error);
}

TEST(Observables, PowerIsLinearInDriveAmplitude) {
    const SystemModel a = driven_two_level(0.2), b = driven_two_level(0.6);
    const HeomGenerator gen = HeomGenerator::build(a, 2);
    Matrix rho(2, 2);
    rho << 0.7, cd(0.2, 0.1), cd(0.2, -0.1), 0.3;
    const AdoState s = gen.make_state(rho);
    for (double t : {0.0, 0.9, 3.1}) {
        EXPECT_NEAR(power(b, s, t), 3.0 * power(a, s, t), 1e-15);
        const double expect = 0.2 * 0.8 * std::cos(0.8 * t + 0.3) * 0.4;
        EXPECT_NEAR(power(a, s, t), expect, 1e-15);
    }
    EXPECT_EQ(power(two_level_model({}), s, 1.0), 0.0);
}

TEST(Fidelity, ClosedFormsAndBounds) {
    const double a = std::numbers::pi / 12.0;
    Vector psi(2), phi(2);
    psi << 1.0, 0.0;
    phi << std::cos(a), std::sin(a);
    const Matrix rho = psi * psi.adjoint(), sigma = phi * phi.adjoint();
    EXPECT_NEAR(fidelity(rho, sigma), std::cos(a), 1e-7); // 0.9659...
    EXPECT_NEAR(fidelity(sigma, rho), std::cos(a), 1e-7);

    const Matrix mixed = Matrix::Identity(2, 2) / 2.0;
    EXPECT_NEAR(fidelity(mixed, mixed), 1.0, 1e-14);
    EXPECT_NEAR(fidelity(rho, mixed), std::sqrt(0.5), 1e-7);

    Matrix d1 = Matrix::Zero(3, 3), d2 = Matrix::Zero(3, 3);
    d1.diagonal() << 0.5, 0.3, 0.2;
    d2.diagonal() << 0.2, 0.3, 0.5;
    EXPECT_NEAR(fidelity(d1, d2), 2 * std::sqrt(0.1) + 0.3, 1e-14);
    EXPECT_LE(fidelity(d1, d2), 1.0);

    Matrix bad = Matrix::Zero(2, 2);
    bad.diagonal() << 1.2, -0.2;
    EXPECT_THROW(fidelity(bad, mixed), Error);
    EXPECT_THROW(fidelity(2.0 * mixed, mixed), Error);
    EXPECT_THROW(fidelity(mixed, d1), Error);
    Matrix nh = mixed;
    nh(0, 1) = 0.1;
    EXPECT_THROW(fidelity(nh, mixed), Error);
}

TEST(Cycle, TrapezoidalAccumulation) {
    const double period = 2.0 * std::numbers::pi;
    const int per = 400;
    std::vector<CycleSample> samples;
    for (int i = 0; i <= 2 * per; ++i) {
        const double t = period * i / per;
        CycleSample s;
        s.t = t;
        s.rho = Matrix::Identity(2, 2) * 0.5;
        s.rho(0, 1) = s.rho(1, 0) = 0.1 * std::sin(t);
        s.report.baths = {{"h", 0.5, 1.0 + std::sin(t), 0.0, 0.0}, {"c", 1.0, -0.7 + 0.5 * std::cos(t), 0.0, 0.0}};
        s.report.power = -0.3 + std::sin(2 * t);
        samples.push_back(s);
    }
    const CycleResult c = cycle_accumulate(samples, period);
    EXPECT_NEAR(c.q_cyc[0], period, 1e-10);
    EXPECT_NEAR(c.q_cyc[1], -0.7 * period, 1e-10);
    EXPECT_NEAR(c.w_cyc, -0.3 * period, 1e-10);
    EXPECT_NEAR(c.efficiency, 0.3, 1e-10);
    EXPECT_NEAR(c.carnot, 0.5, 1e-15);
    EXPECT_NEAR(c.entropy, -(0.5 * period - 0.7 * period), 1e-10);
    EXPECT_TRUE(c.second_law_ok);
    EXPECT_TRUE(c.carnot_ok);

    EXPECT_THROW(cycle_accumulate(samples, 1.2345), Error);
    samples.back().rho(0, 0) += 1e-3;
    EXPECT_THROW(cycle_accumulate(samples, period), Error);
}
