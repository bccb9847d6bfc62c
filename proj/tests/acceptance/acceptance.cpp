// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// selected criterion fails. `acceptance --criterion N` runs a single one.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "heomqt/heomqt.hpp"

using namespace heomqt;

namespace {

struct Outcome {
    bool pass{false};
    std::string detail;
};

std::string fmt(double x, int digits = 4) {
    std::ostringstream os;
    os.precision(digits);
    os << x;
    return os.str();
}

// Two-level benchmark shared by criteria 3, 4, 5 and 7.
constexpr int two_level_terms = 2;
constexpr double convergence_tol = 1e-3;
constexpr int max_depth = 24;

struct BenchPoint {
    std::string label;
    double zeta{0.0};
    int depth{0};
    CurrentsReport report;
    std::vector<double> betas;
};

SystemModel two_level(double zeta, bool commuting = false) {
    TwoLevelParams p;
    p.zeta_h = p.zeta_c = zeta;
    p.commuting = commuting;
    p.terms = two_level_terms;
    return two_level_model(p);
}

CurrentsReport solve(const SystemModel& m, int depth) {
    const HeomGenerator gen = HeomGenerator::build(m, depth);
    return currents(gen, steady_state(gen).state);
}

// Raise N by 2 from 4 until HC_h and SEC_h move by less than 0.1% of |HC_h|.
// SEC crosses zero inside the sweep, so both are measured on the HC scale.
BenchPoint converged_point(double zeta, bool commuting) {
    BenchPoint p;
    p.zeta = zeta;
    p.label = std::string(commuting ? "commuting " : "") + "zeta=" + fmt(zeta);
    CurrentsReport prev = solve(two_level(zeta, commuting), 4);
    for (int n = 6; n <= max_depth; n += 2) {
        CurrentsReport cur = solve(two_level(zeta, commuting), n);
        const double scale = std::abs(cur.bath("h").hc);
        const double change = std::max(std::abs(cur.bath("h").hc - prev.bath("h").hc),
                                       std::abs(cur.bath("h").sec - prev.bath("h").sec));
        prev = std::move(cur);
        p.depth = n;
        if (change <= convergence_tol * scale) break;
    }
    p.report = prev;
    for (const auto& b : p.report.baths) p.betas.push_back(b.beta);
    return p;
}

std::vector<double> zeta_grid() { return Grid::parse("0.01:2:20:log").values(); }

std::vector<BenchPoint> two_level_sweep(bool commuting) {
    std::vector<BenchPoint> out;
    for (double z : zeta_grid()) out.push_back(converged_point(z, commuting));
    return out;
}

// Three-level engine over the work-bath temperature (units of omega_h).
struct EnginePoint {
    double temperature;
    PointResult result;
};

std::vector<EnginePoint> engine_sweep() {
    const ThreeLevelParams tp;
    SolverConfig s;
    s.depth = 3;
    const Config cfg = config_from_model(three_level_engine(tp), s);
    std::vector<EnginePoint> out;
    for (double tw : Grid::parse("1:100:25:log").values()) {
        Config c = cfg;
        c.set("bath.w.temperature", tw);
        out.push_back({tw, solve_point(c, "both")});
    }
    return out;
}

// Criterion 7 couplings; each runs at the depth the convergence rule picks.
const std::vector<double> solver_zetas{0.05, 0.5};

std::vector<BenchPoint> solver_points() {
    std::vector<BenchPoint> out;
    for (double z : solver_zetas) out.push_back(converged_point(z, false));
    return out;
}

// Every benchmark steady state of criteria 5 to 7, as currents reports.
std::vector<BenchPoint> all_benchmarks() {
    std::vector<BenchPoint> all = two_level_sweep(false);
    for (auto& p : two_level_sweep(true)) all.push_back(std::move(p));
    for (auto& e : engine_sweep()) {
        BenchPoint p;
        p.label = "engine T_w=" + fmt(e.temperature);
        if (!e.result.ok) {
            p.label += " (failed: " + e.result.error + ")";
            p.report.first_law_residual = std::numeric_limits<double>::quiet_NaN();
        } else {
            p.report = e.result.heom;
        }
        for (const auto& b : p.report.baths) p.betas.push_back(b.beta);
        all.push_back(std::move(p));
    }
    for (auto& p : solver_points()) all.push_back(std::move(p));
    return all;
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
    const DrudeSpectralDensity j{1.0, 2.0};
    const double beta = 1.0;
    const auto grid = validation_grid(j.gamma);
    const auto pade = reconstruction_error(pade_decompose(j, beta, 6), grid);
    const auto mats = reconstruction_error(matsubara_decompose(j, beta, 6), grid);
    const bool within = pade.max_abs <= 1e-6;
    const bool ordered = mats.max_abs > pade.max_abs;
    return {within && ordered, "Pade L=6 max error " + fmt(pade.max_abs) + " at t=" + fmt(pade.at_time) +
                                   " (limit 1e-6: " + (within ? "ok" : "exceeded") + "); Matsubara L=6 " +
                                   fmt(mats.max_abs) + (ordered ? " > Pade" : " <= Pade")};
}

Outcome criterion2() {
    const DrudeSpectralDensity j{1.0, 1.0};
    auto min_re = [&](double beta) {
        double m = 1e300, at = 0.0;
        for (int i = 1; i <= 200; ++i) {
            const double t = 5.0 * i / 200.0;
            const double re = correlation_quadrature(j, beta, t).real();
            if (re < m) m = re, at = t;
        }
        return std::pair{m, at};
    };
    const auto [cold, at] = min_re(5.0);
    const auto [hot, at_hot] = min_re(0.5);
    (void)at_hot;
    const bool pass = cold < 0.0 && hot > 0.0;
    return {pass, "min Re C on (0,5]: beta=5 -> " + fmt(cold) + " at t=" + fmt(at) + ", beta=0.5 -> " + fmt(hot)};
}

Outcome criterion3() {
    double worst = 0.0;
    std::string where;
    bool pass = true;
    std::size_t n = 0;
    for (const auto& p : all_benchmarks()) {
        ++n;
        const double rel = std::abs(p.report.first_law_residual) / p.report.max_abs_hc();
        if (!(rel <= 1e-8)) pass = false;
        if (!(rel <= worst)) worst = rel, where = p.label;
    }
    return {pass, std::to_string(n) + " points, worst |sum HC|/max|HC| = " + fmt(worst) + " (" + where + ")"};
}

Outcome criterion4() {
    bool entropy_ok = true, clausius_ok = true, sec_violation = false;
    int clausius_points = 0;
    double worst_entropy = 1e300;
    std::string sec_point;
    std::vector<std::string> bad;
    for (const auto& p : all_benchmarks()) {
        const auto& r = p.report;
        if (!(r.entropy_production >= -1e-10)) entropy_ok = false, bad.push_back(p.label);
        worst_entropy = std::min(worst_entropy, r.entropy_production);
        // the Clausius sign is fixed only when h is the hottest reservoir; the
        // engine's work bath is hotter than h for T_w > 10
        const auto& h = r.bath("h");
        bool hottest = true;
        for (const auto& b : r.baths) hottest = hottest && h.beta <= b.beta;
        if (hottest && h.beta < r.bath("c").beta) {
            ++clausius_points;
            if (!(h.hc >= 0.0)) clausius_ok = false, bad.push_back(p.label);
        }
        if (!sec_violation && h.sec < 0.0 && h.hc > 0.0) {
            sec_violation = true;
            sec_point = p.label + " (HC_h=" + fmt(h.hc) + ", SEC_h=" + fmt(h.sec) + ")";
        }
    }
    std::string detail = "min entropy production " + fmt(worst_entropy) + "; Clausius HC_h>=0 " +
                         (clausius_ok ? "ok" : "violated") + " on " + std::to_string(clausius_points) +
                         " points with h hottest; SEC_h<0<HC_h " +
                         (sec_violation ? "at " + sec_point : "not found");
    for (const auto& b : bad) detail += "; bad: " + b;
    return {entropy_ok && clausius_ok && sec_violation, detail};
}

Outcome criterion5() {
    const auto sweep = two_level_sweep(false);
    const auto comm = two_level_sweep(true);

    bool a = true, c = true, d = true;
    double worst_a = 0.0, worst_d = 0.0;
    std::size_t imax = 0;
    int deepest = 0;
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        const auto& h = sweep[i].report.bath("h");
        deepest = std::max(deepest, sweep[i].depth);
        if (sweep[i].zeta <= 0.05 + 1e-12) {
            const double rel = std::abs(h.hc - h.sec) / std::abs(h.hc);
            worst_a = std::max(worst_a, rel);
            if (!(rel <= 0.05)) a = false;
        }
        if (!(h.hc > 0.0)) c = false;
        if (h.sec > sweep[imax].report.bath("h").sec) imax = i;
        const auto& hc = comm[i].report.bath("h");
        const double rel = std::abs(hc.hc - hc.sec) / std::abs(hc.hc);
        worst_d = std::max(worst_d, rel);
        if (!(rel <= 1e-8)) d = false;
    }
    const double zmax = sweep[imax].zeta;
    const bool b = imax > 0 && imax + 1 < sweep.size() && zmax >= 0.1 && zmax <= 0.4;

    std::string detail = std::to_string(sweep.size()) + " points, N up to " + std::to_string(deepest) + ", L=" +
                         std::to_string(two_level_terms) + "; (a) " + (a ? "pass" : "FAIL") +
                         " max |HC-SEC|/HC for zeta<=0.05 = " + fmt(worst_a) + "; (b) " + (b ? "pass" : "FAIL") +
                         " SEC max at zeta=" + fmt(zmax) + "; (c) " + (c ? "pass" : "FAIL") + " HC>0; (d) " +
                         (d ? "pass" : "FAIL") + " commuting max |HC-SEC|/HC = " + fmt(worst_d);
    return {a && b && c && d, detail};
}

Outcome criterion6() {
    const auto sweep = engine_sweep();
    bool ok = true;
    std::string err;
    double re_min = 1e300, re_max = -1e300, worst_f = 0.0;
    bool re_negative = true;
    double crossing = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        const auto& r = sweep[i].result;
        if (!r.ok) {
            ok = false;
            err = r.error;
            continue;
        }
        const double re = r.redfield_hc[2];
        re_negative = re_negative && re < 0.0;
        re_min = std::min(re_min, re);
        re_max = std::max(re_max, re);
        worst_f = std::max(worst_f, 1.0 - r.fidelity);
        if (i > 0 && sweep[i - 1].result.ok && std::isnan(crossing)) {
            const double y0 = sweep[i - 1].result.heom.bath("w").hc, y1 = r.heom.bath("w").hc;
            if (y0 * y1 < 0.0) {
                const double x0 = std::log(sweep[i - 1].temperature), x1 = std::log(sweep[i].temperature);
                crossing = std::exp(x0 - y0 * (x1 - x0) / (y1 - y0));
            }
        }
    }
    if (!ok) return {false, "sweep point failed: " + err};
    const double spread = (re_max - re_min) / std::max(std::abs(re_min), std::abs(re_max));
    const bool a = re_negative && spread < 0.25;
    const bool b = !std::isnan(crossing) && crossing >= 15.0 && crossing <= 40.0;
    const bool c = worst_f <= 1e-3;
    return {a && b && c, std::to_string(sweep.size()) + " points; (a) " + std::string(a ? "pass" : "FAIL") +
                             " Redfield HC_w in [" + fmt(re_min) + ", " + fmt(re_max) + "], spread " + fmt(spread) +
                             "; (b) " + (b ? "pass" : "FAIL") + " HEOM HC_w zero at T_w=" + fmt(crossing) + "; (c) " +
                             (c ? "pass" : "FAIL") + " max 1-F = " + fmt(worst_f)};
}

Outcome criterion7() {
    bool pass = true;
    std::string detail;
    for (const BenchPoint& p : solver_points()) {
        const SystemModel m = two_level(p.zeta);
        const HeomGenerator gen = HeomGenerator::build(m, p.depth);
        const SteadyStateResult ss = steady_state(gen);
        // fixed RK4 step inside the stability interval of the deepest tier
        double damping = 0.0;
        for (std::size_t i = 0; i < gen.space().size(); ++i) damping = std::max(damping, gen.space().damping(i));
        PropagationOptions po;
        po.dt = 2.0 / damping;
        Matrix ground = Matrix::Zero(2, 2);
        ground(1, 1) = 1.0;
        const double t_end = p.zeta < 0.1 ? 100.0 : 40.0;
        const AdoState late = propagate(gen, gen.make_state(ground), 0.0, {t_end}, nullptr, po);
        const double diff = (late.rho() - ss.state.rho()).cwiseAbs().maxCoeff();

        const CurrentsReport a = currents(gen, ss.state);
        const CurrentsReport b = solve(m, p.depth + 2);
        const double dhc = std::abs(b.bath("h").hc - a.bath("h").hc) / std::abs(b.bath("h").hc);
        const double dsec = std::abs(b.bath("h").sec - a.bath("h").sec) / std::abs(b.bath("h").sec);
        const bool ok = diff <= 1e-6 && dhc < 1e-3 && dsec < 1e-3;
        pass = pass && ok;
        detail += (detail.empty() ? "" : "; ") + std::string("zeta=") + fmt(p.zeta) + ": |rho_ss - rho(" +
                  fmt(t_end) + ")| = " + fmt(diff) + ", N" + std::to_string(p.depth) + "->N" +
                  std::to_string(p.depth + 2) + " dHC " + fmt(dhc) + " dSEC " + fmt(dsec);
    }
    return {pass, detail};
}

Outcome criterion8() {
    const double beta = 1.0;
    const Matrix h = 0.5 * ops::sigma_z();
    const Matrix gibbs = ops::gibbs_state(h, beta);
    auto model = [&](double zeta) {
        return SystemModel(h, {{"b", {zeta, 2.0}, beta, ops::sigma_x(), DecompositionScheme::pade, two_level_terms}});
    };
    auto deviation = [&](const Matrix& rho) {
        double d = 0.0;
        for (Eigen::Index i = 0; i < 2; ++i)
            d = std::max(d, std::abs(rho(i, i).real() - gibbs(i, i).real()) / gibbs(i, i).real());
        return d;
    };
    // weak coupling: relax from the excited state
    const HeomGenerator weak = HeomGenerator::build(model(0.01), 4);
    Matrix excited = Matrix::Zero(2, 2);
    excited(0, 0) = 1.0;
    PropagationOptions po;
    po.adaptive = true;
    const AdoState late = propagate(weak, weak.make_state(excited), 0.0, {600.0}, nullptr, po);
    const double dw = deviation(late.rho());
    // strong coupling: converged steady state
    const HeomGenerator strong = HeomGenerator::build(model(1.0), 12);
    const double ds = deviation(steady_state(strong).state.rho());
    return {dw <= 0.01 && ds > 0.01, "population deviation from Gibbs(H_s): zeta=0.01 -> " + fmt(dw) +
                                         ", zeta=1 -> " + fmt(ds)};
}

Outcome criterion9() {
    // 1 bath, 1 exponential term, N = 1, d = 2; dense generator written out by hand
    const Matrix h = 0.5 * ops::sigma_z() + 0.3 * ops::sigma_x();
    const Matrix v = ops::sigma_x();
    const DrudeSpectralDensity j{0.4, 1.5};
    const double beta = 0.8;
    const SystemModel m(h, {{"b", j, beta, v, DecompositionScheme::pade, 0}});
    const auto decs = m.decompositions();
    const cd c = decs[0].terms.at(0).amplitude;
    const double gamma = decs[0].terms.at(0).rate;
    const double delta = decs[0].delta_correction;

    auto left = [](const Matrix& a) {
        Matrix k = Matrix::Zero(4, 4);
        for (int r = 0; r < 2; ++r)
            for (int s = 0; s < 2; ++s)
                for (int q = 0; q < 2; ++q) k(2 * r + q, 2 * s + q) = a(r, s);
        return k;
    };
    auto right = [](const Matrix& b) {
        Matrix k = Matrix::Zero(4, 4);
        for (int r = 0; r < 2; ++r)
            for (int s = 0; s < 2; ++s)
                for (int q = 0; q < 2; ++q) k(2 * r + s, 2 * r + q) = b(q, s);
        return k;
    };
    const Matrix cv = left(v) - right(v), av = left(v) + right(v);
    const Matrix l0 = -I * (left(h) - right(h)) - delta * cv * cv;

    double worst = 0.0;
    for (bool scaling : {false, true}) {
        const double up = scaling ? std::sqrt(std::abs(c)) : 1.0;
        const double down = scaling ? 1.0 / std::sqrt(std::abs(c)) : 1.0;
        Matrix dense = Matrix::Zero(8, 8);
        dense.block(0, 0, 4, 4) = l0;
        dense.block(0, 4, 4, 4) = -I * up * cv;
        dense.block(4, 0, 4, 4) = down * (-I * c.real() * cv + c.imag() * av);
        dense.block(4, 4, 4, 4) = l0 - gamma * Matrix::Identity(4, 4);

        GeneratorOptions go;
        go.scaling = scaling;
        const HeomGenerator gen = HeomGenerator::build(m, 1, go);
        AdoState x = gen.make_state(Matrix::Zero(2, 2));
        for (Eigen::Index col = 0; col < 8; ++col) {
            x.data().setZero();
            x.data()(col) = 1.0;
            const AdoState y = apply_heom_rhs(gen, x, 0.0);
            worst = std::max(worst, (y.data() - dense.col(col)).cwiseAbs().maxCoeff());
        }
    }
    return {worst <= 1e-12, "max |apply_heom_rhs - dense| = " + fmt(worst) + " (scaled and unscaled)"};
}

Outcome criterion10() {
    TwoLevelParams p;
    p.zeta_h = p.zeta_c = 0.05;
    p.terms = 1;
    const SystemModel base = two_level_model(p);
    const double omega = 1.0, period = 2.0 * std::numbers::pi / omega;
    const SystemModel m(base.static_hamiltonian(), base.baths(),
                        {{"x", ops::sigma_x(), {WaveformKind::sinusoid, 0.05, omega, 0.0, {}}}});
    const HeomGenerator gen = HeomGenerator::build(m, 4);
    Matrix ground = Matrix::Zero(2, 2);
    ground(1, 1) = 1.0;

    const int settle = 20, per = 400;
    std::vector<double> times;
    for (int i = 0; i <= per; ++i) times.push_back(period * (settle + double(i) / per));
    std::vector<CycleSample> samples;
    propagate(
        gen, gen.make_state(ground), 0.0, times,
        [&](double t, const AdoState& s) { samples.push_back({t, currents(gen, s, t), s.rho()}); }, {});
    CycleResult c;
    try {
        c = cycle_accumulate(samples, period, 1e-6);
    } catch (const Error& e) {
        return {false, e.what()};
    }
    const bool second = c.entropy >= -1e-8;
    const bool carnot = std::isnan(c.efficiency) || c.efficiency <= c.carnot + 1e-8;
    std::string eff = std::isnan(c.efficiency) ? "n/a (Q_h <= 0)" : fmt(c.efficiency);
    return {second && carnot, "Q_h=" + fmt(c.q_cyc[0]) + " Q_c=" + fmt(c.q_cyc[1]) + " W=" + fmt(c.w_cyc) +
                                  "; -sum beta Q = " + fmt(c.entropy) + "; eta = " + eff + " vs Carnot " +
                                  fmt(c.carnot)};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    int only = 0;
    app.add_option("--criterion", only, "run a single criterion (1-10)")->check(CLI::Range(1, 10));
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::function<Outcome()>> all{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                    criterion6, criterion7, criterion8, criterion9, criterion10};
    bool ok = true;
    for (int i = 1; i <= 10; ++i) {
        if (only && i != only) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = all[std::size_t(i - 1)]();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << "criterion " << i << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << "  ["
                  << fmt(secs, 3) << " s]" << std::endl;
        ok = ok && o.pass;
    }
    return ok ? 0 : 1;
}
