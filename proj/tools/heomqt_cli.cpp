// heomqt: command-line front end: bcf, steady, evolve, sweep, converge

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "heomqt/heomqt.hpp"

namespace {

using namespace heomqt;

struct Output {
    explicit Output(const std::string& path) {
        if (!path.empty() && path != "-") {
            file = std::make_unique<std::ofstream>(path);
            if (!*file) throw Error("cannot open output file '" + path + "'");
        }
    }
    std::ostream& stream() { return file ? *file : std::cout; }
    std::unique_ptr<std::ofstream> file;
};

std::vector<int> parse_int_list(const std::string& s, const std::string& what) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(parse_int(item, what));
    if (out.empty()) throw Error(what + " list is empty");
    return out;
}

Config load(const std::string& path, double tol) {
    if (path.empty()) throw Error("--config is required");
    Config cfg = load_config(path);
    if (tol > 0.0) cfg.solver.tol = tol;
    return cfg;
}

int run_bcf(const std::string& config, const std::string& bath, double zeta, double gamma, double beta,
            const std::string& scheme, int terms, const std::string& grid, const std::string& out) {
    DrudeSpectralDensity j{zeta, gamma};
    DecompositionScheme sch = parse_scheme(scheme);
    if (!config.empty()) {
        Config cfg = load_config(config);
        const BathConfig& b = bath.empty() ? cfg.baths.at(0) : cfg.bath(bath);
        j = {b.zeta, b.gamma};
        beta = b.beta;
        sch = b.scheme;
        terms = b.terms;
    }
    j.validate();
    const BathDecomposition d = decompose(j, beta, sch, terms);
    const std::vector<double> ts = grid.empty() ? validation_grid(j.gamma) : Grid::parse(grid).values();
    Output o(out);
    auto& os = o.stream();
    os << "t,re_c_oracle,im_c_oracle,re_c_recon,im_c_recon\n";
    for (double t : ts) {
        const cd exact = correlation_quadrature(j, beta, t);
        const cd rec = d.reconstruct(t);
        os << cell(t) << ',' << cell(exact.real()) << ',' << cell(exact.imag()) << ',' << cell(rec.real()) << ','
           << cell(rec.imag()) << '\n';
    }
    for (const auto& w : d.warnings) std::cerr << "warning: " << w << '\n';
    return 0;
}

int run_steady(const std::string& config, std::string method, double tol, const std::string& out) {
    const Config cfg = load(config, tol);
    if (method.empty()) method = cfg.solver.method;
    const PointResult r = solve_point(cfg, method);
    Table t;
    t.columns = {"status", "error"};
    const auto pc = point_columns(cfg, method);
    t.columns.insert(t.columns.end(), pc.begin(), pc.end());
    std::vector<std::string> row{r.ok ? "ok" : "failed", r.error};
    const auto cells = point_cells(r, cfg.baths.size(), method);
    row.insert(row.end(), cells.begin(), cells.end());
    t.rows.push_back(row);
    t.failed.push_back(!r.ok);
    Output o(out);
    t.write_csv(o.stream());
    if (!r.ok) std::cerr << "error: " << r.error << '\n';
    return r.ok ? 0 : 1;
}

int run_evolve(const std::string& config, const std::string& out) {
    const Config cfg = load(config, 0.0);
    const HeomGenerator gen = make_generator(cfg);
    const Eigen::Index d = gen.dim();
    PropagationOptions po;
    po.dt = cfg.solver.dt;
    po.adaptive = cfg.solver.adaptive;
    std::vector<double> samples;
    const int n = cfg.solver.samples;
    for (int i = 0; i < n; ++i) samples.push_back(n == 1 ? cfg.solver.t_end : cfg.solver.t_end * i / (n - 1));

    Output o(out);
    auto& os = o.stream();
    os << 't';
    for (Eigen::Index i = 0; i < d; ++i) os << ",p" << i;
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i + 1; j < d; ++j) os << ",re_rho" << i << j << ",im_rho" << i << j;
    const bool readout = gen.space().depth() >= 1;
    if (readout) {
        for (const auto& b : cfg.baths) os << ",hc_" << b.name;
        for (const auto& b : cfg.baths) os << ",sec_" << b.name;
    }
    os << ",power\n";
    propagate(
        gen, gen.make_state(cfg.initial_rho()), 0.0, samples,
        [&](double t, const AdoState& s) {
            const Matrix rho = s.rho();
            os << cell(t);
            for (Eigen::Index i = 0; i < d; ++i) os << ',' << cell(rho(i, i).real());
            for (Eigen::Index i = 0; i < d; ++i)
                for (Eigen::Index j = i + 1; j < d; ++j) os << ',' << cell(rho(i, j).real()) << ',' << cell(rho(i, j).imag());
            if (readout) {
                for (std::size_t k = 0; k < cfg.baths.size(); ++k) os << ',' << cell(heat_current(gen, s, k, t));
                for (std::size_t k = 0; k < cfg.baths.size(); ++k) os << ',' << cell(system_energy_current(gen, s, k, t));
            }
            os << ',' << cell(power(gen.model(), s, t)) << '\n';
        },
        po);
    return 0;
}

int run_sweep_cmd(const std::string& config, std::string method, double tol, const std::string& axis,
                  const std::string& grid, unsigned jobs, const std::string& out) {
    const Config cfg = load(config, tol);
    if (method.empty()) method = cfg.solver.method;
    const Table t = run_sweep(cfg, axis, Grid::parse(grid).values(), method, jobs);
    Output o(out);
    t.write_csv(o.stream());
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        if (t.failed[i]) std::cerr << "row " << i << " failed: " << t.rows[i][2] << '\n';
    return t.any_failed() ? 1 : 0;
}

int run_converge(const std::string& config, double tol, const std::string& depths, const std::string& terms,
                 bool census, unsigned jobs, const std::string& out) {
    const Config cfg = load(config, tol);
    Output o(out);
    if (census) {
        const HeomGenerator gen = make_generator(cfg);
        write_census_csv(o.stream(), gen.space());
        return 0;
    }
    std::vector<int> ls;
    if (terms.empty())
        ls.push_back(cfg.baths.empty() ? 0 : cfg.baths.front().terms);
    else
        ls = parse_int_list(terms, "terms");
    const Table t = convergence_report(cfg, parse_int_list(depths, "depth"), ls, jobs);
    t.write_csv(o.stream());
    return t.any_failed() ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"HEOM simulator for quantum heat transport"};
    app.require_subcommand(1);

    std::string config, method, out, axis, grid, bath, scheme = "pade", depths = "2,4,6,8", terms;
    double tol = 0.0, zeta = 1.0, gamma = 1.0, beta = 1.0;
    int nterms = 2;
    unsigned jobs = 1;
    bool census = false;

    auto add_common = [&](CLI::App* sub, bool with_method) {
        sub->add_option("--config", config, "INI config file");
        sub->add_option("--out", out, "output CSV path (default stdout)");
        if (with_method) {
            sub->add_option("--method", method, "heom, redfield or both (default: solver.method)")
                ->check(CLI::IsMember({"heom", "redfield", "both"}));
            sub->add_option("--tol", tol, "steady-state residual tolerance");
        }
    };

    auto* bcf = app.add_subcommand("bcf", "bath correlation function: quadrature vs decomposition");
    add_common(bcf, false);
    bcf->add_option("--bath", bath, "bath name in the config (default: first)");
    bcf->add_option("--zeta", zeta, "coupling strength");
    bcf->add_option("--gamma", gamma, "cutoff frequency");
    bcf->add_option("--beta", beta, "inverse temperature");
    bcf->add_option("--scheme", scheme, "pade or matsubara")->check(CLI::IsMember({"pade", "matsubara"}));
    bcf->add_option("--terms", nterms, "exponential terms beyond the Drude pole");
    bcf->add_option("--grid", grid, "time grid start:stop:count:lin|log (default 400 log points on [1e-3, 10]/gamma)");

    auto* steady = app.add_subcommand("steady", "steady-state currents for one configuration");
    add_common(steady, true);

    auto* evolve = app.add_subcommand("evolve", "propagate from the factorized initial state");
    add_common(evolve, false);

    auto* sweep = app.add_subcommand("sweep", "steady states over a parameter grid");
    add_common(sweep, true);
    sweep->add_option("--axis", axis, "parameter path, e.g. bath.c.zeta or bath.w.temperature")->required();
    sweep->add_option("--grid", grid, "start:stop:count:lin|log")->required();
    sweep->add_option("--jobs", jobs, "concurrent grid points")->check(CLI::PositiveNumber);

    auto* converge = app.add_subcommand("converge", "convergence in hierarchy depth and term count");
    add_common(converge, false);
    converge->add_option("--tol", tol, "steady-state residual tolerance");
    converge->add_option("--depths", depths, "comma-separated depths");
    converge->add_option("--terms", terms, "comma-separated term counts (default: config)");
    converge->add_option("--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);
    converge->add_flag("--census", census, "print ADO counts per level for the configured depth");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*bcf) return run_bcf(config, bath, zeta, gamma, beta, scheme, nterms, grid, out);
        if (*steady) return run_steady(config, method, tol, out);
        if (*evolve) return run_evolve(config, out);
        if (*sweep) return run_sweep_cmd(config, method, tol, axis, grid, jobs, out);
        if (*converge) return run_converge(config, tol, depths, terms, census, jobs, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
