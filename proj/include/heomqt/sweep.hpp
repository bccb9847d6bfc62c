// sweep.hpp: single points, parameter sweeps and convergence tables as CSV

#pragma once

#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "heomqt/config.hpp"
#include "heomqt/core.hpp"
#include "heomqt/dynamics.hpp"
#include "heomqt/hierarchy.hpp"
#include "heomqt/observables.hpp"
#include "heomqt/redfield.hpp"

namespace heomqt {

inline constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

// start:stop:count:lin|log
struct Grid {
    double start{0.0};
    double stop{0.0};
    int count{0};
    bool log{false};

    static Grid parse(const std::string& spec) {
        std::vector<std::string> parts;
        std::size_t pos = 0;
        while (true) {
            const auto next = spec.find(':', pos);
            parts.push_back(spec.substr(pos, next - pos));
            if (next == std::string::npos) break;
            pos = next + 1;
        }
        if (parts.size() != 4) throw Error("grid must look like start:stop:count:lin|log, got '" + spec + "'");
        Grid g;
        g.start = parse_double(parts[0], "grid start");
        g.stop = parse_double(parts[1], "grid stop");
        g.count = parse_int(parts[2], "grid count");
        if (parts[3] == "log")
            g.log = true;
        else if (parts[3] != "lin")
            throw Error("grid spacing must be lin or log, got '" + parts[3] + "'");
        if (g.count < 0) throw Error("grid count must be >= 0");
        if (g.log && !(g.start > 0.0 && g.stop > 0.0)) throw Error("log grid needs positive end points");
        return g;
    }

    std::vector<double> values() const {
        std::vector<double> v;
        for (int i = 0; i < count; ++i) {
            const double f = count == 1 ? 0.0 : double(i) / double(count - 1);
            v.push_back(log ? std::exp(std::log(start) + f * (std::log(stop) - std::log(start)))
                            : start + f * (stop - start));
        }
        if (count > 1) v.back() = stop;
        return v;
    }
};

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::vector<bool> failed;

    bool any_failed() const {
        for (bool f : failed)
            if (f) return true;
        return false;
    }

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw Error("table has no column '" + name + "'");
    }

    double number(std::size_t row, const std::string& name) const {
        const std::string& s = rows.at(row).at(column(name));
        if (s.empty() || s == "nan") return nan_value;
        return parse_double(s, name);
    }

    void write_csv(std::ostream& os) const {
        auto field = [](const std::string& s) {
            if (s.find_first_of(",\"\n") == std::string::npos) return s;
            std::string q = "\"";
            for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
            return q + "\"";
        };
        for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << field(columns[i]);
        os << '\n';
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << field(r[i]);
            os << '\n';
        }
    }
};

inline std::string cell(double x) { return std::isnan(x) ? std::string("nan") : format_double(x); }

struct PointResult {
    bool ok{false};
    std::string error;
    bool has_heom{false};
    bool has_redfield{false};
    CurrentsReport heom;
    Matrix rho_heom;
    double residual{nan_value};
    int iterations{0};
    std::vector<double> redfield_hc;
    Matrix rho_redfield;
    double redfield_min_eigenvalue{nan_value};
    double fidelity{nan_value};
};

inline HeomGenerator make_generator(const Config& cfg, unsigned threads = 0) {
    GeneratorOptions go;
    go.scaling = cfg.solver.scaling;
    go.threads = threads ? threads : unsigned(cfg.solver.threads);
    return HeomGenerator::build(cfg.model(), cfg.solver.depth, go);
}

inline SteadyStateResult solve_heom_steady(const HeomGenerator& gen, const Config& cfg) {
    SteadyStateOptions so;
    so.tol = cfg.solver.tol;
    return steady_state(gen, so);
}

// method: heom | redfield | both
inline PointResult solve_point(const Config& cfg, const std::string& method, unsigned threads = 0) {
    PointResult r;
    try {
        if (method == "heom" || method == "both") {
            const HeomGenerator gen = make_generator(cfg, threads);
            const SteadyStateResult ss = solve_heom_steady(gen, cfg);
            r.residual = ss.residual;
            r.iterations = ss.iterations;
            r.rho_heom = ss.state.rho();
            r.heom = gen.space().depth() >= 1 ? currents(gen, ss.state) : CurrentsReport{};
            r.has_heom = true;
        }
        if (method == "redfield" || method == "both") {
            const RedfieldGenerator rg(cfg.model());
            r.rho_redfield = redfield_steady_state(rg);
            for (std::size_t k = 0; k < rg.model().baths().size(); ++k)
                r.redfield_hc.push_back(redfield_heat_current(rg, r.rho_redfield, k));
            r.redfield_min_eigenvalue = min_eigenvalue(r.rho_redfield);
            r.has_redfield = true;
        }
        if (method != "heom" && method != "redfield" && method != "both")
            throw Error("method must be heom, redfield or both");
        if (r.has_heom && r.has_redfield) {
            FidelityOptions fo;
            fo.psd_tol = 1e-6; // Redfield states may dip slightly below zero
            fo.trace_tol = 1e-8;
            r.fidelity = fidelity(r.rho_heom, r.rho_redfield, fo);
        }
        r.ok = true;
    } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
    }
    return r;
}

inline std::vector<std::string> point_columns(const Config& cfg, const std::string& method) {
    std::vector<std::string> names;
    for (const auto& b : cfg.baths) names.push_back(b.name);
    std::vector<std::string> cols;
    if (method == "heom" || method == "both") {
        cols = CurrentsReport::columns(names);
        cols.insert(cols.end(), {"residual", "iterations"});
    }
    if (method == "redfield" || method == "both") {
        for (const auto& n : names) cols.push_back("re_hc_" + n);
        cols.push_back("re_min_eigenvalue");
    }
    if (method == "both") cols.push_back("fidelity");
    return cols;
}

inline std::vector<std::string> point_cells(const PointResult& r, std::size_t nbaths, const std::string& method) {
    std::vector<std::string> out;
    if (method == "heom" || method == "both") {
        const std::size_t n = 4 * nbaths + 3;
        if (r.has_heom && r.heom.baths.size() == nbaths) {
            for (double v : r.heom.values()) out.push_back(cell(v));
        } else {
            out.insert(out.end(), n, "nan");
        }
        out.push_back(cell(r.residual));
        out.push_back(r.has_heom ? std::to_string(r.iterations) : "nan");
    }
    if (method == "redfield" || method == "both") {
        for (std::size_t k = 0; k < nbaths; ++k) out.push_back(r.has_redfield ? cell(r.redfield_hc[k]) : "nan");
        out.push_back(cell(r.redfield_min_eigenvalue));
    }
    if (method == "both") out.push_back(cell(r.fidelity));
    return out;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
template <typename F>
void parallel_for(std::size_t n, unsigned jobs, F fn) {
    jobs = std::max(1u, std::min<unsigned>(jobs, unsigned(std::max<std::size_t>(n, 1))));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < jobs; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    for (auto& t : pool) t.join();
}

// One steady-state row per grid value of `axis`; failures land in the row.
inline Table run_sweep(const Config& cfg, const std::string& axis, const std::vector<double>& values,
                       const std::string& method, unsigned jobs = 1) {
    (void)cfg.get(axis); // validates the path
    Table t;
    t.columns = {axis, "status", "error"};
    const auto pc = point_columns(cfg, method);
    t.columns.insert(t.columns.end(), pc.begin(), pc.end());
    t.rows.resize(values.size());
    t.failed.resize(values.size());
    std::vector<PointResult> results(values.size());
    parallel_for(values.size(), jobs, [&](std::size_t i) {
        Config c = cfg;
        try {
            c.set(axis, values[i]);
            results[i] = solve_point(c, method, jobs > 1 ? 1u : 0u);
        } catch (const std::exception& e) {
            results[i].ok = false;
            results[i].error = e.what();
        }
    });
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto& r = results[i];
        auto& row = t.rows[i];
        row = {cell(values[i]), r.ok ? "ok" : "failed", r.error};
        const auto cells = point_cells(r, cfg.baths.size(), method);
        row.insert(row.end(), cells.begin(), cells.end());
        t.failed[i] = !r.ok;
    }
    return t;
}

// HEOM observables for every (depth, terms) pair with the relative change of
// the heat currents from the previous row.
inline Table convergence_report(const Config& cfg, const std::vector<int>& depths, const std::vector<int>& terms,
                                unsigned jobs = 1) {
    std::vector<std::string> names;
    for (const auto& b : cfg.baths) names.push_back(b.name);
    Table t;
    t.columns = {"depth", "terms", "ado_count", "status", "error"};
    for (const char* q : {"hc", "sec"})
        for (const auto& n : names) t.columns.push_back(std::string(q) + "_" + n);
    t.columns.insert(t.columns.end(), {"residual", "iterations", "rel_change_hc", "rel_change_sec"});

    struct Job {
        int depth, terms;
    };
    std::vector<Job> list;
    for (int l : terms)
        for (int n : depths) list.push_back({n, l});
    struct Out {
        PointResult r;
        std::size_t count{0};
        bool current_capable{true};
    };
    std::vector<Out> outs(list.size());
    parallel_for(list.size(), jobs, [&](std::size_t i) {
        Config c = cfg;
        c.solver.depth = list[i].depth;
        for (auto& b : c.baths) b.terms = list[i].terms;
        outs[i].current_capable = list[i].depth >= 1;
        try {
            const HeomGenerator gen = make_generator(c, jobs > 1 ? 1u : 0u);
            outs[i].count = gen.space().size();
            const SteadyStateResult ss = solve_heom_steady(gen, c);
            outs[i].r.residual = ss.residual;
            outs[i].r.iterations = ss.iterations;
            if (outs[i].current_capable) {
                outs[i].r.heom = currents(gen, ss.state);
                outs[i].r.has_heom = true;
            }
            outs[i].r.ok = true;
        } catch (const std::exception& e) {
            outs[i].r.error = e.what();
        }
    });

    std::vector<double> prev_hc, prev_sec;
    auto rel_change = [](const std::vector<double>& a, const std::vector<double>& b) {
        if (a.empty() || b.empty()) return nan_value;
        double diff = 0.0, scale = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            diff = std::max(diff, std::abs(a[k] - b[k]));
            scale = std::max(scale, std::abs(b[k]));
        }
        return scale > 0.0 ? diff / scale : nan_value;
    };
    for (std::size_t i = 0; i < list.size(); ++i) {
        const auto& o = outs[i];
        std::vector<std::string> row{std::to_string(list[i].depth), std::to_string(list[i].terms),
                                     std::to_string(o.count)};
        std::string status = o.r.ok ? (o.current_capable ? "ok" : "no_first_tier") : "failed";
        row.insert(row.end(), {status, o.r.error});
        std::vector<double> hc, sec;
        if (o.r.has_heom)
            for (const auto& b : o.r.heom.baths) {
                hc.push_back(b.hc);
                sec.push_back(b.sec);
            }
        for (std::size_t k = 0; k < names.size(); ++k) row.push_back(hc.empty() ? "nan" : cell(hc[k]));
        for (std::size_t k = 0; k < names.size(); ++k) row.push_back(sec.empty() ? "nan" : cell(sec[k]));
        row.push_back(cell(o.r.residual));
        row.push_back(o.r.ok ? std::to_string(o.r.iterations) : "nan");
        row.push_back(cell(rel_change(hc, prev_hc)));
        row.push_back(cell(rel_change(sec, prev_sec)));
        if (!hc.empty()) {
            prev_hc = hc;
            prev_sec = sec;
        }
        t.rows.push_back(std::move(row));
        t.failed.push_back(!o.r.ok);
    }
    return t;
}

} // namespace heomqt
