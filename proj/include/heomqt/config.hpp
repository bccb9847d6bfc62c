// config.hpp: INI-style run configuration
//
//   [meta]            format = heomqt, version = 1
//   [system]          builder = two_level | three_level | matrix, builder
//                     parameters, hamiltonian / rho0 as JSON matrices
//   [bath.<name>]     zeta, gamma, beta (or temperature), coupling, scheme, terms
//   [drive.<name>]    op, waveform, amplitude, frequency, phase, knots
//   [solver]          depth, method, tol, scaling, threads, dt, adaptive, t_end, samples
//
// Matrices are JSON arrays of rows; entries are numbers or [re, im] pairs.
// Any key can be overridden through HEOMQT_<SECTION>_<KEY> (dots become
// underscores, upper case), e.g. HEOMQT_BATH_C_ZETA or HEOMQT_SOLVER_DEPTH.

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "heomqt/bath.hpp"
#include "heomqt/core.hpp"
#include "heomqt/models.hpp"

namespace heomqt {

inline constexpr int config_version = 1;
inline constexpr const char* config_format = "heomqt";
inline constexpr const char* env_prefix = "HEOMQT_";

// shortest representation that reads back to the same double
inline std::string format_double(double x) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    if (ec != std::errc{}) throw Error("could not format number");
    return std::string(buf.data(), end);
}

inline double parse_double(const std::string& s, const std::string& what) {
    double v = 0.0;
    std::string t = s;
    t.erase(0, t.find_first_not_of(" \t"));
    t.erase(t.find_last_not_of(" \t") + 1);
    if (!t.empty() && t[0] == '+') t.erase(0, 1);
    auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || end != t.data() + t.size() || t.empty())
        throw Error("'" + what + "': expected a number, got '" + s + "'");
    return v;
}

inline int parse_int(const std::string& s, const std::string& what) {
    const double v = parse_double(s, what);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw Error("'" + what + "': expected an integer, got '" + s + "'");
    return int(v);
}

inline bool parse_bool(const std::string& s, const std::string& what) {
    std::string t = s;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw Error("'" + what + "': expected a boolean, got '" + s + "'");
}

inline Matrix parse_matrix(const std::string& text, const std::string& what) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error("'" + what + "': matrix is not valid JSON (" + e.what() + ")");
    }
    if (!j.is_array() || j.empty()) throw Error("'" + what + "': matrix must be a non-empty array of rows");
    const auto rows = Eigen::Index(j.size());
    const auto cols = Eigen::Index(j[0].is_array() ? j[0].size() : 0);
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (!j[r].is_array() || Eigen::Index(j[r].size()) != cols)
            throw Error("'" + what + "': matrix rows must be arrays of equal length");
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& e = j[r][c];
            if (e.is_number())
                m(r, c) = e.get<double>();
            else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number())
                m(r, c) = cd(e[0].get<double>(), e[1].get<double>());
            else
                throw Error("'" + what + "': matrix entries must be numbers or [re, im]");
        }
    }
    return m;
}

inline std::string format_matrix(const Matrix& m) {
    std::string s = "[";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        s += r ? ", [" : "[";
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) s += ", ";
            const cd z = m(r, c);
            if (z.imag() == 0.0 && !std::signbit(z.imag()))
                s += format_double(z.real());
            else
                s += "[" + format_double(z.real()) + ", " + format_double(z.imag()) + "]";
        }
        s += "]";
    }
    return s + "]";
}

struct BathConfig {
    std::string name;
    double zeta{0.1};
    double gamma{1.0};
    double beta{1.0};
    std::optional<Matrix> coupling; // builder default when absent
    DecompositionScheme scheme{DecompositionScheme::pade};
    int terms{2};
};

struct DriveConfig {
    std::string name;
    Matrix op;
    Waveform waveform{};
};

struct SolverConfig {
    int depth{8};
    std::string method{"heom"}; // heom | redfield | both
    double tol{1e-10};
    bool scaling{true};
    int threads{1};
    double dt{0.0};
    bool adaptive{false};
    double t_end{50.0};
    int samples{101};
};

struct Config {
    std::string builder{"matrix"};
    std::map<std::string, double> params; // builder parameters
    std::optional<Matrix> hamiltonian;
    std::optional<Matrix> rho0;
    std::vector<BathConfig> baths;
    std::vector<DriveConfig> drives;
    SolverConfig solver{};

    BathConfig& bath(const std::string& name) {
        for (auto& b : baths)
            if (b.name == name) return b;
        throw Error("config has no bath named '" + name + "'");
    }

    SystemModel model() const {
        Matrix h;
        std::map<std::string, Matrix> default_couplings;
        if (builder == "two_level") {
            TwoLevelParams p;
            p.omega0 = param("omega0", p.omega0);
            p.commuting = param("commuting", 0.0) != 0.0;
            const SystemModel m = two_level_model(p);
            h = m.static_hamiltonian();
            for (const auto& b : m.baths()) default_couplings[b.name] = b.coupling;
        } else if (builder == "three_level") {
            ThreeLevelParams p;
            p.omega_h = param("omega_h", p.omega_h);
            p.omega_c = param("omega_c", p.omega_c);
            const SystemModel m = three_level_engine(p);
            h = m.static_hamiltonian();
            for (const auto& b : m.baths()) default_couplings[b.name] = b.coupling;
        } else if (builder == "matrix") {
            if (!hamiltonian) throw Error("[system] builder = matrix needs a hamiltonian");
            h = *hamiltonian;
        } else {
            throw Error("unknown system builder '" + builder + "' (two_level, three_level, matrix)");
        }
        if (hamiltonian && builder != "matrix") h = *hamiltonian;
        std::vector<BathSpec> specs;
        for (const auto& b : baths) {
            Matrix v;
            if (b.coupling)
                v = *b.coupling;
            else if (auto it = default_couplings.find(b.name); it != default_couplings.end())
                v = it->second;
            else
                throw Error("bath '" + b.name + "' needs a coupling operator");
            specs.push_back({b.name, {b.zeta, b.gamma}, b.beta, v, b.scheme, b.terms});
        }
        std::vector<Drive> drives_out;
        for (const auto& d : drives) drives_out.push_back({d.name, d.op, d.waveform});
        return SystemModel(h, std::move(specs), std::move(drives_out));
    }

    Matrix initial_rho() const {
        const SystemModel m = model();
        if (rho0) {
            if (rho0->rows() != m.dim() || rho0->cols() != m.dim()) throw Error("rho0 has the wrong dimension");
            return *rho0;
        }
        // ground state of H_s
        Eigen::SelfAdjointEigenSolver<Matrix> es(m.static_hamiltonian());
        const Vector g = es.eigenvectors().col(0);
        return g * g.adjoint();
    }

    // Numeric parameters addressable by sweeps and overrides.
    std::vector<std::string> numeric_paths() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : params) out.push_back("system." + k);
        for (const auto& b : baths)
            for (const char* f : {"zeta", "gamma", "beta", "temperature", "terms"})
                out.push_back("bath." + b.name + "." + f);
        for (const auto& d : drives)
            for (const char* f : {"amplitude", "frequency", "phase"}) out.push_back("drive." + d.name + "." + f);
        for (const char* f : {"depth", "tol", "dt", "t_end", "samples", "threads"}) out.push_back(std::string("solver.") + f);
        return out;
    }

    double get(const std::string& path) const { return const_cast<Config*>(this)->access(path, nullptr); }
    void set(const std::string& path, double value) { access(path, &value); }

private:
    double param(const std::string& key, double fallback) const {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }

    double access(const std::string& path, const double* value) {
        auto unknown = [&]() -> Error {
            std::string msg = "unknown parameter path '" + path + "'; valid paths:";
            for (const auto& p : numeric_paths()) msg += " " + p;
            return Error(msg);
        };
        const auto first = path.find('.');
        if (first == std::string::npos) throw unknown();
        const std::string section = path.substr(0, first);
        const std::string rest = path.substr(first + 1);
        if (section == "system") {
            auto it = params.find(rest);
            if (it == params.end()) throw unknown();
            if (value) it->second = *value;
            return it->second;
        }
        if (section == "bath" || section == "drive") {
            const auto dot = rest.rfind('.');
            if (dot == std::string::npos) throw unknown();
            const std::string name = rest.substr(0, dot), field = rest.substr(dot + 1);
            if (section == "bath") {
                for (auto& b : baths) {
                    if (b.name != name) continue;
                    if (field == "zeta") return value ? (b.zeta = *value) : b.zeta;
                    if (field == "gamma") return value ? (b.gamma = *value) : b.gamma;
                    if (field == "beta") return value ? (b.beta = *value) : b.beta;
                    if (field == "temperature") {
                        if (value) {
                            if (!(*value > 0.0)) throw Error("temperature must be positive");
                            b.beta = 1.0 / *value;
                        }
                        return 1.0 / b.beta;
                    }
                    if (field == "terms") {
                        if (value) b.terms = int(std::lround(*value));
                        return b.terms;
                    }
                }
            } else {
                for (auto& d : drives) {
                    if (d.name != name) continue;
                    if (field == "amplitude") return value ? (d.waveform.amplitude = *value) : d.waveform.amplitude;
                    if (field == "frequency") return value ? (d.waveform.frequency = *value) : d.waveform.frequency;
                    if (field == "phase") return value ? (d.waveform.phase = *value) : d.waveform.phase;
                }
            }
            throw unknown();
        }
        if (section == "solver") {
            auto int_field = [&](int& f) {
                if (value) f = int(std::lround(*value));
                return double(f);
            };
            if (rest == "depth") return int_field(solver.depth);
            if (rest == "samples") return int_field(solver.samples);
            if (rest == "threads") return int_field(solver.threads);
            if (rest == "tol") return value ? (solver.tol = *value) : solver.tol;
            if (rest == "dt") return value ? (solver.dt = *value) : solver.dt;
            if (rest == "t_end") return value ? (solver.t_end = *value) : solver.t_end;
        }
        throw unknown();
    }
};

namespace detail {

using Ptree = boost::property_tree::ptree;

inline std::string env_name(const std::string& section, const std::string& key) {
    std::string s = env_prefix + section + "_" + key;
    for (auto& c : s) c = (c == '.' || c == '-') ? '_' : char(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

// Lookup with environment override. Returns nullopt when neither is present.
class Section {
public:
    Section(const std::string& name, const Ptree* tree, bool use_env) : name_(name), tree_(tree), env_(use_env) {}

    std::optional<std::string> raw(const std::string& key) const {
        used_.push_back(key);
        if (env_) {
            if (const char* v = std::getenv(env_name(name_, key).c_str())) return std::string(v);
        }
        if (tree_) {
            if (auto v = tree_->get_child_optional(Ptree::path_type(key, '\0'))) return v->data();
        }
        return std::nullopt;
    }

    std::string where(const std::string& key) const { return name_ + "." + key; }

    double number(const std::string& key, double fallback) const {
        auto v = raw(key);
        return v ? parse_double(*v, where(key)) : fallback;
    }
    int integer(const std::string& key, int fallback) const {
        auto v = raw(key);
        return v ? parse_int(*v, where(key)) : fallback;
    }
    bool boolean(const std::string& key, bool fallback) const {
        auto v = raw(key);
        return v ? parse_bool(*v, where(key)) : fallback;
    }
    std::string text(const std::string& key, const std::string& fallback) const {
        auto v = raw(key);
        return v ? *v : fallback;
    }
    std::optional<Matrix> matrix(const std::string& key) const {
        auto v = raw(key);
        if (!v) return std::nullopt;
        return parse_matrix(*v, where(key));
    }

    // keys in the file that nobody asked for
    std::vector<std::string> unused() const {
        std::vector<std::string> out;
        if (!tree_) return out;
        for (const auto& [k, v] : *tree_)
            if (std::find(used_.begin(), used_.end(), k) == used_.end()) out.push_back(k);
        return out;
    }

private:
    std::string name_;
    const Ptree* tree_;
    bool env_;
    mutable std::vector<std::string> used_;
};

inline void reject_unused(const Section& s, const std::string& name) {
    const auto extra = s.unused();
    if (!extra.empty()) throw Error("unknown key '" + extra.front() + "' in [" + name + "]");
}

inline Waveform parse_waveform(const Section& s, const std::string& name) {
    Waveform w;
    const std::string kind = s.text("waveform", "constant");
    if (kind == "constant")
        w.kind = WaveformKind::constant;
    else if (kind == "sinusoid")
        w.kind = WaveformKind::sinusoid;
    else if (kind == "piecewise_linear")
        w.kind = WaveformKind::piecewise_linear;
    else
        throw Error("drive '" + name + "': unknown waveform '" + kind + "'");
    w.amplitude = s.number("amplitude", 0.0);
    w.frequency = s.number("frequency", 0.0);
    w.phase = s.number("phase", 0.0);
    if (auto k = s.matrix("knots")) {
        if (k->cols() != 2) throw Error("drive '" + name + "': knots must be [[t, f], ...]");
        for (Eigen::Index r = 0; r < k->rows(); ++r) w.knots.emplace_back((*k)(r, 0).real(), (*k)(r, 1).real());
    }
    return w;
}

inline const char* waveform_name(WaveformKind k) {
    switch (k) {
    case WaveformKind::constant: return "constant";
    case WaveformKind::sinusoid: return "sinusoid";
    case WaveformKind::piecewise_linear: return "piecewise_linear";
    }
    return "constant";
}

} // namespace detail

inline Config parse_config(std::istream& in, bool use_env = true) {
    detail::Ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw Error(std::string("config parse error: ") + e.what());
    }
    auto child = [&](const std::string& name) -> const detail::Ptree* {
        auto c = tree.get_child_optional(detail::Ptree::path_type(name, '\0'));
        return c ? &*c : nullptr;
    };

    const detail::Section meta("meta", child("meta"), false);
    if (!child("meta")) throw Error("config is missing the [meta] header (format = heomqt, version = 1)");
    if (meta.text("format", "") != config_format) throw Error("config [meta] format must be 'heomqt'");
    const int version = meta.integer("version", -1);
    if (version != config_version)
        throw Error("unsupported config version " + std::to_string(version) + " (expected " +
                    std::to_string(config_version) + ")");
    detail::reject_unused(meta, "meta");

    Config cfg;
    const detail::Section sys("system", child("system"), use_env);
    cfg.builder = sys.text("builder", "matrix");
    std::vector<std::string> param_keys;
    if (cfg.builder == "two_level")
        param_keys = {"omega0", "commuting"};
    else if (cfg.builder == "three_level")
        param_keys = {"omega_h", "omega_c"};
    for (const auto& k : param_keys)
        if (auto v = sys.raw(k)) cfg.params[k] = k == "commuting" ? double(parse_bool(*v, sys.where(k))) : parse_double(*v, sys.where(k));
    cfg.hamiltonian = sys.matrix("hamiltonian");
    cfg.rho0 = sys.matrix("rho0");
    detail::reject_unused(sys, "system");

    // builder baths come first, in builder order, with builder defaults
    std::vector<BathConfig> defaults;
    if (cfg.builder == "two_level") {
        const TwoLevelParams p;
        defaults = {{"h", p.zeta_h, p.gamma, p.beta_h, {}, p.scheme, p.terms},
                    {"c", p.zeta_c, p.gamma, p.beta_c, {}, p.scheme, p.terms}};
    } else if (cfg.builder == "three_level") {
        const ThreeLevelParams p;
        defaults = {{"h", p.zeta_h, p.gamma, p.beta_h, {}, p.scheme, p.terms},
                    {"c", p.zeta_c, p.gamma, p.beta_c, {}, p.scheme, p.terms},
                    {"w", p.zeta_w, p.gamma, p.beta_w, {}, p.scheme, p.terms}};
    }
    std::vector<std::string> bath_names, drive_names;
    for (const auto& d : defaults) bath_names.push_back(d.name);
    for (const auto& [key, sub] : tree) {
        if (key.rfind("bath.", 0) == 0) {
            const std::string n = key.substr(5);
            if (std::find(bath_names.begin(), bath_names.end(), n) == bath_names.end()) bath_names.push_back(n);
        } else if (key.rfind("drive.", 0) == 0) {
            drive_names.push_back(key.substr(6));
        } else if (key != "meta" && key != "system" && key != "solver") {
            throw Error("unknown config section [" + key + "]");
        }
    }
    for (const auto& name : bath_names) {
        BathConfig b;
        b.name = name;
        for (const auto& d : defaults)
            if (d.name == name) b = d;
        const detail::Section s("bath." + name, child("bath." + name), use_env);
        b.zeta = s.number("zeta", b.zeta);
        b.gamma = s.number("gamma", b.gamma);
        b.beta = s.number("beta", b.beta);
        if (auto temp = s.raw("temperature")) {
            if (s.raw("beta")) throw Error("bath '" + name + "': give beta or temperature, not both");
            const double tv = parse_double(*temp, s.where("temperature"));
            if (!(tv > 0.0)) throw Error("bath '" + name + "': temperature must be positive");
            b.beta = 1.0 / tv;
        }
        if (auto v = s.matrix("coupling")) b.coupling = *v;
        b.scheme = parse_scheme(s.text("scheme", to_string(b.scheme)));
        b.terms = s.integer("terms", b.terms);
        detail::reject_unused(s, "bath." + name);
        cfg.baths.push_back(std::move(b));
    }
    for (const auto& name : drive_names) {
        const detail::Section s("drive." + name, child("drive." + name), use_env);
        auto op = s.matrix("op");
        if (!op) throw Error("drive '" + name + "' needs an op matrix");
        cfg.drives.push_back({name, *op, detail::parse_waveform(s, name)});
        detail::reject_unused(s, "drive." + name);
    }

    const detail::Section sol("solver", child("solver"), use_env);
    SolverConfig& sc = cfg.solver;
    sc.depth = sol.integer("depth", sc.depth);
    sc.method = sol.text("method", sc.method);
    sc.tol = sol.number("tol", sc.tol);
    sc.scaling = sol.boolean("scaling", sc.scaling);
    sc.threads = sol.integer("threads", sc.threads);
    sc.dt = sol.number("dt", sc.dt);
    sc.adaptive = sol.boolean("adaptive", sc.adaptive);
    sc.t_end = sol.number("t_end", sc.t_end);
    sc.samples = sol.integer("samples", sc.samples);
    detail::reject_unused(sol, "solver");
    if (sc.method != "heom" && sc.method != "redfield" && sc.method != "both")
        throw Error("solver.method must be heom, redfield or both");
    if (sc.depth < 0) throw Error("solver.depth must be >= 0");
    if (!(sc.tol > 0.0)) throw Error("solver.tol must be positive");
    if (sc.samples < 1) throw Error("solver.samples must be >= 1");
    if (sc.threads < 1) throw Error("solver.threads must be >= 1");
    return cfg;
}

inline Config load_config(const std::string& path, bool use_env = true) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file '" + path + "'");
    return parse_config(in, use_env);
}

inline void write_config(std::ostream& os, const Config& cfg) {
    os << "[meta]\nformat = " << config_format << "\nversion = " << config_version << "\n\n[system]\nbuilder = "
       << cfg.builder << '\n';
    for (const auto& [k, v] : cfg.params)
        os << k << " = " << (k == "commuting" ? (v != 0.0 ? "true" : "false") : format_double(v)) << '\n';
    if (cfg.hamiltonian) os << "hamiltonian = " << format_matrix(*cfg.hamiltonian) << '\n';
    if (cfg.rho0) os << "rho0 = " << format_matrix(*cfg.rho0) << '\n';
    for (const auto& b : cfg.baths) {
        os << "\n[bath." << b.name << "]\nzeta = " << format_double(b.zeta) << "\ngamma = " << format_double(b.gamma)
           << "\nbeta = " << format_double(b.beta) << '\n';
        if (b.coupling) os << "coupling = " << format_matrix(*b.coupling) << '\n';
        os << "scheme = " << to_string(b.scheme) << "\nterms = " << b.terms << '\n';
    }
    for (const auto& d : cfg.drives) {
        const auto& w = d.waveform;
        os << "\n[drive." << d.name << "]\nop = " << format_matrix(d.op) << "\nwaveform = " << detail::waveform_name(w.kind)
           << "\namplitude = " << format_double(w.amplitude) << "\nfrequency = " << format_double(w.frequency)
           << "\nphase = " << format_double(w.phase) << '\n';
        if (!w.knots.empty()) {
            Matrix k(Eigen::Index(w.knots.size()), 2);
            for (std::size_t i = 0; i < w.knots.size(); ++i) k.row(Eigen::Index(i)) << w.knots[i].first, w.knots[i].second;
            os << "knots = " << format_matrix(k) << '\n';
        }
    }
    const auto& s = cfg.solver;
    os << "\n[solver]\ndepth = " << s.depth << "\nmethod = " << s.method << "\ntol = " << format_double(s.tol)
       << "\nscaling = " << (s.scaling ? "true" : "false") << "\nthreads = " << s.threads
       << "\ndt = " << format_double(s.dt) << "\nadaptive = " << (s.adaptive ? "true" : "false")
       << "\nt_end = " << format_double(s.t_end) << "\nsamples = " << s.samples << '\n';
}

// Fully explicit config describing `model` (builder = matrix).
inline Config config_from_model(const SystemModel& model, const SolverConfig& solver = {}) {
    Config cfg;
    cfg.builder = "matrix";
    cfg.hamiltonian = model.static_hamiltonian();
    for (const auto& b : model.baths())
        cfg.baths.push_back({b.name, b.density.zeta, b.density.gamma, b.beta, b.coupling, b.scheme, b.terms});
    for (const auto& d : model.drives()) cfg.drives.push_back({d.name, d.op, d.waveform});
    cfg.solver = solver;
    return cfg;
}

} // namespace heomqt
