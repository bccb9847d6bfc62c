// models.hpp: system + bath descriptions and the two benchmark builders

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "heomqt/bath.hpp"
#include "heomqt/core.hpp"
#include "heomqt/operators.hpp"

namespace heomqt {

struct BathSpec {
    std::string name;
    DrudeSpectralDensity density{};
    double beta{1.0};
    Matrix coupling; // V_k, Hermitian d x d
    DecompositionScheme scheme{DecompositionScheme::pade};
    int terms{2}; // exponential terms beyond the Drude pole; -1 disables the bath

    BathDecomposition decomposition(const DecompositionOptions& opt = {}) const {
        return decompose(density, beta, scheme, terms, opt);
    }
};

enum class WaveformKind { constant, sinusoid, piecewise_linear };

// f(t) multiplying a drive operator. Sinusoid: amplitude * sin(frequency t + phase).
struct Waveform {
    WaveformKind kind{WaveformKind::constant};
    double amplitude{0.0};
    double frequency{0.0};
    double phase{0.0};
    std::vector<std::pair<double, double>> knots; // (t, f) sorted by t, piecewise_linear only

    double value(double t) const {
        switch (kind) {
        case WaveformKind::constant: return amplitude;
        case WaveformKind::sinusoid: return amplitude * std::sin(frequency * t + phase);
        case WaveformKind::piecewise_linear: return interpolate(t).first;
        }
        return 0.0;
    }

    double derivative(double t) const {
        switch (kind) {
        case WaveformKind::constant: return 0.0;
        case WaveformKind::sinusoid: return amplitude * frequency * std::cos(frequency * t + phase);
        case WaveformKind::piecewise_linear: return interpolate(t).second;
        }
        return 0.0;
    }

private:
    // (value, slope); constant extrapolation outside the knots
    std::pair<double, double> interpolate(double t) const {
        if (knots.empty()) return {0.0, 0.0};
        if (t <= knots.front().first) return {knots.front().second, 0.0};
        if (t >= knots.back().first) return {knots.back().second, 0.0};
        auto hi = std::upper_bound(knots.begin(), knots.end(), t,
                                   [](double x, const auto& k) { return x < k.first; });
        auto lo = hi - 1;
        const double slope = (hi->second - lo->second) / (hi->first - lo->first);
        return {lo->second + slope * (t - lo->first), slope};
    }
};

struct Drive {
    std::string name;
    Matrix op; // Hermitian
    Waveform waveform{};
};

// H_s(t) = H_0 + sum_i f_i(t) O_i, coupled to baths through V_k.
class SystemModel {
public:
    SystemModel() = default;

    SystemModel(Matrix hamiltonian, std::vector<BathSpec> baths, std::vector<Drive> drives = {})
        : h0_(std::move(hamiltonian)), baths_(std::move(baths)), drives_(std::move(drives)) {
        validate();
    }

    Eigen::Index dim() const { return h0_.rows(); }
    const Matrix& static_hamiltonian() const { return h0_; }
    const std::vector<BathSpec>& baths() const { return baths_; }
    const std::vector<Drive>& drives() const { return drives_; }
    bool time_dependent() const { return !drives_.empty(); }

    Matrix hamiltonian(double t) const {
        Matrix h = h0_;
        for (const auto& d : drives_) h += d.waveform.value(t) * d.op;
        return h;
    }

    // dH_s/dt
    Matrix hamiltonian_rate(double t) const {
        Matrix h = Matrix::Zero(dim(), dim());
        for (const auto& d : drives_) h += d.waveform.derivative(t) * d.op;
        return h;
    }

    std::size_t bath_index(const std::string& name) const {
        for (std::size_t k = 0; k < baths_.size(); ++k)
            if (baths_[k].name == name) return k;
        throw Error("no bath named '" + name + "'");
    }

    std::vector<BathDecomposition> decompositions(const DecompositionOptions& opt = {}) const {
        std::vector<BathDecomposition> out;
        out.reserve(baths_.size());
        for (const auto& b : baths_) out.push_back(b.decomposition(opt));
        return out;
    }

private:
    void validate() const {
        constexpr double tol = 1e-12;
        if (h0_.rows() == 0 || h0_.rows() != h0_.cols()) throw Error("system Hamiltonian must be square and non-empty");
        if (!ops::is_hermitian(h0_, tol)) throw Error("system Hamiltonian is not Hermitian");
        std::set<std::string> names;
        for (const auto& b : baths_) {
            if (b.name.empty()) throw Error("bath name must not be empty");
            if (!names.insert(b.name).second) throw Error("bath '" + b.name + "' declared twice");
            if (b.coupling.rows() != h0_.rows() || b.coupling.cols() != h0_.cols())
                throw Error("coupling operator of bath '" + b.name + "' has the wrong dimension");
            if (!ops::is_hermitian(b.coupling, tol)) throw Error("coupling operator of bath '" + b.name + "' is not Hermitian");
            b.density.validate();
            if (!(b.beta > 0.0)) throw Error("bath '" + b.name + "' needs beta > 0");
            if (b.terms < -1) throw Error("bath '" + b.name + "' term count must be >= -1");
        }
        for (const auto& d : drives_) {
            if (d.op.rows() != h0_.rows() || d.op.cols() != h0_.cols())
                throw Error("drive '" + d.name + "' operator has the wrong dimension");
            if (!ops::is_hermitian(d.op, tol)) throw Error("drive '" + d.name + "' operator is not Hermitian");
            if (d.waveform.kind == WaveformKind::piecewise_linear) {
                const auto& k = d.waveform.knots;
                for (std::size_t i = 1; i < k.size(); ++i)
                    if (!(k[i].first > k[i - 1].first)) throw Error("drive '" + d.name + "' knots must increase in t");
            }
        }
    }

    Matrix h0_;
    std::vector<BathSpec> baths_;
    std::vector<Drive> drives_;
};

struct TwoLevelParams {
    double zeta_h{0.1};
    double zeta_c{0.1};
    double beta_h{0.5};
    double beta_c{1.0};
    double gamma{2.0};
    double omega0{1.0};
    bool commuting{false}; // V_c = sigma_x instead of (sigma_x + sigma_z)/sqrt 2
    DecompositionScheme scheme{DecompositionScheme::pade};
    int terms{2};
};

// H_s = (omega0/2) sigma_z, V_h = sigma_x, V_c = (sigma_x + sigma_z)/sqrt 2
inline SystemModel two_level_model(const TwoLevelParams& p) {
    const Matrix vh = ops::sigma_x();
    const Matrix vc = p.commuting ? ops::sigma_x() : Matrix((ops::sigma_x() + ops::sigma_z()) / std::numbers::sqrt2);
    std::vector<BathSpec> baths{
        {"h", {p.zeta_h, p.gamma}, p.beta_h, vh, p.scheme, p.terms},
        {"c", {p.zeta_c, p.gamma}, p.beta_c, vc, p.scheme, p.terms},
    };
    return SystemModel(0.5 * p.omega0 * ops::sigma_z(), std::move(baths));
}

struct ThreeLevelParams {
    double omega_h{1.0};
    double omega_c{0.5};
    double zeta_h{0.001};
    double zeta_c{0.001};
    double zeta_w{0.001};
    double gamma{10.0};
    double beta_h{0.1};
    double beta_c{1.0};
    double beta_w{0.1};
    DecompositionScheme scheme{DecompositionScheme::pade};
    int terms{3};
};

// Basis order |0>, |h>, |c> with omega_0 = 0.
inline SystemModel three_level_engine(const ThreeLevelParams& p) {
    if (!(p.omega_h > p.omega_c && p.omega_c > 0.0))
        throw Error("three-level engine needs omega_h > omega_c > omega_0 = 0");
    Matrix h = Matrix::Zero(3, 3);
    h(1, 1) = p.omega_h;
    h(2, 2) = p.omega_c;
    auto pair = [](int a, int b) { return Matrix(ops::ket_bra(3, a, b) + ops::ket_bra(3, b, a)); };
    std::vector<BathSpec> baths{
        {"h", {p.zeta_h, p.gamma}, p.beta_h, pair(0, 1), p.scheme, p.terms},
        {"c", {p.zeta_c, p.gamma}, p.beta_c, pair(0, 2), p.scheme, p.terms},
        {"w", {p.zeta_w, p.gamma}, p.beta_w, pair(1, 2), p.scheme, p.terms},
    };
    return SystemModel(std::move(h), std::move(baths));
}

} // namespace heomqt
