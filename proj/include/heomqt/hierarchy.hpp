// hierarchy.hpp: ADO index space, ADO state and the HEOM generator
//
// The generator acts on the stacked vector of all ADOs (row-major d x d blocks,
// ADO i at offset i*d*d). For each multi-index n it evaluates
//
//   d/dt rho_n = -(i L(t) + sum_a n_a gamma_a) rho_n
//                - sum_k Delta_k [V_k, [V_k, rho_n]]
//                - sum_a Phi_k(a) rho_{n+e_a}
//                - sum_a n_a Theta_a rho_{n-e_a}
//
// with Phi_k X = i[V_k, X], Psi_k X = {V_k, X},
// Theta_a = Re(c_a) Phi_k - Im(c_a) Psi_k, and hbar = 1.
//
// With scaling on, the stored ADOs are rho_n / prod_a sqrt(n_a! |c_a|^n_a).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <ostream>
#include <span>
#include <sstream>
#include <thread>
#include <vector>

#include "heomqt/bath.hpp"
#include "heomqt/core.hpp"
#include "heomqt/models.hpp"
#include "heomqt/operators.hpp"

namespace heomqt {

struct HierarchyAxis {
    std::size_t bath;
    std::size_t term;
    double rate;  // gamma_{k,l}
    cd amplitude; // c_{k,l}
    double scale; // |c_{k,l}|, or 1 when the amplitude vanishes
};

struct SpaceOptions {
    // Estimated bytes for index tables plus `bytes_per_index` of payload.
    std::size_t memory_budget{std::size_t(4) << 30};
    std::size_t bytes_per_index{0};
};

// All multi-indices with total <= depth, in graded (by total) and, within a
// level, descending lexicographic order. Index 0 is the all-zero vector.
class HierarchySpace {
public:
    static constexpr std::int32_t truncated = -1;

    static HierarchySpace build(std::span<const BathDecomposition> baths, int depth, const SpaceOptions& opt = {}) {
        if (depth < 0) throw Error("hierarchy depth must be >= 0");
        std::vector<HierarchyAxis> axes;
        for (std::size_t k = 0; k < baths.size(); ++k)
            for (std::size_t l = 0; l < baths[k].terms.size(); ++l) {
                const auto& t = baths[k].terms[l];
                if (!(t.rate > 0.0)) throw Error("exponential term with non-positive decay rate");
                const double mag = std::abs(t.amplitude);
                axes.push_back({k, l, t.rate, t.amplitude, mag > 0.0 ? mag : 1.0});
            }
        return HierarchySpace(std::move(axes), baths.size(), depth, opt);
    }

    int depth() const { return depth_; }
    std::size_t size() const { return size_; }
    std::size_t num_axes() const { return axes_.size(); }
    std::size_t num_baths() const { return num_baths_; }
    const std::vector<HierarchyAxis>& axes() const { return axes_; }

    std::span<const std::uint16_t> counts(std::size_t i) const {
        return {counts_.data() + i * axes_.size(), axes_.size()};
    }
    int level(std::size_t i) const { return level_[i]; }
    double damping(std::size_t i) const { return damping_[i]; }

    std::int32_t up(std::size_t i, std::size_t axis) const { return up_[i * axes_.size() + axis]; }
    std::int32_t down(std::size_t i, std::size_t axis) const { return down_[i * axes_.size() + axis]; }

    // Index of the ADO with a single excitation on `axis`.
    std::size_t first_tier(std::size_t axis) const {
        if (depth_ < 1) throw Error("hierarchy of depth 0 has no first-tier ADOs");
        return 1 + axis;
    }

    // prod_a sqrt(n_a! |c_a|^n_a), the factor taking stored ADOs to physical ones
    double scale_factor(std::size_t i) const {
        double log_s = 0.0;
        auto n = counts(i);
        for (std::size_t a = 0; a < axes_.size(); ++a)
            if (n[a]) log_s += 0.5 * (std::lgamma(n[a] + 1.0) + n[a] * std::log(axes_[a].scale));
        return std::exp(log_s);
    }

    // Perfect-hash rank of an arbitrary count vector; size() if out of range.
    std::size_t rank(std::span<const int> n) const {
        if (n.size() != axes_.size()) throw Error("index has the wrong number of axes");
        int total = 0;
        for (int v : n) {
            if (v < 0) throw Error("index entries must be non-negative");
            total += v;
        }
        if (total > depth_) return size_;
        const std::size_t m = axes_.size();
        std::size_t r = total > 0 ? binom(total - 1 + m, m) : 0;
        int rem = total;
        for (std::size_t i = 0; i + 1 < m; ++i) {
            if (rem > n[i]) {
                const std::size_t tail = m - i - 1;
                r += binom(rem - n[i] - 1 + tail, tail);
            }
            rem -= n[i];
        }
        return r;
    }

    // number of ADOs per level 0..depth
    std::vector<std::size_t> census() const {
        std::vector<std::size_t> c(depth_ + 1, 0);
        for (std::size_t i = 0; i < size_; ++i) ++c[level_[i]];
        return c;
    }

    static double count_estimate(std::size_t axes, int depth) {
        // C(depth + axes, axes) in floating point to detect overflow
        double c = 1.0;
        for (std::size_t i = 1; i <= axes; ++i) c = c * double(depth + i) / double(i);
        return c;
    }

private:
    HierarchySpace(std::vector<HierarchyAxis> axes, std::size_t num_baths, int depth, const SpaceOptions& opt)
        : axes_(std::move(axes)), num_baths_(num_baths), depth_(depth) {
        const std::size_t m = axes_.size();
        const double estimate = count_estimate(m, depth);
        const double bytes = estimate * (double(m) * 10.0 + 12.0 + double(opt.bytes_per_index));
        if (estimate > double(std::numeric_limits<std::int32_t>::max()) || bytes > double(opt.memory_budget)) {
            std::ostringstream os;
            os << "hierarchy with " << m << " axes at depth " << depth << " needs " << estimate << " ADOs (~"
               << bytes / double(1 << 20) << " MiB), over the memory budget of "
               << double(opt.memory_budget) / double(1 << 20) << " MiB";
            throw Error(os.str());
        }
        build_binomials(std::size_t(depth) + m + 1);
        size_ = binom(std::size_t(depth) + m, m);
        counts_.reserve(size_ * m);
        level_.reserve(size_);
        std::vector<std::uint16_t> cur(m, 0);
        for (int s = 0; s <= depth; ++s) enumerate(cur, 0, s, s);
        if (level_.size() != size_) throw Error("hierarchy enumeration size mismatch");

        damping_.resize(size_);
        up_.assign(size_ * m, truncated);
        down_.assign(size_ * m, truncated);
        std::vector<int> tmp(m);
        for (std::size_t i = 0; i < size_; ++i) {
            auto n = counts(i);
            double damp = 0.0;
            for (std::size_t a = 0; a < m; ++a) {
                tmp[a] = n[a];
                damp += n[a] * axes_[a].rate;
            }
            damping_[i] = damp;
            for (std::size_t a = 0; a < m; ++a) {
                if (level_[i] < depth_) {
                    ++tmp[a];
                    up_[i * m + a] = std::int32_t(rank(tmp));
                    --tmp[a];
                }
                if (n[a] > 0) {
                    --tmp[a];
                    down_[i * m + a] = std::int32_t(rank(tmp));
                    ++tmp[a];
                }
            }
        }
    }

    void enumerate(std::vector<std::uint16_t>& cur, std::size_t pos, int rem, int level) {
        const std::size_t m = cur.size();
        if (m == 0) {
            if (rem == 0) level_.push_back(std::uint16_t(level));
            return;
        }
        if (pos + 1 == m) {
            cur[pos] = std::uint16_t(rem);
            counts_.insert(counts_.end(), cur.begin(), cur.end());
            level_.push_back(std::uint16_t(level));
            return;
        }
        for (int v = rem; v >= 0; --v) {
            cur[pos] = std::uint16_t(v);
            enumerate(cur, pos + 1, rem - v, level);
        }
        cur[pos] = 0;
    }

    void build_binomials(std::size_t n) {
        binom_n_ = n + 1;
        binom_.assign(binom_n_ * binom_n_, 0);
        for (std::size_t i = 0; i < binom_n_; ++i) {
            binom_[i * binom_n_] = 1;
            for (std::size_t j = 1; j <= i; ++j)
                binom_[i * binom_n_ + j] = binom_[(i - 1) * binom_n_ + j - 1] + (j < i ? binom_[(i - 1) * binom_n_ + j] : 0);
        }
    }

    std::size_t binom(std::size_t n, std::size_t k) const {
        if (k > n) return 0;
        return binom_[n * binom_n_ + k];
    }

    std::vector<HierarchyAxis> axes_;
    std::size_t num_baths_{0};
    int depth_{0};
    std::size_t size_{1};
    std::vector<std::uint16_t> counts_;
    std::vector<std::uint16_t> level_;
    std::vector<double> damping_;
    std::vector<std::int32_t> up_;
    std::vector<std::int32_t> down_;
    std::vector<std::size_t> binom_;
    std::size_t binom_n_{0};
};

inline void write_census_csv(std::ostream& os, const HierarchySpace& space) {
    os << "level,count\n";
    const auto c = space.census();
    for (std::size_t l = 0; l < c.size(); ++l) os << l << ',' << c[l] << '\n';
}

// Full set of ADO matrices stacked into one vector.
class AdoState {
public:
    AdoState() = default;
    AdoState(std::shared_ptr<const HierarchySpace> space, Eigen::Index dim, bool scaled)
        : space_(std::move(space)), dim_(dim), scaled_(scaled),
          data_(Vector::Zero(Eigen::Index(space_->size()) * dim * dim)) {}

    const HierarchySpace& space() const { return *space_; }
    const std::shared_ptr<const HierarchySpace>& space_ptr() const { return space_; }
    Eigen::Index dim() const { return dim_; }
    bool scaled() const { return scaled_; }
    std::size_t size() const { return space_->size(); }

    Vector& data() { return data_; }
    const Vector& data() const { return data_; }

    Eigen::Map<RowMajorMatrix> ado(std::size_t i) {
        return {data_.data() + Eigen::Index(i) * dim_ * dim_, dim_, dim_};
    }
    Eigen::Map<const RowMajorMatrix> ado(std::size_t i) const {
        return {data_.data() + Eigen::Index(i) * dim_ * dim_, dim_, dim_};
    }

    // unscaled ADO
    Matrix physical(std::size_t i) const {
        Matrix m = ado(i);
        if (scaled_) m *= space_->scale_factor(i);
        return m;
    }

    // reduced density operator
    Matrix rho() const { return physical(0); }

    bool all_finite() const { return data_.allFinite(); }

private:
    std::shared_ptr<const HierarchySpace> space_;
    Eigen::Index dim_{0};
    bool scaled_{true};
    Vector data_;
};

// Square operator given by its action, for the Krylov solvers.
class LinearOperator {
public:
    using Apply = std::function<void(const cd*, cd*)>;

    LinearOperator(std::size_t n, Apply f) : n_(n), f_(std::move(f)) {}

    std::size_t rows() const { return n_; }
    std::size_t cols() const { return n_; }
    void apply(const cd* x, cd* y) const { f_(x, y); }

    Vector operator*(const Vector& x) const {
        if (std::size_t(x.size()) != n_) throw Error("operator/vector dimension mismatch");
        Vector y(x.size());
        f_(x.data(), y.data());
        return y;
    }

    Matrix to_dense() const {
        Matrix m(n_, n_);
        Vector e = Vector::Zero(n_);
        for (std::size_t j = 0; j < n_; ++j) {
            e(j) = 1.0;
            m.col(j) = (*this) * e;
            e(j) = 0.0;
        }
        return m;
    }

private:
    std::size_t n_;
    Apply f_;
};

struct GeneratorOptions {
    bool scaling{true};
    unsigned threads{1};
};

class HeomGenerator {
public:
    HeomGenerator(SystemModel model, std::vector<BathDecomposition> baths, std::shared_ptr<const HierarchySpace> space,
                  GeneratorOptions opt = {})
        : model_(std::move(model)), baths_(std::move(baths)), space_(std::move(space)), opt_(opt) {
        if (baths_.size() != model_.baths().size())
            throw Error("number of bath decompositions does not match the system's baths");
        if (space_->num_baths() != baths_.size()) throw Error("hierarchy space was built for a different bath set");
        std::size_t axis = 0;
        for (std::size_t k = 0; k < baths_.size(); ++k) {
            BathData b;
            b.v = model_.baths()[k].coupling;
            b.v2 = b.v * b.v;
            b.delta = baths_[k].delta_correction;
            b.first_axis = axis;
            b.num_axes = baths_[k].terms.size();
            for (std::size_t l = 0; l < b.num_axes; ++l) {
                const auto& ax = space_->axes()[axis + l];
                if (ax.bath != k || ax.term != l) throw Error("hierarchy axes do not match the decompositions");
                b.has_imag = b.has_imag || ax.amplitude.imag() != 0.0;
            }
            axis += b.num_axes;
            data_.push_back(std::move(b));
        }
        if (axis != space_->num_axes()) throw Error("hierarchy axes do not match the decompositions");

        const std::size_t m = space_->num_axes();
        const int depth = space_->depth();
        up_factor_.assign(m * (depth + 1), 1.0);
        down_factor_.assign(m * (depth + 1), 0.0);
        for (std::size_t a = 0; a < m; ++a) {
            const double s = space_->axes()[a].scale;
            for (int n = 0; n <= depth; ++n) {
                up_factor_[a * (depth + 1) + n] = opt_.scaling ? std::sqrt((n + 1.0) * s) : 1.0;
                down_factor_[a * (depth + 1) + n] = opt_.scaling ? std::sqrt(n / s) : double(n);
            }
        }
    }

    // Decompose the model's baths and enumerate the space in one go.
    static HeomGenerator build(const SystemModel& model, int depth, GeneratorOptions opt = {},
                               const DecompositionOptions& dopt = {}, SpaceOptions sopt = {}) {
        auto baths = model.decompositions(dopt);
        if (sopt.bytes_per_index == 0) sopt.bytes_per_index = std::size_t(model.dim() * model.dim()) * 16 * 12;
        auto space = std::make_shared<const HierarchySpace>(HierarchySpace::build(baths, depth, sopt));
        return HeomGenerator(model, std::move(baths), std::move(space), opt);
    }

    const SystemModel& model() const { return model_; }
    const std::vector<BathDecomposition>& decompositions() const { return baths_; }
    const HierarchySpace& space() const { return *space_; }
    const std::shared_ptr<const HierarchySpace>& space_ptr() const { return space_; }
    const GeneratorOptions& options() const { return opt_; }
    Eigen::Index dim() const { return model_.dim(); }
    std::size_t dimension() const { return space_->size() * std::size_t(dim() * dim()); }

    // Factorized initial condition: rho_0 = rho, all other ADOs zero.
    AdoState make_state(const Matrix& rho) const {
        if (rho.rows() != dim() || rho.cols() != dim()) throw Error("density matrix has the wrong dimension");
        AdoState s(space_, dim(), opt_.scaling);
        s.ado(0) = rho;
        return s;
    }

    // y = L(t) x on raw stacked vectors
    void apply(double t, const cd* x, cd* y) const {
        const Matrix h = model_.hamiltonian(t);
        const std::size_t n = space_->size();
        const unsigned threads = std::max(1u, opt_.threads);
        if (threads == 1 || n < 64) {
            dispatch(h, x, y, 0, n);
            return;
        }
        std::vector<std::thread> pool;
        const std::size_t chunk = (n + threads - 1) / threads;
        for (unsigned w = 0; w < threads; ++w) {
            const std::size_t b = w * chunk, e = std::min(n, b + chunk);
            if (b >= e) break;
            pool.emplace_back([&, b, e] { dispatch(h, x, y, b, e); });
        }
        for (auto& th : pool) th.join();
    }

    AdoState rhs(const AdoState& state, double t) const {
        check_state(state);
        AdoState out(space_, dim(), state.scaled());
        apply(t, state.data().data(), out.data().data());
        return out;
    }

    // d^2 x d^2 superoperator block acting on ADO i itself
    Matrix diagonal_block(std::size_t i, double t) const {
        const Eigen::Index d2 = dim() * dim();
        Matrix blk = -I * ops::commutator_super(model_.hamiltonian(t));
        for (const auto& b : data_)
            if (b.delta != 0.0) {
                const Matrix c = ops::commutator_super(b.v);
                blk -= b.delta * c * c;
            }
        blk -= space_->damping(i) * Matrix::Identity(d2, d2);
        return blk;
    }

    void check_state(const AdoState& state) const {
        if (state.space_ptr() != space_ && state.size() != space_->size())
            throw Error("ADO state belongs to a different hierarchy");
        if (state.dim() != dim()) throw Error("ADO state has the wrong system dimension");
        if (state.scaled() != opt_.scaling) throw Error("ADO state scaling flag does not match the generator");
    }

private:
    struct BathData {
        Matrix v, v2;
        double delta{0.0};
        std::size_t first_axis{0};
        std::size_t num_axes{0};
        bool has_imag{false};
    };

    void dispatch(const Matrix& h, const cd* x, cd* y, std::size_t b, std::size_t e) const {
        switch (dim()) {
        case 2: apply_range<2>(h, x, y, b, e); break;
        case 3: apply_range<3>(h, x, y, b, e); break;
        default: apply_range<Eigen::Dynamic>(h, x, y, b, e); break;
        }
    }

    template <int D>
    void apply_range(const Matrix& hdyn, const cd* x, cd* y, std::size_t begin, std::size_t end) const {
        using Mat = Eigen::Matrix<cd, D, D, Eigen::RowMajor>;
        using CMap = Eigen::Map<const Mat>;
        using MMap = Eigen::Map<Mat>;
        const Eigen::Index d = dim();
        const Eigen::Index d2 = d * d;
        const Mat h = hdyn;
        std::vector<Mat> v, v2;
        for (const auto& b : data_) {
            v.emplace_back(b.v);
            v2.emplace_back(b.v2);
        }
        const std::size_t m = space_->num_axes();
        const int stride = space_->depth() + 1;
        Mat acc_u(d, d), acc_w(d, d), out(d, d);

        for (std::size_t i = begin; i < end; ++i) {
            CMap xi(x + i * d2, d, d);
            out.noalias() = -I * (h * xi - xi * h);
            out -= space_->damping(i) * xi;
            const auto n = space_->counts(i);
            for (std::size_t k = 0; k < data_.size(); ++k) {
                const auto& bd = data_[k];
                if (bd.delta != 0.0) {
                    out -= bd.delta * (v2[k] * xi + xi * v2[k] - 2.0 * v[k] * xi * v[k]);
                }
                if (bd.num_axes == 0) continue;
                acc_u.setZero();
                acc_w.setZero();
                bool any_u = false, any_w = false;
                for (std::size_t l = 0; l < bd.num_axes; ++l) {
                    const std::size_t a = bd.first_axis + l;
                    const int na = m ? n[a] : 0;
                    const std::int32_t up = space_->up(i, a);
                    if (up != HierarchySpace::truncated) {
                        acc_u += up_factor_[a * stride + na] * CMap(x + std::size_t(up) * d2, d, d);
                        any_u = true;
                    }
                    if (na > 0) {
                        const std::int32_t dn = space_->down(i, a);
                        const double f = down_factor_[a * stride + na];
                        const cd c = space_->axes()[a].amplitude;
                        CMap xd(x + std::size_t(dn) * d2, d, d);
                        acc_u += (f * c.real()) * xd;
                        any_u = true;
                        if (c.imag() != 0.0) {
                            acc_w += (f * c.imag()) * xd;
                            any_w = true;
                        }
                    }
                }
                if (any_u) out -= I * (v[k] * acc_u - acc_u * v[k]);
                if (any_w) out += v[k] * acc_w + acc_w * v[k];
            }
            MMap(y + i * d2, d, d) = out;
        }
    }

    SystemModel model_;
    std::vector<BathDecomposition> baths_;
    std::shared_ptr<const HierarchySpace> space_;
    GeneratorOptions opt_;
    std::vector<BathData> data_;
    std::vector<double> up_factor_;
    std::vector<double> down_factor_;
};

inline AdoState apply_heom_rhs(const HeomGenerator& gen, const AdoState& state, double t) {
    return gen.rhs(state, t);
}

// Time-independent generator as a plain linear operator of size |indices| d^2.
inline LinearOperator assemble_operator(const HeomGenerator& gen) {
    if (gen.model().time_dependent())
        throw Error("assemble_operator needs a time-independent system Hamiltonian");
    return LinearOperator(gen.dimension(), [&gen](const cd* x, cd* y) { gen.apply(0.0, x, y); });
}

} // namespace heomqt
