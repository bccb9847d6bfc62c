// operators.hpp: small operator-algebra toolkit for d x d system operators
//
// Superoperators act on row-major vectorised matrices: vec(X)[i*d + j] = X(i, j).

#pragma once

#include <cmath>
#include <cstddef>

#include "heomqt/core.hpp"

namespace heomqt::ops {

inline Matrix sigma_x() {
    Matrix m(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}

inline Matrix sigma_y() {
    Matrix m(2, 2);
    m << 0.0, -I, I, 0.0;
    return m;
}

inline Matrix sigma_z() {
    Matrix m(2, 2);
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}

// |i><j| in dimension d
inline Matrix ket_bra(Eigen::Index d, Eigen::Index i, Eigen::Index j) {
    Matrix m = Matrix::Zero(d, d);
    m(i, j) = 1.0;
    return m;
}

inline Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }
inline Matrix anticommutator(const Matrix& a, const Matrix& b) { return a * b + b * a; }

inline bool is_hermitian(const Matrix& a, double tol = 1e-12) {
    if (a.rows() != a.cols()) return false;
    return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

inline bool is_finite(const Matrix& a) { return a.allFinite(); }

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// X -> A X
inline Matrix left_super(const Matrix& a) {
    return kron(a, Matrix::Identity(a.rows(), a.cols()));
}

// X -> X B
inline Matrix right_super(const Matrix& b) {
    return kron(Matrix::Identity(b.rows(), b.cols()), b.transpose());
}

// X -> [A, X]
inline Matrix commutator_super(const Matrix& a) { return left_super(a) - right_super(a); }

// X -> {A, X}
inline Matrix anticommutator_super(const Matrix& a) { return left_super(a) + right_super(a); }

inline Vector vec(const Matrix& x) {
    RowMajorMatrix r = x;
    return Eigen::Map<const Vector>(r.data(), r.size());
}

inline Matrix unvec(const Vector& v, Eigen::Index d) {
    return Eigen::Map<const RowMajorMatrix>(v.data(), d, d);
}

// exp(-beta H) / Z
inline Matrix gibbs_state(const Matrix& h, double beta) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    const Eigen::VectorXd& e = es.eigenvalues();
    const double e0 = e.minCoeff();
    Eigen::VectorXd w = (-(beta) * (e.array() - e0)).exp();
    w /= w.sum();
    return es.eigenvectors() * w.cast<cd>().asDiagonal() * es.eigenvectors().adjoint();
}

inline double spectral_radius_hermitian(const Matrix& h) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

} // namespace heomqt::ops
