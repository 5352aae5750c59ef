#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "../core.hpp"

#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#include <lapacke.h>

// Lowest eigenpairs of a sparse Hermitian matrix.
// Small problems go through LAPACK zheevr (index subset). Larger ones use a
// restarted block Krylov method on (H - sigma)^{-1}, sigma a Gershgorin lower
// bound, with full reorthogonalization and Rayleigh-Ritz on H itself.

namespace bergkern::detail {

struct SolverOptions {
    long dense_max_dim = 1024;
    double rel_tol = 1e-9;  // residual relative to the Gershgorin bound on |H|
    int max_restarts = 200;
    int guard = 4;
    int krylov_depth = 5;  // blocks per restart
    std::uint64_t seed = 20240601;
};

struct EigenResult {
    Vec values;
    CMat vectors;  // Euclidean-orthonormal columns
    int iterations = 0;
    double max_residual = 0.0;
    double norm_bound = 0.0;
    bool dense = false;
};

inline double gershgorin_upper_abs(const SpCMat& H) {
    Vec rows = Vec::Zero(H.rows());
    for (long k = 0; k < H.outerSize(); ++k)
        for (SpCMat::InnerIterator it(H, k); it; ++it) rows(it.row()) += std::abs(it.value());
    return rows.maxCoeff();
}

inline double gershgorin_lower(const SpCMat& H) {
    Vec diag = Vec::Zero(H.rows());
    Vec off = Vec::Zero(H.rows());
    for (long k = 0; k < H.outerSize(); ++k)
        for (SpCMat::InnerIterator it(H, k); it; ++it) {
            if (it.row() == it.col()) diag(it.row()) += it.value().real();
            else off(it.row()) += std::abs(it.value());
        }
    return (diag - off).minCoeff();
}

inline Vec residual_norms(const SpCMat& H, const CMat& X, const Vec& w, long count) {
    CMat R = H * X.leftCols(count) - X.leftCols(count) * w.head(count).asDiagonal();
    return R.colwise().norm().transpose();
}

inline EigenResult dense_lowest(const SpCMat& H, long count) {
    const lapack_int n = static_cast<lapack_int>(H.rows());
    CMat A = CMat(H);
    std::vector<double> w(n);
    CMat Z(n, count);
    std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(count));
    lapack_int found = 0;
    lapack_int info = LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, A.data(), n, 0.0, 0.0, 1,
                                     static_cast<lapack_int>(count), 0.0, &found, w.data(), Z.data(), n,
                                     isuppz.data());
    if (info != 0 || found != count)
        throw convergence_error("dense eigensolver failed (info " + std::to_string(info) + ")");
    EigenResult out;
    out.values = Eigen::Map<Vec>(w.data(), count);
    out.vectors = Z;
    out.dense = true;
    out.norm_bound = gershgorin_upper_abs(H);
    out.max_residual = residual_norms(H, out.vectors, out.values, count).maxCoeff();
    return out;
}

// Orthonormal basis of a block: Cholesky QR, with Householder as fallback for
// nearly dependent columns.
inline CMat orthonormal_columns(const CMat& B) {
    CMat G = B.adjoint() * B;
    Eigen::LLT<CMat> llt(0.5 * (G + G.adjoint()));
    if (llt.info() == Eigen::Success) {
        const Vec d = llt.matrixL().toDenseMatrix().diagonal().real();
        if (d.minCoeff() > 1e-8 * d.maxCoeff())
            return llt.matrixU().solve<Eigen::OnTheRight>(B);
    }
    Eigen::HouseholderQR<CMat> qr(B);
    return qr.householderQ() * CMat::Identity(B.rows(), B.cols());
}

// Orthonormalize B against Q and within itself (everything done twice).
inline CMat orthonormalize_block(const CMat& Q, CMat B) {
    for (int pass = 0; pass < 2; ++pass) {
        if (Q.cols() > 0) B -= Q * (Q.adjoint() * B);
        B = orthonormal_columns(B);
    }
    return B;
}

inline EigenResult krylov_lowest(const SpCMat& H, long count, const SolverOptions& opt) {
    const long n = H.rows();
    const long b = std::min(n, count + opt.guard);
    const double sigma = gershgorin_lower(H) - 1.0;
    SpCMat shifted = H;
    for (long i = 0; i < n; ++i) shifted.coeffRef(i, i) -= sigma;
    shifted.makeCompressed();
    Eigen::SimplicialLLT<SpCMat, Eigen::Lower, Eigen::AMDOrdering<long>> llt(shifted);
    if (llt.info() != Eigen::Success) throw convergence_error("shift-invert factorization failed");

    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    CMat X(n, b);
    for (long j = 0; j < b; ++j)
        for (long i = 0; i < n; ++i) X(i, j) = cplx(nd(rng), nd(rng));
    X = orthonormalize_block(CMat(n, 0), X);

    EigenResult out;
    out.norm_bound = gershgorin_upper_abs(H);
    const double tol = opt.rel_tol * out.norm_bound;
    for (int it = 1; it <= opt.max_restarts; ++it) {
        const long depth = std::max(1, opt.krylov_depth);
        CMat Q(n, b * depth);
        Q.leftCols(b) = X;
        long filled = b;
        CMat last = X;
        for (long k = 1; k < depth; ++k) {
            CMat Y = llt.solve(last);
            last = orthonormalize_block(Q.leftCols(filled), Y);
            Q.middleCols(filled, b) = last;
            filled += b;
        }
        CMat HQ = H * Q;
        CMat T = Q.adjoint() * HQ;
        T = 0.5 * (T + T.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<CMat> es(T);
        X = Q * es.eigenvectors().leftCols(b);
        Vec w = es.eigenvalues().head(b);
        Vec res = residual_norms(H, X, w, count);
        out.iterations = it;
        out.max_residual = res.maxCoeff();
        if (out.max_residual <= tol) {
            out.values = w.head(count);
            out.vectors = X.leftCols(count);
            return out;
        }
    }
    throw convergence_error("block Krylov eigensolver did not converge: residual " +
                            std::to_string(out.max_residual) + " > " + std::to_string(tol));
}

inline EigenResult lowest_eigenpairs(const SpCMat& H, long count, const SolverOptions& opt = {}) {
    if (count <= 0 || count > H.rows()) throw invalid_input("eigensolver: count must be in [1, dim]");
    if (H.rows() <= opt.dense_max_dim) return dense_lowest(H, count);
    return krylov_lowest(H, count, opt);
}

} // namespace bergkern::detail
