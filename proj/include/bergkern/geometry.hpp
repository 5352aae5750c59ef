#pragma once

#include <functional>
#include <vector>

#include <Eigen/Eigenvalues>

#include "core.hpp"

// Pointwise linear algebra of (g, omega): J0, J, tau, mu0, Jcal = -2 pi i J0,
// (Jcal^2)^{1/2} and det over T^(1,0).
//
// Convention: an antisymmetric matrix M stands for the 2-form (u,v) -> v^T M u,
// so omega(u,v) = g(J0 u, v) reads g J0 = Omega.

namespace bergkern {

inline constexpr double eig_floor = 1e-14;

struct MetricPair {
    Mat g;
    Mat omega;

    int dim() const { return static_cast<int>(g.rows()); }

    static MetricPair standard(int n = 1, double metric_scale = 1.0) {
        MetricPair mp;
        mp.g = metric_scale * Mat::Identity(2 * n, 2 * n);
        mp.omega = Mat::Zero(2 * n, 2 * n);
        for (int b = 0; b < n; ++b) {
            mp.omega(2 * b, 2 * b + 1) = 1.0;
            mp.omega(2 * b + 1, 2 * b) = -1.0;
        }
        return mp;
    }

    void validate() const {
        const auto d = g.rows();
        if (d == 0 || d % 2 != 0 || g.cols() != d || omega.rows() != d || omega.cols() != d)
            throw invalid_input("metric pair: matrices must be square of even dimension");
        const double scale = std::max(1.0, max_abs(g));
        if (max_abs(Mat(g - g.transpose())) > 1e-12 * scale)
            throw invalid_input("metric pair: g is not symmetric");
        Eigen::SelfAdjointEigenSolver<Mat> es(g);
        if (es.eigenvalues().minCoeff() <= eig_floor)
            throw invalid_input("metric pair: g is not positive definite");
        const double oscale = std::max(1.0, max_abs(omega));
        if (max_abs(Mat(omega + omega.transpose())) > 1e-12 * oscale)
            throw invalid_input("metric pair: omega is not antisymmetric");
        if (std::abs(omega.determinant()) <= eig_floor)
            throw invalid_input("metric pair: omega is degenerate");
    }
};

namespace detail {

// f(A) for symmetric A via eigendecomposition; eigenvalues must exceed the floor.
inline Mat sym_fun(const Mat& a, const std::function<double(double)>& f, const char* what) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (a + a.transpose()));
    if (es.info() != Eigen::Success)
        throw invalid_input(std::string(what) + ": eigendecomposition failed");
    Vec ev = es.eigenvalues();
    if (ev.minCoeff() <= eig_floor)
        throw invalid_input(std::string(what) + ": matrix is not positive definite");
    for (int i = 0; i < ev.size(); ++i) ev(i) = f(ev(i));
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

inline Mat sym_sqrt(const Mat& a) { return sym_fun(a, [](double x) { return std::sqrt(x); }, "sqrt"); }
inline Mat sym_inv_sqrt(const Mat& a) {
    return sym_fun(a, [](double x) { return 1.0 / std::sqrt(x); }, "inverse sqrt");
}

// -J0^2 is g-self-adjoint; conjugating by g^{1/2} makes it symmetric.
inline Mat minus_j0_sq_symmetric(const Mat& J0, const Mat& g) {
    Mat gh = sym_sqrt(g);
    Mat ghi = sym_inv_sqrt(g);
    Mat m = gh * (-J0 * J0) * ghi;
    return 0.5 * (m + m.transpose());
}

} // namespace detail

inline Mat compute_J0(const MetricPair& mp) {
    mp.validate();
    Mat J0 = mp.g.ldlt().solve(mp.omega);
    Mat skew = mp.g * J0 + (mp.g * J0).transpose();
    if (max_abs(skew) > 1e-10 * std::max(1.0, max_abs(mp.omega)))
        throw invalid_input("compute_J0: result is not g-skew-adjoint");
    return J0;
}

inline Mat compute_J(const Mat& J0, const Mat& g) {
    Mat ms = detail::minus_j0_sq_symmetric(J0, g);
    Mat inv_sqrt = detail::sym_fun(ms, [](double x) { return 1.0 / std::sqrt(x); }, "compute_J");
    return J0 * detail::sym_inv_sqrt(g) * inv_sqrt * detail::sym_sqrt(g);
}

inline Mat compute_J(const Mat& J0) { return compute_J(J0, Mat::Identity(J0.rows(), J0.cols())); }

inline double compute_tau(const Mat& J0, const Mat& J) {
    if (J0.rows() != J.rows() || J0.cols() != J.cols()) throw invalid_input("compute_tau: shape mismatch");
    return -pi * (J0 * J).trace();
}

struct DetCResult {
    cplx detC;
    Mat sqrtJcal2;
};

inline DetCResult compute_detC_and_sqrt(const Mat& J0, const Mat& g) {
    const int d = static_cast<int>(J0.rows());
    Mat ms = detail::minus_j0_sq_symmetric(J0, g);
    Mat root = detail::sym_fun(ms, [](double x) { return std::sqrt(x); }, "compute_detC_and_sqrt");
    DetCResult out;
    out.sqrtJcal2 = two_pi * detail::sym_inv_sqrt(g) * root * detail::sym_sqrt(g);

    Mat J = compute_J(J0, g);
    Eigen::EigenSolver<Mat> es(J);
    CMat V(d, d / 2);
    int k = 0;
    for (int i = 0; i < d; ++i) {
        if (es.eigenvalues()(i).imag() > 0.5) {
            if (k == d / 2) throw invalid_input("compute_detC_and_sqrt: J has too many +i eigenvalues");
            V.col(k++) = es.eigenvectors().col(i);
        }
    }
    if (k != d / 2) throw invalid_input("compute_detC_and_sqrt: T^(1,0) has wrong dimension");
    CMat Jcal = -two_pi * I_unit * J0.cast<cplx>();
    CMat restricted = (V.adjoint() * V).ldlt().solve(V.adjoint() * Jcal * V);
    out.detC = restricted.determinant();
    return out;
}

inline DetCResult compute_detC_and_sqrt(const Mat& J0) {
    return compute_detC_and_sqrt(J0, Mat::Identity(J0.rows(), J0.cols()));
}

struct PointGeometry {
    Mat g;
    Mat J0;
    Mat J;
    double tau = 0.0;
    double mu0 = 0.0;
    CMat Jcal;
    Mat sqrtJcal2;
    cplx detC;

    int n() const { return static_cast<int>(g.rows()) / 2; }
};

// Minimum of iR(u, J u) / |u|_g^2 at one point: smallest generalized eigenvalue.
inline double curvature_quotient_min(const Mat& iR, const MetricPair& mp) {
    Mat J = compute_J(compute_J0(mp), mp.g);
    Mat a = J.transpose() * iR;
    a = 0.5 * (a + a.transpose());
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(a, mp.g);
    return es.eigenvalues().minCoeff();
}

using CurvatureField = std::function<Mat(const Vec&)>;
using MetricField = std::function<MetricPair(const Vec&)>;

inline double compute_mu0(const CurvatureField& iR, const MetricField& geometry, const std::vector<Vec>& samples) {
    if (samples.empty()) throw invalid_input("compute_mu0: no sample points");
    double m = std::numeric_limits<double>::infinity();
    for (const auto& x : samples) m = std::min(m, curvature_quotient_min(iR(x), geometry(x)));
    if (!(m > 0.0)) throw invalid_input("compute_mu0: curvature is not positive (infimum " + std::to_string(m) + ")");
    return m;
}

inline double compute_mu0(const Mat& iR, const MetricPair& mp) {
    return compute_mu0([&](const Vec&) { return iR; }, [&](const Vec&) { return mp; }, {Vec::Zero(mp.dim())});
}

// Prequantized structure: iR^L = 2 pi omega.
inline PointGeometry make_point_geometry(const MetricPair& mp) {
    PointGeometry pg;
    pg.g = mp.g;
    pg.J0 = compute_J0(mp);
    pg.J = compute_J(pg.J0, mp.g);
    pg.tau = compute_tau(pg.J0, pg.J);
    pg.mu0 = compute_mu0(two_pi * mp.omega, mp);
    pg.Jcal = -two_pi * I_unit * pg.J0.cast<cplx>();
    auto dc = compute_detC_and_sqrt(pg.J0, mp.g);
    pg.detC = dc.detC;
    pg.sqrtJcal2 = dc.sqrtJcal2;
    return pg;
}

} // namespace bergkern
