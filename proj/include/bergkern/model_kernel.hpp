#pragma once

#include <cmath>
#include <functional>

#include "core.hpp"
#include "geometry.hpp"
#include "torus_model.hpp"

// Model Bergman kernel
//   P(Z, Z') = detC / (2 pi)^n exp(-1/4 <S (Z - Z'), Z - Z'> + 1/2 <Jcal Z, Z'>),
// S = (Jcal^2)^{1/2}, with the real-bilinear Euclidean pairing in an
// orthonormal frame of g, and the model operator
//   L0 = -sum_j (d_j - i A_j)^2 - tau0,   A = pi J0 Z.

namespace bergkern {

struct ModelKernel {
    int n = 1;
    CMat Jcal;
    Mat sqrtJcal2;
    cplx detC{two_pi, 0.0};
    double tau0 = two_pi;

    Mat J0() const { return (Jcal * (I_unit / two_pi)).real(); }
    cplx prefactor() const { return detC / std::pow(two_pi, n); }

    static ModelKernel from_geometry(const PointGeometry& pg) {
        // move to the orthonormal frame e = g^{-1/2}
        Mat gh = detail::sym_sqrt(pg.g);
        Mat ghi = detail::sym_inv_sqrt(pg.g);
        ModelKernel mk;
        mk.n = pg.n();
        Mat J0 = gh * pg.J0 * ghi;
        Mat S = gh * pg.sqrtJcal2 * ghi;
        mk.Jcal = -two_pi * I_unit * J0.cast<cplx>();
        mk.sqrtJcal2 = 0.5 * (S + S.transpose());
        mk.detC = pg.detC;
        mk.tau0 = pg.tau;
        return mk;
    }

    static ModelKernel standard(int n = 1) { return from_geometry(make_point_geometry(MetricPair::standard(n))); }
};

inline cplx eval_P(const ModelKernel& mk, const Vec& Z, const Vec& Zp) {
    const Vec d = Z - Zp;
    const double quad = -0.25 * d.dot(mk.sqrtJcal2 * d);
    const cplx bil = 0.5 * (mk.Jcal * Z.cast<cplx>()).cwiseProduct(Zp.cast<cplx>()).sum();
    return mk.prefactor() * std::exp(cplx(quad) + bil);
}

struct QuadratureReport {
    double residual = 0.0;
    cplx integral;
    double tail_bound = 0.0;
    bool tail_warning = false;
};

// Bound on the part of int |P(Z,W) P(W,Z')| dW outside [-R,R]^{2n}.
inline double reproducing_tail_bound(const ModelKernel& mk, const Vec& Z, const Vec& Zp, double R) {
    Eigen::SelfAdjointEigenSolver<Mat> es(mk.sqrtJcal2);
    const double s = es.eigenvalues().minCoeff();
    const double c2 = std::norm(mk.prefactor());
    const double delta = R - (0.5 * (Z + Zp)).cwiseAbs().maxCoeff();
    const double mass = std::pow(two_pi / s, mk.n);
    if (delta <= 0.0) return c2 * mass;
    return c2 * 2.0 * mk.n * mass * std::erfc(delta * std::sqrt(0.5 * s));
}

inline constexpr double tail_tolerance = 1e-10;

// Tensor trapezoid rule on [-R, R]^2 (n = 1).
inline cplx trapezoid_2d(double R, double h, const std::function<cplx(double, double)>& f) {
    const long m = std::lround(2.0 * R / h);
    if (m < 2 || std::abs(m * h - 2.0 * R) > 1e-9 * R) throw invalid_input("trapezoid: 2R/h must be an integer >= 2");
    cplx acc = 0.0;
    for (long i = 0; i <= m; ++i) {
        const double wi = (i == 0 || i == m) ? 0.5 : 1.0;
        const double x = -R + i * h;
        for (long k = 0; k <= m; ++k) {
            const double wk = (k == 0 || k == m) ? 0.5 : 1.0;
            acc += wi * wk * f(x, -R + k * h);
        }
    }
    return acc * h * h;
}

inline QuadratureReport reproducing_residual(const ModelKernel& mk, const Vec& Z, const Vec& Zp, double R,
                                             double h) {
    if (mk.n != 1) throw capability_error("reproducing_residual: quadrature implemented for n = 1");
    QuadratureReport rep;
    rep.integral = trapezoid_2d(R, h, [&](double x, double y) {
        Vec W(2);
        W << x, y;
        return eval_P(mk, Z, W) * eval_P(mk, W, Zp);
    });
    rep.residual = std::abs(rep.integral - eval_P(mk, Z, Zp));
    rep.tail_bound = reproducing_tail_bound(mk, Z, Zp, R);
    rep.tail_warning = rep.tail_bound > tail_tolerance;
    return rep;
}

struct ModelOperatorStencil {
    double h = 0.0;
    double R = 0.0;
    long m = 0;  // interior nodes per side; node i sits at -R + (i + 1) h
    double tau0 = 0.0;
    SpCMat matrix;

    long index(long i, long k) const { return i + m * k; }
    double coord(long i) const { return -R + static_cast<double>(i + 1) * h; }
};

// Dirichlet-truncated L0 on the grid (-R, R)^2 with Peierls midpoint link phases.
inline ModelOperatorStencil build_l0_stencil(const ModelKernel& mk, double h, double R) {
    if (mk.n != 1) throw capability_error("build_l0_stencil: stencils implemented for n = 1");
    if (!(h > 0.0) || !(R > 0.0)) throw invalid_input("build_l0_stencil: h and R must be positive");
    const long cells = std::lround(2.0 * R / h);
    if (cells < 4 || std::abs(cells * h - 2.0 * R) > 1e-9 * R)
        throw invalid_input("build_l0_stencil: 2R/h must be an integer >= 4");
    ModelOperatorStencil st;
    st.h = h;
    st.R = R;
    st.m = cells - 1;
    st.tau0 = mk.tau0;
    const Mat J0 = mk.J0();
    auto A = [&](double x, double y) -> Eigen::Vector2d { return pi * (J0 * Eigen::Vector2d(x, y)); };
    const double ih2 = 1.0 / (h * h);
    std::vector<Eigen::Triplet<cplx, long>> trip;
    for (long k = 0; k < st.m; ++k) {
        for (long i = 0; i < st.m; ++i) {
            const long a = st.index(i, k);
            const double x = st.coord(i), y = st.coord(k);
            trip.emplace_back(a, a, cplx(4.0 * ih2 - mk.tau0));
            if (i + 1 < st.m) {
                const cplx u = std::exp(-I_unit * (A(x + 0.5 * h, y)(0) * h));
                trip.emplace_back(a, st.index(i + 1, k), -u * ih2);
                trip.emplace_back(st.index(i + 1, k), a, -std::conj(u) * ih2);
            }
            if (k + 1 < st.m) {
                const cplx u = std::exp(-I_unit * (A(x, y + 0.5 * h)(1) * h));
                trip.emplace_back(a, st.index(i, k + 1), -u * ih2);
                trip.emplace_back(st.index(i, k + 1), a, -std::conj(u) * ih2);
            }
        }
    }
    st.matrix.resize(st.m * st.m, st.m * st.m);
    st.matrix.setFromTriplets(trip.begin(), trip.end());
    st.matrix.makeCompressed();
    return st;
}

// Applies the stencil to a sampled function; returns max |L0 f| over nodes at
// least two cells away from the boundary, and the value at the center node.
struct StencilResidual {
    double max_interior = 0.0;
    cplx at_center;
};

inline StencilResidual apply_l0(const ModelOperatorStencil& st, const std::function<cplx(double, double)>& f) {
    CVec v(st.m * st.m);
    for (long k = 0; k < st.m; ++k)
        for (long i = 0; i < st.m; ++i) v(st.index(i, k)) = f(st.coord(i), st.coord(k));
    CVec r = st.matrix * v;
    StencilResidual out;
    for (long k = 1; k + 1 < st.m; ++k)
        for (long i = 1; i + 1 < st.m; ++i) out.max_interior = std::max(out.max_interior, std::abs(r(st.index(i, k))));
    out.at_center = r(st.index(st.m / 2, st.m / 2));
    return out;
}

inline double l0_annihilation_residual(const ModelKernel& mk, const ModelOperatorStencil& st, const Vec& Zp) {
    if (Zp.size() != 2) throw invalid_input("l0_annihilation_residual: Zp must have 2 entries");
    if (Zp.cwiseAbs().maxCoeff() > st.R - 4.0 * st.h)
        throw range_error("l0_annihilation_residual: Zp closer than 4 stencil widths to the boundary");
    return apply_l0(st, [&](double x, double y) {
               Vec Z(2);
               Z << x, y;
               return eval_P(mk, Z, Zp);
           }).max_interior;
}

struct ModelGapEstimate {
    double lambda0 = 0.0;
    double lambda1 = 0.0;
    long flux_quanta = 0;  // size of the lowest cluster on the box
    long cluster_size = 0;
};

// Low spectrum of the lattice L0 on the box [-R, R)^2 with magnetic-periodic
// boundary conditions (requires integral flux through the box). The constant-field
// operator is realized as a Landau-gauge torus of side 2R.
inline ModelGapEstimate model_gap_estimate(const ModelKernel& mk, double h, double R,
                                           const detail::SolverOptions& opt = {}) {
    if (mk.n != 1) throw capability_error("model_gap_estimate: implemented for n = 1");
    const Mat J0 = mk.J0();
    const double c = J0(0, 1);
    if (std::abs(J0(1, 0) + c) > 1e-12 || std::abs(J0(0, 0)) > 1e-12 || std::abs(J0(1, 1)) > 1e-12 || c <= 0.0)
        throw capability_error("model_gap_estimate: needs J0 = c * rot in the orthonormal frame");
    const double L = 2.0 * R;
    const double flux = c * L * L;
    const long quanta = std::lround(flux);
    const long cells = std::lround(L / h);
    if (std::abs(flux - quanta) > 1e-9 || quanta <= 0)
        throw config_error("model_gap_estimate: flux through the box must be a positive integer");
    if (std::abs(cells * h - L) > 1e-9 * L) throw config_error("model_gap_estimate: 2R/h must be an integer");
    if (two_pi * c * h * h > pi / 10.0) throw config_error("model_gap_estimate: flux per plaquette too large");

    TorusConfig cfg;
    cfg.p = static_cast<int>(quanta);
    cfg.N = static_cast<int>(cells);
    cfg.metric_scale = L * L;  // side-L torus viewed as the unit torus
    cfg.tau = mk.tau0 / static_cast<double>(quanta);
    auto ml = assemble_hamiltonian(cfg);
    const long count = std::min<long>(ml.dim, quanta + 5);
    auto res = detail::lowest_eigenpairs(ml.matrix, count, opt);
    auto [size, C] = detect_cluster(res.values, 2.0 * two_pi * c);
    (void)C;
    if (size <= 0 || size >= count) throw convergence_error("model_gap_estimate: no gap found in the computed window");
    ModelGapEstimate out;
    out.lambda0 = res.values(0);
    out.lambda1 = res.values(size);
    out.flux_quanta = quanta;
    out.cluster_size = size;
    return out;
}

} // namespace bergkern
