#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <vector>

#include "core.hpp"
#include "detail/eigensolver.hpp"
#include "geometry.hpp"

// Renormalized Bochner-Laplacian Delta_p = Delta^{L^p} - p tau on the flat unit
// 2-torus, discretized by a 5-point Peierls stencil in Landau gauge.
// Site index s = j + N k, coordinates (x, y) = (j, k) / N.

namespace bergkern {

struct TorusConfig {
    int p = 1;
    int N = 0;
    double metric_scale = 1.0;
    double tau = two_pi;

    static int minimal_N(int p) {
        const int by_length = 8 * static_cast<int>(std::ceil(std::sqrt(two_pi * p) - 1e-12));
        // flux per plaquette 2 pi p / N^2 <= pi / 10
        const int by_flux = static_cast<int>(std::ceil(std::sqrt(20.0 * p) - 1e-12));
        return std::max({3, by_length, by_flux});
    }

    // Default grid: at least 12 points per unit of p keeps the lattice shift of the
    // lowest cluster roughly constant in p.
    static int auto_N(int p) { return std::max(minimal_N(p), 12 * p); }

    static TorusConfig standard(int p, int N, double metric_scale = 1.0) {
        TorusConfig cfg;
        cfg.p = p;
        cfg.N = N;
        cfg.metric_scale = metric_scale;
        cfg.tau = make_point_geometry(MetricPair::standard(1, metric_scale)).tau;
        return cfg;
    }

    void validate() const {
        if (p < 0) throw config_error("torus: p must be nonnegative");
        if (!(metric_scale > 0.0)) throw config_error("torus: metric_scale must be positive");
        const int nmin = minimal_N(p);
        if (N < nmin)
            throw config_error("torus: N = " + std::to_string(N) + " is too coarse for p = " + std::to_string(p) +
                               "; minimal N is " + std::to_string(nmin));
    }
};

struct GaugeOptions {
    int shift_j = 0;                 // translate the gauge origin
    int shift_k = 0;
    std::vector<double> site_phase;  // optional pure gauge e^{i theta_s}
};

struct MagneticLaplacian {
    TorusConfig cfg;
    long dim = 0;
    double h = 0.0;
    double mu0 = 0.0;
    SpCMat matrix;
    CVec Ux;  // link s -> s + x
    CVec Uy;  // link s -> s + y

    int N() const { return cfg.N; }
    long site(int j, int k) const {
        const int n = cfg.N;
        return ((j % n + n) % n) + static_cast<long>(n) * ((k % n + n) % n);
    }
};

// Landau-gauge assembly without the resolution guard. The kinetic part is
// scaled by 1 / (metric_scale h^2) and the diagonal shifted by -p tau.
inline MagneticLaplacian assemble_hamiltonian(const TorusConfig& cfg, const GaugeOptions& gauge = {}) {
    if (cfg.N < 3) throw config_error("torus: N must be at least 3");
    MagneticLaplacian ml;
    ml.cfg = cfg;
    const int N = cfg.N;
    const int p = cfg.p;
    ml.dim = static_cast<long>(N) * N;
    ml.h = 1.0 / N;
    const auto mp = MetricPair::standard(1, cfg.metric_scale);
    ml.mu0 = compute_mu0(two_pi * mp.omega, mp);
    if (!gauge.site_phase.empty() && static_cast<long>(gauge.site_phase.size()) != ml.dim)
        throw invalid_input("build_hamiltonian: site_phase has wrong length");

    ml.Ux.resize(ml.dim);
    ml.Uy.resize(ml.dim);
    const double n2 = static_cast<double>(N) * N;
    for (int k = 0; k < N; ++k) {
        for (int j = 0; j < N; ++j) {
            const int jr = ((j - gauge.shift_j) % N + N) % N;
            const int kr = ((k - gauge.shift_k) % N + N) % N;
            const long s = ml.site(j, k);
            cplx ux = (jr < N - 1) ? cplx(1.0) : std::exp(-I_unit * (two_pi * p * kr / N));
            cplx uy = std::exp(I_unit * (two_pi * p * jr / n2));
            if (!gauge.site_phase.empty()) {
                const double th = gauge.site_phase[s];
                ux *= std::exp(I_unit * (th - gauge.site_phase[ml.site(j + 1, k)]));
                uy *= std::exp(I_unit * (th - gauge.site_phase[ml.site(j, k + 1)]));
            }
            ml.Ux(s) = ux;
            ml.Uy(s) = uy;
        }
    }

    const double kin = 1.0 / (cfg.metric_scale * ml.h * ml.h);
    std::vector<Eigen::Triplet<cplx, long>> trip;
    trip.reserve(static_cast<std::size_t>(5 * ml.dim));
    for (int k = 0; k < N; ++k) {
        for (int j = 0; j < N; ++j) {
            const long a = ml.site(j, k);
            trip.emplace_back(a, a, cplx(4.0 * kin - p * cfg.tau));
            const long bx = ml.site(j + 1, k);
            const long by = ml.site(j, k + 1);
            trip.emplace_back(a, bx, -ml.Ux(a) * kin);
            trip.emplace_back(bx, a, -std::conj(ml.Ux(a)) * kin);
            trip.emplace_back(a, by, -ml.Uy(a) * kin);
            trip.emplace_back(by, a, -std::conj(ml.Uy(a)) * kin);
        }
    }
    ml.matrix.resize(ml.dim, ml.dim);
    ml.matrix.setFromTriplets(trip.begin(), trip.end());
    ml.matrix.makeCompressed();
    return ml;
}

inline MagneticLaplacian build_hamiltonian(const TorusConfig& cfg, const GaugeOptions& gauge = {}) {
    cfg.validate();
    return assemble_hamiltonian(cfg, gauge);
}

inline cplx plaquette_holonomy(const MagneticLaplacian& ml, int j, int k) {
    return ml.Ux(ml.site(j, k)) * ml.Uy(ml.site(j + 1, k)) * std::conj(ml.Ux(ml.site(j, k + 1))) *
           std::conj(ml.Uy(ml.site(j, k)));
}

inline double plaquette_holonomy_deviation(const MagneticLaplacian& ml) {
    const int N = ml.N();
    const cplx target = std::exp(I_unit * (two_pi * ml.cfg.p / (static_cast<double>(N) * N)));
    double dev = 0.0;
    for (int k = 0; k < N; ++k)
        for (int j = 0; j < N; ++j) dev = std::max(dev, std::abs(plaquette_holonomy(ml, j, k) - target));
    return dev;
}

inline void dump_coo(const MagneticLaplacian& ml, std::ostream& os) {
    os.precision(17);
    os << "row col re im\n";
    for (long c = 0; c < ml.matrix.outerSize(); ++c)
        for (SpCMat::InnerIterator it(ml.matrix, c); it; ++it)
            os << it.row() << ' ' << it.col() << ' ' << it.value().real() << ' ' << it.value().imag() << '\n';
}

struct SpectralWindow {
    int p = 0;
    int N = 0;
    double h = 0.0;
    double metric_scale = 1.0;
    double mu0 = 0.0;
    Vec eigenvalues;
    CMat eigenvectors;  // sum_x |psi|^2 dv = 1, dv = metric_scale * h^2
    long cluster_boundary_index = 0;  // cluster = [0, cluster_boundary_index)
    double window_C = 0.0;
    CVec Ux, Uy;
    int solver_iterations = 0;
    double solver_residual = 0.0;
    bool dense = false;

    double cell_volume() const { return metric_scale * h * h; }
    long dim() const { return eigenvectors.rows(); }
    long cluster_size() const { return cluster_boundary_index; }
    Vec cluster_values() const { return eigenvalues.head(cluster_boundary_index); }
    CMat cluster_vectors() const { return eigenvectors.leftCols(cluster_boundary_index); }
    long site(int j, int k) const { return ((j % N + N) % N) + static_cast<long>(N) * ((k % N + N) % N); }
    // continuum gap estimate 2 p mu0
    double gap_estimate() const { return 2.0 * p * mu0; }
};

// Cluster = eigenvalues below the largest gap among pairs starting at or below
// half the gap estimate. Falls back to the window [-C, C], C = gap/4.
inline std::pair<long, double> detect_cluster(const Vec& w, double gap_estimate) {
    const long m = w.size();
    const double limit = std::max(0.5 * gap_estimate, w.size() ? w(0) : 0.0);
    long best = -1;
    double best_gap = 0.0;
    for (long i = 0; i + 1 < m; ++i) {
        if (w(i) > limit) break;
        const double g = w(i + 1) - w(i);
        if (g > best_gap) {
            best_gap = g;
            best = i;
        }
    }
    if (best >= 0 && best_gap > 0.25 * gap_estimate) {
        double c = 0.0;
        for (long i = 0; i <= best; ++i) c = std::max(c, std::abs(w(i)));
        return {best + 1, c};
    }
    const double C = 0.25 * gap_estimate;
    long n = 0;
    while (n < m && std::abs(w(n)) <= C) ++n;
    return {n, C};
}

inline SpectralWindow solve_low_spectrum(const MagneticLaplacian& ml, long count,
                                         const detail::SolverOptions& opt = {}) {
    auto res = detail::lowest_eigenpairs(ml.matrix, count, opt);
    SpectralWindow win;
    win.p = ml.cfg.p;
    win.N = ml.cfg.N;
    win.h = ml.h;
    win.metric_scale = ml.cfg.metric_scale;
    win.mu0 = ml.mu0;
    win.eigenvalues = res.values;
    win.eigenvectors = res.vectors / std::sqrt(win.cell_volume());
    win.Ux = ml.Ux;
    win.Uy = ml.Uy;
    win.solver_iterations = res.iterations;
    win.solver_residual = res.max_residual;
    win.dense = res.dense;
    auto [n, C] = detect_cluster(win.eigenvalues, win.gap_estimate());
    win.cluster_boundary_index = n;
    win.window_C = C;
    return win;
}

inline SpectralWindow solve_torus(int p, std::optional<int> N = std::nullopt, long extra = 5,
                                  const detail::SolverOptions& opt = {}) {
    auto ml = build_hamiltonian(TorusConfig::standard(p, N.value_or(TorusConfig::auto_N(p))));
    return solve_low_spectrum(ml, std::min<long>(ml.dim, p + extra), opt);
}

struct GapRow {
    int p = 0;
    long cluster_size = 0;
    double cluster_max_abs = 0.0;
    double excited = 0.0;
    double ratio = 0.0;  // excited / (2 p mu0)
};

struct GapReport {
    std::vector<GapRow> rows;
    double C_L = 0.0;        // one constant covering cluster width and gap deficit for every p
    bool separated = false;  // [-C_L, C_L] and [2 p mu0 - C_L, inf) disjoint for every p
    std::vector<std::pair<int, double>> doubling;  // (p, excited(2p)/excited(p))
};

inline GapReport gap_report(const std::vector<SpectralWindow>& wins) {
    GapReport rep;
    double min_half_gap = std::numeric_limits<double>::infinity();
    for (const auto& w : wins) {
        if (w.cluster_size() <= 0 || w.cluster_size() >= w.eigenvalues.size())
            throw range_error("gap_report: window for p = " + std::to_string(w.p) + " has no excited eigenvalue");
        GapRow r;
        r.p = w.p;
        r.cluster_size = w.cluster_size();
        r.cluster_max_abs = w.cluster_values().cwiseAbs().maxCoeff();
        r.excited = w.eigenvalues(w.cluster_size());
        r.ratio = r.excited / w.gap_estimate();
        rep.rows.push_back(r);
        rep.C_L = std::max({rep.C_L, r.cluster_max_abs, w.gap_estimate() - r.excited});
        min_half_gap = std::min(min_half_gap, 0.5 * w.gap_estimate());
    }
    rep.separated = !rep.rows.empty() && rep.C_L < min_half_gap;
    for (const auto& a : rep.rows)
        for (const auto& b : rep.rows)
            if (b.p == 2 * a.p) rep.doubling.emplace_back(a.p, b.excited / a.excited);
    return rep;
}

} // namespace bergkern
