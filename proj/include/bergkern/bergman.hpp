#pragma once

#include <algorithm>
#include <vector>

#include "core.hpp"
#include "model_kernel.hpp"
#include "torus_model.hpp"

// Generalized Bergman kernels P_{q,p}(x,x') = sum_{i in cluster} lambda_i^q psi_i(x) conj(psi_i(x'))
// on the lattice torus, and the checks of their expansion structure.

namespace bergkern {

struct BergmanKernelGrid {
    int p = 0;
    int q = 0;
    int N = 0;
    double cell_volume = 0.0;
    CMat C;     // cluster eigenvectors (continuum normalization)
    Vec weight; // lambda_i^q

    long dim() const { return C.rows(); }

    cplx value(long a, long b) const {
        cplx s = 0.0;
        for (long i = 0; i < C.cols(); ++i) s += weight(i) * C(a, i) * std::conj(C(b, i));
        return s;
    }

    // x' -> P(x_a, x')
    CVec row(long a) const {
        CVec w = weight.cast<cplx>().cwiseProduct(C.row(a).transpose());
        return C.conjugate() * w;
    }

    Vec diagonal() const { return C.cwiseAbs2() * weight; }

    double trace() const { return cell_volume * diagonal().sum(); }

    // kernel restricted to a list of sites
    CMat block(const std::vector<long>& sites) const {
        CMat Cs(static_cast<long>(sites.size()), C.cols());
        for (std::size_t r = 0; r < sites.size(); ++r) Cs.row(static_cast<long>(r)) = C.row(sites[r]);
        return Cs * weight.cast<cplx>().asDiagonal() * Cs.adjoint();
    }
};

inline BergmanKernelGrid assemble_kernel(const SpectralWindow& win, int q) {
    if (q < 0) throw invalid_input("assemble_kernel: q must be nonnegative");
    if (win.cluster_size() <= 0) throw range_error("assemble_kernel: empty cluster");
    BergmanKernelGrid k;
    k.p = win.p;
    k.q = q;
    k.N = win.N;
    k.cell_volume = win.cell_volume();
    k.C = win.cluster_vectors();
    k.weight = win.cluster_values().array().pow(static_cast<double>(q)).matrix();
    if (q == 0) k.weight.setOnes();
    return k;
}

// Minimum-image displacement on the unit torus, in [-1/2, 1/2).
inline double min_image(int dj, int N) {
    int m = ((dj % N) + N) % N;
    if (2 * m >= N) m -= N;
    return static_cast<double>(m) / N;
}

struct PatchSite {
    long site = 0;
    double X = 0.0;
    double Y = 0.0;
    cplx phase;  // radial-gauge factor
};

// Sites within distance rho of the base site with the phases that move the
// lattice kernel to the radial gauge of the base point:
//   P_rad(x,x') = ph(x) P(x,x') conj(ph(x')),  ph = e^{-i chi} G,
// G the link product along the path base -> x (first x, then y), chi = -B X Y / 2, B = -2 pi p.
inline std::vector<PatchSite> radial_patch(const SpectralWindow& win, long base, double rho) {
    const int N = win.N;
    const int j0 = static_cast<int>(base % N), k0 = static_cast<int>(base / N);
    const double B = -two_pi * win.p;
    const int reach = static_cast<int>(std::floor(rho * N + 1e-9));
    if (2 * reach >= N) throw range_error("radial_patch: patch wraps around the torus");
    std::vector<PatchSite> out;
    for (int dk = -reach; dk <= reach; ++dk) {
        for (int dj = -reach; dj <= reach; ++dj) {
            const double X = static_cast<double>(dj) / N, Y = static_cast<double>(dk) / N;
            if (X * X + Y * Y > rho * rho + 1e-12) continue;
            cplx g = 1.0;
            int j = j0, k = k0;
            for (int t = 0; t < std::abs(dj); ++t) {
                if (dj > 0) g *= win.Ux(win.site(j++, k));
                else g *= std::conj(win.Ux(win.site(--j, k)));
            }
            for (int t = 0; t < std::abs(dk); ++t) {
                if (dk > 0) g *= win.Uy(win.site(j, k++));
                else g *= std::conj(win.Uy(win.site(j, --k)));
            }
            const double chi = -0.5 * B * X * Y;
            out.push_back({win.site(j0 + dj, k0 + dk), X, Y, std::exp(-I_unit * chi) * g});
        }
    }
    return out;
}

inline constexpr double default_patch_cap = 0.25;
inline constexpr double model_floor = 1e-16;

// Largest rescaled radius at which the model kernel modulus stays above model_floor.
inline double max_comparison_radius(const ModelKernel& mk) {
    Eigen::SelfAdjointEigenSolver<Mat> es(mk.sqrtJcal2);
    const double s = es.eigenvalues().maxCoeff();
    return std::sqrt(4.0 * std::log(std::abs(mk.prefactor()) / model_floor) / s);
}

struct RescaledComparison {
    double sup_error = 0.0;
    long pairs = 0;
    double patch_radius = 0.0;
    double sampling_scale = 0.0;  // sqrt(p) h, the rescaled lattice spacing
    double diagonal_value = 0.0;  // p^{-1} P(x0, x0)
};

namespace detail {

inline void require_standard_scale(const SpectralWindow& win) {
    if (std::abs(win.metric_scale - 1.0) > 1e-14)
        throw capability_error("rescaled comparisons assume metric_scale = 1");
}

// sup |p^{-1} K_rad(Z,Z') - f0 P(sqrt p Z, sqrt p Z')| over the patch, where
// K_rad = Cs M Cs^* with Cs the phase-rotated patch rows (M = identity when empty).
// Entries are formed pair by pair so the patch size is not limited by memory.
inline RescaledComparison compare_patch(const SpectralWindow& win, const ModelKernel& mk, double R,
                                        const std::vector<PatchSite>& patch, const CMat& Cs, const CMat& M,
                                        cplx f0, long base_row) {
    if (mk.n != 1) throw capability_error("rescaled comparisons are implemented for n = 1");
    RescaledComparison out;
    const double sp = std::sqrt(static_cast<double>(win.p));
    out.sampling_scale = sp * win.h;
    const Mat& S = mk.sqrtJcal2;
    const CMat& J = mk.Jcal;
    const cplx c = f0 * mk.prefactor();
    const double R2 = R * R + 1e-12;
    const CMat left = (M.size() == 0 ? Cs : CMat(Cs * M)).transpose();
    const CMat right = Cs.transpose();
    auto lattice = [&](long a, long b) { return right.col(b).dot(left.col(a)) / static_cast<double>(win.p); };
    // both kernels are Hermitian, so unordered pairs suffice
    for (std::size_t a = 0; a < patch.size(); ++a) {
        const double z0 = sp * patch[a].X, z1 = sp * patch[a].Y;
        for (std::size_t b = a; b < patch.size(); ++b) {
            const double w0 = sp * patch[b].X, w1 = sp * patch[b].Y;
            const double dx = z0 - w0, dy = z1 - w1;
            if (dx * dx + dy * dy > R2) continue;
            const double quad = -0.25 * (S(0, 0) * dx * dx + 2.0 * S(0, 1) * dx * dy + S(1, 1) * dy * dy);
            const cplx bil = 0.5 * (w0 * (J(0, 0) * z0 + J(0, 1) * z1) + w1 * (J(1, 0) * z0 + J(1, 1) * z1));
            const cplx model = c * std::exp(quad + bil);
            const cplx lat = lattice(static_cast<long>(a), static_cast<long>(b));
            out.sup_error = std::max(out.sup_error, std::abs(lat - model));
            ++out.pairs;
        }
    }
    out.diagonal_value = lattice(base_row, base_row).real();
    return out;
}

inline long find_base_row(const std::vector<PatchSite>& patch) {
    for (std::size_t r = 0; r < patch.size(); ++r)
        if (patch[r].X == 0.0 && patch[r].Y == 0.0) return static_cast<long>(r);
    return 0;
}

inline CMat rotated_rows(const CMat& C, const std::vector<PatchSite>& patch) {
    CMat Cs(static_cast<long>(patch.size()), C.cols());
    for (std::size_t r = 0; r < patch.size(); ++r) Cs.row(static_cast<long>(r)) = patch[r].phase * C.row(patch[r].site);
    return Cs;
}

} // namespace detail

inline void check_comparison_radius(const ModelKernel& mk, double R) {
    if (!(R > 0.0)) throw range_error("comparison radius must be positive");
    const double rmax = max_comparison_radius(mk);
    if (R > rmax)
        throw range_error("comparison radius " + std::to_string(R) + " exceeds " + std::to_string(rmax) +
                          " where the model kernel drops below 1e-16");
}

inline RescaledComparison rescaled_comparison(const SpectralWindow& win, const ModelKernel& mk, double R,
                                              long base = 0, double patch_cap = default_patch_cap) {
    detail::require_standard_scale(win);
    check_comparison_radius(mk, R);
    const double rho = std::min(R / std::sqrt(static_cast<double>(win.p)), patch_cap);
    auto patch = radial_patch(win, base, rho);
    const CMat Cs = detail::rotated_rows(win.cluster_vectors(), patch);
    auto out = detail::compare_patch(win, mk, R, patch, Cs, CMat(), 1.0, detail::find_base_row(patch));
    out.patch_radius = rho;
    return out;
}

struct ExpansionFit {
    std::vector<int> p_list;
    std::vector<double> values;
    double a = 0.0, b = 0.0, c = 0.0;
    double residual = 0.0;
};

// least squares in the basis 1, p^{-1/2}, p^{-1} (first `terms` of them)
inline ExpansionFit fit_expansion(const std::vector<int>& ps, const std::vector<double>& vals, int terms) {
    std::vector<int> distinct(ps);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (static_cast<int>(distinct.size()) < terms)
        throw invalid_input("expansion fit: need at least " + std::to_string(terms) + " distinct p values");
    Mat A(static_cast<long>(ps.size()), terms);
    Vec y(static_cast<long>(ps.size()));
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const double p = ps[i];
        for (int t = 0; t < terms; ++t) A(static_cast<long>(i), t) = std::pow(p, -0.5 * t);
        y(static_cast<long>(i)) = vals[i];
    }
    Vec coef = A.colPivHouseholderQr().solve(y);
    ExpansionFit fit;
    fit.p_list = ps;
    fit.values = vals;
    fit.a = coef(0);
    if (terms > 1) fit.b = coef(1);
    if (terms > 2) fit.c = coef(2);
    fit.residual = (A * coef - y).norm();
    return fit;
}

inline double diagonal_value(const SpectralWindow& win, int q, long base = 0) {
    auto k = assemble_kernel(win, q);
    return k.value(base, base).real() / static_cast<double>(win.p);
}

// p^{-1} P_{0,p}(x0, x0) against a + b p^{-1/2} + c p^{-1}
inline ExpansionFit diagonal_limit_check(const std::vector<SpectralWindow>& wins, long base = 0) {
    std::vector<int> ps;
    std::vector<double> vals;
    for (const auto& w : wins) {
        ps.push_back(w.p);
        vals.push_back(diagonal_value(w, 0, base));
    }
    return fit_expansion(ps, vals, 3);
}

struct DecayFit {
    double c_hat = 0.0;
    double log_intercept = 0.0;
    double prefactor = 0.0;   // smallest A with |v| <= A exp(-c sqrt(mu0 p) d) on all samples
    double adjustment = 0.0;  // prefactor / exp(log_intercept)
    bool majorizes = false;
    std::vector<std::pair<double, double>> samples;  // (d, p^{-1} |P(x0, x0 + d)|)
};

inline DecayFit offdiagonal_decay_fit(const SpectralWindow& win, double d_lo, double d_hi, long base = 0) {
    const double lower = 2.0 / std::sqrt(two_pi * win.p);
    if (!(d_lo > lower) || !(d_hi < 0.25) || !(d_lo < d_hi))
        throw range_error("offdiagonal_decay_fit: range must lie inside (" + std::to_string(lower) + ", 0.25)");
    auto k = assemble_kernel(win, 0);
    CVec row = k.row(base);
    const int N = win.N;
    const int j0 = static_cast<int>(base % N), k0 = static_cast<int>(base / N);
    DecayFit out;
    for (long s = 0; s < k.dim(); ++s) {
        const double X = min_image(static_cast<int>(s % N) - j0, N);
        const double Y = min_image(static_cast<int>(s / N) - k0, N);
        const double d = std::hypot(X, Y);
        if (d < d_lo || d > d_hi) continue;
        const double v = std::abs(row(s)) / win.p;
        if (v < 1e-13) continue;
        out.samples.emplace_back(d, v);
    }
    std::sort(out.samples.begin(), out.samples.end());
    if (out.samples.size() < 2) throw range_error("offdiagonal_decay_fit: no admissible samples in range");
    const double scale = std::sqrt(win.mu0 * win.p);
    Mat A(static_cast<long>(out.samples.size()), 2);
    Vec y(static_cast<long>(out.samples.size()));
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        A(static_cast<long>(i), 0) = 1.0;
        A(static_cast<long>(i), 1) = -scale * out.samples[i].first;
        y(static_cast<long>(i)) = std::log(out.samples[i].second);
    }
    Vec coef = A.colPivHouseholderQr().solve(y);
    out.log_intercept = coef(0);
    out.c_hat = coef(1);
    for (const auto& [d, v] : out.samples) out.prefactor = std::max(out.prefactor, v * std::exp(out.c_hat * scale * d));
    out.adjustment = out.prefactor / std::exp(out.log_intercept);
    out.majorizes = true;
    for (const auto& [d, v] : out.samples)
        if (v > out.prefactor * std::exp(-out.c_hat * scale * d) * (1.0 + 1e-12)) out.majorizes = false;
    return out;
}

struct Q1Check {
    ExpansionFit fit;        // a + b p^{-1/2}
    bool max_le_2min = false;
    bool differences_decrease = false;
    double bound = 0.0;      // max |value|
};

// p^{-1} P_{1,p}(x0, x0): uniformly bounded, no growth, converging.
// Magnitudes are compared since the values are negative on the lattice.
inline Q1Check q1_boundedness_check(const std::vector<SpectralWindow>& wins, long base = 0) {
    if (wins.size() < 2) throw invalid_input("q1_boundedness_check: need at least two p values");
    std::vector<SpectralWindow const*> sorted;
    for (const auto& w : wins) sorted.push_back(&w);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->p < b->p; });
    std::vector<int> ps;
    std::vector<double> vals;
    for (auto* w : sorted) {
        ps.push_back(w->p);
        vals.push_back(diagonal_value(*w, 1, base));
    }
    Q1Check out;
    out.fit = fit_expansion(ps, vals, 2);
    double mn = std::numeric_limits<double>::infinity(), mx = 0.0;
    for (double v : vals) mn = std::min(mn, std::abs(v)), mx = std::max(mx, std::abs(v));
    out.bound = mx;
    out.max_le_2min = mx <= 2.0 * mn;
    out.differences_decrease = true;
    for (std::size_t i = 2; i < vals.size(); ++i)
        if (!(std::abs(vals[i] - vals[i - 1]) < std::abs(vals[i - 1] - vals[i - 2]))) out.differences_decrease = false;
    return out;
}

// max over base sites and displacements of | |P(b, b + d)| - |P(0, d)| |
inline double translation_covariance_defect(const SpectralWindow& win, const std::vector<long>& bases,
                                            double radius = 0.25) {
    auto k = assemble_kernel(win, 0);
    const int N = win.N;
    const int reach = static_cast<int>(radius * N);
    CVec ref = k.row(0);
    double worst = 0.0;
    for (long b : bases) {
        CVec r = k.row(b);
        const int j0 = static_cast<int>(b % N), k0 = static_cast<int>(b / N);
        for (int dk = -reach; dk <= reach; ++dk)
            for (int dj = -reach; dj <= reach; ++dj)
                worst = std::max(worst, std::abs(std::abs(r(win.site(j0 + dj, k0 + dk))) - std::abs(ref(win.site(dj, dk)))));
    }
    return worst;
}

} // namespace bergkern
