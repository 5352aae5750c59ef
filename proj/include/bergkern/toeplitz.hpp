#pragma once

#include <map>
#include <vector>

#include <Eigen/SVD>

#include "bergman.hpp"
#include "core.hpp"
#include "kernel_calculus.hpp"
#include "torus_model.hpp"

// Toeplitz operators T_{f,p} = P_p f P_p on the lattice torus for trigonometric
// polynomial symbols.

namespace bergkern {

// f(x, y) = sum amp * exp(2 pi i (kx x + ky y))
class SymbolFunction {
public:
    using Key = std::pair<int, int>;

    SymbolFunction() = default;

    static SymbolFunction constant(cplx c) { return mode(0, 0, c); }
    static SymbolFunction mode(int kx, int ky, cplx amp) {
        SymbolFunction f;
        f.add(kx, ky, amp);
        return f;
    }
    static SymbolFunction cos_x(int k = 1) { return mode(k, 0, 0.5) + mode(-k, 0, 0.5); }
    static SymbolFunction cos_y(int k = 1) { return mode(0, k, 0.5) + mode(0, -k, 0.5); }
    static SymbolFunction sin_x(int k = 1) { return mode(k, 0, -0.5 * I_unit) + mode(-k, 0, 0.5 * I_unit); }
    static SymbolFunction sin_y(int k = 1) { return mode(0, k, -0.5 * I_unit) + mode(0, -k, 0.5 * I_unit); }

    const std::map<Key, cplx>& terms() const { return terms_; }

    void add(int kx, int ky, cplx amp) {
        auto& v = terms_[{kx, ky}];
        v += amp;
        if (std::abs(v) == 0.0) terms_.erase({kx, ky});
    }

    cplx operator()(double x, double y) const {
        cplx s = 0.0;
        for (const auto& [k, a] : terms_) s += a * std::exp(I_unit * (two_pi * (k.first * x + k.second * y)));
        return s;
    }

    SymbolFunction dx() const { return derivative(1, 0); }
    SymbolFunction dy() const { return derivative(0, 1); }

    SymbolFunction conj() const {
        SymbolFunction f;
        for (const auto& [k, a] : terms_) f.add(-k.first, -k.second, std::conj(a));
        return f;
    }

    bool is_real(double tol = 1e-14) const {
        for (const auto& [k, a] : terms_) {
            auto it = terms_.find({-k.first, -k.second});
            if (it == terms_.end() || std::abs(it->second - std::conj(a)) > tol) return false;
        }
        return true;
    }

    double max_abs_on_lattice(int N) const {
        double m = 0.0;
        for (int k = 0; k < N; ++k)
            for (int j = 0; j < N; ++j) m = std::max(m, std::abs((*this)(double(j) / N, double(k) / N)));
        return m;
    }

    // alpha = (a, b) -> d_x^a d_y^b f(x0) / (a! b!), all orders <= order
    TaylorJet taylor_jet(double x0, double y0, int order) const {
        TaylorJet jet;
        for (int a = 0; a <= order; ++a)
            for (int b = 0; a + b <= order; ++b) {
                cplx s = 0.0;
                for (const auto& [k, amp] : terms_) {
                    cplx t = amp * std::exp(I_unit * (two_pi * (k.first * x0 + k.second * y0)));
                    t *= std::pow(I_unit * (two_pi * k.first), a) * std::pow(I_unit * (two_pi * k.second), b);
                    s += t;
                }
                jet[{a, b}] = s / (std::tgamma(a + 1.0) * std::tgamma(b + 1.0));
            }
        return jet;
    }

    friend SymbolFunction operator+(SymbolFunction f, const SymbolFunction& g) {
        for (const auto& [k, a] : g.terms_) f.add(k.first, k.second, a);
        return f;
    }
    friend SymbolFunction operator*(cplx s, SymbolFunction f) {
        SymbolFunction r;
        for (const auto& [k, a] : f.terms_) r.add(k.first, k.second, s * a);
        return r;
    }
    friend SymbolFunction operator-(SymbolFunction f, const SymbolFunction& g) { return f + (cplx(-1.0) * g); }
    friend SymbolFunction operator*(const SymbolFunction& f, const SymbolFunction& g) {
        SymbolFunction r;
        for (const auto& [k1, a1] : f.terms_)
            for (const auto& [k2, a2] : g.terms_) r.add(k1.first + k2.first, k1.second + k2.second, a1 * a2);
        return r;
    }

private:
    SymbolFunction derivative(int ax, int ay) const {
        SymbolFunction f;
        for (const auto& [k, a] : terms_)
            f.add(k.first, k.second, a * (I_unit * (two_pi * (ax * k.first + ay * k.second))));
        return f;
    }

    std::map<Key, cplx> terms_;
};

// Poisson bracket on (X, 2 pi omega), omega = dx ^ dy: (1 / 2 pi)(f_x g_y - f_y g_x).
inline SymbolFunction poisson_2pi(const SymbolFunction& f, const SymbolFunction& g) {
    return cplx(1.0 / two_pi) * (f.dx() * g.dy() - f.dy() * g.dx());
}

struct ToeplitzMatrix {
    int p = 0;
    CMat M;  // (i, j) = dv sum_x conj(psi_i(x)) f(x) psi_j(x)
};

inline CVec sample_symbol(const SymbolFunction& f, int N) {
    CVec v(static_cast<long>(N) * N);
    for (int k = 0; k < N; ++k)
        for (int j = 0; j < N; ++j) v(j + static_cast<long>(N) * k) = f(double(j) / N, double(k) / N);
    return v;
}

inline ToeplitzMatrix build_toeplitz(const SymbolFunction& f, const SpectralWindow& win) {
    if (win.cluster_size() <= 0) throw range_error("build_toeplitz: empty cluster");
    const CMat C = win.cluster_vectors();
    const CVec fv = sample_symbol(f, win.N) * win.cell_volume();
    ToeplitzMatrix T;
    T.p = win.p;
    T.M = C.adjoint() * fv.asDiagonal() * C;
    return T;
}

inline double op_norm(const CMat& A) {
    if (A.size() == 0) return 0.0;
    Eigen::JacobiSVD<CMat> svd(A);
    return svd.singularValues()(0);
}

struct DefectRow {
    int p = 0;
    double value = 0.0;
};

struct DefectTable {
    std::vector<DefectRow> rows;
    std::vector<std::pair<int, double>> doubling;  // (p, e(2p) / e(p))
    bool decreasing = false;
};

inline DefectTable finish_table(std::vector<DefectRow> rows) {
    std::sort(rows.begin(), rows.end(), [](auto& a, auto& b) { return a.p < b.p; });
    DefectTable t;
    t.rows = rows;
    t.decreasing = true;
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (!(rows[i].value < rows[i - 1].value)) t.decreasing = false;
    for (const auto& a : rows)
        for (const auto& b : rows)
            if (b.p == 2 * a.p) t.doubling.emplace_back(a.p, a.value > 0.0 ? b.value / a.value : 0.0);
    return t;
}

// e1(p) = || T_f T_g - T_{fg} ||
inline DefectTable product_defect(const SymbolFunction& f, const SymbolFunction& g,
                                  const std::vector<SpectralWindow>& wins) {
    std::vector<DefectRow> rows;
    for (const auto& w : wins) {
        const CMat Tf = build_toeplitz(f, w).M, Tg = build_toeplitz(g, w).M, Tfg = build_toeplitz(f * g, w).M;
        rows.push_back({w.p, op_norm(Tf * Tg - Tfg)});
    }
    return finish_table(rows);
}

// e2(p) = || p [T_f, T_g] - i T_{{f,g}} ||
inline DefectTable commutator_poisson_check(const SymbolFunction& f, const SymbolFunction& g,
                                            const std::vector<SpectralWindow>& wins) {
    const SymbolFunction pb = poisson_2pi(f, g);
    std::vector<DefectRow> rows;
    for (const auto& w : wins) {
        const CMat Tf = build_toeplitz(f, w).M, Tg = build_toeplitz(g, w).M, Tpb = build_toeplitz(pb, w).M;
        rows.push_back({w.p, op_norm(static_cast<double>(w.p) * (Tf * Tg - Tg * Tf) - I_unit * Tpb)});
    }
    return finish_table(rows);
}

struct KernelDecay {
    double max_modulus = 0.0;
    long base_points = 0;
};

// max |T_{f,p}(x, x')| over pairs at distance > eps, x on a sublattice of base points
inline KernelDecay toeplitz_kernel_decay(const SymbolFunction& f, const SpectralWindow& win, double eps,
                                         int base_stride = 0) {
    const double lower = 2.0 / std::sqrt(two_pi * win.p);
    if (!(eps > lower) || !(eps < 0.4))
        throw range_error("toeplitz_kernel_decay: eps must lie in (" + std::to_string(lower) + ", 0.4)");
    const int N = win.N;
    const int stride = base_stride > 0 ? base_stride : std::max(1, N / 8);
    const CMat C = win.cluster_vectors();
    const CMat M = build_toeplitz(f, win).M;
    const CMat Cc = C.conjugate();
    KernelDecay out;
    for (int k0 = 0; k0 < N; k0 += stride)
        for (int j0 = 0; j0 < N; j0 += stride) {
            const long b = win.site(j0, k0);
            const CVec row = Cc * (C.row(b) * M).transpose();
            for (long s = 0; s < row.size(); ++s) {
                const double X = min_image(static_cast<int>(s % N) - j0, N);
                const double Y = min_image(static_cast<int>(s / N) - k0, N);
                if (std::hypot(X, Y) > eps) out.max_modulus = std::max(out.max_modulus, std::abs(row(s)));
            }
            ++out.base_points;
        }
    return out;
}

// sup over sqrt(p)|Z - Z'| <= R of |p^{-1} T_rad(Z,Z') - f(x0) P(sqrt p Z, sqrt p Z')|
// with Z, Z' in the ball of radius R / sqrt(p) about x0. The ball shrinks with p
// (unlike rescaled_comparison, no cap applies) and must not wrap the torus.
inline RescaledComparison leading_symbol_check(const SymbolFunction& f, const SpectralWindow& win,
                                               const ModelKernel& mk, long base = 0, double R = 2.0) {
    detail::require_standard_scale(win);
    check_comparison_radius(mk, R);
    const double rho = R / std::sqrt(static_cast<double>(win.p));
    if (!(rho < 0.5)) throw range_error("leading_symbol_check: R / sqrt(p) must be below 1/2");
    auto patch = radial_patch(win, base, rho);
    const CMat Cs = detail::rotated_rows(win.cluster_vectors(), patch);
    const int N = win.N;
    const cplx f0 = f(double(base % N) / N, double(base / N) / N);
    auto out = detail::compare_patch(win, mk, R, patch, Cs, build_toeplitz(f, win).M, f0, detail::find_base_row(patch));
    out.patch_radius = rho;
    return out;
}

} // namespace bergkern
