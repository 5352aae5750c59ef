#pragma once

#include <map>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>

#include "core.hpp"
#include "model_kernel.hpp"
#include "polynomial.hpp"

// Operators with kernels F(Z,Z') P(Z,Z'), F polynomial, and their composition
//   (F P) o (G P) = K[F,G] P.

namespace bergkern {

inline constexpr int max_moment_degree = 12;
inline constexpr double prune_threshold = 1e-13;

// F(Z, Z') stored as a polynomial in the 4n variables (Z_1..Z_2n, Z'_1..Z'_2n).
struct PolyKernel {
    int n = 1;
    Polynomial poly{4};

    PolyKernel() = default;
    PolyKernel(int n_, Polynomial p) : n(n_), poly(std::move(p)) {
        if (poly.nvars() != 4 * n) throw invalid_input("PolyKernel: polynomial must have 4n variables");
    }

    int dim() const { return 2 * n; }
    static PolyKernel constant(int n, cplx c) { return {n, Polynomial::constant(4 * n, c)}; }
    static PolyKernel zero(int n) { return {n, Polynomial(4 * n)}; }
    static PolyKernel Z(int n, int i) { return {n, Polynomial::variable(4 * n, i)}; }
    static PolyKernel Zp(int n, int i) { return {n, Polynomial::variable(4 * n, 2 * n + i)}; }

    static PolyKernel from_exponents(int n, const Monomial& alpha, const Monomial& alpha_prime, cplx c) {
        if (static_cast<int>(alpha.size()) != 2 * n || static_cast<int>(alpha_prime.size()) != 2 * n)
            throw invalid_input("PolyKernel: exponent vectors must have length 2n");
        Monomial m(alpha);
        m.insert(m.end(), alpha_prime.begin(), alpha_prime.end());
        return {n, Polynomial::monomial(4 * n, m, c)};
    }

    int degree() const { return poly.degree(); }
    Parity parity() const { return poly.parity(); }

    cplx evaluate(const Vec& z, const Vec& zp) const {
        std::vector<cplx> x;
        for (int i = 0; i < dim(); ++i) x.emplace_back(z(i));
        for (int i = 0; i < dim(); ++i) x.emplace_back(zp(i));
        return poly.evaluate(x);
    }

    PolyKernel flip_Z() const { return {n, poly.negate_vars(0, dim())}; }
    PolyKernel flip_Zp() const { return {n, poly.negate_vars(dim(), dim())}; }
    PolyKernel flip_both() const { return {n, poly.negate_vars(0, 2 * dim())}; }

    friend PolyKernel operator+(const PolyKernel& a, const PolyKernel& b) { return {a.n, a.poly + b.poly}; }
    friend PolyKernel operator-(const PolyKernel& a, const PolyKernel& b) { return {a.n, a.poly - b.poly}; }
    friend PolyKernel operator*(const PolyKernel& a, const PolyKernel& b) { return {a.n, a.poly * b.poly}; }
    friend PolyKernel operator*(cplx s, const PolyKernel& a) { return {a.n, s * a.poly}; }
};

struct GaussianMomentProblem {
    CMat S;   // complex symmetric, Re S positive definite
    CVec ell;
    Polynomial Q;
};

// E[U^beta] for a centered formal Gaussian with complex symmetric covariance,
// by the Wick recursion E[U_i U^g] = sum_j Sigma_ij g_j E[U^(g - e_j)].
class WickMoments {
public:
    explicit WickMoments(CMat sigma) : sigma_(std::move(sigma)) {}

    cplx operator()(const Monomial& beta) {
        const int deg = std::accumulate(beta.begin(), beta.end(), 0);
        if (deg > max_moment_degree)
            throw capability_error("gaussian moment of degree " + std::to_string(deg) + " exceeds the cap " +
                                   std::to_string(max_moment_degree));
        if (deg == 0) return 1.0;
        if (deg % 2) return 0.0;
        auto it = memo_.find(beta);
        if (it != memo_.end()) return it->second;
        int i = 0;
        while (beta[i] == 0) ++i;
        Monomial g = beta;
        g[i] -= 1;
        cplx s = 0.0;
        for (int j = 0; j < static_cast<int>(g.size()); ++j) {
            if (g[j] == 0 || sigma_(i, j) == cplx(0.0)) continue;
            Monomial r = g;
            r[j] -= 1;
            s += sigma_(i, j) * static_cast<double>(g[j]) * (*this)(r);
        }
        memo_.emplace(beta, s);
        return s;
    }

private:
    CMat sigma_;
    std::map<Monomial, cplx> memo_;
};

namespace detail {

inline void require_positive_real_part(const CMat& S) {
    Mat re = S.real();
    if (max_abs(Mat(re - re.transpose())) > 1e-12 * std::max(1.0, max_abs(re)) ||
        max_abs(Mat(S.imag() - S.imag().transpose())) > 1e-12 * std::max(1.0, max_abs(S)))
        throw invalid_input("gaussian moment: S must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (re + re.transpose()));
    if (es.eigenvalues().minCoeff() <= 0.0) throw invalid_input("gaussian moment: Re S is not positive definite");
}

// pi^{m/2} / sqrt(det S), branch continued from the real part: product of
// principal roots of the eigenvalues (all in the right half plane).
inline cplx gaussian_normalization(const CMat& S) {
    Eigen::ComplexEigenSolver<CMat> es(S, false);
    cplx prod = 1.0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) prod /= std::sqrt(es.eigenvalues()(i));
    return std::pow(pi, 0.5 * static_cast<double>(S.rows())) * prod;
}

// Sum_beta c_beta E[U^beta] with the U variables at [first, first + m).
inline Polynomial integrate_out(const Polynomial& P, int first, int m, WickMoments& moments, int keep) {
    Polynomial out(keep);
    Monomial rest(keep), beta(m);
    for (const auto& [mono, c] : P.terms()) {
        for (int i = 0; i < m; ++i) beta[i] = mono[first + i];
        const cplx e = moments(beta);
        if (e == cplx(0.0)) continue;
        for (int i = 0; i < keep; ++i) rest[i] = mono[i];
        out.add_term(rest, c * e);
    }
    return out;
}

} // namespace detail

inline cplx gaussian_moment(const GaussianMomentProblem& prob) {
    const int m = static_cast<int>(prob.S.rows());
    if (prob.S.cols() != m || prob.ell.size() != m || prob.Q.nvars() != m)
        throw invalid_input("gaussian moment: dimension mismatch");
    detail::require_positive_real_part(prob.S);
    if (prob.Q.degree() > max_moment_degree)
        throw capability_error("gaussian moment: polynomial degree exceeds the cap");
    Eigen::PartialPivLU<CMat> lu(prob.S);
    const CMat Sinv = lu.inverse();
    const CVec w0 = 0.5 * Sinv * prob.ell;
    const cplx expo = 0.25 * (prob.ell.transpose() * Sinv * prob.ell)(0, 0);
    std::vector<cplx> shift(w0.data(), w0.data() + m);
    Polynomial shifted = prob.Q.shift(shift);
    WickMoments moments(0.5 * Sinv);
    Polynomial c = detail::integrate_out(shifted, 0, m, moments, 0);
    const cplx mean = c.coeff(Monomial{});
    return detail::gaussian_normalization(prob.S) * std::exp(expo) * mean;
}

namespace detail {

// Data of the W-integral in P(Z,W) P(W,Z') = P(Z,Z') * c * exp(-1/2 <S U, U>),
// W = W0(Z,Z') + U, W0 = M1 Z + M2 Z'.
struct CompositionData {
    Mat S;
    CMat M1, M2;
    CMat sigma;        // covariance of U
    cplx constant;     // c^2 pi^n / sqrt(det(S/2)) / c, must equal 1
};

inline CompositionData composition_data(const ModelKernel& mk) {
    const int d = 2 * mk.n;
    CompositionData cd;
    cd.S = mk.sqrtJcal2;
    const CMat S = cd.S.cast<cplx>();
    const CMat Sinv = S.inverse();
    cd.M1 = 0.5 * Sinv * (S + mk.Jcal);
    cd.M2 = 0.5 * Sinv * (S - mk.Jcal);
    cd.sigma = Sinv;
    cd.constant = mk.prefactor() * gaussian_normalization(0.5 * S);
    (void)d;
    return cd;
}

// Exponent bookkeeping check at a few deterministic points.
inline double composition_identity_defect(const ModelKernel& mk, const CompositionData& cd) {
    const int d = 2 * mk.n;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = std::abs(cd.constant - 1.0);
    const CMat S = cd.S.cast<cplx>();
    for (int t = 0; t < 3; ++t) {
        Vec z(d), zp(d);
        for (int i = 0; i < d; ++i) z(i) = u(rng), zp(i) = u(rng);
        const CVec Z = z.cast<cplx>(), Zp = zp.cast<cplx>();
        const CVec ell = 0.5 * (S + mk.Jcal) * Z + 0.5 * (S - mk.Jcal) * Zp;
        const cplx lhs = -0.25 * (Z.transpose() * S * Z)(0, 0) - 0.25 * (Zp.transpose() * S * Zp)(0, 0) +
                         0.5 * (ell.transpose() * S.inverse() * ell)(0, 0);
        const cplx rhs = std::log(eval_P(mk, z, zp) / mk.prefactor());
        worst = std::max(worst, std::abs(std::exp(lhs - rhs) - 1.0));
    }
    return worst;
}

} // namespace detail

inline PolyKernel compose(const PolyKernel& F, const PolyKernel& G, const ModelKernel& mk) {
    if (F.n != mk.n || G.n != mk.n) throw invalid_input("compose: dimension mismatch");
    const int d = 2 * mk.n;
    if (F.poly.is_zero() || G.poly.is_zero()) return PolyKernel::zero(mk.n);
    if (F.degree() + G.degree() > max_moment_degree)
        throw capability_error("compose: total degree exceeds the moment cap");
    const auto cd = detail::composition_data(mk);
    if (detail::composition_identity_defect(mk, cd) > 1e-10)
        throw std::logic_error("compose: Gaussian bookkeeping does not reproduce the model kernel");

    // variables of the expanded integrand: Z (0..d-1), Z' (d..2d-1), U (2d..3d-1)
    const int nv = 3 * d;
    std::vector<Polynomial> W(d, Polynomial(nv));
    for (int i = 0; i < d; ++i) {
        W[i] += Polynomial::variable(nv, 2 * d + i);
        for (int j = 0; j < d; ++j) {
            W[i] += Polynomial::variable(nv, j, cd.M1(i, j));
            W[i] += Polynomial::variable(nv, d + j, cd.M2(i, j));
        }
    }
    std::vector<Polynomial> imF, imG;
    for (int i = 0; i < d; ++i) imF.push_back(Polynomial::variable(nv, i));
    for (int i = 0; i < d; ++i) imF.push_back(W[i]);
    for (int i = 0; i < d; ++i) imG.push_back(W[i]);
    for (int i = 0; i < d; ++i) imG.push_back(Polynomial::variable(nv, d + i));
    Polynomial integrand = F.poly.substitute(imF) * G.poly.substitute(imG);
    WickMoments moments(cd.sigma);
    Polynomial K = detail::integrate_out(integrand, 2 * d, d, moments, 2 * d);
    K *= cd.constant;
    K.prune(prune_threshold);
    return {mk.n, K};
}

// int F(Z,W) P(Z,W) G(W,Z') P(W,Z') dW by the trapezoid rule on [-R,R]^2 (n = 1).
// Equals K[F,G](Z,Z') P(Z,Z') up to quadrature error.
inline cplx quadrature_compose(const PolyKernel& F, const PolyKernel& G, const ModelKernel& mk, const Vec& Z,
                               const Vec& Zp, double R, double h) {
    if (mk.n != 1) throw capability_error("quadrature_compose: implemented for n = 1");
    return trapezoid_2d(R, h, [&](double x, double y) {
        Vec W(2);
        W << x, y;
        return F.evaluate(Z, W) * eval_P(mk, Z, W) * G.evaluate(W, Zp) * eval_P(mk, W, Zp);
    });
}

// Random kernel of total degree <= degree, coefficients uniform in the unit disc.
template <class Rng>
PolyKernel random_poly_kernel(int n, int degree, Rng& rng, int terms = 4) {
    std::uniform_int_distribution<int> var(0, 4 * n - 1), deg(0, degree);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Polynomial P(4 * n);
    for (int t = 0; t < terms; ++t) {
        Monomial m(4 * n, 0);
        const int d = deg(rng);
        for (int k = 0; k < d; ++k) ++m[var(rng)];
        cplx c;
        do c = cplx(u(rng), u(rng));
        while (std::abs(c) >= 1.0);
        P.add_term(m, c);
    }
    return {n, P};
}

using TaylorJet = std::map<Monomial, cplx>;  // alpha -> d^alpha f(x0) / alpha!

// Q_r(f) = sum_{r1 + r2 + |alpha| = r} K[F_{0,r1}, (d^alpha f / alpha!) Z^alpha F_{0,r2}].
inline PolyKernel toeplitz_symbol_Q(const TaylorJet& jet, const std::vector<PolyKernel>& F_list, int r,
                                    const ModelKernel& mk) {
    if (r < 0) throw invalid_input("toeplitz_symbol_Q: r must be nonnegative");
    if (static_cast<int>(F_list.size()) < r + 1) throw invalid_input("toeplitz_symbol_Q: missing F_{0,s} entries");
    const int d = 2 * mk.n;
    // all multi-indices of order <= r must be present
    std::vector<Monomial> alphas;
    std::function<void(Monomial&, int, int)> gen = [&](Monomial& a, int i, int left) {
        if (i == d) {
            alphas.push_back(a);
            return;
        }
        for (int k = 0; k <= left; ++k) {
            a[i] = k;
            gen(a, i + 1, left - k);
        }
        a[i] = 0;
    };
    Monomial a(d, 0);
    gen(a, 0, r);
    for (const auto& al : alphas)
        if (!jet.count(al)) throw invalid_input("toeplitz_symbol_Q: jet lacks a derivative of order <= r");

    PolyKernel Q = PolyKernel::zero(mk.n);
    for (const auto& al : alphas) {
        const int order = std::accumulate(al.begin(), al.end(), 0);
        const cplx coef = jet.at(al);
        if (coef == cplx(0.0)) continue;
        Monomial zal(al), zero(d, 0);
        const PolyKernel za = PolyKernel::from_exponents(mk.n, zal, zero, coef);
        for (int r1 = 0; r1 + order <= r; ++r1) {
            const int r2 = r - order - r1;
            Q = Q + compose(F_list[r1], za * F_list[r2], mk);
        }
    }
    Q.poly.prune(prune_threshold);
    return Q;
}

} // namespace bergkern
