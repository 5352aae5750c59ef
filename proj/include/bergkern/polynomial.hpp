#pragma once

#include <map>
#include <numeric>
#include <vector>

#include "core.hpp"

// Sparse multivariate polynomials with complex coefficients.
// Monomials are ordered graded-lexicographically on the exponent vector.

namespace bergkern {

using Monomial = std::vector<int>;

struct GradedLex {
    bool operator()(const Monomial& a, const Monomial& b) const {
        const int da = std::accumulate(a.begin(), a.end(), 0);
        const int db = std::accumulate(b.begin(), b.end(), 0);
        if (da != db) return da < db;
        return a < b;
    }
};

enum class Parity { zero, even, odd, mixed };

inline const char* parity_name(Parity p) {
    switch (p) {
        case Parity::zero: return "zero";
        case Parity::even: return "even";
        case Parity::odd: return "odd";
        default: return "mixed";
    }
}

class Polynomial {
public:
    using Terms = std::map<Monomial, cplx, GradedLex>;

    Polynomial() = default;
    explicit Polynomial(int nvars) : nvars_(nvars) {}

    static Polynomial constant(int nvars, cplx c) { return monomial(nvars, Monomial(nvars, 0), c); }

    static Polynomial variable(int nvars, int i, cplx c = 1.0) {
        Monomial m(nvars, 0);
        m.at(i) = 1;
        return monomial(nvars, m, c);
    }

    static Polynomial monomial(int nvars, const Monomial& m, cplx c = 1.0) {
        if (static_cast<int>(m.size()) != nvars) throw invalid_input("polynomial: exponent length mismatch");
        Polynomial p(nvars);
        p.add_term(m, c);
        return p;
    }

    int nvars() const { return nvars_; }
    const Terms& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

    cplx coeff(const Monomial& m) const {
        auto it = terms_.find(m);
        return it == terms_.end() ? cplx(0.0) : it->second;
    }

    void add_term(const Monomial& m, cplx c) {
        if (static_cast<int>(m.size()) != nvars_) throw invalid_input("polynomial: exponent length mismatch");
        if (c == cplx(0.0)) return;
        auto [it, inserted] = terms_.emplace(m, c);
        if (!inserted) {
            it->second += c;
            if (it->second == cplx(0.0)) terms_.erase(it);
        }
    }

    int degree() const {
        int d = -1;
        for (const auto& [m, c] : terms_) d = std::max(d, std::accumulate(m.begin(), m.end(), 0));
        return d;
    }

    Parity parity() const {
        bool even = false, odd = false;
        for (const auto& [m, c] : terms_) (std::accumulate(m.begin(), m.end(), 0) % 2 ? odd : even) = true;
        if (!even && !odd) return Parity::zero;
        if (even && odd) return Parity::mixed;
        return even ? Parity::even : Parity::odd;
    }

    double max_abs_coeff() const {
        double m = 0.0;
        for (const auto& [e, c] : terms_) m = std::max(m, std::abs(c));
        return m;
    }

    Polynomial& prune(double tol) {
        for (auto it = terms_.begin(); it != terms_.end();) it = std::abs(it->second) < tol ? terms_.erase(it) : std::next(it);
        return *this;
    }

    Polynomial& operator+=(const Polynomial& o) {
        check_same(o);
        for (const auto& [m, c] : o.terms_) add_term(m, c);
        return *this;
    }
    Polynomial& operator-=(const Polynomial& o) {
        check_same(o);
        for (const auto& [m, c] : o.terms_) add_term(m, -c);
        return *this;
    }
    Polynomial& operator*=(cplx s) {
        if (s == cplx(0.0)) terms_.clear();
        for (auto& [m, c] : terms_) c *= s;
        return *this;
    }

    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
    friend Polynomial operator*(Polynomial a, cplx s) { return a *= s; }
    friend Polynomial operator*(cplx s, Polynomial a) { return a *= s; }

    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        a.check_same(b);
        Polynomial r(a.nvars_);
        Monomial m(a.nvars_);
        for (const auto& [ma, ca] : a.terms_)
            for (const auto& [mb, cb] : b.terms_) {
                for (int i = 0; i < a.nvars_; ++i) m[i] = ma[i] + mb[i];
                r.add_term(m, ca * cb);
            }
        return r;
    }

    Polynomial pow(int k) const {
        Polynomial r = constant(nvars_, 1.0);
        for (int i = 0; i < k; ++i) r = r * *this;
        return r;
    }

    cplx evaluate(const std::vector<cplx>& x) const {
        if (static_cast<int>(x.size()) != nvars_) throw invalid_input("polynomial: evaluation point has wrong length");
        cplx s = 0.0;
        for (const auto& [m, c] : terms_) {
            cplx t = c;
            for (int i = 0; i < nvars_; ++i)
                for (int e = 0; e < m[i]; ++e) t *= x[i];
            s += t;
        }
        return s;
    }

    // x_i -> images[i]; all images share one variable count.
    Polynomial substitute(const std::vector<Polynomial>& images) const {
        if (static_cast<int>(images.size()) != nvars_) throw invalid_input("substitute: need one image per variable");
        const int nv = images.empty() ? 0 : images.front().nvars();
        for (const auto& im : images)
            if (im.nvars() != nv) throw invalid_input("substitute: images have different variable counts");
        std::vector<std::vector<Polynomial>> powers(nvars_);
        Polynomial r(nv);
        for (const auto& [m, c] : terms_) {
            Polynomial t = constant(nv, c);
            for (int i = 0; i < nvars_; ++i) {
                if (m[i] == 0) continue;
                auto& pw = powers[i];
                if (pw.empty()) pw.push_back(constant(nv, 1.0));
                while (static_cast<int>(pw.size()) <= m[i]) pw.push_back(pw.back() * images[i]);
                t = t * pw[m[i]];
            }
            r += t;
        }
        return r;
    }

    // Multiplies every monomial by (-1)^(sum of exponents over [first, first + count)).
    Polynomial negate_vars(int first, int count) const {
        Polynomial r(nvars_);
        for (const auto& [m, c] : terms_) {
            int s = 0;
            for (int i = first; i < first + count; ++i) s += m.at(i);
            r.add_term(m, s % 2 ? -c : c);
        }
        return r;
    }

    // x -> x + shift
    Polynomial shift(const std::vector<cplx>& shift) const {
        if (static_cast<int>(shift.size()) != nvars_) throw invalid_input("shift: wrong length");
        std::vector<Polynomial> im;
        for (int i = 0; i < nvars_; ++i) im.push_back(variable(nvars_, i) + constant(nvars_, shift[i]));
        return substitute(im);
    }

private:
    void check_same(const Polynomial& o) const {
        if (o.nvars_ != nvars_) throw invalid_input("polynomial: dimension mismatch");
    }

    int nvars_ = 0;
    Terms terms_;
};

inline double coeff_distance(const Polynomial& a, const Polynomial& b) { return (a - b).max_abs_coeff(); }

} // namespace bergkern
