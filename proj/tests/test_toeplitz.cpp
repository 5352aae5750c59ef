#include <gtest/gtest.h>

#include <map>
#include <random>

#include <bergkern/toeplitz.hpp>

using namespace bergkern;

namespace {

const SpectralWindow& window(int p) {
    static std::map<int, SpectralWindow> cache;
    auto it = cache.find(p);
    if (it == cache.end()) it = cache.emplace(p, solve_torus(p)).first;
    return it->second;
}

SymbolFunction random_real_symbol(std::mt19937_64& rng, int modes = 3) {
    std::uniform_int_distribution<int> k(-2, 2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SymbolFunction f;
    for (int m = 0; m < modes; ++m) {
        const int a = k(rng), b = k(rng);
        const cplx c(u(rng), u(rng));
        f.add(a, b, c);
        f.add(-a, -b, std::conj(c));
    }
    return f;
}

bool is_hermitian(const CMat& A, double tol) { return max_abs(CMat(A - A.adjoint())) <= tol; }

} // namespace

TEST(Symbol, EvaluationAndDerivatives) {
    auto f = SymbolFunction::cos_x();
    EXPECT_NEAR(std::abs(f(0.0, 0.3) - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(f(0.5, 0.3) + 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(f.dx()(0.25, 0.0) + two_pi), 0.0, 1e-13);
    EXPECT_TRUE(f.is_real());
    EXPECT_FALSE(SymbolFunction::mode(1, 0, 1.0).is_real());
    EXPECT_NEAR(std::abs(SymbolFunction::sin_y()(0.0, 0.25) - 1.0), 0.0, 1e-15);
}

TEST(Symbol, PoissonBracketOfCosines) {
    // {cos 2 pi x, cos 2 pi y} / 2 pi = 2 pi sin 2 pi x sin 2 pi y
    auto pb = poisson_2pi(SymbolFunction::cos_x(), SymbolFunction::cos_y());
    for (double x : {0.1, 0.37})
        for (double y : {0.2, 0.81})
            EXPECT_NEAR(std::abs(pb(x, y) - two_pi * std::sin(two_pi * x) * std::sin(two_pi * y)), 0.0, 1e-12);
}

TEST(Symbol, TaylorJet) {
    auto f = SymbolFunction::cos_x() + SymbolFunction::sin_y();
    auto jet = f.taylor_jet(0.1, 0.2, 2);
    EXPECT_NEAR(std::abs(jet.at({0, 0}) - f(0.1, 0.2)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(jet.at({1, 0}) + two_pi * std::sin(two_pi * 0.1)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(jet.at({0, 2}) + 0.5 * two_pi * two_pi * std::sin(two_pi * 0.2)), 0.0, 1e-11);
    EXPECT_NEAR(std::abs(jet.at({1, 1})), 0.0, 1e-12);
}

TEST(Toeplitz, UnitSymbolIsIdentity) {
    const auto& w = window(3);
    const CMat T = build_toeplitz(SymbolFunction::constant(1.0), w).M;
    EXPECT_LT(max_abs(CMat(T - CMat::Identity(3, 3))), 1e-10);
}

TEST(Toeplitz, ConstantSymbolIsScalar) {
    const auto& w = window(4);
    const cplx c(0.7, -0.2);
    const CMat T = build_toeplitz(SymbolFunction::constant(c), w).M;
    EXPECT_LT(max_abs(CMat(T - c * CMat::Identity(4, 4))), 1e-10);
}

TEST(Toeplitz, EmptyClusterRejected) {
    SpectralWindow w = window(2);
    w.cluster_boundary_index = 0;
    EXPECT_THROW(build_toeplitz(SymbolFunction::constant(1.0), w), range_error);
}

TEST(ToeplitzProperty, HermitianAndNormBounded) {
    std::mt19937_64 rng(5);
    const auto& w = window(4);
    for (int t = 0; t < 10; ++t) {
        auto f = random_real_symbol(rng);
        const CMat T = build_toeplitz(f, w).M;
        EXPECT_TRUE(is_hermitian(T, 1e-10));
        EXPECT_LE(op_norm(T), f.max_abs_on_lattice(w.N) + 1e-9);
    }
}

TEST(ToeplitzProperty, LinearAndAdjoint) {
    std::mt19937_64 rng(6);
    const auto& w = window(3);
    for (int t = 0; t < 10; ++t) {
        auto f = random_real_symbol(rng), g = random_real_symbol(rng);
        g.add(1, 2, cplx(0.3, 0.4));  // not real
        const cplx a(0.4, 1.2), b(-2.0, 0.1);
        const CMat lhs = build_toeplitz(a * f + b * g, w).M;
        const CMat rhs = a * build_toeplitz(f, w).M + b * build_toeplitz(g, w).M;
        EXPECT_LT(max_abs(CMat(lhs - rhs)), 1e-10);
        EXPECT_LT(max_abs(CMat(build_toeplitz(g.conj(), w).M - build_toeplitz(g, w).M.adjoint())), 1e-10);
    }
}

TEST(ToeplitzProperty, NonnegativeSymbolGivesPositiveOperator) {
    std::mt19937_64 rng(7);
    const auto& w = window(4);
    for (int t = 0; t < 10; ++t) {
        auto f = random_real_symbol(rng);
        auto sq = f * f;
        Eigen::SelfAdjointEigenSolver<CMat> es(build_toeplitz(sq, w).M);
        EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
    }
}

TEST(Toeplitz, SelfCommutatorVanishes) {
    std::vector<SpectralWindow> ws{window(2), window(4)};
    auto f = SymbolFunction::cos_x() + SymbolFunction::sin_y();
    auto t = commutator_poisson_check(f, f, ws);
    for (const auto& r : t.rows) EXPECT_LT(r.value, 1e-9);
}

TEST(Toeplitz, UnitProductHasNoDefect) {
    std::vector<SpectralWindow> ws{window(2), window(3)};
    auto one = SymbolFunction::constant(1.0);
    auto t = product_defect(one, one, ws);
    for (const auto& r : t.rows) EXPECT_LT(r.value, 1e-9);
}

TEST(Toeplitz, DefectTableBookkeeping) {
    auto t = finish_table({{8, 0.2}, {2, 1.0}, {4, 0.5}});
    ASSERT_EQ(t.rows.size(), 3u);
    EXPECT_EQ(t.rows[0].p, 2);
    EXPECT_TRUE(t.decreasing);
    ASSERT_EQ(t.doubling.size(), 2u);
    EXPECT_DOUBLE_EQ(t.doubling[0].second, 0.5);
    EXPECT_DOUBLE_EQ(t.doubling[1].second, 0.4);
    EXPECT_FALSE(finish_table({{2, 1.0}, {4, 1.0}}).decreasing);
}

TEST(Toeplitz, KernelDecayEpsilonRange) {
    const auto& w = window(16);
    EXPECT_THROW(toeplitz_kernel_decay(SymbolFunction::cos_x(), w, 0.1), range_error);
    EXPECT_THROW(toeplitz_kernel_decay(SymbolFunction::cos_x(), w, 0.45), range_error);
    auto d = toeplitz_kernel_decay(SymbolFunction::cos_x(), w, 0.3);
    EXPECT_EQ(d.base_points, 64);
    EXPECT_GT(d.max_modulus, 0.0);
}

TEST(Toeplitz, LeadingSymbolOfUnitIsBergmanComparison) {
    // R / sqrt(p) below the patch cap: both comparisons cover the same ball
    const auto& w = window(16);
    const auto mk = ModelKernel::standard();
    auto a = leading_symbol_check(SymbolFunction::constant(1.0), w, mk, 0, 1.0);
    auto b = rescaled_comparison(w, mk, 1.0);
    EXPECT_EQ(a.pairs, b.pairs);
    EXPECT_NEAR(a.sup_error, b.sup_error, 1e-9);
}

TEST(Toeplitz, LeadingSymbolRadiusGuard) {
    const auto mk = ModelKernel::standard();
    EXPECT_THROW(leading_symbol_check(SymbolFunction::cos_x(), window(4), mk, 0, 1.0), range_error);
    EXPECT_THROW(leading_symbol_check(SymbolFunction::cos_x(), window(16), mk, 0, 2.0), range_error);
}
