// Compose polynomial-weighted model kernels and compare one value with quadrature.

#include <cstdio>

#include <bergkern/kernel_calculus.hpp>

namespace {

void show(const char* label, const bergkern::PolyKernel& K) {
    std::printf("%s  (degree %d, %s)\n", label, K.degree(), bergkern::parity_name(K.parity()));
    for (const auto& [m, c] : K.poly.terms())
        std::printf("  Z^(%d,%d) Z'^(%d,%d)  %+.6f %+.6fi\n", m[0], m[1], m[2], m[3], c.real(), c.imag());
}

} // namespace

int main() {
    using namespace bergkern;
    const auto mk = ModelKernel::standard();
    const auto one = PolyKernel::constant(1, 1.0);
    show("K[1,1]", compose(one, one, mk));
    const auto F = PolyKernel::Z(1, 0), G = PolyKernel::Zp(1, 0);
    const auto K = compose(F, G, mk);
    show("K[Z1, Z'1]", K);
    show("K[Z1 Z2, 1]", compose(F * PolyKernel::Z(1, 1), one, mk));

    Vec Z(2), Zp(2);
    Z << 0.3, -0.2;
    Zp << -0.1, 0.4;
    const cplx sym = K.evaluate(Z, Zp) * eval_P(mk, Z, Zp);
    const cplx quad = quadrature_compose(F, G, mk, Z, Zp, 6.0, 0.05);
    std::printf("symbolic %.12f%+.12fi  quadrature %.12f%+.12fi\n", sym.real(), sym.imag(), quad.real(), quad.imag());
}
