// Lowest eigenvalues of the lattice Bochner-Laplacian for a few p, next to the
// continuum Landau levels 4 pi p k.

#include <cstdio>

#include <bergkern/torus_model.hpp>

int main() {
    using namespace bergkern;
    for (int p : {2, 4, 8}) {
        auto win = solve_torus(p, std::nullopt, p + 2);
        std::printf("p = %d  N = %d  cluster = %ld  C = %.4f\n", p, win.N, win.cluster_size(), win.window_C);
        for (long i = 0; i < win.eigenvalues.size(); ++i) {
            const long level = i < win.cluster_size() ? 0 : 1;
            std::printf("  %3ld  %12.6f   (Landau level %ld: %9.4f)\n", i, win.eigenvalues(i), level,
                        level * 2.0 * p * win.mu0);
        }
    }
}
