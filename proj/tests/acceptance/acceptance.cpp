// acceptance <criterion 1..12> --cli <path to bergkern> --work <scratch dir>
//
// Prints one PASS/FAIL line for the criterion and exits nonzero on FAIL.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <bergkern/bergkern.hpp>

using namespace bergkern;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Outcome {
    std::string title;
    bool pass = false;
    std::string measured;
    std::string threshold;
};

std::string num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

std::map<int, SpectralWindow>& cache() {
    static std::map<int, SpectralWindow> c;
    return c;
}

const SpectralWindow& window(int p) {
    auto it = cache().find(p);
    if (it == cache().end()) it = cache().emplace(p, solve_torus(p)).first;
    return it->second;
}

std::vector<SpectralWindow> windows(const std::vector<int>& ps) {
    std::vector<SpectralWindow> w;
    for (int p : ps) w.push_back(window(p));
    return w;
}

Outcome c1_model_projector() {
    const auto mk = ModelKernel::standard();
    const auto one = PolyKernel::constant(1, 1.0);
    const double coef = coeff_distance(compose(one, one, mk).poly, one.poly);
    double res = 0.0;
    const std::vector<std::array<double, 4>> pts{{0, 0, 0, 0}, {1, 0, 0, 1}, {0.5, -0.3, 0.2, 0.4}, {-0.7, 0.6, 0.3, -0.5}};
    for (const auto& q : pts) {
        Vec Z(2), Zp(2);
        Z << q[0], q[1];
        Zp << q[2], q[3];
        res = std::max(res, reproducing_residual(mk, Z, Zp, 5.0, 0.05).residual);
    }
    return {"model projector idempotence", coef <= 1e-12 && res <= 1e-6,
            "coef_err=" + num(coef) + " residual=" + num(res), "coef_err<=1e-12 residual<=1e-6 (R=5, h=0.05)"};
}

Outcome c2_calculus_oracle() {
    const auto mk = ModelKernel::standard();
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    double worst = 0.0;
    bool deg_ok = true, par_ok = true;
    auto parity_is = [&](const PolyKernel& A, const PolyKernel& B, Parity want) {
        const Parity got = compose(A, B, mk).parity();
        return got == Parity::zero || got == want;
    };
    for (int t = 0; t < 20; ++t) {
        const auto F = random_poly_kernel(1, 3, rng), G = random_poly_kernel(1, 3, rng);
        const auto K = compose(F, G, mk);
        double n = 0.0, d = 0.0;
        for (int s = 0; s < 4; ++s) {
            Vec Z(2), Zp(2);
            Z << u(rng), u(rng);
            Zp << u(rng), u(rng);
            const cplx q = quadrature_compose(F, G, mk, Z, Zp, 6.0, 0.05);
            n = std::max(n, std::abs(K.evaluate(Z, Zp) * eval_P(mk, Z, Zp) - q));
            d = std::max(d, std::abs(q));
        }
        worst = std::max(worst, d > 0.0 ? n / d : n);
        deg_ok = deg_ok && (K.poly.is_zero() || K.degree() <= F.degree() + G.degree());
        const PolyKernel Fe{1, 0.5 * (F.poly + F.flip_both().poly)}, Fo{1, 0.5 * (F.poly - F.flip_both().poly)};
        const PolyKernel Ge{1, 0.5 * (G.poly + G.flip_both().poly)}, Go{1, 0.5 * (G.poly - G.flip_both().poly)};
        par_ok = par_ok && parity_is(Fe, Ge, Parity::even) && parity_is(Fo, Go, Parity::even) &&
                 parity_is(Fe, Go, Parity::odd) && parity_is(Fo, Ge, Parity::odd);
    }
    return {"calculus vs quadrature oracle", worst <= 1e-6 && deg_ok && par_ok,
            "rel_err=" + num(worst) + " degree=" + (deg_ok ? "ok" : "bad") + " parity=" + (par_ok ? "ok" : "bad"),
            "rel_err<=1e-6 on 20 pairs, degree and parity hold"};
}

Outcome c3_spectral_gap() {
    const auto t0 = std::chrono::steady_clock::now();
    auto ws = windows({4, 8, 12, 16});
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    auto rep = gap_report(ws);
    bool ratio_ok = true, dbl_ok = !rep.doubling.empty();
    std::string m;
    for (const auto& r : rep.rows) {
        ratio_ok = ratio_ok && r.ratio >= 0.9 && r.ratio <= 1.02;
        m += "ratio" + std::to_string(r.p) + "=" + num(r.ratio) + " ";
    }
    for (auto [p, v] : rep.doubling) {
        dbl_ok = dbl_ok && v >= 1.9 && v <= 2.1;
        m += "dbl" + std::to_string(p) + "=" + num(v) + " ";
    }
    m += "C_L=" + num(rep.C_L) + " separated=" + (rep.separated ? "yes" : "no") + " time=" + num(secs) + "s";
    return {"spectral gap", rep.separated && ratio_ok && dbl_ok && secs <= 180.0, m,
            "one C_L separates cluster from [4 pi p - C_L, inf); ratio in [0.9,1.02]; doubling in [1.9,2.1]; <=180s"};
}

Outcome c4_cluster_count() {
    bool ok = true;
    std::string bad;
    for (int p = 2; p <= 16; ++p) {
        const long n = solve_torus(p).cluster_size();
        if (n != p) {
            ok = false;
            bad += " p=" + std::to_string(p) + ":" + std::to_string(n);
        }
    }
    return {"cluster count equals p", ok, ok ? "all equal" : "mismatch" + bad, "count == p for p=2..16"};
}

Outcome c5_diagonal() {
    auto fit = diagonal_limit_check(windows({4, 8, 12, 16}));
    const bool ok = fit.a >= 0.95 && fit.a <= 1.05 && std::abs(fit.b) <= 0.05 * std::abs(fit.a);
    return {"diagonal leading coefficient", ok, "a=" + num(fit.a) + " b=" + num(fit.b) + " c=" + num(fit.c),
            "a in [0.95,1.05], |b| <= 0.05|a|"};
}

Outcome c6_near_diagonal() {
    const auto mk = ModelKernel::standard();
    const double s8 = rescaled_comparison(window(8), mk, 3.0).sup_error;
    const double s16 = rescaled_comparison(window(16), mk, 3.0).sup_error;
    const double r = s16 / s8;
    return {"near-diagonal model comparison", r >= 0.55 && r <= 0.85,
            "sup8=" + num(s8) + " sup16=" + num(s16) + " ratio=" + num(r), "ratio in [0.55,0.85]"};
}

Outcome c7_offdiagonal_decay() {
    auto fit = offdiagonal_decay_fit(window(16), 0.2, 0.249);
    // p and 4p at equal flux per plaquette; distances scaled by sqrt(16 / p)
    auto w16 = solve_low_spectrum(build_hamiltonian(TorusConfig::standard(16, 88)), 21);
    auto w64 = solve_low_spectrum(build_hamiltonian(TorusConfig::standard(64, 176)), 69);
    const double c16 = offdiagonal_decay_fit(w16, 0.2, 0.249).c_hat;
    const double c64 = offdiagonal_decay_fit(w64, 0.1, 0.1245).c_hat;
    const double rel = std::abs(c64 / c16 - 1.0);
    const bool ok = fit.c_hat > 0.0 && fit.majorizes && rel <= 0.3;
    return {"off-diagonal decay", ok,
            "c_hat16=" + num(fit.c_hat) + " majorizes=" + (fit.majorizes ? "yes" : "no") + " c_hat(16,N=88)=" +
                num(c16) + " c_hat(64,N=176)=" + num(c64) + " rel=" + num(rel),
            "c_hat>0, majorizes, |c_hat(4p)/c_hat(p)-1|<=0.3"};
}

Outcome c8_q1() {
    auto q = q1_boundedness_check(windows({4, 8, 12, 16}));
    std::string m;
    for (std::size_t i = 0; i < q.fit.values.size(); ++i)
        m += "v" + std::to_string(q.fit.p_list[i]) + "=" + num(q.fit.values[i]) + " ";
    return {"q=1 structure", q.max_le_2min && q.differences_decrease, m + "bound=" + num(q.bound),
            "max<=2min, successive differences decrease"};
}

Outcome c9_product() {
    auto t = product_defect(SymbolFunction::cos_x(), SymbolFunction::cos_y(), windows({4, 8, 16}));
    bool ok = t.doubling.size() == 2;
    std::string m;
    for (const auto& r : t.rows) m += "e1_" + std::to_string(r.p) + "=" + num(r.value) + " ";
    for (auto [p, v] : t.doubling) {
        ok = ok && v <= 0.7;
        m += "ratio" + std::to_string(p) + "=" + num(v) + " ";
    }
    return {"Toeplitz product", ok, m, "e1(2p)/e1(p) <= 0.7"};
}

Outcome c10_commutator() {
    auto ws = windows({4, 8, 16});
    const auto f = SymbolFunction::cos_x(), g = SymbolFunction::cos_y();
    auto t = commutator_poisson_check(f, g, ws);
    auto self = commutator_poisson_check(f, f, ws);
    double zero = 0.0;
    for (const auto& r : self.rows) zero = std::max(zero, r.value);
    bool ok = t.decreasing && t.doubling.size() == 2 && zero == 0.0;
    std::string m;
    for (const auto& r : t.rows) m += "e2_" + std::to_string(r.p) + "=" + num(r.value) + " ";
    for (auto [p, v] : t.doubling) {
        ok = ok && v <= 0.8;
        m += "ratio" + std::to_string(p) + "=" + num(v) + " ";
    }
    return {"commutator and Poisson bracket", ok, m + "self=" + num(zero), "decreasing, e2(2p)/e2(p)<=0.8, f=g gives 0"};
}

Outcome c11_kernel_localization() {
    const auto f = SymbolFunction::cos_x();
    const double m8 = toeplitz_kernel_decay(f, window(8), 0.3).max_modulus;
    const double m16 = toeplitz_kernel_decay(f, window(16), 0.3).max_modulus;
    const double r = m8 / m16;
    return {"Toeplitz kernel localization", r >= 5.0, "max8=" + num(m8) + " max16=" + num(m16) + " factor=" + num(r),
            "factor >= 5 at eps=0.3"};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(const std::string& cmd) {
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

Outcome c12_determinism(const std::string& cli, const fs::path& work) {
    const fs::path dir = work / "determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "config.json")
        << R"({"p_list": [2, 3, 4], "grid": {"policy": "explicit", "N": {"2": 32, "3": 40, "4": 48}}, "seed": 7,)"
        << R"( "compose": {"pairs": 4}})";
    std::vector<int> codes;
    for (const char* run_name : {"a", "b"})
        codes.push_back(run("\"" + cli + "\" all --config \"" + (dir / "config.json").string() + "\" --out \"" +
                            (dir / run_name).string() + "\" > \"" + (dir / run_name).string() + ".log\" 2>&1"));
    for (int c : codes)
        if (c != 0 && c != 1) return {"determinism", false, "cli exit code " + std::to_string(c), "two runs of all succeed"};

    std::set<std::string> names;
    for (const char* run_name : {"a", "b"})
        for (const auto& e : fs::directory_iterator(dir / run_name)) names.insert(e.path().filename().string());
    std::vector<std::string> differ;
    for (const auto& n : names) {
        std::string a = slurp(dir / "a" / n), b = slurp(dir / "b" / n);
        if (n == "summary.json") {
            auto ja = json::parse(a), jb = json::parse(b);
            ja["header"].erase("generated_at");
            jb["header"].erase("generated_at");
            a = ja.dump();
            b = jb.dump();
        }
        if (a != b) differ.push_back(n);
    }
    std::string m = std::to_string(names.size()) + " files compared";
    for (const auto& d : differ) m += ", differs: " + d;
    return {"determinism", differ.empty() && names.size() > 1, m, "identical files (summary timestamp excluded)"};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    int id = 0;
    std::string cli_path, work = "acceptance_work";
    app.add_option("criterion", id, "criterion number")->required()->check(CLI::Range(1, 12));
    app.add_option("--cli", cli_path, "path to the bergkern executable");
    app.add_option("--work", work, "scratch directory");
    CLI11_PARSE(app, argc, argv);

    Outcome o;
    try {
        switch (id) {
            case 1: o = c1_model_projector(); break;
            case 2: o = c2_calculus_oracle(); break;
            case 3: o = c3_spectral_gap(); break;
            case 4: o = c4_cluster_count(); break;
            case 5: o = c5_diagonal(); break;
            case 6: o = c6_near_diagonal(); break;
            case 7: o = c7_offdiagonal_decay(); break;
            case 8: o = c8_q1(); break;
            case 9: o = c9_product(); break;
            case 10: o = c10_commutator(); break;
            case 11: o = c11_kernel_localization(); break;
            case 12:
                if (cli_path.empty()) {
                    std::cerr << "acceptance: criterion 12 needs --cli\n";
                    return 2;
                }
                o = c12_determinism(cli_path, work);
                break;
        }
    } catch (const std::exception& e) {
        o.pass = false;
        o.title = "criterion " + std::to_string(id);
        o.measured = std::string("error: ") + e.what();
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << o.title << ": " << o.measured
              << " | threshold: " << o.threshold << std::endl;
    return o.pass ? 0 : 1;
}
