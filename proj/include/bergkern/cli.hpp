#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bergman.hpp"
#include "io.hpp"
#include "kernel_calculus.hpp"
#include "model_kernel.hpp"
#include "toeplitz.hpp"
#include "torus_model.hpp"

// Config-driven batch runs. One JSON config selects the suites, p values and grid;
// every run writes CSV/JSON tables plus summary.json into the output directory.

namespace bergkern::cli {

using io::json;
namespace fs = std::filesystem;

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> c{"model-kernel", "compose", "spectrum", "bergman", "toeplitz", "expansion", "all"};
    return c;
}

// Default thresholds, keyed by check name. Config "tolerances" may override any of them.
inline const std::map<std::string, double>& default_tolerances() {
    static const std::map<std::string, double> t{
        {"model.compose_identity", 1e-12},
        {"model.reproducing_residual", 1e-6},
        {"compose.oracle", 1e-6},
        {"spectrum.gap_ratio_lo", 0.9},
        {"spectrum.gap_ratio_hi", 1.02},
        {"spectrum.doubling_lo", 1.9},
        {"spectrum.doubling_hi", 2.1},
        {"bergman.diag_leading_lo", 0.95},
        {"bergman.diag_leading_hi", 1.05},
        {"bergman.diag_parity", 0.05},
        {"bergman.rescaled_shrink_lo", 0.55},
        {"bergman.rescaled_shrink_hi", 0.85},
        {"bergman.decay_scaling", 0.3},
        {"toeplitz.product_ratio", 0.7},
        {"toeplitz.commutator_ratio", 0.8},
        {"toeplitz.kernel_decay_factor", 5.0},
    };
    return t;
}

struct RunConfig {
    std::string command;
    std::vector<int> p_list{4, 8, 12, 16};
    bool explicit_grid = false;
    std::map<int, int> grid_N;
    std::map<std::string, double> tolerances = default_tolerances();
    std::string output_dir = "bergkern_out";
    std::uint64_t seed = 1;

    // model-kernel
    double model_R = 5.0, model_h = 0.05;
    // compose
    int compose_pairs = 20, compose_degree = 3;
    double compose_R = 6.0, compose_h = 0.05;
    // bergman
    double bergman_R = 3.0;
    std::optional<std::vector<int>> decay_p;
    double decay_lo = 0.2, decay_hi = 0.249;
    int decay_reference_p = 16;
    // toeplitz
    double toeplitz_eps = 0.3;
    int toeplitz_matrix_max_p = 8;
    // spectrum
    std::vector<int> dump_hamiltonian_p;

    double tol(const std::string& key) const { return tolerances.at(key); }

    int grid_for(int p) const {
        int N;
        if (explicit_grid) {
            auto it = grid_N.find(p);
            if (it == grid_N.end()) throw config_error("grid: explicit policy has no N for p = " + std::to_string(p));
            N = it->second;
        } else {
            N = TorusConfig::auto_N(p);
        }
        TorusConfig::standard(p, N).validate();
        return N;
    }
};

namespace detail {

template <class T>
T get_or(const json& j, const char* key, T dflt) {
    if (!j.contains(key)) return dflt;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw config_error(std::string("config: bad value for '") + key + "': " + e.what());
    }
}

inline void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw config_error("config: unknown key '" + it.key() + "' in " + where);
}

inline json section(const json& j, const char* key) {
    if (!j.contains(key)) return json::object();
    if (!j.at(key).is_object()) throw config_error(std::string("config: '") + key + "' must be an object");
    return j.at(key);
}

} // namespace detail

inline RunConfig parse_config(const json& j) {
    using detail::get_or;
    if (!j.is_object()) throw config_error("config: top level must be a JSON object");
    detail::reject_unknown(j, {"command", "p_list", "grid", "tolerances", "output_dir", "seed", "model", "compose",
                               "spectrum", "bergman", "toeplitz"},
                           "top level");
    RunConfig c;
    c.command = get_or<std::string>(j, "command", "");
    if (!c.command.empty() && std::find(commands().begin(), commands().end(), c.command) == commands().end())
        throw config_error("config: unknown command '" + c.command + "'");
    c.p_list = get_or<std::vector<int>>(j, "p_list", c.p_list);
    if (c.p_list.empty()) throw config_error("config: p_list is empty");
    for (int p : c.p_list)
        if (p < 1) throw config_error("config: p values must be positive");
    c.output_dir = get_or<std::string>(j, "output_dir", c.output_dir);
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);

    const json grid = detail::section(j, "grid");
    detail::reject_unknown(grid, {"policy", "N"}, "grid");
    const auto policy = get_or<std::string>(grid, "policy", "auto");
    if (policy != "auto" && policy != "explicit") throw config_error("config: grid.policy must be auto or explicit");
    c.explicit_grid = policy == "explicit";
    if (grid.contains("N")) {
        if (!grid.at("N").is_object()) throw config_error("config: grid.N must map p to N");
        for (auto it = grid.at("N").begin(); it != grid.at("N").end(); ++it) {
            int p = 0;
            try {
                p = std::stoi(it.key());
            } catch (const std::exception&) {
                throw config_error("config: grid.N key '" + it.key() + "' is not an integer");
            }
            if (!it.value().is_number_integer()) throw config_error("config: grid.N values must be integers");
            c.grid_N[p] = it.value().get<int>();
        }
    }
    if (c.explicit_grid && c.grid_N.empty()) throw config_error("config: explicit grid policy needs grid.N");

    const json tol = detail::section(j, "tolerances");
    for (auto it = tol.begin(); it != tol.end(); ++it) {
        if (!c.tolerances.count(it.key())) throw config_error("config: unknown tolerance '" + it.key() + "'");
        if (!it.value().is_number()) throw config_error("config: tolerance '" + it.key() + "' must be a number");
        c.tolerances[it.key()] = it.value().get<double>();
    }

    const json model = detail::section(j, "model");
    detail::reject_unknown(model, {"R", "h"}, "model");
    c.model_R = get_or(model, "R", c.model_R);
    c.model_h = get_or(model, "h", c.model_h);

    const json comp = detail::section(j, "compose");
    detail::reject_unknown(comp, {"pairs", "degree", "R", "h"}, "compose");
    c.compose_pairs = get_or(comp, "pairs", c.compose_pairs);
    c.compose_degree = get_or(comp, "degree", c.compose_degree);
    c.compose_R = get_or(comp, "R", c.compose_R);
    c.compose_h = get_or(comp, "h", c.compose_h);
    if (c.compose_pairs < 0 || c.compose_degree < 0 || 2 * c.compose_degree > max_moment_degree)
        throw config_error("config: compose.pairs/degree out of range");

    const json spect = detail::section(j, "spectrum");
    detail::reject_unknown(spect, {"dump_hamiltonian_p"}, "spectrum");
    c.dump_hamiltonian_p = get_or(spect, "dump_hamiltonian_p", c.dump_hamiltonian_p);

    const json berg = detail::section(j, "bergman");
    detail::reject_unknown(berg, {"R", "decay_p", "decay_range", "decay_reference_p"}, "bergman");
    c.bergman_R = get_or(berg, "R", c.bergman_R);
    if (berg.contains("decay_p")) c.decay_p = get_or<std::vector<int>>(berg, "decay_p", {});
    if (berg.contains("decay_range")) {
        auto r = get_or<std::vector<double>>(berg, "decay_range", {});
        if (r.size() != 2) throw config_error("config: bergman.decay_range needs two numbers");
        c.decay_lo = r[0];
        c.decay_hi = r[1];
    }
    c.decay_reference_p = get_or(berg, "decay_reference_p", c.decay_reference_p);

    const json toe = detail::section(j, "toeplitz");
    detail::reject_unknown(toe, {"eps", "matrix_max_p"}, "toeplitz");
    c.toeplitz_eps = get_or(toe, "eps", c.toeplitz_eps);
    c.toeplitz_matrix_max_p = get_or(toe, "matrix_max_p", c.toeplitz_matrix_max_p);

    for (int p : c.p_list) c.grid_for(p);
    return c;
}

inline RunConfig load_config(const fs::path& path) {
    std::string text;
    try {
        text = io::read_file(path);
    } catch (const std::exception& e) {
        throw config_error(std::string("config: ") + e.what());
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw config_error("config: parse error in " + path.string() + ": " + e.what());
    }
    return parse_config(j);
}

struct Check {
    std::string name;
    std::string anchor;  // the statement the check tests
    bool pass = false;
    json measured;
    std::string threshold;
};

// shortest round-trip form, for human-readable thresholds
inline std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

class Runner {
public:
    explicit Runner(RunConfig cfg) : cfg_(std::move(cfg)), out_(cfg_.output_dir) {}

    const std::vector<Check>& checks() const { return checks_; }
    bool all_pass() const {
        return std::all_of(checks_.begin(), checks_.end(), [](const Check& c) { return c.pass; });
    }

    void run(const std::string& command) {
        if (command == "model-kernel" || command == "all") model_kernel();
        if (command == "compose" || command == "all") compose_suite();
        if (command == "spectrum" || command == "all") spectrum();
        if (command == "bergman" || command == "all") bergman();
        if (command == "toeplitz" || command == "all") toeplitz();
        if (command == "expansion" || command == "all") expansion();
        write_summary(command);
    }

    const SpectralWindow& window(int p) {
        auto it = windows_.find(p);
        if (it != windows_.end()) return it->second;
        const int N = cfg_.grid_for(p);
        auto ml = build_hamiltonian(TorusConfig::standard(p, N));
        return windows_.emplace(p, solve_low_spectrum(ml, std::min<long>(ml.dim, p + 5))).first->second;
    }

private:
    void add(std::string name, std::string anchor, bool pass, json measured, std::string threshold) {
        checks_.push_back({std::move(name), std::move(anchor), pass, std::move(measured), std::move(threshold)});
    }

    void write(const std::string& file, const std::string& content) { io::atomic_write(out_ / file, content); }
    void write(const std::string& file, const json& j) { write(file, j.dump(2) + "\n"); }

    std::vector<const SpectralWindow*> windows(const std::vector<int>& ps) {
        std::vector<const SpectralWindow*> w;
        for (int p : ps) w.push_back(&window(p));
        return w;
    }

    static std::vector<std::pair<int, int>> doubling_pairs(const std::vector<int>& ps, int factor = 2) {
        std::vector<std::pair<int, int>> out;
        std::set<int> s(ps.begin(), ps.end());
        for (int p : s)
            if (s.count(factor * p)) out.emplace_back(p, factor * p);
        return out;
    }

    void model_kernel() {
        const auto mk = ModelKernel::standard();
        const PolyKernel one = PolyKernel::constant(1, 1.0);
        const PolyKernel K = compose(one, one, mk);
        const double coef_err = coeff_distance(K.poly, one.poly);
        add("model.compose_identity", "composition of the model projector with itself returns it: K[1,1] = 1",
            coef_err <= cfg_.tol("model.compose_identity"), coef_err, "<= " + fmt(cfg_.tol("model.compose_identity")));

        const std::vector<std::array<double, 4>> pts{
            {0, 0, 0, 0}, {0.5, -0.3, 0.2, 0.4}, {1.0, 0.0, 0.0, 1.0}, {-0.7, 0.6, 0.3, -0.5}, {1.2, 0.8, -0.4, 0.1}};
        double worst = 0.0, tail = 0.0;
        json rows = json::array();
        for (const auto& q : pts) {
            Vec Z(2), Zp(2);
            Z << q[0], q[1];
            Zp << q[2], q[3];
            auto rep = reproducing_residual(mk, Z, Zp, cfg_.model_R, cfg_.model_h);
            worst = std::max(worst, rep.residual);
            tail = std::max(tail, rep.tail_bound);
            rows.push_back(json{{"Z", {q[0], q[1]}}, {"Z_prime", {q[2], q[3]}}, {"residual", rep.residual},
                                {"tail_bound", rep.tail_bound}});
        }
        add("model.reproducing_residual", "P is a reproducing kernel: int P(Z,W) P(W,Z') dW = P(Z,Z')",
            worst <= cfg_.tol("model.reproducing_residual"), json{{"residual", worst}, {"tail_bound", tail}},
            "<= " + fmt(cfg_.tol("model.reproducing_residual")));

        json info;
        info["J0"] = io::matrix_json(mk.J0());
        info["Jcal"] = io::matrix_json(mk.Jcal);
        info["sqrtJcal2"] = io::matrix_json(mk.sqrtJcal2);
        info["detC"] = {mk.detC.real(), mk.detC.imag()};
        info["tau0"] = mk.tau0;
        info["box_R"] = cfg_.model_R;
        info["h"] = cfg_.model_h;
        info["reproducing"] = rows;
        write("model_kernel.json", info);

        io::CsvTable t({"Z1", "Z2", "Zp1", "Zp2", "re", "im"});
        for (int i = -4; i <= 4; ++i)
            for (int k = -4; k <= 4; ++k) {
                Vec Z(2), Zp = Vec::Zero(2);
                Z << 0.5 * i, 0.5 * k;
                const cplx v = eval_P(mk, Z, Zp);
                t.add_row({Z(0), Z(1), Zp(0), Zp(1), v.real(), v.imag()});
            }
        write("model_kernel_samples.csv", t.str());
    }

    void compose_suite() {
        const auto mk = ModelKernel::standard();
        std::mt19937_64 rng(cfg_.seed);
        std::uniform_real_distribution<double> u(-0.8, 0.8);
        double worst = 0.0;
        bool degree_ok = true, parity_ok = true;
        json cases = json::array();
        auto parity_ok_for = [&](const PolyKernel& A, const PolyKernel& B, Parity expect) {
            const Parity got = compose(A, B, mk).parity();
            return got == Parity::zero || got == expect;
        };
        for (int t = 0; t < cfg_.compose_pairs; ++t) {
            const PolyKernel F = random_poly_kernel(1, cfg_.compose_degree, rng);
            const PolyKernel G = random_poly_kernel(1, cfg_.compose_degree, rng);
            const PolyKernel K = compose(F, G, mk);
            double num = 0.0, den = 0.0;
            for (int s = 0; s < 4; ++s) {
                Vec Z(2), Zp(2);
                Z << u(rng), u(rng);
                Zp << u(rng), u(rng);
                const cplx quad = quadrature_compose(F, G, mk, Z, Zp, cfg_.compose_R, cfg_.compose_h);
                num = std::max(num, std::abs(K.evaluate(Z, Zp) * eval_P(mk, Z, Zp) - quad));
                den = std::max(den, std::abs(quad));
            }
            const double rel = den > 0.0 ? num / den : num;
            worst = std::max(worst, rel);
            const bool deg = K.poly.is_zero() || K.degree() <= F.degree() + G.degree();
            degree_ok = degree_ok && deg;
            // split into even and odd parts under (Z, Z') -> (-Z, -Z')
            const PolyKernel Fe{1, 0.5 * (F.poly + F.flip_both().poly)}, Fo{1, 0.5 * (F.poly - F.flip_both().poly)};
            const PolyKernel Ge{1, 0.5 * (G.poly + G.flip_both().poly)}, Go{1, 0.5 * (G.poly - G.flip_both().poly)};
            const bool par = parity_ok_for(Fe, Ge, Parity::even) && parity_ok_for(Fo, Go, Parity::even) &&
                             parity_ok_for(Fe, Go, Parity::odd) && parity_ok_for(Fo, Ge, Parity::odd);
            parity_ok = parity_ok && par;
            cases.push_back(json{{"F", io::poly_json(F)}, {"G", io::poly_json(G)}, {"K", io::poly_json(K)},
                                 {"relative_error", rel}, {"degree_ok", deg}, {"parity_ok", par}});
        }
        write("compose.json", json{{"seed", cfg_.seed}, {"box_R", cfg_.compose_R}, {"h", cfg_.compose_h}, {"cases", cases}});
        add("compose.oracle", "(F P) o (G P) = K[F,G] P, checked against grid quadrature of the W-integral",
            worst <= cfg_.tol("compose.oracle"), worst, "<= " + fmt(cfg_.tol("compose.oracle")));
        add("compose.degree", "deg K[F,G] <= deg F + deg G", degree_ok, degree_ok, "true");
        add("compose.parity", "K[F,G] has the product parity of F and G under (Z,Z') -> (-Z,-Z')", parity_ok,
            parity_ok, "true");
    }

    void spectrum() {
        std::vector<SpectralWindow> wins;
        for (auto* w : windows(cfg_.p_list)) wins.push_back(*w);
        write("spectra.csv", io::spectrum_csv(wins).str());
        for (int p : cfg_.dump_hamiltonian_p) {
            auto ml = build_hamiltonian(TorusConfig::standard(p, cfg_.grid_for(p)));
            std::ostringstream os;
            dump_coo(ml, os);
            write("hamiltonian_p" + std::to_string(p) + ".coo", os.str());
        }

        bool count_ok = true;
        for (const auto& w : wins) count_ok = count_ok && w.cluster_size() == w.p;
        json counts = json::object();
        for (const auto& w : wins) counts[std::to_string(w.p)] = w.cluster_size();
        add("spectrum.cluster_count", "dim H_p = p: the lowest cluster has exactly p eigenvalues", count_ok, counts,
            "== p");

        GapReport rep;
        try {
            rep = gap_report(wins);
        } catch (const range_error& e) {
            add("spectrum.gap", "spectrum splits into [-C_L, C_L] and [2 p mu0 - C_L, inf)", false, e.what(), "gap found");
            return;
        }
        io::CsvTable t({"p", "cluster_size", "cluster_max_abs", "excited", "ratio"});
        json rows = json::array();
        const double lo = cfg_.tol("spectrum.gap_ratio_lo"), hi = cfg_.tol("spectrum.gap_ratio_hi");
        bool ratio_ok = true;
        for (const auto& r : rep.rows) {
            t.add_row({(long long)r.p, (long long)r.cluster_size, r.cluster_max_abs, r.excited, r.ratio});
            rows.push_back(json{{"p", r.p}, {"cluster_max_abs", r.cluster_max_abs}, {"excited", r.excited}, {"ratio", r.ratio}});
            ratio_ok = ratio_ok && r.ratio >= lo && r.ratio <= hi;
        }
        write("gap_report.csv", t.str());
        json dbl = json::array();
        bool dbl_ok = true;
        for (auto [p, v] : rep.doubling) {
            dbl.push_back(json{{"p", p}, {"ratio", v}});
            dbl_ok = dbl_ok && v >= cfg_.tol("spectrum.doubling_lo") && v <= cfg_.tol("spectrum.doubling_hi");
        }
        write("gap_report.json", json{{"C_L", rep.C_L}, {"separated", rep.separated}, {"rows", rows}, {"doubling", dbl}});
        add("spectrum.uniform_C", "one constant C_L bounds the cluster and the gap deficit for every p", rep.separated,
            json{{"C_L", rep.C_L}}, "C_L < min_p p mu0");
        add("spectrum.gap_ratio", "first excited eigenvalue is close to 2 p mu0 = 4 pi p", ratio_ok, rows,
            "[" + fmt(lo) + ", " + fmt(hi) + "]");
        if (!rep.doubling.empty())
            add("spectrum.doubling", "excited eigenvalue grows linearly in p", dbl_ok, dbl,
                "[" + fmt(cfg_.tol("spectrum.doubling_lo")) + ", " + fmt(cfg_.tol("spectrum.doubling_hi")) + "]");
    }

    std::vector<int> decay_list() const {
        if (cfg_.decay_p) return *cfg_.decay_p;
        std::vector<int> out;
        for (int p : cfg_.p_list) {
            const double s = std::sqrt(double(cfg_.decay_reference_p) / p);
            if (cfg_.decay_lo * s > 2.0 / std::sqrt(two_pi * p) && cfg_.decay_hi * s < 0.25) out.push_back(p);
        }
        return out;
    }

    void bergman() {
        const auto mk = ModelKernel::standard();
        io::CsvTable resc({"p", "R", "sup_error", "patch_radius", "sampling_scale", "pairs"});
        std::map<int, double> sup;
        for (int p : cfg_.p_list) {
            const auto& w = window(p);
            if (w.cluster_size() <= 0) continue;
            auto rc = rescaled_comparison(w, mk, cfg_.bergman_R);
            sup[p] = rc.sup_error;
            resc.add_row({(long long)p, cfg_.bergman_R, rc.sup_error, rc.patch_radius, rc.sampling_scale, (long long)rc.pairs});
        }
        write("bergman_rescaled.csv", resc.str());
        const double lo = cfg_.tol("bergman.rescaled_shrink_lo"), hi = cfg_.tol("bergman.rescaled_shrink_hi");
        for (auto [p, q] : doubling_pairs(cfg_.p_list)) {
            if (!sup.count(p) || !sup.count(q) || sup[p] <= 0.0) continue;
            const double r = sup[q] / sup[p];
            add("bergman.rescaled_shrink_" + std::to_string(p) + "_" + std::to_string(q),
                "p^{-1} P_{0,p}(Z,Z') - P(sqrt p Z, sqrt p Z') = O(p^{-1/2}) on sqrt p |Z - Z'| <= R",
                r >= lo && r <= hi, json{{"sup_p", sup[p]}, {"sup_2p", sup[q]}, {"ratio", r}},
                "[" + fmt(lo) + ", " + fmt(hi) + "]");
        }

        io::CsvTable dec({"p", "d", "abs_P"});
        std::map<int, double> chat;
        json fits = json::array();
        for (int p : decay_list()) {
            const auto& w = window(p);
            const double s = std::sqrt(double(cfg_.decay_reference_p) / p);
            auto fit = offdiagonal_decay_fit(w, cfg_.decay_lo * s, cfg_.decay_hi * s);
            for (auto [d, v] : fit.samples) dec.add_row({(long long)p, d, v});
            chat[p] = fit.c_hat;
            fits.push_back(json{{"p", p}, {"c_hat", fit.c_hat}, {"prefactor", fit.prefactor},
                                {"adjustment", fit.adjustment}, {"samples", fit.samples.size()}});
            add("bergman.decay_p" + std::to_string(p), "|P_{0,p}(x,x')| <= C p exp(-c sqrt(mu0 p) |x - x'|)",
                fit.c_hat > 0.0 && fit.majorizes,
                json{{"c_hat", fit.c_hat}, {"adjustment", fit.adjustment}, {"majorizes", fit.majorizes}},
                "c_hat > 0 and majorizes");
        }
        write("bergman_decay.csv", dec.str());
        write("bergman_decay.json", fits);
        for (auto [p, q] : doubling_pairs(decay_list(), 4)) {
            const double rel = std::abs(chat[q] / chat[p] - 1.0);
            add("bergman.decay_scaling_" + std::to_string(p) + "_" + std::to_string(q),
                "decay rate scales as sqrt(p): c_hat agrees between p and 4p", rel <= cfg_.tol("bergman.decay_scaling"),
                json{{"c_hat_p", chat[p]}, {"c_hat_4p", chat[q]}, {"relative_difference", rel}},
                "<= " + fmt(cfg_.tol("bergman.decay_scaling")));
        }
    }

    void expansion() {
        std::vector<SpectralWindow> wins;
        for (auto* w : windows(cfg_.p_list)) wins.push_back(*w);
        io::CsvTable diag({"p", "q", "value"});
        for (const auto& w : wins)
            for (int q : {0, 1}) diag.add_row({(long long)w.p, (long long)q, diagonal_value(w, q)});
        write("bergman_diagonal.csv", diag.str());

        json fits = json::object();
        std::set<int> distinct(cfg_.p_list.begin(), cfg_.p_list.end());
        if (distinct.size() >= 3) {
            auto fit = diagonal_limit_check(wins);
            fits["q0"] = json{{"a", fit.a}, {"b", fit.b}, {"c", fit.c}, {"residual", fit.residual}};
            const double lo = cfg_.tol("bergman.diag_leading_lo"), hi = cfg_.tol("bergman.diag_leading_hi");
            add("expansion.diag_leading", "p^{-1} P_{0,p}(x,x) -> P(0,0) = detC / 2 pi = 1", fit.a >= lo && fit.a <= hi,
                fit.a, "[" + fmt(lo) + ", " + fmt(hi) + "]");
            const double par = cfg_.tol("bergman.diag_parity");
            add("expansion.diag_parity", "the p^{-1/2} coefficient vanishes on the diagonal (odd parity of r = 1)",
                std::abs(fit.b) <= par * std::abs(fit.a), json{{"a", fit.a}, {"b", fit.b}}, "|b| <= " + fmt(par) + " |a|");
        }
        if (distinct.size() >= 2) {
            auto q1 = q1_boundedness_check(wins);
            fits["q1"] = json{{"a", q1.fit.a}, {"b", q1.fit.b}, {"c", q1.fit.c}, {"residual", q1.fit.residual}};
            add("expansion.q1_no_growth", "F_{1,r} = 0 for r < 2: p^{-1} P_{1,p}(x,x) stays bounded", q1.max_le_2min,
                q1.bound, "max <= 2 min");
            if (distinct.size() >= 3)
                add("expansion.q1_differences", "p^{-1} P_{1,p}(x,x) converges: successive differences decrease",
                    q1.differences_decrease, q1.differences_decrease, "true");
        }
        write("bergman_fit.json", fits);

        // leading symbol of a Toeplitz kernel at x0 = 0: Q_0(f) = f(x0) with F_{0,0} = 1
        const auto mk = ModelKernel::standard();
        const auto f = SymbolFunction::cos_x() + SymbolFunction::sin_y();
        const PolyKernel Q0 = toeplitz_symbol_Q(f.taylor_jet(0.0, 0.0, 0), {PolyKernel::constant(1, 1.0)}, 0, mk);
        const double err = coeff_distance(Q0.poly, Polynomial::constant(4, f(0.0, 0.0)));
        add("expansion.symbol_Q0", "Q_0(f) = f(x0)", err <= 1e-12, err, "<= 1e-12");
    }

    void toeplitz() {
        const auto f = SymbolFunction::cos_x(), g = SymbolFunction::cos_y();
        std::vector<SpectralWindow> wins;
        for (auto* w : windows(cfg_.p_list)) wins.push_back(*w);
        auto e1 = product_defect(f, g, wins);
        auto e2 = commutator_poisson_check(f, g, wins);
        auto e2ff = commutator_poisson_check(f, f, wins);
        io::CsvTable t({"p", "e1", "e2"});
        for (std::size_t i = 0; i < e1.rows.size(); ++i) t.add_row({(long long)e1.rows[i].p, e1.rows[i].value, e2.rows[i].value});
        write("toeplitz_defects.csv", t.str());

        auto ratios = [](const DefectTable& d) {
            json r = json::array();
            for (auto [p, v] : d.doubling) r.push_back(json{{"p", p}, {"ratio", v}});
            return r;
        };
        const double pr = cfg_.tol("toeplitz.product_ratio"), cr = cfg_.tol("toeplitz.commutator_ratio");
        if (!e1.doubling.empty()) {
            bool ok = true;
            for (auto [p, v] : e1.doubling) ok = ok && v <= pr;
            add("toeplitz.product", "T_f T_g = T_{fg} + O(1/p)", ok, ratios(e1), "e1(2p)/e1(p) <= " + fmt(pr));
        }
        if (!e2.doubling.empty()) {
            bool ok = e2.decreasing;
            for (auto [p, v] : e2.doubling) ok = ok && v <= cr;
            add("toeplitz.commutator", "p [T_f, T_g] = i T_{{f,g}} + O(1/p), bracket on (X, 2 pi omega)", ok,
                json{{"decreasing", e2.decreasing}, {"doubling", ratios(e2)}}, "decreasing, e2(2p)/e2(p) <= " + fmt(cr));
        }
        double zero = 0.0;
        for (const auto& r : e2ff.rows) zero = std::max(zero, r.value);
        add("toeplitz.commutator_self", "[T_f, T_f] = 0 and {f, f} = 0", zero == 0.0, zero, "== 0");

        json mats = json::array();
        for (const auto& w : wins)
            if (w.p <= cfg_.toeplitz_matrix_max_p)
                mats.push_back(json{{"p", w.p}, {"symbol", "cos(2 pi x)"}, {"matrix", io::matrix_json(build_toeplitz(f, w).M)}});
        write("toeplitz_matrices.json", mats);

        io::CsvTable kd({"p", "eps", "max_modulus"});
        std::map<int, double> decay;
        for (const auto& w : wins) {
            if (!(cfg_.toeplitz_eps > 2.0 / std::sqrt(two_pi * w.p))) continue;
            auto k = toeplitz_kernel_decay(f, w, cfg_.toeplitz_eps);
            decay[w.p] = k.max_modulus;
            kd.add_row({(long long)w.p, cfg_.toeplitz_eps, k.max_modulus});
        }
        write("toeplitz_kernel_decay.csv", kd.str());
        const double fac = cfg_.tol("toeplitz.kernel_decay_factor");
        for (auto [p, q] : doubling_pairs(cfg_.p_list)) {
            if (!decay.count(p) || !decay.count(q)) continue;
            const double r = decay[q] > 0.0 ? decay[p] / decay[q] : std::numeric_limits<double>::infinity();
            add("toeplitz.kernel_decay_" + std::to_string(p) + "_" + std::to_string(q),
                "T_{f,p}(x,x') = O(p^{-infinity}) for |x - x'| > eps", r >= fac,
                json{{"max_p", decay[p]}, {"max_2p", decay[q]}, {"factor", r}}, ">= " + fmt(fac));
        }
    }

    void write_summary(const std::string& command) {
        json s;
        std::time_t now = std::time(nullptr);
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        s["header"] = json{{"generated_at", stamp}, {"command", command}, {"seed", cfg_.seed}, {"p_list", cfg_.p_list}};
        json grid = json::object();
        for (const auto& [p, w] : windows_) grid[std::to_string(p)] = w.N;
        s["grids"] = grid;
        json arr = json::array();
        for (const auto& c : checks_)
            arr.push_back(json{{"name", c.name}, {"anchor", c.anchor}, {"status", c.pass ? "pass" : "fail"},
                               {"measured", c.measured}, {"threshold", c.threshold}});
        s["checks"] = arr;
        s["all_pass"] = all_pass();
        write("summary.json", s);
    }

    RunConfig cfg_;
    fs::path out_;
    std::map<int, SpectralWindow> windows_;
    std::vector<Check> checks_;
};

} // namespace bergkern::cli
