#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "kernel_calculus.hpp"
#include "torus_model.hpp"

// CSV / JSON emission. Floats use 17 significant digits and '.' independent of locale.

namespace bergkern::io {

using json = nlohmann::ordered_json;

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

using Cell = std::variant<long long, double, std::string>;

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(std::vector<Cell> row) {
        if (row.size() != header_.size()) throw invalid_input("csv: row width does not match header");
        rows_.push_back(std::move(row));
    }

    std::size_t rows() const { return rows_.size(); }

    std::string str() const {
        std::string out;
        for (std::size_t i = 0; i < header_.size(); ++i) out += (i ? "," : "") + header_[i];
        out += '\n';
        for (const auto& r : rows_) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                if (i) out += ',';
                std::visit(
                    [&](const auto& v) {
                        using T = std::decay_t<decltype(v)>;
                        if constexpr (std::is_same_v<T, double>) out += format_double(v);
                        else if constexpr (std::is_same_v<T, long long>) out += std::to_string(v);
                        else out += v;
                    },
                    r[i]);
            }
            out += '\n';
        }
        return out;
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<Cell>> rows_;
};

// Write to a sibling temporary file, then rename over the target.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        os << content;
        if (!os) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

inline json matrix_json(const Mat& m) {
    json rows = json::array();
    for (long i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (long j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(r);
    }
    return rows;
}

// complex matrices as {"re": [[..]], "im": [[..]]}
inline json matrix_json(const CMat& m) { return json{{"re", matrix_json(Mat(m.real()))}, {"im", matrix_json(Mat(m.imag()))}}; }

inline json poly_json(const PolyKernel& F) {
    json terms = json::array();
    const int d = F.dim();
    for (const auto& [m, c] : F.poly.terms()) {
        json t;
        t["alpha"] = std::vector<int>(m.begin(), m.begin() + d);
        t["alpha_prime"] = std::vector<int>(m.begin() + d, m.end());
        t["re"] = c.real();
        t["im"] = c.imag();
        terms.push_back(t);
    }
    return terms;
}

inline PolyKernel poly_from_json(const json& j, int n) {
    PolyKernel F = PolyKernel::zero(n);
    for (const auto& t : j) {
        auto a = t.at("alpha").get<std::vector<int>>();
        auto ap = t.at("alpha_prime").get<std::vector<int>>();
        F = F + PolyKernel::from_exponents(n, a, ap, cplx(t.at("re").get<double>(), t.at("im").get<double>()));
    }
    return F;
}

inline CsvTable spectrum_csv(const std::vector<SpectralWindow>& wins) {
    CsvTable t({"p", "index", "eigenvalue"});
    for (const auto& w : wins)
        for (long i = 0; i < w.eigenvalues.size(); ++i) t.add_row({(long long)w.p, (long long)i, w.eigenvalues(i)});
    return t;
}

} // namespace bergkern::io
