#pragma once

#include "fjpower/errors.hpp"
#include "fjpower/fj.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <locale>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace fjpower {

/// One (solver, K) outcome of an experiment. Ids are 0-based in memory and
/// written 1-based, sorted and ';'-separated.
struct ReportRow {
    std::string solver;
    std::size_t k = 0;
    AgentSet selected;
    double sp0 = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> sp0_mc;
    /// 1^T p0.
    double raw = std::numeric_limits<double>::quiet_NaN();
    double wall_ms = 0.0;
    std::size_t evaluations = 0;
    std::uint64_t seed = 0;
};

inline constexpr const char* kNA = "NA";

/// 12 significant digits, or NA for non-finite values.
inline std::string format_number(double x) {
    if (!std::isfinite(x)) return kNA;
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::setprecision(12) << x;
    return os.str();
}

inline double parse_number(const std::string& s) {
    if (s == kNA) return std::numeric_limits<double>::quiet_NaN();
    std::istringstream is(s);
    is.imbue(std::locale::classic());
    double v = 0.0;
    if (!(is >> v) || !is.eof()) throw InvalidArgument("bad number '" + s + "'");
    return v;
}

inline std::string format_ids(const AgentSet& s) {
    std::string out;
    for (auto i : canonical(s)) {
        if (!out.empty()) out += ';';
        out += std::to_string(i + 1);
    }
    return out;
}

inline AgentSet parse_ids(const std::string& s) {
    AgentSet out;
    std::istringstream is(s);
    for (std::string tok; std::getline(is, tok, ';');) {
        if (tok.empty()) continue;
        const auto v = std::stoull(tok);
        if (v < 1) throw InvalidArgument("agent ids are 1-based");
        out.push_back(static_cast<std::size_t>(v - 1));
    }
    return canonical(out);
}

inline constexpr const char* kReportHeader =
    "solver,K,selected,sp0,sp0_mc,raw,wall_ms,evaluations,seed";

/// Canonical order: solver tag, then K, then seed.
inline void sort_rows(std::vector<ReportRow>& rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
        return std::tie(a.solver, a.k, a.seed) < std::tie(b.solver, b.k, b.seed);
    });
}

inline void write_report(std::ostream& out, const std::vector<ReportRow>& rows) {
    out << kReportHeader << '\n';
    for (const auto& r : rows) {
        out << r.solver << ',' << r.k << ',' << format_ids(r.selected) << ',' << format_number(r.sp0)
            << ',' << (r.sp0_mc ? format_number(*r.sp0_mc) : std::string(kNA)) << ','
            << format_number(r.raw) << ',' << format_number(r.wall_ms) << ',' << r.evaluations << ','
            << r.seed << '\n';
    }
}

inline std::vector<ReportRow> read_report(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kReportHeader)
        throw ParseError(1, "missing report header");
    std::vector<ReportRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::istringstream is(line);
        for (std::string tok; std::getline(is, tok, ',');) f.push_back(tok);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        if (f.size() != 9) throw ParseError(lineno, "expected 9 fields");
        try {
            ReportRow r;
            r.solver = f[0];
            r.k = static_cast<std::size_t>(std::stoull(f[1]));
            r.selected = parse_ids(f[2]);
            r.sp0 = parse_number(f[3]);
            if (f[4] != kNA) r.sp0_mc = parse_number(f[4]);
            r.raw = parse_number(f[5]);
            r.wall_ms = parse_number(f[6]);
            r.evaluations = static_cast<std::size_t>(std::stoull(f[7]));
            r.seed = std::stoull(f[8]);
            rows.push_back(std::move(r));
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(lineno, e.what());
        }
    }
    return rows;
}

/// Sample Pearson correlation; nullopt when either series is constant.
inline std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y,
                                     const std::vector<double>& weight = {}) {
    const auto n = x.size();
    if (n != y.size() || n < 2) return std::nullopt;
    auto w = [&](std::size_t i) { return weight.empty() ? 1.0 : weight[i]; };
    double sw = 0, mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sw += w(i);
        mx += w(i) * x[i];
        my += w(i) * y[i];
    }
    mx /= sw;
    my /= sw;
    double sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += w(i) * (x[i] - mx) * (x[i] - mx);
        syy += w(i) * (y[i] - my) * (y[i] - my);
        sxy += w(i) * (x[i] - mx) * (y[i] - my);
    }
    // Spreads at rounding level count as constant.
    auto flat = [&](double ss, double m) {
        const double tol = 1e-12 * std::max(1.0, std::abs(m));
        return ss / sw <= tol * tol;
    };
    if (flat(sxx, mx) || flat(syy, my)) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

} // namespace fjpower
