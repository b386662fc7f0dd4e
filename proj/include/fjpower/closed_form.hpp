#pragma once

#include "fjpower/errors.hpp"
#include "fjpower/fj.hpp"
#include "fjpower/graph.hpp"
#include "fjpower/optimizer.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace fjpower {

// ------------------------------------------------------------ rank-1 graphs

/// Complete graph W = 1 c^T: every agent listens to agent j with weight c_j.
struct Rank1Model {
    std::vector<double> c;
    Stubbornness theta;
    double omega = 0.0;

    Rank1Model(std::vector<double> centrality, Stubbornness th, double w)
        : c(std::move(centrality)), theta(std::move(th)), omega(w) {
        if (c.empty() || c.size() != theta.size())
            throw InvalidArgument("centrality and stubbornness lengths differ");
        double sum = 0.0;
        for (double x : c) {
            if (!(x >= 0.0)) throw InvalidArgument("centrality must be nonnegative");
            sum += x;
        }
        if (std::abs(sum - 1.0) > kStochasticTol) throw NotNormalized(sum);
        if (!(omega >= 0.0 && omega < 1.0)) throw DomainError("omega must lie in [0,1)");
    }

    std::size_t size() const noexcept { return c.size(); }

    StochasticGraph graph() const {
        const auto n = static_cast<Eigen::Index>(c.size());
        Matrix w(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) w(i, j) = c[static_cast<std::size_t>(j)];
        return StochasticGraph::validated(std::move(w));
    }
};

/// max over |S| = K of sum_S b / (a0 + sum_S a).
struct HyperbolicInstance {
    double a0 = 0.0;
    std::vector<double> a;
    std::vector<double> b;
    std::size_t k = 1;
};

struct HyperbolicSolution {
    AgentSet selected;
    /// Optimal ratio sum_S b / (a0 + sum_S a).
    double t_star = 0.0;
};

/// Closed-form sp_0 on a rank-1 graph; no linear solve.
inline double rank1_sp0(const Rank1Model& m, const AgentSet& s) {
    const auto n = m.size();
    double a0 = 0.0, slack = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        a0 += m.c[j] * m.theta[j];
        slack += 1.0 - m.theta[j];
    }
    double num = 0.0, den = a0;
    for (auto i : canonical(s)) {
        if (i >= n) throw InvalidArgument("agent id out of range");
        const double keep = 1.0 - m.theta[i];
        num += (a0 + m.c[i] * slack) * keep;
        den += m.omega * m.c[i] * keep;
    }
    const double ratio = num == 0.0 ? 0.0 : num / den;
    return (1.0 + m.omega * ratio) / static_cast<double>(n + 1);
}

/// a0 = sum c_j theta_j, a_i = omega c_i (1 - theta_i),
/// b_i = [sum c_j theta_j + c_i sum (1 - theta_j)] (1 - theta_i).
inline HyperbolicInstance rank1_parameters(const Rank1Model& m, std::size_t k = 1) {
    const auto n = m.size();
    HyperbolicInstance h;
    h.k = k;
    double slack = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        h.a0 += m.c[j] * m.theta[j];
        slack += 1.0 - m.theta[j];
    }
    h.a.resize(n);
    h.b.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double keep = 1.0 - m.theta[i];
        h.a[i] = m.omega * m.c[i] * keep;
        h.b[i] = (h.a0 + m.c[i] * slack) * keep;
    }
    return h;
}

inline double hyperbolic_objective(const HyperbolicInstance& h, const AgentSet& s) {
    double num = 0.0, den = h.a0;
    for (auto i : s) {
        num += h.b[i];
        den += h.a[i];
    }
    if (num == 0.0) return 0.0;
    if (!(den > 0.0)) throw DomainError("hyperbolic denominator must be positive");
    return num / den;
}

/// sp_0 from the hyperbolic ratio.
inline double rank1_sp0_from_ratio(double ratio, double omega, std::size_t n) {
    return (1.0 + omega * ratio) / static_cast<double>(n + 1);
}

namespace detail {

/// K indices with the largest b_i - t a_i; ties go to the lower index.
inline AgentSet top_k_at(const HyperbolicInstance& h, double t) {
    std::vector<std::size_t> ids(h.a.size());
    std::iota(ids.begin(), ids.end(), 0);
    std::stable_sort(ids.begin(), ids.end(), [&](std::size_t x, std::size_t y) {
        return h.b[x] - t * h.a[x] > h.b[y] - t * h.a[y];
    });
    ids.resize(h.k);
    return canonical(ids);
}

} // namespace detail

/// Parametric search over the orderings of b_i - t a_i. The ordering only
/// changes at swap times (b_i - b_j)/(a_i - a_j); one probe per interval
/// between them covers every top-K set the optimum can take, and a probe
/// is accepted when re-sorting at its own ratio leaves the ratio unchanged.
inline HyperbolicSolution hyperbolic_solve(const HyperbolicInstance& h) {
    const auto n = h.a.size();
    if (h.b.size() != n) throw InvalidArgument("a and b lengths differ");
    if (h.k < 1 || h.k > n) throw BudgetExceedsN(h.k, n);

    std::vector<double> times;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (h.a[i] != h.a[j]) times.push_back((h.b[i] - h.b[j]) / (h.a[i] - h.a[j]));
    std::sort(times.begin(), times.end());
    std::vector<double> uniq;
    for (double t : times)
        if (uniq.empty() || t - uniq.back() > 1e-12) uniq.push_back(t);

    std::vector<double> probes;
    if (uniq.empty()) {
        probes.push_back(0.0);
    } else {
        probes.push_back(uniq.front() - 1.0);
        for (std::size_t m = 0; m + 1 < uniq.size(); ++m)
            probes.push_back(0.5 * (uniq[m] + uniq[m + 1]));
        probes.push_back(uniq.back() + 1.0);
    }

    std::optional<HyperbolicSolution> best;
    for (double probe : probes) {
        const auto s = detail::top_k_at(h, probe);
        const double t = hyperbolic_objective(h, s);
        const auto s2 = detail::top_k_at(h, t);
        const double t2 = hyperbolic_objective(h, s2);
        if (std::abs(t2 - t) > 1e-12 * std::max(1.0, std::abs(t))) continue;
        if (!best || t > best->t_star + kTieTol ||
            (std::abs(t - best->t_star) <= kTieTol && s < best->selected))
            best = HyperbolicSolution{s, t};
    }
    if (!best) throw NoFixedPoint();
    return *best;
}

namespace detail {

inline bool all_close(const std::vector<double>& x, double tol) {
    return std::all_of(x.begin(), x.end(), [&](double v) { return std::abs(v - x.front()) <= tol; });
}

/// The k indices with the largest (or smallest) key, lowest index first on ties.
inline AgentSet extreme_k(const std::vector<double>& key, std::size_t k, bool largest) {
    std::vector<std::size_t> ids(key.size());
    std::iota(ids.begin(), ids.end(), 0);
    std::stable_sort(ids.begin(), ids.end(), [&](std::size_t x, std::size_t y) {
        return largest ? key[x] > key[y] : key[x] < key[y];
    });
    ids.resize(k);
    return canonical(ids);
}

} // namespace detail

/// Closed forms for three special rank-1 patterns: uniform theta (largest
/// c), uniform c (smallest theta), and constant c_i (1 - theta_i)
/// (smallest theta). Throws PremiseNotMatched otherwise.
inline AgentSet rank1_special_solve(const Rank1Model& m, std::size_t k) {
    const auto n = m.size();
    if (k < 1 || k > n) throw BudgetExceedsN(k, n);
    constexpr double tol = 1e-12;
    const auto& th = m.theta.values();
    if (detail::all_close(th, tol)) return detail::extreme_k(m.c, k, true);
    if (detail::all_close(m.c, tol)) return detail::extreme_k(th, k, false);
    std::vector<double> prod(n);
    for (std::size_t i = 0; i < n; ++i) prod[i] = m.c[i] * (1.0 - th[i]);
    if (detail::all_close(prod, tol)) return detail::extreme_k(th, k, false);
    throw PremiseNotMatched();
}

// ------------------------------------------------------------ circulant rings

struct RingModel {
    RingSpec spec;
    double theta = 0.5;
    double omega = 0.0;
    /// (m_0, ..., m_{n-1}) of M^{-1}, filled by ring_solve_K2.
    std::vector<double> inverse_generator;
};

/// Generator of (I - (1 - theta) W)^{-1} for the ring W. Row r of a
/// circulant holds m_{(c - r) mod n}, so the first column of the inverse
/// is (m_0, m_{n-1}, ..., m_1).
inline std::vector<double> circulant_inverse(double theta, const RingSpec& spec) {
    if (!(theta > 0.0 && theta < 1.0)) throw DomainError("theta must lie in (0,1)");
    const auto g = ring_generator(spec);
    const auto n = spec.n;
    const auto N = static_cast<Eigen::Index>(n);
    const Matrix M = Matrix::Identity(N, N) - (1.0 - theta) * build_circulant({g});
    const Eigen::FullPivLU<Matrix> lu(M);
    if (!lu.isInvertible()) throw SingularSystem("ring system is singular");
    const Vector x = lu.solve(Vector::Unit(N, 0));
    std::vector<double> m(n);
    for (std::size_t l = 0; l < n; ++l) m[l] = x[static_cast<Eigen::Index>((n - l) % n)];
    return m;
}

/// K = 2 on a ring with agent 1 fixed: the partner j minimizes m_{j-1}.
/// Returns 0-based ids {0, j - 1}; ties go to the smallest j.
inline AgentSet ring_solve_K2(RingModel& ring) {
    ring.inverse_generator = circulant_inverse(ring.theta, ring.spec);
    const auto& m = ring.inverse_generator;
    std::size_t best = 1;
    for (std::size_t l = 2; l < m.size(); ++l)
        if (m[l] < m[best] - kTieTol) best = l;
    return {0, best};
}

/// Shortest cyclic distance between two agents.
inline std::size_t ring_distance(std::size_t i, std::size_t j, std::size_t n) {
    const auto d = i > j ? i - j : j - i;
    return std::min(d, n - d);
}

/// 1 - |sum of unit vectors at angles 2 pi i / n| / |S| over 0-based i in S.
inline double circular_variance(const AgentSet& s, std::size_t n) {
    if (s.empty()) throw EmptySet();
    double cx = 0.0, cy = 0.0;
    for (auto i : s) {
        const double phi = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
        cx += std::cos(phi);
        cy += std::sin(phi);
    }
    const double r = 1.0 - std::hypot(cx, cy) / static_cast<double>(s.size());
    return std::clamp(r, 0.0, 1.0);
}

/// Strict-run premise: u_i > u_{i+1} and v_j > v_{j+1} with i >= j.
struct StrictPremise {
    std::size_t i = 0;
    std::size_t j = 0;
};

struct ProductCheck {
    bool ok = true;
    /// First index h where the check failed (r_h vs r_{h+1}).
    std::optional<std::size_t> violating_index;
    std::string what;
    /// Half generator of U V.
    std::vector<double> product;
};

/// Multiplies the symmetric circulants with half generators u and v on n
/// agents and checks that the product's half generator is nonincreasing.
/// With a strict premise it also checks r_h > r_{h+1} for h from i - j up
/// to h*, where h* = min(i + j, 2s - 3 - i - j) for odd n = 2s - 1 and
/// min(i + j, 2s - 2 - i - j) for even n = 2s.
inline ProductCheck circulant_monotone_product_check(const std::vector<double>& u,
                                                     const std::vector<double>& v, std::size_t n,
                                                     std::optional<StrictPremise> strict = {},
                                                     double tol = 1e-12) {
    const auto len = ring_half_length(n);
    if (u.size() != len || v.size() != len)
        throw InvalidArgument("half generators need " + std::to_string(len) + " entries");
    for (std::size_t h = 0; h + 1 < len; ++h)
        if (u[h] < u[h + 1] || v[h] < v[h + 1] || u[h + 1] < 0.0 || v[h + 1] < 0.0)
            throw InvalidArgument("half generators must be nonincreasing and nonnegative");

    auto expand = [&](const std::vector<double>& half) {
        std::vector<double> g(n);
        for (std::size_t l = 0; l < n; ++l) g[l] = half[std::min(l, n - l)];
        return g;
    };
    const Matrix r = build_circulant({expand(u)}) * build_circulant({expand(v)});
    ProductCheck out;
    out.product.resize(len);
    for (std::size_t h = 0; h < len; ++h) out.product[h] = r(0, static_cast<Eigen::Index>(h));
    const auto& p = out.product;

    for (std::size_t h = 0; h + 1 < len; ++h) {
        if (p[h + 1] > p[h] + tol) {
            out.ok = false;
            out.violating_index = h;
            out.what = "product half generator increases";
            return out;
        }
    }
    if (!strict) return out;

    const auto [i, j] = *strict;
    if (i < j || i + 1 >= len || !(u[i] > u[i + 1]) || !(v[j] > v[j + 1]))
        throw InvalidArgument("strict premise does not hold");
    const bool odd = n % 2 == 1;
    const long long s = odd ? static_cast<long long>((n + 1) / 2) : static_cast<long long>(n / 2);
    const long long ij = static_cast<long long>(i + j);
    const long long hstar = std::min(ij, (odd ? 2 * s - 3 : 2 * s - 2) - ij);
    for (long long h = static_cast<long long>(i - j); h <= hstar; ++h) {
        const auto H = static_cast<std::size_t>(h);
        if (!(p[H] > p[H + 1])) {
            out.ok = false;
            out.violating_index = H;
            out.what = "strict decrease fails";
            return out;
        }
    }
    return out;
}

} // namespace fjpower
