#pragma once

#include "fjpower/errors.hpp"
#include "fjpower/fj.hpp"
#include "fjpower/graph.hpp"
#include "fjpower/markov.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fjpower {

/// Two objective values closer than this are treated as tied, and the tie
/// goes to the lowest agent id (or the lexicographically smallest set).
/// Symmetric instances otherwise resolve ties by rounding noise.
inline constexpr double kTieTol = 1e-12;

struct SelectionReport {
    /// Agents in the order the solver picked them.
    AgentSet selected;
    double sp0 = std::numeric_limits<double>::quiet_NaN();
    /// 1^T p0 for the selected set.
    double raw = std::numeric_limits<double>::quiet_NaN();
    /// sp_0 increments along `selected`.
    std::vector<double> marginal_gains;
    std::string solver;
    std::size_t evaluations = 0;
};

/// How greedy scores a candidate set.
struct Evaluator {
    enum class Kind { Exact, Resolve, MonteCarlo };
    Kind kind = Kind::Exact;
    double epsilon = 0.01;
    double delta = 0.05;
    double sigma = 0.5;
    std::uint64_t seed = 0;
    unsigned threads = 1;

    /// Exact sp_0 via one factorization per round plus rank-one updates.
    static Evaluator exact() { return {}; }
    /// Exact sp_0 via a fresh LU solve per candidate.
    static Evaluator resolve() {
        Evaluator e;
        e.kind = Kind::Resolve;
        return e;
    }
    static Evaluator monte_carlo(double epsilon, double delta, double sigma, std::uint64_t seed,
                                 unsigned threads = 1) {
        Evaluator e;
        e.kind = Kind::MonteCarlo;
        e.epsilon = epsilon;
        e.delta = delta;
        e.sigma = sigma;
        e.seed = seed;
        e.threads = threads;
        return e;
    }
};

namespace detail {

inline bool contains(const AgentSet& s, std::size_t i) {
    return std::find(s.begin(), s.end(), i) != s.end();
}

inline std::string format_set(const AgentSet& s) {
    std::ostringstream os;
    os << '{';
    for (std::size_t k = 0; k < s.size(); ++k) os << (k ? "," : "") << s[k] + 1;
    os << '}';
    return os.str();
}

inline double exact_sp0(const StochasticGraph& g, const Stubbornness& theta, const AgentSet& s,
                        double omega) {
    return social_power_influencer(g, theta, InfluencerAction(s, omega));
}

/// Fills sp0, raw and the prefix gains of `r.selected`.
inline void finish_report(SelectionReport& r, const StochasticGraph& g, const Stubbornness& theta,
                          double omega) {
    const auto n = g.size();
    r.marginal_gains.clear();
    double prev = influencer_power_from_raw(0.0, n);
    AgentSet prefix;
    for (auto i : r.selected) {
        prefix.push_back(i);
        const double v = exact_sp0(g, theta, prefix, omega);
        r.marginal_gains.push_back(v - prev);
        prev = v;
    }
    r.sp0 = prev;
    r.raw = prev * static_cast<double>(n + 1) - 1.0;
}

/// sp_0(S + {i}) for every i outside S, from one inverse of I - H(S).
inline std::vector<double> rank_one_scores(const StochasticGraph& g, const Stubbornness& theta,
                                           const AgentSet& s, double omega) {
    const auto n = g.size();
    const auto N = static_cast<Eigen::Index>(n);
    const InfluencerAction act(s, omega, std::max<std::size_t>(1, s.size()));
    if (!check_augmented_condition(g, theta, act))
        throw SingularSystem("augmented system has an agent without a stubborn anchor");
    const Matrix A = Matrix::Identity(N, N) - transient_block(g, theta, act);
    const Eigen::PartialPivLU<Matrix> lu(A);
    const Matrix Z = lu.inverse();
    const Vector b = influencer_inflow(theta, act);
    const Vector x = Z * b;
    const Vector y = Z.colwise().sum().transpose(); // y^T = 1^T A^{-1}
    const double base = x.sum();

    std::vector<double> out(n, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < n; ++i) {
        if (contains(s, i)) continue;
        const auto I = static_cast<Eigen::Index>(i);
        // A' = A + omega e_i r_i^T with r_i = (1 - theta_i) W_i.
        const double keep = 1.0 - theta[i];
        const double rz = keep * g.weights().row(I).dot(Z.col(I));
        const double rx = keep * g.weights().row(I).dot(x);
        const double db = omega * keep; // b' = b + db e_i
        const double denom = 1.0 + omega * rz;
        const double raw = base + db * y[I] - omega * y[I] * (rx + db * rz) / denom;
        out[i] = influencer_power_from_raw(raw, n);
    }
    return out;
}

inline std::size_t binomial_capped(std::size_t n, std::size_t k, std::size_t cap) {
    k = std::min(k, n - k);
    double c = 1.0;
    for (std::size_t j = 1; j <= k; ++j) {
        c = c * static_cast<double>(n - k + j) / static_cast<double>(j);
        if (c > static_cast<double>(cap)) return cap + 1;
    }
    return static_cast<std::size_t>(std::llround(c));
}

} // namespace detail

inline double marginal_gain(const StochasticGraph& g, const Stubbornness& theta, double omega,
                            const AgentSet& s, std::size_t i) {
    if (detail::contains(s, i)) throw AlreadySelected(i);
    AgentSet t = s;
    t.push_back(i);
    return detail::exact_sp0(g, theta, t, omega) - detail::exact_sp0(g, theta, s, omega);
}

/// K rounds; each adds the unselected agent with the largest sp_0(S + {i}).
inline SelectionReport greedy_select(const StochasticGraph& g, const Stubbornness& theta,
                                     double omega, std::size_t k,
                                     const Evaluator& eval = Evaluator::exact()) {
    detail::check_dims(g, theta);
    const auto n = g.size();
    if (k < 1) throw InvalidArgument("budget must be at least 1");
    if (k > n) throw BudgetExceedsN(k, n);
    if (!(omega >= 0.0 && omega < 1.0)) throw DomainError("omega must lie in [0,1)");

    SelectionReport rep;
    rep.solver = "greedy";
    AgentSet s;
    for (std::size_t round = 0; round < k; ++round) {
        std::vector<double> score(n, std::numeric_limits<double>::quiet_NaN());
        switch (eval.kind) {
        case Evaluator::Kind::Exact:
            // I - H(S) can be singular before any agent is linked (for
            // instance theta = 0); fall back to per-candidate solves then.
            if (check_augmented_condition(g, theta, InfluencerAction(s, omega, std::max<std::size_t>(1, s.size())))) {
                score = detail::rank_one_scores(g, theta, s, omega);
                break;
            }
            [[fallthrough]];
        case Evaluator::Kind::Resolve:
            for (std::size_t i = 0; i < n; ++i) {
                if (detail::contains(s, i)) continue;
                AgentSet t = s;
                t.push_back(i);
                score[i] = detail::exact_sp0(g, theta, t, omega);
            }
            break;
        case Evaluator::Kind::MonteCarlo:
            // Every candidate in a round shares the round's seed, so the
            // comparison uses common random numbers.
            for (std::size_t i = 0; i < n; ++i) {
                if (detail::contains(s, i)) continue;
                AgentSet t = s;
                t.push_back(i);
                const auto chain = build_chain(g, theta, InfluencerAction(t, omega));
                const auto budget = resolve_budget(chain, eval.epsilon, eval.delta, eval.sigma);
                const double est =
                    mc_estimate_sp0(chain, budget, WalkRng::mix(eval.seed + round), eval.threads);
                score[i] = mc_to_influencer_power(est, n);
            }
            break;
        }
        std::size_t best = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (detail::contains(s, i)) continue;
            ++rep.evaluations;
            if (best == n || score[i] > score[best] + kTieTol) best = i;
        }
        s.push_back(best);
    }
    rep.selected = s;
    detail::finish_report(rep, g, theta, omega);
    return rep;
}

/// Best size-K subset by enumeration in lexicographic order.
inline SelectionReport exhaustive_select(const StochasticGraph& g, const Stubbornness& theta,
                                         double omega, std::size_t k,
                                         std::size_t cap = 5'000'000) {
    detail::check_dims(g, theta);
    const auto n = g.size();
    if (k < 1) throw InvalidArgument("budget must be at least 1");
    if (k > n) throw BudgetExceedsN(k, n);
    if (detail::binomial_capped(n, k, cap) > cap) throw CombinatorialExplosion(cap);

    SelectionReport rep;
    rep.solver = "exhaustive";
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    double best = -1.0;
    AgentSet best_set;
    while (true) {
        const double v = detail::exact_sp0(g, theta, idx, omega);
        ++rep.evaluations;
        if (best_set.empty() || v > best + kTieTol) {
            best = v;
            best_set = idx;
        }
        // next combination
        std::size_t pos = k;
        while (pos > 0 && idx[pos - 1] == n - k + pos - 1) --pos;
        if (pos == 0) break;
        ++idx[pos - 1];
        for (std::size_t j = pos; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    rep.selected = best_set;
    detail::finish_report(rep, g, theta, omega);
    return rep;
}

/// Uniform random size-K subset.
inline AgentSet random_subset(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k > n) throw BudgetExceedsN(k, n);
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    for (std::size_t j = 0; j < k; ++j) {
        std::uniform_int_distribution<std::size_t> pick(j, n - 1);
        std::swap(ids[j], ids[pick(rng)]);
    }
    ids.resize(k);
    return canonical(ids);
}

inline SelectionReport random_select(const StochasticGraph& g, const Stubbornness& theta,
                                     double omega, std::size_t k, std::uint64_t seed) {
    SelectionReport rep;
    rep.solver = "random";
    rep.selected = random_subset(g.size(), k, seed);
    rep.evaluations = 1;
    // Prefix gains mean nothing for a random draw; evaluate the set once.
    rep.sp0 = detail::exact_sp0(g, theta, rep.selected, omega);
    rep.raw = rep.sp0 * static_cast<double>(g.size() + 1) - 1.0;
    return rep;
}

struct GScores {
    std::vector<double> g;
    std::size_t argmax = 0;
    /// Every agent whose score ties the maximum.
    std::vector<std::size_t> tied;
    double delta_g = 0.0;
    double threshold_theta = 1.0;
};

inline GScores g_scores(const StochasticGraph& g, double omega) {
    const auto n = g.size();
    const auto& w = g.weights();
    GScores out;
    out.g.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto I = static_cast<Eigen::Index>(i);
        out.g[i] = (1.0 - omega) * w(I, I) + (w.col(I).sum() - w(I, I));
    }
    out.argmax = static_cast<std::size_t>(
        std::max_element(out.g.begin(), out.g.end()) - out.g.begin());
    const double top = out.g[out.argmax];
    for (std::size_t i = 0; i < n; ++i)
        if (top - out.g[i] <= kTieTol) out.tied.push_back(i);
    if (n == 1) {
        out.delta_g = std::numeric_limits<double>::infinity();
        out.threshold_theta = 0.0;
        return out;
    }
    double second = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        if (i != out.argmax) second = std::max(second, out.g[i]);
    out.delta_g = std::max(0.0, top - second);
    out.threshold_theta = static_cast<double>(n) / (out.delta_g + static_cast<double>(n));
    return out;
}

enum class TiePolicy { Reject, LowestId };

/// S = {argmax_i g_i}. Leaves sp0 unset; see evaluate_report.
inline SelectionReport big_theta_select(const StochasticGraph& g, double omega,
                                        TiePolicy ties = TiePolicy::Reject) {
    const auto sc = g_scores(g, omega);
    if (sc.tied.size() > 1 && ties == TiePolicy::Reject) throw TiedMaximum(sc.tied);
    SelectionReport rep;
    rep.solver = "gScore";
    rep.selected = {sc.tied.front()};
    rep.evaluations = 0;
    return rep;
}

/// S = {argmin_i single_agent_cost(g, i, omega)}. Leaves sp0 unset.
inline SelectionReport small_theta_select(const StochasticGraph& g, double omega) {
    if (!(omega > 0.0)) throw ZeroOmega();
    SelectionReport rep;
    rep.solver = "hitting";
    std::size_t best = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double c = single_agent_cost(g, i, omega);
        if (c < best_cost - kTieTol) {
            best = i;
            best_cost = c;
        }
    }
    rep.selected = {best};
    return rep;
}

/// Fills sp0, raw and marginal gains of a report built without theta.
inline void evaluate_report(SelectionReport& rep, const StochasticGraph& g,
                            const Stubbornness& theta, double omega) {
    detail::check_dims(g, theta);
    detail::finish_report(rep, g, theta, omega);
}

struct PropertyReport {
    std::size_t trials = 0;
    /// Smallest observed margin: the gain for monotonicity, gain(T) - gain(S)
    /// for diminishing returns.
    double min_margin = std::numeric_limits<double>::infinity();
};

namespace detail {

struct NestedSample {
    AgentSet small, large;
    std::size_t agent;
};

/// Random T subset of S and i outside S; T is empty on every fourth trial.
inline NestedSample sample_nested(std::size_t n, std::mt19937_64& rng, std::size_t trial) {
    std::uniform_int_distribution<std::size_t> size_dist(0, n - 1);
    const auto large = random_subset(n, size_dist(rng), rng());
    std::vector<std::size_t> outside;
    for (std::size_t i = 0; i < n; ++i)
        if (!contains(large, i)) outside.push_back(i);
    std::uniform_int_distribution<std::size_t> pick(0, outside.size() - 1);
    const auto agent = outside[pick(rng)];
    AgentSet small;
    std::bernoulli_distribution keep(0.5);
    if (trial % 4 != 0)
        for (auto j : large)
            if (keep(rng)) small.push_back(j);
    return {small, large, agent};
}

} // namespace detail

/// Checks sp_0(S + {i}) - sp_0(S) >= -slack on random (S, i).
inline PropertyReport verify_monotone(const StochasticGraph& g, const Stubbornness& theta,
                                      double omega, std::size_t trials, std::uint64_t seed,
                                      double slack = 1e-10) {
    std::mt19937_64 rng(seed);
    PropertyReport rep;
    for (std::size_t t = 0; t < trials; ++t) {
        const auto smp = detail::sample_nested(g.size(), rng, t);
        const double gain = marginal_gain(g, theta, omega, smp.large, smp.agent);
        rep.min_margin = std::min(rep.min_margin, gain);
        ++rep.trials;
        if (gain < -slack)
            throw CounterexampleFound(smp.large, {}, smp.agent,
                                      "S=" + detail::format_set(smp.large) + " i=" +
                                          std::to_string(smp.agent + 1) + " gain " +
                                          std::to_string(gain));
    }
    return rep;
}

/// Checks gain(T, i) >= gain(S, i) - slack on random T subset of S, i outside S.
inline PropertyReport verify_submodular(const StochasticGraph& g, const Stubbornness& theta,
                                        double omega, std::size_t trials, std::uint64_t seed,
                                        double slack = 1e-10) {
    std::mt19937_64 rng(seed);
    PropertyReport rep;
    for (std::size_t t = 0; t < trials; ++t) {
        const auto smp = detail::sample_nested(g.size(), rng, t);
        const double at_small = marginal_gain(g, theta, omega, smp.small, smp.agent);
        const double at_large = marginal_gain(g, theta, omega, smp.large, smp.agent);
        rep.min_margin = std::min(rep.min_margin, at_small - at_large);
        ++rep.trials;
        if (at_small < at_large - slack)
            throw CounterexampleFound(smp.large, smp.small, smp.agent,
                                      "S=" + detail::format_set(smp.large) +
                                          " T=" + detail::format_set(smp.small) +
                                          " i=" + std::to_string(smp.agent + 1));
    }
    return rep;
}

} // namespace fjpower
