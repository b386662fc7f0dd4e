#pragma once

#include "fjpower/closed_form.hpp"
#include "fjpower/config.hpp"
#include "fjpower/markov.hpp"
#include "fjpower/optimizer.hpp"
#include "fjpower/report.hpp"

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <locale>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace fjpower {

/// CLI exit status for a library error.
inline int exit_code(const Error& e) {
    const auto& c = e.code();
    if (c == "SolverNotApplicable" || c == "TiedMaximum" || c == "PremiseNotMatched" ||
        c == "HeterogeneousStubbornness" || c == "NoFixedPoint")
        return 3;
    if (c == "CombinatorialExplosion") return 4;
    if (c == "SingularSystem" || c == "CounterexampleFound") return 1;
    return 2;
}

/// Graph and stubbornness materialized from a config.
struct Instance {
    StochasticGraph graph;
    Stubbornness theta;
};

inline Instance build_instance(const ExperimentConfig& c) {
    auto g = build_graph(c);
    auto th = build_theta(c, g.size());
    return {std::move(g), std::move(th)};
}

namespace detail {

inline double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

/// Monte-Carlo sp_0 of a fixed set, in (n+1)-normalized units.
inline double mc_sp0(const Instance& inst, const AgentSet& s, double omega, const ExperimentConfig& c,
                     std::uint64_t seed) {
    const auto n = inst.graph.size();
    if (s.empty() || !(omega > 0.0)) return influencer_power_from_raw(0.0, n);
    const auto chain = build_chain(inst.graph, inst.theta, InfluencerAction(s, omega));
    const auto budget = resolve_budget(chain, c.epsilon, c.delta, c.sigma);
    return mc_to_influencer_power(mc_estimate_sp0(chain, budget, seed, c.threads), n);
}

inline ReportRow to_row(const SelectionReport& rep, std::size_t k, std::uint64_t seed,
                        double wall_ms) {
    ReportRow r;
    r.solver = rep.solver;
    r.k = k;
    r.selected = canonical(rep.selected);
    r.sp0 = rep.sp0;
    r.raw = rep.raw;
    r.wall_ms = wall_ms;
    r.evaluations = rep.evaluations;
    r.seed = seed;
    return r;
}

inline void require_k(const ExperimentConfig& c, std::size_t k, const std::string& solver) {
    for (auto x : c.ks)
        if (x == k) return;
    throw SolverNotApplicable(solver + " solver needs K = " + std::to_string(k) + " in the K list");
}

inline Rank1Model rank1_model(const ExperimentConfig& c, const Instance& inst) {
    if (c.graph.kind != GraphSource::Kind::Rank1)
        throw SolverNotApplicable("rank1 solver needs a rank-1 graph source");
    return Rank1Model(c.graph.centrality, inst.theta, c.omega);
}

inline RingModel ring_model(const ExperimentConfig& c, const Instance& inst) {
    if (c.graph.kind != GraphSource::Kind::Ring)
        throw SolverNotApplicable("ring solver needs a symmetric ring graph source");
    if (!inst.theta.is_uniform())
        throw SolverNotApplicable("ring solver needs homogeneous stubbornness");
    return RingModel{c.graph.ring, inst.theta[0], c.omega, {}};
}

} // namespace detail

// ------------------------------------------------------------------------ sp

struct SpResult {
    std::size_t n = 0;
    AgentSet selected;
    double sp0 = 0.0;
    /// (1/n) 1^T p0.
    double raw_mean = 0.0;
    std::optional<double> sp0_mc;
    std::optional<SampleBudget> budget;
};

inline SpResult cmd_sp(const ExperimentConfig& c) {
    if (!c.has_selected) throw ConfigError("sp needs 'selected' (use 'none' for the empty set)");
    const auto inst = build_instance(c);
    SpResult r;
    r.n = inst.graph.size();
    r.selected = c.selected;
    detail::check_selection(inst.graph, c.selected);
    const double raw =
        influencer_column(inst.graph, inst.theta, InfluencerAction(c.selected, c.omega)).sum();
    r.raw_mean = raw / static_cast<double>(r.n);
    r.sp0 = influencer_power_from_raw(raw, r.n);
    if (c.monte_carlo) {
        const auto seed = substream_seed(c.seed, "walks");
        r.sp0_mc = detail::mc_sp0(inst, c.selected, c.omega, c, seed);
        if (!c.selected.empty() && c.omega > 0.0) {
            const auto chain = build_chain(inst.graph, inst.theta, InfluencerAction(c.selected, c.omega));
            r.budget = resolve_budget(chain, c.epsilon, c.delta, c.sigma);
        }
    }
    return r;
}

/// Values in fixed notation with 12 decimals.
inline void write_sp(std::ostream& out, const SpResult& r) {
    auto fixed = [](double x) {
        std::ostringstream os;
        os.imbue(std::locale::classic());
        os << std::fixed << std::setprecision(12) << x;
        return os.str();
    };
    out << "n = " << r.n << '\n';
    out << "selected = {" << format_ids(r.selected) << "}\n";
    out << "sp0 = " << fixed(r.sp0) << '\n';
    out << "raw_mean = " << fixed(r.raw_mean) << '\n';
    if (r.sp0_mc) {
        out << "sp0_mc = " << fixed(*r.sp0_mc) << '\n';
        if (r.budget) out << "walks = " << r.budget->walks << "\nwalk_length = " << r.budget->max_len << '\n';
    }
}

// ------------------------------------------------------------------ optimize

/// One row per (solver, K); `random` emits one row per draw. Rows come back
/// in canonical order.
inline std::vector<ReportRow> cmd_optimize(const ExperimentConfig& c) {
    const auto inst = build_instance(c);
    const auto& g = inst.graph;
    const auto& th = inst.theta;
    const auto n = g.size();
    for (auto k : c.ks)
        if (k > n) throw BudgetExceedsN(k, n);

    std::vector<ReportRow> rows;
    using clock = std::chrono::steady_clock;
    const auto walk_seed = substream_seed(c.seed, "walks");

    for (const auto& solver : c.solvers) {
        if (solver == "greedy") {
            for (auto k : c.ks) {
                const auto t0 = clock::now();
                const auto seed = substream_seed(walk_seed, "greedy:" + std::to_string(k));
                const auto eval = c.monte_carlo
                                      ? Evaluator::monte_carlo(c.epsilon, c.delta, c.sigma, seed, c.threads)
                                      : Evaluator::exact();
                rows.push_back(detail::to_row(greedy_select(g, th, c.omega, k, eval), k,
                                              c.monte_carlo ? seed : c.seed, detail::elapsed_ms(t0)));
            }
        } else if (solver == "exhaustive") {
            for (auto k : c.ks) {
                const auto t0 = clock::now();
                rows.push_back(detail::to_row(exhaustive_select(g, th, c.omega, k, c.cap), k, c.seed,
                                              detail::elapsed_ms(t0)));
            }
        } else if (solver == "random") {
            const auto base = substream_seed(c.seed, "baseline");
            for (auto k : c.ks)
                for (std::size_t d = 0; d < c.random_draws; ++d) {
                    const auto t0 = clock::now();
                    const auto seed = substream_seed(base, std::to_string(k) + ":" + std::to_string(d));
                    rows.push_back(detail::to_row(random_select(g, th, c.omega, k, seed), k, seed,
                                                  detail::elapsed_ms(t0)));
                }
        } else if (solver == "gScore" || solver == "smallTheta") {
            detail::require_k(c, 1, solver);
            const auto t0 = clock::now();
            auto rep = solver == "gScore" ? big_theta_select(g, c.omega) : small_theta_select(g, c.omega);
            evaluate_report(rep, g, th, c.omega);
            rep.solver = solver;
            rows.push_back(detail::to_row(rep, 1, c.seed, detail::elapsed_ms(t0)));
        } else if (solver == "rank1") {
            const auto model = detail::rank1_model(c, inst);
            for (auto k : c.ks) {
                const auto t0 = clock::now();
                SelectionReport rep;
                rep.solver = "rank1";
                rep.selected = hyperbolic_solve(rank1_parameters(model, k)).selected;
                rep.sp0 = rank1_sp0(model, rep.selected);
                rep.raw = rep.sp0 * static_cast<double>(n + 1) - 1.0;
                rows.push_back(detail::to_row(rep, k, c.seed, detail::elapsed_ms(t0)));
            }
        } else if (solver == "ring") {
            detail::require_k(c, 2, solver);
            auto model = detail::ring_model(c, inst);
            const auto t0 = clock::now();
            SelectionReport rep;
            rep.solver = "ring";
            rep.selected = ring_solve_K2(model);
            evaluate_report(rep, g, th, c.omega);
            rows.push_back(detail::to_row(rep, 2, c.seed, detail::elapsed_ms(t0)));
        } else {
            throw ConfigError("unknown solver '" + solver + "'");
        }
    }

    if (c.monte_carlo)
        for (auto& r : rows)
            r.sp0_mc = detail::mc_sp0(inst, r.selected, c.omega, c,
                                      substream_seed(walk_seed, r.solver + ":" + std::to_string(r.k) +
                                                                    ":" + std::to_string(r.seed)));
    sort_rows(rows);
    return rows;
}

// ----------------------------------------------------------------- phase map

struct PhaseMap {
    std::vector<double> thetas, omegas;
    /// winners[t][w], 0-based.
    std::vector<std::vector<std::size_t>> winners;
};

inline PhaseMap cmd_phase_map(const ExperimentConfig& c) {
    if (c.phase_theta.empty() || c.phase_omega.empty())
        throw ConfigError("phase-map needs phase.theta and phase.omega grids");
    for (double t : c.phase_theta)
        if (!(t > 0.0 && t < 1.0)) throw ConfigError("phase.theta values must lie in (0,1)");
    for (double w : c.phase_omega)
        if (!(w > 0.0 && w < 1.0)) throw ConfigError("phase.omega values must lie in (0,1)");
    const auto g = build_graph(c);
    PhaseMap pm{c.phase_theta, c.phase_omega, {}};
    for (double t : pm.thetas) {
        const auto th = Stubbornness::uniform(g.size(), t);
        auto& row = pm.winners.emplace_back();
        for (double w : pm.omegas) row.push_back(exhaustive_select(g, th, w, 1).selected.front());
    }
    return pm;
}

inline void write_phase_map(std::ostream& out, const PhaseMap& pm) {
    out << "theta/omega";
    for (double w : pm.omegas) out << ',' << format_number(w);
    out << '\n';
    for (std::size_t t = 0; t < pm.thetas.size(); ++t) {
        out << format_number(pm.thetas[t]);
        for (auto id : pm.winners[t]) out << ',' << id + 1;
        out << '\n';
    }
}

// ---------------------------------------------------------------- dispersion

struct DispersionRow {
    /// Lexicographically smallest rotation of the orbit, 0-based.
    AgentSet representative;
    std::size_t orbit_size = 0;
    double circular_variance = 0.0;
    double sp0 = 0.0;
};

struct DispersionResult {
    std::size_t n = 0, k = 0;
    std::vector<DispersionRow> rows;
    /// Over all C(n, K) subsets; nullopt when undefined.
    std::optional<double> pearson;
};

namespace detail {

inline AgentSet rotate(const AgentSet& s, std::size_t shift, std::size_t n) {
    AgentSet out;
    for (auto i : s) out.push_back((i + shift) % n);
    return canonical(out);
}

/// Visits every K-subset of {0..n-1} that contains 0, in lexicographic order.
inline void for_each_subset_with_zero(std::size_t n, std::size_t k,
                                      const std::function<void(const AgentSet&)>& visit) {
    AgentSet s(k);
    for (std::size_t i = 0; i < k; ++i) s[i] = i;
    while (true) {
        visit(s);
        std::size_t i = k;
        while (i > 1 && s[i - 1] == n - k + i - 1) --i;
        if (i <= 1) return;
        ++s[i - 1];
        for (auto j = i; j < k; ++j) s[j] = s[j - 1] + 1;
    }
}

} // namespace detail

/// Every rotation orbit of K-subsets of a ring with its circular variance
/// and sp_0. Each orbit is represented by its smallest member.
inline DispersionResult cmd_dispersion(const ExperimentConfig& c) {
    if (c.graph.kind != GraphSource::Kind::Ring && c.graph.kind != GraphSource::Kind::Circulant)
        throw SolverNotApplicable("dispersion needs a ring or circulant graph source");
    if (c.ks.size() != 1) throw ConfigError("dispersion needs a single K");
    const auto inst = build_instance(c);
    if (!inst.theta.is_uniform()) throw SolverNotApplicable("dispersion needs homogeneous stubbornness");
    const auto n = inst.graph.size();
    const auto k = c.ks.front();
    if (k > n) throw BudgetExceedsN(k, n);
    if (fjpower::detail::binomial_capped(n, k, c.cap) > c.cap) throw CombinatorialExplosion(static_cast<double>(c.cap));

    DispersionResult res{n, k, {}, std::nullopt};
    detail::for_each_subset_with_zero(n, k, [&](const AgentSet& s) {
        std::size_t period = n;
        for (std::size_t r = 1; r < n; ++r) {
            const auto rot = detail::rotate(s, r, n);
            if (rot < s) return;
            if (rot == s) {
                period = r;
                break;
            }
        }
        DispersionRow row;
        row.representative = s;
        row.orbit_size = period;
        row.circular_variance = circular_variance(s, n);
        row.sp0 = fjpower::detail::exact_sp0(inst.graph, inst.theta, s, c.omega);
        res.rows.push_back(std::move(row));
    });
    std::vector<double> x, y, w;
    for (const auto& r : res.rows) {
        x.push_back(r.circular_variance);
        y.push_back(r.sp0);
        w.push_back(static_cast<double>(r.orbit_size));
    }
    res.pearson = pearson(x, y, w);
    return res;
}

inline void write_dispersion(std::ostream& out, const DispersionResult& r) {
    out << "selected,orbit_size,circular_variance,sp0\n";
    for (const auto& row : r.rows)
        out << format_ids(row.representative) << ',' << row.orbit_size << ','
            << format_number(row.circular_variance) << ',' << format_number(row.sp0) << '\n';
    out << "# pearson=" << (r.pearson ? format_number(*r.pearson) : std::string(kNA)) << '\n';
}

// -------------------------------------------------------------------- budget

/// With budget.sp_lower set, evaluates the budget formulas directly;
/// otherwise resolves the budget for the configured instance and set.
inline SampleBudget cmd_budget(const ExperimentConfig& c) {
    if (c.budget_sp_lower > 0.0) {
        if (!(c.budget_theta_min > 0.0)) throw ConfigError("budget needs budget.theta_min");
        return sample_budget(c.epsilon, c.delta, c.sigma, c.budget_theta_min, c.omega,
                             c.budget_sp_lower);
    }
    if (!c.has_selected || c.selected.empty())
        throw ConfigError("budget needs budget.sp_lower or a nonempty 'selected'");
    const auto inst = build_instance(c);
    const auto chain = build_chain(inst.graph, inst.theta, InfluencerAction(c.selected, c.omega));
    return resolve_budget(chain, c.epsilon, c.delta, c.sigma);
}

inline void write_budget(std::ostream& out, const SampleBudget& b) {
    out << "walks = " << b.walks << '\n' << "walk_length = " << b.max_len << '\n';
}

// ------------------------------------------------------------------ validate

struct ValidationSummary {
    std::size_t n = 0;
    bool strongly_connected = false;
    bool converges = false;
    double theta_min = 0.0, theta_max = 0.0;
};

inline ValidationSummary cmd_validate(const ExperimentConfig& c) {
    const auto inst = build_instance(c);
    ValidationSummary v;
    v.n = inst.graph.size();
    v.strongly_connected = is_strongly_connected(inst.graph);
    v.converges = check_convergence_condition(inst.graph, inst.theta);
    v.theta_min = inst.theta.min();
    v.theta_max = inst.theta.max();
    if (c.has_selected) detail::check_selection(inst.graph, c.selected);
    for (auto k : c.ks)
        if (k > v.n) throw BudgetExceedsN(k, v.n);
    return v;
}

inline void write_validation(std::ostream& out, const ValidationSummary& v) {
    out << "n = " << v.n << '\n'
        << "strongly_connected = " << (v.strongly_connected ? "yes" : "no") << '\n'
        << "converges = " << (v.converges ? "yes" : "no") << '\n'
        << "theta_range = " << format_number(v.theta_min) << ".." << format_number(v.theta_max)
        << '\n';
}

} // namespace fjpower
