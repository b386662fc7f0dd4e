#pragma once

#include "fjpower/errors.hpp"
#include "fjpower/fj.hpp"
#include "fjpower/graph.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <thread>
#include <vector>

namespace fjpower {

/// Absorbing chain of the FJ model with an influencer.
///
/// State layout of the full transition matrix: state 0 is the merged
/// influencer state 0', states 1..n are the transient agents and states
/// n+1..2n are the absorbing copies i' of the agents' initial opinions.
class AugmentedChain {
  public:
    AugmentedChain(StochasticGraph graph, Stubbornness theta, InfluencerAction action)
        : graph_(std::move(graph)), theta_(std::move(theta)), action_(std::move(action)) {
        transient_ = fjpower::transient_block(graph_, theta_, action_);
        exit0_ = influencer_inflow(theta_, action_);
        link_ = detail::link_mask(graph_.size(), action_.selected, action_.omega);
    }

    std::size_t transient_count() const noexcept { return graph_.size(); }
    std::size_t state_count() const noexcept { return 2 * graph_.size() + 1; }
    const Matrix& transient_block() const noexcept { return transient_; }
    const Vector& absorb_column0() const noexcept { return exit0_; }
    Vector absorb_diagonal() const { return theta_.as_vector(); }

    const StochasticGraph& graph() const noexcept { return graph_; }
    const Stubbornness& theta() const noexcept { return theta_; }
    const InfluencerAction& action() const noexcept { return action_; }
    double link_weight(std::size_t agent) const { return link_[agent]; }

    /// Dense (2n+1) x (2n+1) transition matrix T(S).
    Matrix transition() const {
        const auto n = static_cast<Eigen::Index>(graph_.size());
        Matrix t = Matrix::Zero(2 * n + 1, 2 * n + 1);
        t(0, 0) = 1.0;
        t.block(1, 0, n, 1) = exit0_;
        t.block(1, 1, n, n) = transient_;
        for (Eigen::Index i = 0; i < n; ++i) {
            t(1 + i, 1 + n + i) = theta_[i];
            t(1 + n + i, 1 + n + i) = 1.0;
        }
        return t;
    }

    /// Largest row sum of H(S); an upper bound on its spectral radius.
    double transient_row_bound() const {
        return transient_.rowwise().sum().maxCoeff();
    }

  private:
    StochasticGraph graph_;
    Stubbornness theta_;
    InfluencerAction action_;
    Matrix transient_;
    Vector exit0_;
    std::vector<double> link_;
};

inline AugmentedChain build_chain(const StochasticGraph& g, const Stubbornness& theta,
                                  const InfluencerAction& action) {
    detail::check_dims(g, theta);
    detail::check_selection(g, action.selected);
    return AugmentedChain(g, theta, action);
}

namespace detail {

inline Eigen::PartialPivLU<Matrix> fundamental_lu(const AugmentedChain& chain) {
    if (!check_augmented_condition(chain.graph(), chain.theta(), chain.action()))
        throw SingularSystem("transient block has spectral radius one");
    const auto n = static_cast<Eigen::Index>(chain.transient_count());
    return Eigen::PartialPivLU<Matrix>(Matrix::Identity(n, n) - chain.transient_block());
}

} // namespace detail

/// Initial distribution over {0'} and the agents, uniform over all n + 1.
inline Vector uniform_with_influencer(std::size_t n) {
    return Vector::Constant(static_cast<Eigen::Index>(n + 1), 1.0 / static_cast<double>(n + 1));
}

/// Initial distribution uniform over the agents only.
inline Vector uniform_over_agents(std::size_t n) {
    Vector v = Vector::Constant(static_cast<Eigen::Index>(n + 1), 1.0 / static_cast<double>(n));
    v[0] = 0.0;
    return v;
}

/// Absorption probabilities (pi_0, pi_1, ..., pi_n) into 0', 1', ..., n'
/// for the given initial distribution over {0'} and the agents.
inline Vector absorbing_probabilities(const AugmentedChain& chain, const Vector& initial) {
    const auto n = static_cast<Eigen::Index>(chain.transient_count());
    if (initial.size() != n + 1) throw InvalidArgument("initial distribution needs n + 1 entries");
    const auto lu = detail::fundamental_lu(chain);
    // y^T = mu_V^T (I - H)^{-1}
    const Vector y = lu.transpose().solve(Vector(initial.tail(n)));
    Vector pi(n + 1);
    pi[0] = initial[0] + y.dot(chain.absorb_column0());
    pi.tail(n) = y.cwiseProduct(chain.absorb_diagonal());
    return pi;
}

/// f(S; theta, omega) = (1/n) 1^T (I - (1-theta)(I - omega D_S) W)^{-1} 1,
/// the expected number of steps before absorption from a uniform agent.
inline double expected_absorption_time(const StochasticGraph& g, const Stubbornness& theta,
                                       const InfluencerAction& action) {
    detail::check_dims(g, theta);
    if (!theta.is_uniform()) throw HeterogeneousStubbornness();
    const auto chain = build_chain(g, theta, action);
    const auto lu = detail::fundamental_lu(chain);
    const auto n = static_cast<Eigen::Index>(g.size());
    return lu.solve(Vector::Ones(n)).sum() / static_cast<double>(n);
}

/// Expected first-passage times to `target` on the plain walk over W.
struct HittingTimes {
    std::size_t target = 0;
    /// times[j] = E[tau_{j,target}]; times[target] is the return time.
    Vector times;
    double return_time() const { return times[static_cast<Eigen::Index>(target)]; }
};

inline HittingTimes hitting_times(const StochasticGraph& g, std::size_t target) {
    const auto n = g.size();
    if (target >= n) throw InvalidArgument("target out of range");
    std::vector<bool> src(n, false);
    src[target] = true;
    if (!detail::all_reach(g.weights(), src)) throw SingularSystem("target is not reachable");
    HittingTimes out{target, Vector::Zero(static_cast<Eigen::Index>(n))};
    const auto m = static_cast<Eigen::Index>(n - 1);
    Vector h = Vector::Zero(static_cast<Eigen::Index>(n));
    if (m > 0) {
        std::vector<Eigen::Index> idx;
        for (std::size_t j = 0; j < n; ++j)
            if (j != target) idx.push_back(static_cast<Eigen::Index>(j));
        Matrix A(m, m);
        for (Eigen::Index a = 0; a < m; ++a)
            for (Eigen::Index b = 0; b < m; ++b)
                A(a, b) = (a == b ? 1.0 : 0.0) - g.weights()(idx[a], idx[b]);
        const Vector sol = Eigen::PartialPivLU<Matrix>(A).solve(Vector::Ones(m));
        for (Eigen::Index a = 0; a < m; ++a) h[idx[a]] = sol[a];
    }
    out.times = h;
    const auto t = static_cast<Eigen::Index>(target);
    out.times[t] = 1.0 + g.weights().row(t).dot(h);
    return out;
}

/// (1/n) sum_{j != i} E[tau_ji] + ((1-omega)/omega) E[tau_ii] + 1.
inline double single_agent_cost(const StochasticGraph& g, std::size_t agent, double omega) {
    if (!(omega > 0.0)) throw ZeroOmega();
    if (!(omega < 1.0)) throw DomainError("omega must lie in (0,1)");
    const auto ht = hitting_times(g, agent);
    const double others = ht.times.sum() - ht.return_time();
    return others / static_cast<double>(g.size()) + (1.0 - omega) / omega * ht.return_time() + 1.0;
}

// ---------------------------------------------------------------- sampling

/// Per-walk generator derived from (master seed, walk index), so estimates
/// do not depend on how walks are split across workers. SplitMix64 keeps
/// stream setup to a couple of multiplies, which matters at 10^8 walks.
class WalkRng {
  public:
    using result_type = std::uint64_t;

    WalkRng(std::uint64_t seed, std::uint64_t stream)
        : state_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return finalize(state_);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    static std::uint64_t mix(std::uint64_t z) { return finalize(z + 0x9e3779b97f4a7c15ULL); }

  private:
    static std::uint64_t finalize(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

struct WalkOutcome {
    bool absorbed_by_zero = false;
    std::size_t length = 0;
    /// Chain state the walk ended in (0 = 0', n+1..2n = i'); empty when the
    /// walk was truncated before absorption.
    std::optional<std::size_t> terminal_state;
};

/// One walk of at most `max_len` steps from a uniformly chosen agent.
template <class Rng>
WalkOutcome simulate_walk(const AugmentedChain& chain, std::size_t max_len, Rng& rng) {
    const auto n = chain.transient_count();
    const auto& g = chain.graph();
    const auto& theta = chain.theta();
    auto state = std::min(static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)), n - 1);
    WalkOutcome out;
    while (out.length < max_len) {
        ++out.length;
        const double u = rng.uniform();
        const double stay = theta[state];
        if (u < stay) {
            out.terminal_state = n + 1 + state;
            return out;
        }
        if (u < stay + (1.0 - stay) * chain.link_weight(state)) {
            out.absorbed_by_zero = true;
            out.terminal_state = 0;
            return out;
        }
        state = g.sample_successor(state, rng.uniform());
    }
    return out;
}

namespace detail {

template <class Body>
void parallel_blocks(std::size_t count, unsigned threads, Body body) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (threads == 1) {
        body(0, 0, count);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (count + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        const std::size_t lo = std::min(count, t * chunk);
        const std::size_t hi = std::min(count, lo + chunk);
        pool.emplace_back([=] { body(t, lo, hi); });
    }
    for (auto& th : pool) th.join();
}

} // namespace detail

struct SampleBudget {
    std::size_t walks = 1;  // r
    std::size_t max_len = 1; // ell
    double epsilon = 0.1;
    double delta = 0.05;
    double sigma = 0.5;
    double theta_min = 0.0;
};

/// Fraction of `budget.walks` walks absorbed by 0'. Estimates the
/// agent-uniform quantity (1/n) 1^T p0; see mc_to_influencer_power.
///
/// A walk visits at most ell + 1 agents (Y_0..Y_ell) before it is cut off,
/// so its absorption probability is exactly truncated_sp0(chain, ell).
inline double mc_estimate_sp0(const AugmentedChain& chain, const SampleBudget& budget,
                              std::uint64_t seed, unsigned threads = 1) {
    if (budget.walks == 0) throw DomainError("walk count must be positive");
    std::vector<std::size_t> hits(std::max(1u, threads), 0);
    detail::parallel_blocks(budget.walks, threads, [&](unsigned t, std::size_t lo, std::size_t hi) {
        std::size_t local = 0;
        for (std::size_t k = lo; k < hi; ++k) {
            WalkRng rng(seed, k);
            local += simulate_walk(chain, budget.max_len + 1, rng).absorbed_by_zero ? 1 : 0;
        }
        hits[t] = local;
    });
    std::size_t total = 0;
    for (auto h : hits) total += h;
    return static_cast<double>(total) / static_cast<double>(budget.walks);
}

/// Converts the agent-uniform estimate to the (n+1)-normalized sp_0.
inline double mc_to_influencer_power(double estimate, std::size_t n) {
    return (static_cast<double>(n) * estimate + 1.0) / static_cast<double>(n + 1);
}

struct AbsorptionTimeSample {
    double mean = 0.0;
    double standard_error = 0.0;
    std::size_t truncated = 0;
};

/// Sample mean of the number of steps to absorption into any absorbing state.
inline AbsorptionTimeSample mc_absorption_time(const AugmentedChain& chain, std::size_t walks,
                                               std::uint64_t seed,
                                               std::size_t max_len = 100'000'000) {
    double sum = 0.0, sumsq = 0.0;
    AbsorptionTimeSample out;
    for (std::size_t k = 0; k < walks; ++k) {
        WalkRng rng(seed, k);
        const auto w = simulate_walk(chain, max_len, rng);
        if (!w.terminal_state) ++out.truncated;
        const double len = static_cast<double>(w.length);
        sum += len;
        sumsq += len * len;
    }
    const double m = static_cast<double>(walks);
    out.mean = sum / m;
    const double var = walks > 1 ? (sumsq - m * out.mean * out.mean) / (m - 1.0) : 0.0;
    out.standard_error = std::sqrt(std::max(var, 0.0) / m);
    return out;
}

/// sp_0^ell = (1/n) 1^T sum_{k=0}^{ell} H^k (I - Theta) omega sum_S e_j,
/// accumulated by repeated matrix-vector products.
inline double truncated_sp0(const AugmentedChain& chain, std::size_t ell) {
    Vector v = chain.absorb_column0();
    double acc = v.sum();
    for (std::size_t k = 0; k < ell; ++k) {
        v = chain.transient_block() * v;
        acc += v.sum();
    }
    return acc / static_cast<double>(chain.transient_count());
}

/// Walk count and length that make the Monte-Carlo estimate accurate to
/// epsilon * sp_ell with probability 1 - delta. `sp_ell_lower` must not
/// exceed sp_0^ell; `theta_min` bounds every agent's stubbornness below.
inline SampleBudget sample_budget(double epsilon, double delta, double sigma, double theta_min,
                                  double omega, double sp_ell_lower) {
    auto open_unit = [](double x) { return x > 0.0 && x < 1.0; };
    if (!open_unit(epsilon) || !open_unit(delta) || !open_unit(sigma) || !open_unit(theta_min) ||
        !open_unit(omega))
        throw DomainError("epsilon, delta, sigma, theta and omega must lie in (0,1)");
    if (!(sp_ell_lower > 0.0 && sp_ell_lower <= 1.0))
        throw DomainError("sp_ell lower bound must lie in (0,1]");
    SampleBudget b;
    b.epsilon = epsilon;
    b.delta = delta;
    b.sigma = sigma;
    b.theta_min = theta_min;
    const double r = 3.0 * std::log(2.0 / delta) / (sigma * sigma * epsilon * epsilon * sp_ell_lower);
    b.walks = static_cast<std::size_t>(std::ceil(r));
    const double ell = (std::log(theta_min * (1.0 - sigma) * epsilon * sp_ell_lower) - std::log(omega)) /
                           std::log(1.0 - theta_min) -
                       2.0;
    b.max_len = static_cast<std::size_t>(std::max(1.0, std::ceil(ell)));
    b.walks = std::max<std::size_t>(b.walks, 1);
    return b;
}

/// Conservative floor omega (1 - theta_max) / n on sp_0^ell, where theta_max
/// ranges over selected agents that are not fully stubborn.
inline double sp_ell_floor(const AugmentedChain& chain) {
    double tmax = -1.0;
    for (auto i : chain.action().selected)
        if (chain.theta()[i] < 1.0) tmax = std::max(tmax, chain.theta()[i]);
    if (tmax < 0.0) return 0.0;
    return chain.action().omega * (1.0 - tmax) / static_cast<double>(chain.transient_count());
}

/// Budget for a concrete chain. The walk length comes from the floor bound;
/// the walk count then uses sp_0^ell evaluated at that length, which keeps
/// both budget inequalities satisfied while avoiding the floor's pessimism.
inline SampleBudget resolve_budget(const AugmentedChain& chain, double epsilon, double delta,
                                   double sigma) {
    const double floor = sp_ell_floor(chain);
    if (!(floor > 0.0)) throw DomainError("no selected agent can be absorbed by the influencer");
    const double tmin = chain.theta().min();
    auto b = sample_budget(epsilon, delta, sigma, tmin, chain.action().omega, floor);
    const double sp_ell = truncated_sp0(chain, b.max_len);
    const auto tight = sample_budget(epsilon, delta, sigma, tmin, chain.action().omega, sp_ell);
    b.walks = tight.walks;
    return b;
}

} // namespace fjpower
