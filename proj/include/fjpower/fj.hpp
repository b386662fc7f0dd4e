#pragma once

#include "fjpower/errors.hpp"
#include "fjpower/graph.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace fjpower {

/// 0-based agent ids, kept sorted and duplicate-free by the helpers below.
using AgentSet = std::vector<std::size_t>;

inline AgentSet canonical(AgentSet s) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

/// Per-agent stubbornness theta_i in [0,1] (the diagonal of Theta).
class Stubbornness {
  public:
    Stubbornness() = default;
    explicit Stubbornness(std::vector<double> theta) : theta_(std::move(theta)) {
        for (double t : theta_)
            if (!(t >= 0.0 && t <= 1.0)) throw DomainError("stubbornness must lie in [0,1]");
    }
    static Stubbornness uniform(std::size_t n, double value) {
        return Stubbornness(std::vector<double>(n, value));
    }

    std::size_t size() const noexcept { return theta_.size(); }
    double operator[](std::size_t i) const { return theta_[i]; }
    const std::vector<double>& values() const noexcept { return theta_; }

    double min() const { return *std::min_element(theta_.begin(), theta_.end()); }
    double max() const { return *std::max_element(theta_.begin(), theta_.end()); }
    bool is_uniform() const {
        return std::all_of(theta_.begin(), theta_.end(),
                           [&](double t) { return t == theta_.front(); });
    }
    Vector as_vector() const {
        return Eigen::Map<const Vector>(theta_.data(), static_cast<Eigen::Index>(theta_.size()));
    }

  private:
    std::vector<double> theta_;
};

/// Influencer links: agents in `selected` receive a link of weight omega.
struct InfluencerAction {
    AgentSet selected;
    double omega = 0.0;
    std::size_t budget = 1;

    InfluencerAction() = default;
    InfluencerAction(AgentSet s, double w, std::size_t k)
        : selected(canonical(std::move(s))), omega(w), budget(k) {
        if (!(omega >= 0.0 && omega < 1.0)) throw DomainError("omega must lie in [0,1)");
        if (budget < 1) throw DomainError("budget must be at least 1");
        if (selected.size() > budget) throw DomainError("selection exceeds budget");
    }
    /// Budget defaults to max(1, |S|).
    InfluencerAction(AgentSet s, double w)
        : InfluencerAction(s, w, std::max<std::size_t>(1, canonical(s).size())) {}
};

/// Influencer column p0 and agent block P of the steady-state matrix.
struct SteadyState {
    Vector p0;
    Matrix P;
    double raw_power() const { return p0.sum(); }
};

namespace detail {

inline void check_dims(const StochasticGraph& g, const Stubbornness& theta) {
    if (theta.size() != g.size())
        throw InvalidArgument("stubbornness has " + std::to_string(theta.size()) +
                              " entries for " + std::to_string(g.size()) + " agents");
}

inline void check_selection(const StochasticGraph& g, const AgentSet& s) {
    for (auto i : s)
        if (i >= g.size()) throw InvalidArgument("agent id " + std::to_string(i) + " out of range");
}

/// Agents that reach some source through positive weights (i listens to j).
inline bool all_reach(const Matrix& w, const std::vector<bool>& source) {
    const auto n = source.size();
    std::vector<bool> ok = source;
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < n; ++i)
        if (ok[i]) stack.push_back(i);
    while (!stack.empty()) {
        const auto v = stack.back();
        stack.pop_back();
        for (std::size_t u = 0; u < n; ++u) {
            if (!ok[u] && w(u, v) > 0.0) {
                ok[u] = true;
                stack.push_back(u);
            }
        }
    }
    return std::all_of(ok.begin(), ok.end(), [](bool b) { return b; });
}

inline std::vector<double> link_mask(std::size_t n, const AgentSet& s, double omega) {
    std::vector<double> m(n, 0.0);
    for (auto i : s) m[i] = omega;
    return m;
}

} // namespace detail

/// Convergence premise: every agent is stubborn or listens, through a
/// path, to some stubborn agent.
inline bool check_convergence_condition(const StochasticGraph& g, const Stubbornness& theta) {
    detail::check_dims(g, theta);
    std::vector<bool> src(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) src[i] = theta[i] > 0.0;
    return detail::all_reach(g.weights(), src);
}

/// Same premise for the system augmented with the influencer: a linked
/// agent with omega > 0 is anchored by the fully stubborn influencer.
inline bool check_augmented_condition(const StochasticGraph& g, const Stubbornness& theta,
                                      const InfluencerAction& action) {
    detail::check_dims(g, theta);
    detail::check_selection(g, action.selected);
    std::vector<bool> src(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) src[i] = theta[i] > 0.0;
    if (action.omega > 0.0)
        for (auto i : action.selected) src[i] = true;
    return detail::all_reach(g.weights(), src);
}

/// x(0..steps) under x(t+1) = (I - Theta) W x(t) + Theta x(0).
inline std::vector<Vector> fj_simulate(const StochasticGraph& g, const Stubbornness& theta,
                                       const Vector& x0, std::size_t steps) {
    detail::check_dims(g, theta);
    if (static_cast<std::size_t>(x0.size()) != g.size())
        throw InvalidArgument("initial opinion vector has wrong length");
    const Vector th = theta.as_vector();
    const Matrix A = (Vector::Ones(th.size()) - th).asDiagonal() * g.weights();
    const Vector anchor = th.cwiseProduct(x0);
    std::vector<Vector> traj;
    traj.reserve(steps + 1);
    traj.push_back(x0);
    for (std::size_t t = 0; t < steps; ++t) traj.push_back(A * traj.back() + anchor);
    return traj;
}

struct FjLimit {
    Vector x;
    std::size_t steps = 0;
    bool converged = false;
};

/// Iterates the recursion until successive states differ by less than
/// `tol` in the max norm, or `max_steps` is reached.
inline FjLimit fj_limit(const StochasticGraph& g, const Stubbornness& theta, const Vector& x0,
                        std::size_t max_steps, double tol = 1e-12) {
    detail::check_dims(g, theta);
    const Vector th = theta.as_vector();
    const Matrix A = (Vector::Ones(th.size()) - th).asDiagonal() * g.weights();
    const Vector anchor = th.cwiseProduct(x0);
    FjLimit out{x0, 0, false};
    while (out.steps < max_steps) {
        Vector next = A * out.x + anchor;
        const double delta = (next - out.x).lpNorm<Eigen::Infinity>();
        out.x = std::move(next);
        ++out.steps;
        if (delta < tol) {
            out.converged = true;
            break;
        }
    }
    return out;
}

/// P = (I - (I - Theta) W)^{-1} Theta via an LU solve.
inline Matrix steady_state(const StochasticGraph& g, const Stubbornness& theta) {
    if (!check_convergence_condition(g, theta))
        throw SingularSystem("no agent path reaches a stubborn agent");
    const auto n = static_cast<Eigen::Index>(g.size());
    const Vector th = theta.as_vector();
    const Matrix A =
        Matrix::Identity(n, n) - (Vector::Ones(n) - th).asDiagonal() * g.weights();
    Eigen::PartialPivLU<Matrix> lu(A);
    return lu.solve(Matrix(th.asDiagonal()));
}

/// H(S) = (I - omega sum_{j in S} e_j e_j^T)(I - Theta) W.
inline Matrix transient_block(const StochasticGraph& g, const Stubbornness& theta,
                              const InfluencerAction& action) {
    detail::check_dims(g, theta);
    detail::check_selection(g, action.selected);
    const auto n = g.size();
    const auto mask = detail::link_mask(n, action.selected, action.omega);
    Vector scale(n);
    for (std::size_t i = 0; i < n; ++i) scale[i] = (1.0 - mask[i]) * (1.0 - theta[i]);
    return scale.asDiagonal() * g.weights();
}

/// Right-hand side (I - Theta) omega sum_{j in S} e_j.
inline Vector influencer_inflow(const Stubbornness& theta, const InfluencerAction& action) {
    Vector b = Vector::Zero(static_cast<Eigen::Index>(theta.size()));
    for (auto i : action.selected) b[i] = action.omega * (1.0 - theta[i]);
    return b;
}

inline SteadyState augmented_steady_state(const StochasticGraph& g, const Stubbornness& theta,
                                          const InfluencerAction& action) {
    if (!check_augmented_condition(g, theta, action))
        throw SingularSystem("augmented system has an agent without a stubborn anchor");
    const auto n = static_cast<Eigen::Index>(g.size());
    const Matrix A = Matrix::Identity(n, n) - transient_block(g, theta, action);
    Eigen::PartialPivLU<Matrix> lu(A);
    SteadyState out;
    out.p0 = lu.solve(influencer_inflow(theta, action));
    out.P = lu.solve(Matrix(theta.as_vector().asDiagonal()));
    return out;
}

/// Only the influencer column p0; one solve instead of n + 1.
inline Vector influencer_column(const StochasticGraph& g, const Stubbornness& theta,
                                const InfluencerAction& action) {
    if (action.selected.empty() || action.omega == 0.0)
        return Vector::Zero(static_cast<Eigen::Index>(g.size()));
    if (!check_augmented_condition(g, theta, action))
        throw SingularSystem("augmented system has an agent without a stubborn anchor");
    const auto n = static_cast<Eigen::Index>(g.size());
    const Matrix A = Matrix::Identity(n, n) - transient_block(g, theta, action);
    return Eigen::PartialPivLU<Matrix>(A).solve(influencer_inflow(theta, action));
}

/// Column sum 1^T P e_i, without any normalization.
inline double column_power(const Matrix& P, std::size_t i) { return P.col(i).sum(); }

/// (1/divisor) 1^T P e_i. The divisor defaults to the row count of P; the
/// augmented setting passes n + 1.
inline double social_power(const Matrix& P, std::size_t i, double divisor = 0.0) {
    if (divisor <= 0.0) divisor = static_cast<double>(P.rows());
    return column_power(P, i) / divisor;
}

/// sp_0 = (1^T p0 + 1) / (n + 1).
inline double influencer_power_from_raw(double raw, std::size_t n) {
    return (raw + 1.0) / static_cast<double>(n + 1);
}

inline double social_power_influencer(const StochasticGraph& g, const Stubbornness& theta,
                                      const InfluencerAction& action) {
    return influencer_power_from_raw(influencer_column(g, theta, action).sum(), g.size());
}

} // namespace fjpower
