#include "fjpower/optimizer.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace fjpower;

namespace {

struct Instance {
    StochasticGraph g;
    Stubbornness theta;
    oracle::Mat w;
};

Instance random_instance(std::size_t n, std::mt19937_64& rng, double lo = 0.1, double hi = 1.0) {
    auto w = oracle::random_strongly_connected(n, rng);
    auto th = oracle::random_theta(n, rng, lo, hi);
    return {validate_stochastic(oracle::to_eigen(w)), Stubbornness(th), w};
}

} // namespace

TEST(Greedy, SwapGraphTieGoesToLowestId) {
    const auto rep = greedy_select(fixture::swap2(), Stubbornness::uniform(2, 0.5), 0.5, 1);
    EXPECT_EQ(rep.selected, AgentSet({0}));
    EXPECT_NEAR(rep.sp0, 10.0 / 21, 1e-12);
    EXPECT_EQ(rep.solver, "greedy");
    EXPECT_EQ(rep.evaluations, 2u);
}

TEST(Greedy, FullBudgetSelectsEveryone) {
    std::mt19937_64 rng(1);
    const auto inst = random_instance(6, rng);
    const auto rep = greedy_select(inst.g, inst.theta, 0.4, 6);
    EXPECT_EQ(canonical(rep.selected), AgentSet({0, 1, 2, 3, 4, 5}));
    EXPECT_THROW(greedy_select(inst.g, inst.theta, 0.4, 7), BudgetExceedsN);
    EXPECT_THROW(greedy_select(inst.g, inst.theta, 0.4, 0), InvalidArgument);
}

TEST(Greedy, RankOneUpdateAgreesWithResolve) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 5 + trial;
        const auto inst = random_instance(n, rng, 0.0, 1.0);
        AgentSet s;
        for (std::size_t i = 0; i < n; i += 3) s.push_back(i);
        const auto fast = detail::rank_one_scores(inst.g, inst.theta, s, 0.35);
        for (std::size_t i = 0; i < n; ++i) {
            if (detail::contains(s, i)) continue;
            AgentSet t = s;
            t.push_back(i);
            EXPECT_NEAR(fast[i], detail::exact_sp0(inst.g, inst.theta, t, 0.35), 1e-9);
        }
        const auto a = greedy_select(inst.g, inst.theta, 0.35, 4, Evaluator::exact());
        const auto b = greedy_select(inst.g, inst.theta, 0.35, 4, Evaluator::resolve());
        EXPECT_EQ(a.selected, b.selected);
    }
}

TEST(Greedy, HandlesZeroStubbornnessStart) {
    std::mt19937_64 rng(3);
    const auto inst = random_instance(5, rng);
    const auto rep = greedy_select(inst.g, Stubbornness::uniform(5, 0.0), 0.3, 2);
    EXPECT_EQ(rep.selected.size(), 2u);
    EXPECT_NEAR(rep.sp0, 1.0, 1e-10);
}

TEST(Greedy, ApproximationAndDiminishingGains) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const auto inst = random_instance(8, rng);
        const double omega = 0.1 + 0.1 * (trial % 9);
        for (std::size_t k = 1; k <= 3; ++k) {
            const auto gd = greedy_select(inst.g, inst.theta, omega, k);
            const auto ex = exhaustive_select(inst.g, inst.theta, omega, k);
            EXPECT_GE(gd.sp0, (1 - std::exp(-1.0)) * ex.sp0);
            EXPECT_LE(gd.sp0, ex.sp0 + 1e-12);
            EXPECT_NEAR(ex.sp0, oracle::brute_force_best(inst.w, inst.theta.values(), k, omega), 1e-10);
            for (std::size_t r = 0; r < gd.marginal_gains.size(); ++r) {
                EXPECT_GT(gd.marginal_gains[r], 0.0);
                if (r > 0) {
                    EXPECT_LE(gd.marginal_gains[r], gd.marginal_gains[r - 1] + 1e-12);
                }
            }
        }
    }
}

TEST(Greedy, MonteCarloEvaluatorUsuallyMatchesExact) {
    std::mt19937_64 rng(5);
    int agree = 0;
    const int runs = 20;
    for (int trial = 0; trial < runs; ++trial) {
        // Moderate stubbornness keeps walk counts and lengths bounded.
        const auto inst = random_instance(6, rng, 0.3, 0.7);
        const auto exact = greedy_select(inst.g, inst.theta, 0.5, 2);
        const auto mc = greedy_select(inst.g, inst.theta, 0.5, 2,
                                      Evaluator::monte_carlo(0.01, 0.05, 0.5, 1000 + trial));
        agree += exact.selected == mc.selected;
    }
    EXPECT_GE(agree, 19);
}

TEST(Exhaustive, Ring12PicksDistanceFive) {
    const auto g = build_symmetric_ring(fixture::ring12_nonmonotone());
    const auto rep = exhaustive_select(g, Stubbornness::uniform(12, 0.1), 0.2, 2);
    EXPECT_EQ(rep.selected, AgentSet({0, 5}));
}

TEST(Exhaustive, EvenRingPicksAntipodalPair) {
    const auto g = build_symmetric_ring({4, {0.4, 0.25, 0.1}});
    const auto rep = exhaustive_select(g, Stubbornness::uniform(4, 0.3), 0.5, 2);
    EXPECT_EQ(rep.selected, AgentSet({0, 2}));
}

TEST(Exhaustive, CapAndBudget) {
    std::mt19937_64 rng(6);
    const auto inst = random_instance(5, rng);
    EXPECT_EQ(exhaustive_select(inst.g, inst.theta, 0.3, 5).selected, AgentSet({0, 1, 2, 3, 4}));
    EXPECT_THROW(exhaustive_select(inst.g, inst.theta, 0.3, 2, 5), CombinatorialExplosion);
    EXPECT_THROW(exhaustive_select(inst.g, inst.theta, 0.3, 6), BudgetExceedsN);
    EXPECT_EQ(exhaustive_select(inst.g, inst.theta, 0.3, 2).evaluations, 10u);
}

TEST(Random, ReproducibleAndUniformish) {
    std::mt19937_64 rng(7);
    const auto inst = random_instance(8, rng);
    const auto a = random_select(inst.g, inst.theta, 0.3, 3, 42);
    const auto b = random_select(inst.g, inst.theta, 0.3, 3, 42);
    EXPECT_EQ(a.selected, b.selected);
    EXPECT_EQ(random_subset(8, 8, 1), AgentSet({0, 1, 2, 3, 4, 5, 6, 7}));
    std::vector<int> hits(8, 0);
    for (std::uint64_t s = 0; s < 4000; ++s)
        for (auto i : random_subset(8, 2, s)) ++hits[i];
    for (int h : hits) EXPECT_NEAR(h, 1000, 150);
}

TEST(MarginalGain, Values) {
    const auto g = fixture::swap2();
    const auto th = Stubbornness::uniform(2, 0.5);
    EXPECT_NEAR(marginal_gain(g, th, 0.5, {}, 0), 1.0 / 7, 1e-12);
    EXPECT_NEAR(marginal_gain(g, th, 0.0, {}, 0), 0.0, 1e-12);
    EXPECT_THROW(marginal_gain(g, th, 0.5, {0}, 0), AlreadySelected);
}

TEST(GScores, Basics) {
    const auto eye = validate_stochastic(Matrix::Identity(4, 4));
    const auto sc = g_scores(eye, 0.2);
    for (double v : sc.g) EXPECT_NEAR(v, 0.8, 1e-15);
    EXPECT_EQ(sc.delta_g, 0.0);
    EXPECT_THROW(big_theta_select(eye, 0.2), TiedMaximum);

    const auto ring = build_symmetric_ring({5, {0.4, 0.2, 0.1}});
    for (double v : g_scores(ring, 0.0).g) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(GScores, HubRingCrossing) {
    const auto g = fixture::hub_ring();
    const auto at15 = g_scores(g, 0.15);
    EXPECT_NEAR(at15.g[0], 1.2565, 1e-12);
    EXPECT_NEAR(at15.g[2], 1.25, 1e-12);
    EXPECT_EQ(big_theta_select(g, 0.15).selected, AgentSet({0}));
    const auto at18 = g_scores(g, 0.18);
    EXPECT_NEAR(at18.g[0], 1.2298, 1e-12);
    EXPECT_EQ(at18.tied, std::vector<std::size_t>({2, 6}));
    EXPECT_THROW(big_theta_select(g, 0.18), TiedMaximum);
    EXPECT_EQ(big_theta_select(g, 0.18, TiePolicy::LowestId).selected, AgentSet({2}));
}

TEST(GScores, AgreesWithExhaustiveAboveThreshold) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 4 + trial % 5;
        const auto w = oracle::random_strongly_connected(n, rng);
        const auto g = validate_stochastic(oracle::to_eigen(w));
        const double omega = 0.2 + 0.05 * (trial % 10);
        const auto sc = g_scores(g, omega);
        if (sc.tied.size() > 1) continue;
        const double theta = 0.5 * (1.0 + sc.threshold_theta);
        const auto ex = exhaustive_select(g, Stubbornness::uniform(n, theta), omega, 1);
        EXPECT_EQ(big_theta_select(g, omega).selected, ex.selected);
    }
}

TEST(SmallTheta, SwapTieAndHubRingTransition) {
    EXPECT_EQ(small_theta_select(fixture::swap2(), 0.4).selected, AgentSet({0}));
    EXPECT_THROW(small_theta_select(fixture::swap2(), 0.0), ZeroOmega);
    const auto g = fixture::hub_ring();
    EXPECT_EQ(small_theta_select(g, 0.03).selected, AgentSet({0}));
    EXPECT_EQ(small_theta_select(g, 0.9).selected, AgentSet({2}));

    const auto th = Stubbornness::uniform(10, 0.03);
    EXPECT_EQ(exhaustive_select(g, th, 0.03, 1).selected, AgentSet({0}));
    EXPECT_EQ(exhaustive_select(g, th, 0.9, 1).selected, AgentSet({2}));
    const auto hi = Stubbornness::uniform(10, 0.99);
    EXPECT_EQ(exhaustive_select(g, hi, 0.15, 1).selected, AgentSet({0}));
    EXPECT_EQ(exhaustive_select(g, hi, 0.18, 1).selected, AgentSet({2}));
}

TEST(SmallTheta, AgreesWithExhaustiveAtTinyTheta) {
    std::mt19937_64 rng(9);
    int checked = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 4 + trial % 5;
        const auto g = validate_stochastic(oracle::to_eigen(oracle::random_strongly_connected(n, rng)));
        const double omega = 0.1 + 0.02 * trial;
        std::vector<double> cost(n);
        for (std::size_t i = 0; i < n; ++i) cost[i] = single_agent_cost(g, i, omega);
        auto sorted = cost;
        std::sort(sorted.begin(), sorted.end());
        if (sorted[1] - sorted[0] <= 1e-6) continue;
        ++checked;
        const auto ex = exhaustive_select(g, Stubbornness::uniform(n, 1e-4), omega, 1);
        EXPECT_EQ(small_theta_select(g, omega).selected, ex.selected);
    }
    EXPECT_GT(checked, 30);
}

TEST(Properties, MonotoneAndSubmodular) {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 5; ++trial) {
        const auto inst = random_instance(6, rng, 0.0, 1.0);
        const auto m = verify_monotone(inst.g, inst.theta, 0.3, 100, trial);
        EXPECT_EQ(m.trials, 100u);
        EXPECT_GT(m.min_margin, 0.0);
        const auto s = verify_submodular(inst.g, inst.theta, 0.3, 100, trial);
        EXPECT_GE(s.min_margin, -1e-10);
    }
    const auto inst = random_instance(6, rng);
    EXPECT_NEAR(verify_monotone(inst.g, inst.theta, 0.0, 20, 1).min_margin, 0.0, 1e-12);
}

TEST(Properties, CounterexampleIsReported) {
    // A negative slack turns every trial into a violation.
    std::mt19937_64 rng(11);
    const auto inst = random_instance(5, rng);
    try {
        verify_monotone(inst.g, inst.theta, 0.3, 10, 3, -10.0);
        FAIL();
    } catch (const CounterexampleFound& e) {
        EXPECT_NE(std::string(e.what()).find("S={"), std::string::npos);
    }
}
