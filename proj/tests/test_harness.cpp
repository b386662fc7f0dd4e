#include "fjpower/harness.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>
#include <string>

using namespace fjpower;

namespace {

const std::filesystem::path kConfigDir = FJPOWER_CONFIG_DIR;

ExperimentConfig from_text(const std::string& text) {
    std::istringstream in(text);
    return parse_experiment(KeyValueFile::parse(in, kConfigDir));
}

ExperimentConfig from_file(const std::string& name) { return load_experiment(kConfigDir / name); }

std::string strip_wall_time(std::vector<ReportRow> rows) {
    for (auto& r : rows) r.wall_ms = 0.0;
    std::ostringstream os;
    write_report(os, rows);
    return os.str();
}

} // namespace

TEST(Config, ParsesKeysCommentsAndLists) {
    const auto c = from_text(
        "# comment\n"
        "graph.ring.n = 5   # trailing comment\n"
        "graph.ring.half = 0.4, 0.2, 0.1\n"
        "\n"
        "theta = 0.3\n"
        "omega = 0.25\n"
        "k = 1..3\n"
        "solvers = greedy exhaustive\n"
        "selected = 2, 5\n"
        "phase.theta = 0.1:0.3:0.1\n");
    EXPECT_EQ(c.graph.kind, GraphSource::Kind::Ring);
    EXPECT_EQ(c.graph.ring.n, 5u);
    EXPECT_EQ(c.ks, (std::vector<std::size_t>{1, 2, 3}));
    EXPECT_EQ(c.solvers, (std::vector<std::string>{"greedy", "exhaustive"}));
    EXPECT_EQ(c.selected, (AgentSet{1, 4}));
    ASSERT_EQ(c.phase_theta.size(), 3u);
    EXPECT_NEAR(c.phase_theta[2], 0.3, 1e-15);
    EXPECT_FALSE(c.monte_carlo);
}

TEST(Config, RejectsMalformedInput) {
    EXPECT_THROW(from_text("graph.matrix = a.txt\ngraph.matrix = b.txt\n"), ConfigError);
    EXPECT_THROW(from_text("graph.matrix\n"), ConfigError);
    EXPECT_THROW(from_text("theta = 0.5\n"), ConfigError);
    EXPECT_THROW(from_text("graph.matrix = a.txt\ngraph.rank1 = 0.5, 0.5\n"), ConfigError);
    EXPECT_THROW(from_text("graph.matrix = a.txt\nomega = 1\n"), ConfigError);
    EXPECT_THROW(from_text("graph.matrix = a.txt\ntheta = 1.5\n"), ConfigError);
    EXPECT_THROW(from_text("graph.matrix = a.txt\nk = 0\n"), ConfigError);
    EXPECT_THROW(from_text("graph.matrix = a.txt\nk = x\n"), ConfigError);
    EXPECT_THROW(from_text("graph.matrix = a.txt\nsolvers = magic\n"), ConfigError);
    EXPECT_THROW(from_text("graph.matrix = a.txt\nevaluator = guess\n"), ConfigError);
    EXPECT_THROW(from_text("graph.matrix = a.txt\nmc.epsilon = 0\n"), ConfigError);
    EXPECT_THROW(from_text("graph.matrix = a.txt\nselected = 0\n"), ConfigError);
    EXPECT_THROW(from_text("graph.matrix = a.txt\ntypo = 1\n"), ConfigError);
    EXPECT_THROW(from_file("does_not_exist.cfg"), ConfigError);
}

TEST(Config, ThetaSources) {
    auto c = from_text("graph.matrix = swap2.txt\ntheta.list = 0.2, 0.7\n");
    EXPECT_EQ(build_theta(c, 2).values(), (std::vector<double>{0.2, 0.7}));
    EXPECT_THROW(build_theta(c, 3), ConfigError);
    c = from_text("graph.matrix = swap2.txt\ntheta.range = 0.1, 0.4\nseed = 5\n");
    const auto a = build_theta(c, 50);
    EXPECT_GE(a.min(), 0.1);
    EXPECT_LE(a.max(), 0.4);
    EXPECT_EQ(a.values(), build_theta(c, 50).values());
    c.seed = 6;
    EXPECT_NE(a.values(), build_theta(c, 50).values());
}

TEST(Config, SubstreamsAreIndependentOfEachOther) {
    std::set<std::uint64_t> seen;
    for (const char* name : {"graph", "theta", "walks", "baseline"}) seen.insert(substream_seed(42, name));
    EXPECT_EQ(seen.size(), 4u);
    EXPECT_EQ(substream_seed(42, "graph"), substream_seed(42, "graph"));
    EXPECT_NE(substream_seed(42, "graph"), substream_seed(43, "graph"));
}

TEST(Config, RandomGraphIsSeededAndConnected) {
    const auto a = random_graph(60, 4.0, 11);
    EXPECT_TRUE(is_strongly_connected(a));
    EXPECT_EQ(a.weights(), random_graph(60, 4.0, 11).weights());
    EXPECT_NE(a.weights(), random_graph(60, 4.0, 12).weights());
}

TEST(Report, NumberFormatting) {
    EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
    EXPECT_EQ(format_number(std::nan("")), "NA");
    EXPECT_TRUE(std::isnan(parse_number("NA")));
    EXPECT_EQ(format_ids({5, 0, 2}), "1;3;6");
    EXPECT_EQ(parse_ids("1;3;6"), (AgentSet{0, 2, 5}));
    EXPECT_TRUE(parse_ids("").empty());
    EXPECT_THROW(parse_number("1.2.3"), InvalidArgument);
}

TEST(Report, CsvRoundTripReproducesSp0) {
    for (const char* name : {"rank1.cfg", "ring12_pair.cfg"}) {
        auto c = from_file(name);
        const auto inst = build_instance(c);
        const auto rows = cmd_optimize(c);
        std::stringstream buf;
        write_report(buf, rows);
        const auto back = read_report(buf);
        ASSERT_EQ(back.size(), rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            EXPECT_EQ(back[r].solver, rows[r].solver);
            EXPECT_EQ(back[r].k, rows[r].k);
            EXPECT_EQ(back[r].selected, rows[r].selected);
            EXPECT_FALSE(back[r].sp0_mc.has_value());
            EXPECT_LE(back[r].selected.size(), back[r].k);
            const double again = detail::exact_sp0(inst.graph, inst.theta, back[r].selected, c.omega);
            EXPECT_NEAR(back[r].sp0, again, 1e-10) << name << " row " << r;
            EXPECT_NEAR(back[r].raw, again * static_cast<double>(inst.graph.size() + 1) - 1.0, 1e-10);
        }
    }
}

TEST(Report, RejectsBadCsv) {
    std::istringstream no_header("greedy,1\n");
    EXPECT_THROW(read_report(no_header), ParseError);
    std::istringstream short_row(std::string(kReportHeader) + "\ngreedy,1,1\n");
    EXPECT_THROW(read_report(short_row), ParseError);
    std::istringstream bad_k(std::string(kReportHeader) + "\ngreedy,x,1,0.5,NA,0.5,1,1,0\n");
    EXPECT_THROW(read_report(bad_k), ParseError);
}

TEST(Report, Pearson) {
    EXPECT_NEAR(*pearson({1, 2, 3}, {2, 4, 6}), 1.0, 1e-15);
    EXPECT_NEAR(*pearson({1, 2, 3}, {3, 2, 1}), -1.0, 1e-15);
    EXPECT_FALSE(pearson({0, 0, 0}, {1, 2, 3}).has_value());
    // Weights act as repetition counts.
    EXPECT_NEAR(*pearson({1, 2, 3}, {1, 3, 2}, {2, 1, 1}), *pearson({1, 1, 2, 3}, {1, 1, 3, 2}), 1e-14);
}

TEST(Commands, SpOnSwapFixture) {
    auto c = from_file("swap2.cfg");
    auto r = cmd_sp(c);
    EXPECT_NEAR(r.sp0, 10.0 / 21, 1e-12);
    EXPECT_NEAR(r.raw_mean, 3.0 / 14, 1e-12);
    std::ostringstream os;
    write_sp(os, r);
    EXPECT_NE(os.str().find("sp0 = 0.476190"), std::string::npos);

    c.selected.clear();
    EXPECT_NEAR(cmd_sp(c).sp0, 1.0 / 3, 1e-15);
    c.has_selected = false;
    EXPECT_THROW(cmd_sp(c), ConfigError);
}

TEST(Commands, MonteCarloOutputIsDeterministic) {
    auto c = from_file("swap2_mc.cfg");
    std::ostringstream a, b, threaded;
    write_sp(a, cmd_sp(c));
    write_sp(b, cmd_sp(c));
    c.threads = 3;
    write_sp(threaded, cmd_sp(c));
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(a.str(), threaded.str());
    const auto r = cmd_sp(c);
    ASSERT_TRUE(r.sp0_mc.has_value());
    EXPECT_NEAR(*r.sp0_mc, 10.0 / 21, 0.05 * 10.0 / 21);
    c.seed = 8;
    EXPECT_NE(*cmd_sp(c).sp0_mc, *r.sp0_mc);
}

TEST(Commands, OptimizeRing12Pair) {
    const auto rows = cmd_optimize(from_file("ring12_pair.cfg"));
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].solver, "exhaustive");
    EXPECT_EQ(rows[0].selected, (AgentSet{0, 5}));
    EXPECT_EQ(rows[2].solver, "ring");
    EXPECT_EQ(rows[2].selected, (AgentSet{0, 5}));
}

TEST(Commands, OptimizeIsDeterministicAndSorted) {
    auto c = from_text(
        "graph.random.n = 12\ngraph.random.degree = 3\ntheta.range = 0.2, 0.8\nomega = 0.3\n"
        "k = 1..3\nsolvers = random, greedy\nrandom.draws = 5\nseed = 9\n");
    const auto rows = cmd_optimize(c);
    EXPECT_EQ(rows.size(), 3u + 15u);
    for (std::size_t r = 1; r < rows.size(); ++r)
        EXPECT_LE(std::tie(rows[r - 1].solver, rows[r - 1].k), std::tie(rows[r].solver, rows[r].k));
    EXPECT_EQ(strip_wall_time(rows), strip_wall_time(cmd_optimize(c)));
    c.threads = 4;
    EXPECT_EQ(strip_wall_time(rows), strip_wall_time(cmd_optimize(c)));
    c.seed = 10;
    EXPECT_NE(strip_wall_time(rows), strip_wall_time(cmd_optimize(c)));
}

TEST(Commands, OptimizeRank1AgreesWithExhaustive) {
    auto c = from_text("graph.rank1 = 0.1, 0.3, 0.2, 0.15, 0.25\ntheta = 0.4\nomega = 0.2\n"
                       "k = 1..3\nsolvers = rank1, exhaustive\n");
    const auto rows = cmd_optimize(c);
    ASSERT_EQ(rows.size(), 6u);
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_EQ(rows[k].selected, rows[k + 3].selected);
        EXPECT_NEAR(rows[k].sp0, rows[k + 3].sp0, 1e-10);
    }
}

TEST(Commands, ApplicabilityErrorsAndExitCodes) {
    auto c = from_file("swap2.cfg");
    c.solvers = {"ring"};
    c.ks = {2};
    try {
        cmd_optimize(c);
        FAIL() << "ring solver accepted a matrix source";
    } catch (const Error& e) {
        EXPECT_EQ(exit_code(e), 3);
    }
    c.solvers = {"rank1"};
    EXPECT_THROW(cmd_optimize(c), SolverNotApplicable);
    c.solvers = {"gScore"};
    EXPECT_THROW(cmd_optimize(c), SolverNotApplicable);

    auto ring = from_file("ring26_dispersion.cfg");
    ring.solvers = {"exhaustive"};
    ring.cap = 1000;
    try {
        cmd_optimize(ring);
        FAIL() << "cap not enforced";
    } catch (const Error& e) {
        EXPECT_EQ(exit_code(e), 4);
    }
    EXPECT_EQ(exit_code(ConfigError("x")), 2);
    EXPECT_EQ(exit_code(NonStochastic(0, 2.0)), 2);
}

TEST(Commands, PhaseMapOnHubRingFixture) {
    auto c = from_file("hub_ring_phase.cfg");
    const auto pm = cmd_phase_map(c);
    ASSERT_EQ(pm.thetas.size(), 33u);
    ASSERT_EQ(pm.omegas.size(), 33u);
    // Along omega at theta = 0.03 the winner moves from agent 1 to agent 3 or 7.
    const auto& low = pm.winners.front();
    EXPECT_EQ(low.front(), 0u);
    EXPECT_TRUE(low.back() == 2u || low.back() == 6u);
    std::size_t changes = 0;
    for (std::size_t w = 1; w < low.size(); ++w) changes += low[w] != low[w - 1];
    EXPECT_EQ(changes, 1u);

    c.phase_theta = {0.99};
    c.phase_omega = {0.15, 0.18};
    const auto flip = cmd_phase_map(c);
    EXPECT_EQ(flip.winners[0][0], 0u);
    EXPECT_EQ(flip.winners[0][1], 2u);

    std::ostringstream os;
    write_phase_map(os, flip);
    EXPECT_EQ(os.str(), "theta/omega,0.15,0.18\n0.99,1,3\n");

    c.phase_omega = {1.0};
    EXPECT_THROW(cmd_phase_map(c), ConfigError);
}

TEST(Commands, DispersionOrbits) {
    auto c = from_text("graph.ring.n = 25\ngraph.ring.half = 0.2, 0.25, 0.15, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0\n"
                       "theta = 0.1\nomega = 0.2\nk = 5\n");
    const auto r = cmd_dispersion(c);
    std::size_t total = 0;
    bool even_found = false;
    for (const auto& row : r.rows) {
        total += row.orbit_size;
        if (row.representative == AgentSet{0, 5, 10, 15, 20}) {
            even_found = true;
            EXPECT_EQ(row.orbit_size, 5u);
            EXPECT_NEAR(row.circular_variance, 1.0, 1e-12);
        }
    }
    EXPECT_EQ(total, 53130u); // C(25, 5)
    EXPECT_TRUE(even_found);
    EXPECT_TRUE(r.pearson.has_value());

    c.ks = {1};
    const auto single = cmd_dispersion(c);
    ASSERT_EQ(single.rows.size(), 1u);
    EXPECT_EQ(single.rows[0].orbit_size, 25u);
    EXPECT_FALSE(single.pearson.has_value());
    std::ostringstream os;
    write_dispersion(os, single);
    EXPECT_NE(os.str().find("# pearson=NA"), std::string::npos);

    c.cap = 100;
    c.ks = {5};
    EXPECT_THROW(cmd_dispersion(c), CombinatorialExplosion);
    EXPECT_THROW(cmd_dispersion(from_file("swap2.cfg")), SolverNotApplicable);
}

TEST(Commands, BudgetAndValidate) {
    auto c = from_text("graph.matrix = swap2.txt\nomega = 0.5\nbudget.theta_min = 0.5\n"
                       "budget.sp_lower = 0.2\nmc.epsilon = 0.1\n");
    const auto b = cmd_budget(c);
    EXPECT_EQ(b.walks, 22134u);
    EXPECT_EQ(b.max_len, 5u);

    c = from_file("swap2.cfg");
    const auto v = cmd_validate(c);
    EXPECT_EQ(v.n, 2u);
    EXPECT_TRUE(v.strongly_connected);
    EXPECT_TRUE(v.converges);
    c.ks = {3};
    EXPECT_THROW(cmd_validate(c), BudgetExceedsN);
}
