#pragma once

#include "fjpower/errors.hpp"
#include "fjpower/fj.hpp"
#include "fjpower/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fjpower {

/// Flat `key = value` file. Blank lines and `#` comments are skipped;
/// keys are case-sensitive and may appear once.
class KeyValueFile {
  public:
    static KeyValueFile parse(std::istream& in, std::filesystem::path base_dir = {}) {
        KeyValueFile kv;
        kv.base_dir_ = std::move(base_dir);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            const auto key_end = line.find('=');
            if (trim(line).empty()) continue;
            if (key_end == std::string::npos)
                throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
            const auto key = trim(line.substr(0, key_end));
            const auto value = trim(line.substr(key_end + 1));
            if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
            if (!kv.values_.emplace(key, value).second)
                throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        }
        return kv;
    }

    static KeyValueFile load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config " + path.string());
        return parse(in, path.parent_path());
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    const std::string& str(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError("missing key '" + key + "'");
        return it->second;
    }

    double number(const std::string& key) const { return to_number(key, str(key)); }

    double number_or(const std::string& key, double fallback) const {
        return has(key) ? number(key) : fallback;
    }

    std::size_t count(const std::string& key) const { return to_count(key, str(key)); }

    std::size_t count_or(const std::string& key, std::size_t fallback) const {
        return has(key) ? count(key) : fallback;
    }

    bool flag_or(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const auto& v = str(key);
        if (v == "true" || v == "yes" || v == "1") return true;
        if (v == "false" || v == "no" || v == "0") return false;
        throw ConfigError("key '" + key + "' expects true or false");
    }

    /// Comma- or whitespace-separated numbers.
    std::vector<double> numbers(const std::string& key) const {
        std::vector<double> out;
        for (const auto& tok : tokens(str(key))) out.push_back(to_number(key, tok));
        return out;
    }

    std::vector<std::string> words(const std::string& key) const { return tokens(str(key)); }

    /// Either a list "a, b, c" or an inclusive range "lo:hi:step".
    std::vector<double> grid(const std::string& key) const {
        const auto& v = str(key);
        if (v.find(':') == std::string::npos) return numbers(key);
        std::vector<std::string> parts;
        std::istringstream is(v);
        for (std::string p; std::getline(is, p, ':');) parts.push_back(trim(p));
        if (parts.size() != 3) throw ConfigError("key '" + key + "' expects lo:hi:step");
        const double lo = to_number(key, parts[0]), hi = to_number(key, parts[1]),
                     step = to_number(key, parts[2]);
        if (!(step > 0.0) || hi < lo) throw ConfigError("key '" + key + "' has an empty range");
        std::vector<double> out;
        const auto steps = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
        for (std::size_t i = 0; i <= steps; ++i) out.push_back(lo + static_cast<double>(i) * step);
        return out;
    }

    /// Either a list "1, 2, 5" or a range "1..10".
    std::vector<std::size_t> counts(const std::string& key) const {
        const auto& v = str(key);
        if (const auto dots = v.find(".."); dots != std::string::npos) {
            const auto lo = to_count(key, trim(v.substr(0, dots)));
            const auto hi = to_count(key, trim(v.substr(dots + 2)));
            if (hi < lo) throw ConfigError("key '" + key + "' has an empty range");
            std::vector<std::size_t> out;
            for (auto k = lo; k <= hi; ++k) out.push_back(k);
            return out;
        }
        std::vector<std::size_t> out;
        for (const auto& tok : tokens(v)) out.push_back(to_count(key, tok));
        return out;
    }

    /// Path value resolved against the config file's directory.
    std::filesystem::path path(const std::string& key) const {
        std::filesystem::path p(str(key));
        return p.is_absolute() || base_dir_.empty() ? p : base_dir_ / p;
    }

    std::vector<std::string> keys() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : values_) out.push_back(k);
        return out;
    }

  private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return {};
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    static std::vector<std::string> tokens(std::string s) {
        std::replace(s.begin(), s.end(), ',', ' ');
        std::istringstream is(s);
        std::vector<std::string> out;
        for (std::string t; is >> t;) out.push_back(t);
        return out;
    }

    static double to_number(const std::string& key, const std::string& tok) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(tok, &pos);
            if (pos == tok.size() && std::isfinite(v)) return v;
        } catch (...) {
        }
        throw ConfigError("key '" + key + "': '" + tok + "' is not a number");
    }

    static std::size_t to_count(const std::string& key, const std::string& tok) {
        try {
            std::size_t pos = 0;
            const auto v = std::stoll(tok, &pos);
            if (pos == tok.size() && v >= 0) return static_cast<std::size_t>(v);
        } catch (...) {
        }
        throw ConfigError("key '" + key + "': '" + tok + "' is not a nonnegative integer");
    }

    std::map<std::string, std::string> values_;
    std::filesystem::path base_dir_;
};

/// Seed of a named sub-stream (graph, theta, walks, baseline) of the
/// master seed, so each source of randomness can be replayed on its own.
inline std::uint64_t substream_seed(std::uint64_t master, const std::string& name) {
    std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
    for (unsigned char ch : name) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::uint64_t z = master ^ h;
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct GraphSource {
    enum class Kind { EdgeList, Matrix, Ring, Circulant, Rank1, Random };
    Kind kind = Kind::Matrix;
    std::filesystem::path path;
    EdgeListOptions edge_options;
    RingSpec ring;
    std::vector<double> generator;
    std::vector<double> centrality;
    std::size_t random_n = 0;
    double random_degree = 0.0;
};

struct ThetaSource {
    enum class Kind { Uniform, List, Range };
    Kind kind = Kind::Uniform;
    double value = 0.5;
    std::vector<double> list;
    double lo = 0.0, hi = 1.0;
};

struct ExperimentConfig {
    GraphSource graph;
    ThetaSource theta;
    double omega = 0.0;
    std::vector<std::size_t> ks{1};
    std::vector<std::string> solvers{"greedy"};
    bool monte_carlo = false;
    double epsilon = 0.1, delta = 0.05, sigma = 0.5;
    std::uint64_t seed = 0;
    std::string output;
    /// 0-based; the file lists 1-based ids.
    AgentSet selected;
    bool has_selected = false;
    std::size_t random_draws = 100;
    std::size_t cap = 5'000'000;
    std::vector<double> phase_theta, phase_omega;
    double budget_theta_min = 0.0, budget_sp_lower = 0.0;
    unsigned threads = 1;
};

namespace detail {

inline const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "graph.edges",  "graph.directed", "graph.one_based", "graph.header",  "graph.matrix",
        "graph.ring.n", "graph.ring.half", "graph.circulant", "graph.rank1",  "graph.random.n",
        "graph.random.degree", "theta", "theta.list", "theta.range", "omega", "k", "solvers",
        "evaluator", "mc.epsilon", "mc.delta", "mc.sigma", "seed", "output", "selected",
        "random.draws", "cap", "phase.theta", "phase.omega", "budget.theta_min",
        "budget.sp_lower", "threads"};
    return keys;
}

inline bool in_unit(double x, bool closed_low, bool closed_high) {
    return (closed_low ? x >= 0.0 : x > 0.0) && (closed_high ? x <= 1.0 : x < 1.0);
}

} // namespace detail

/// Validates and converts a parsed file. Throws ConfigError.
inline ExperimentConfig parse_experiment(const KeyValueFile& kv) {
    for (const auto& k : kv.keys())
        if (!detail::known_keys().count(k)) throw ConfigError("unknown key '" + k + "'");

    ExperimentConfig c;
    int sources = 0;
    auto& g = c.graph;
    if (kv.has("graph.edges")) {
        ++sources;
        g.kind = GraphSource::Kind::EdgeList;
        g.path = kv.path("graph.edges");
        g.edge_options.directed = kv.flag_or("graph.directed", true);
        g.edge_options.one_based = kv.flag_or("graph.one_based", true);
        g.edge_options.header = kv.flag_or("graph.header", false);
    }
    if (kv.has("graph.matrix")) {
        ++sources;
        g.kind = GraphSource::Kind::Matrix;
        g.path = kv.path("graph.matrix");
    }
    if (kv.has("graph.ring.n") || kv.has("graph.ring.half")) {
        ++sources;
        g.kind = GraphSource::Kind::Ring;
        g.ring = {kv.count("graph.ring.n"), kv.numbers("graph.ring.half")};
    }
    if (kv.has("graph.circulant")) {
        ++sources;
        g.kind = GraphSource::Kind::Circulant;
        g.generator = kv.numbers("graph.circulant");
    }
    if (kv.has("graph.rank1")) {
        ++sources;
        g.kind = GraphSource::Kind::Rank1;
        g.centrality = kv.numbers("graph.rank1");
    }
    if (kv.has("graph.random.n")) {
        ++sources;
        g.kind = GraphSource::Kind::Random;
        g.random_n = kv.count("graph.random.n");
        g.random_degree = kv.number_or("graph.random.degree", 4.0);
        if (g.random_n < 2 || !(g.random_degree > 0.0))
            throw ConfigError("random graph needs n >= 2 and a positive degree");
    }
    if (sources != 1) throw ConfigError("exactly one graph source is required");

    int thetas = 0;
    if (kv.has("theta")) {
        ++thetas;
        c.theta.kind = ThetaSource::Kind::Uniform;
        c.theta.value = kv.number("theta");
        if (!detail::in_unit(c.theta.value, true, true)) throw ConfigError("theta must lie in [0,1]");
    }
    if (kv.has("theta.list")) {
        ++thetas;
        c.theta.kind = ThetaSource::Kind::List;
        c.theta.list = kv.numbers("theta.list");
        for (double t : c.theta.list)
            if (!detail::in_unit(t, true, true)) throw ConfigError("theta.list entries must lie in [0,1]");
    }
    if (kv.has("theta.range")) {
        ++thetas;
        c.theta.kind = ThetaSource::Kind::Range;
        const auto r = kv.numbers("theta.range");
        if (r.size() != 2 || !(r[0] <= r[1]) || !detail::in_unit(r[0], true, true) ||
            !detail::in_unit(r[1], true, true))
            throw ConfigError("theta.range expects 'lo, hi' inside [0,1]");
        c.theta.lo = r[0];
        c.theta.hi = r[1];
    }
    if (thetas > 1) throw ConfigError("at most one stubbornness source is allowed");

    c.omega = kv.number_or("omega", 0.0);
    if (!detail::in_unit(c.omega, true, false)) throw ConfigError("omega must lie in [0,1)");
    if (kv.has("k")) c.ks = kv.counts("k");
    for (auto k : c.ks)
        if (k < 1) throw ConfigError("k must be at least 1");
    if (kv.has("solvers")) c.solvers = kv.words("solvers");
    static const std::set<std::string> solver_names{"greedy", "exhaustive", "random", "gScore",
                                                    "smallTheta", "rank1", "ring"};
    for (const auto& s : c.solvers)
        if (!solver_names.count(s)) throw ConfigError("unknown solver '" + s + "'");

    const auto eval = kv.has("evaluator") ? kv.str("evaluator") : std::string("exact");
    if (eval != "exact" && eval != "mc") throw ConfigError("evaluator must be exact or mc");
    c.monte_carlo = eval == "mc";
    c.epsilon = kv.number_or("mc.epsilon", c.epsilon);
    c.delta = kv.number_or("mc.delta", c.delta);
    c.sigma = kv.number_or("mc.sigma", c.sigma);
    for (double x : {c.epsilon, c.delta, c.sigma})
        if (!detail::in_unit(x, false, false)) throw ConfigError("mc parameters must lie in (0,1)");

    c.seed = kv.count_or("seed", 0);
    if (kv.has("output")) c.output = kv.path("output").string();
    if (kv.has("selected")) {
        c.has_selected = true;
        if (kv.str("selected") != "none")
            for (auto id : kv.counts("selected")) {
                if (id < 1) throw ConfigError("selected ids are 1-based");
                c.selected.push_back(id - 1);
            }
        c.selected = canonical(c.selected);
    }
    c.random_draws = kv.count_or("random.draws", c.random_draws);
    c.cap = kv.count_or("cap", c.cap);
    if (kv.has("phase.theta")) c.phase_theta = kv.grid("phase.theta");
    if (kv.has("phase.omega")) c.phase_omega = kv.grid("phase.omega");
    c.budget_theta_min = kv.number_or("budget.theta_min", 0.0);
    c.budget_sp_lower = kv.number_or("budget.sp_lower", 0.0);
    c.threads = static_cast<unsigned>(kv.count_or("threads", 1));
    return c;
}

inline ExperimentConfig load_experiment(const std::filesystem::path& path) {
    return parse_experiment(KeyValueFile::load(path));
}

/// Undirected random graph with about `degree` neighbours per node plus a
/// cycle through all nodes, row-normalized.
inline StochasticGraph random_graph(std::size_t n, double degree, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution edge(std::min(1.0, degree / static_cast<double>(n - 1)));
    Matrix a = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto I = static_cast<Eigen::Index>(i);
        const auto next = static_cast<Eigen::Index>((i + 1) % n);
        a(I, next) = a(next, I) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j)
            if (edge(rng)) a(I, static_cast<Eigen::Index>(j)) = a(static_cast<Eigen::Index>(j), I) = 1.0;
    }
    return normalize_adjacency(a);
}

inline StochasticGraph build_graph(const ExperimentConfig& c) {
    const auto& g = c.graph;
    switch (g.kind) {
    case GraphSource::Kind::EdgeList:
        return load_edge_list(g.path.string(), g.edge_options);
    case GraphSource::Kind::Matrix:
        return load_matrix(g.path.string());
    case GraphSource::Kind::Ring:
        return build_symmetric_ring(g.ring);
    case GraphSource::Kind::Circulant:
        return StochasticGraph::validated(build_circulant({g.generator}));
    case GraphSource::Kind::Rank1: {
        const auto n = static_cast<Eigen::Index>(g.centrality.size());
        Matrix w(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) w(i, j) = g.centrality[static_cast<std::size_t>(j)];
        return StochasticGraph::validated(std::move(w));
    }
    case GraphSource::Kind::Random:
        return random_graph(g.random_n, g.random_degree, substream_seed(c.seed, "graph"));
    }
    throw ConfigError("unsupported graph source");
}

inline Stubbornness build_theta(const ExperimentConfig& c, std::size_t n) {
    switch (c.theta.kind) {
    case ThetaSource::Kind::Uniform:
        return Stubbornness::uniform(n, c.theta.value);
    case ThetaSource::Kind::List:
        if (c.theta.list.size() != n)
            throw ConfigError("theta.list has " + std::to_string(c.theta.list.size()) +
                              " entries for " + std::to_string(n) + " agents");
        return Stubbornness(c.theta.list);
    case ThetaSource::Kind::Range: {
        std::mt19937_64 rng(substream_seed(c.seed, "theta"));
        std::uniform_real_distribution<double> u(c.theta.lo, c.theta.hi);
        std::vector<double> t(n);
        for (double& x : t) x = c.theta.lo == c.theta.hi ? c.theta.lo : u(rng);
        return Stubbornness(t);
    }
    }
    throw ConfigError("unsupported stubbornness source");
}

} // namespace fjpower
