#pragma once

#include "fjpower/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace fjpower {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Row sums of a weight matrix must equal one within this tolerance.
inline constexpr double kStochasticTol = 1e-12;

/// Directed weighted social network with a row-stochastic weight matrix.
/// Entry (i, j) is the weight agent i places on agent j. Agents are
/// 0-based internally; the CLI translates to and from 1-based labels.
///
/// Besides the dense matrix the graph keeps a compressed per-row list of
/// positive entries with cumulative weights, used by the random-walk
/// samplers to draw a successor in O(log degree).
class StochasticGraph {
  public:
    struct Neighbor {
        std::size_t target;
        double cumulative;
    };

    /// Validates and wraps `weights`. Throws NonStochastic / NegativeEntry.
    static StochasticGraph validated(Matrix weights) {
        if (weights.rows() == 0 || weights.rows() != weights.cols())
            throw InvalidArgument("weight matrix must be square and nonempty");
        const auto n = static_cast<std::size_t>(weights.rows());
        for (std::size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double w = weights(i, j);
                if (!std::isfinite(w)) throw InvalidArgument("weight matrix has non-finite entries");
                if (w < 0.0 || w > 1.0) throw NegativeEntry(i, j);
                sum += w;
            }
            if (std::abs(sum - 1.0) > kStochasticTol) throw NonStochastic(i, sum);
        }
        return StochasticGraph(std::move(weights));
    }

    std::size_t size() const noexcept { return static_cast<std::size_t>(weights_.rows()); }
    const Matrix& weights() const noexcept { return weights_; }
    double operator()(std::size_t i, std::size_t j) const { return weights_(i, j); }

    const std::vector<Neighbor>& row(std::size_t i) const { return rows_[i]; }

    /// Successor of `i` for a uniform draw `u` in [0,1).
    std::size_t sample_successor(std::size_t i, double u) const {
        const auto& r = rows_[i];
        const double scaled = u * r.back().cumulative;
        auto it = std::upper_bound(r.begin(), r.end(), scaled,
                                   [](double v, const Neighbor& nb) { return v < nb.cumulative; });
        if (it == r.end()) --it;
        return it->target;
    }

  private:
    explicit StochasticGraph(Matrix weights) : weights_(std::move(weights)) {
        const auto n = size();
        rows_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (weights_(i, j) > 0.0) {
                    acc += weights_(i, j);
                    rows_[i].push_back({j, acc});
                }
            }
        }
    }

    Matrix weights_;
    std::vector<std::vector<Neighbor>> rows_;
};

inline StochasticGraph validate_stochastic(const Matrix& weights) {
    return StochasticGraph::validated(weights);
}

namespace detail {

inline std::vector<bool> reachable_from(const Matrix& adj, std::size_t start, bool transpose) {
    const auto n = static_cast<std::size_t>(adj.rows());
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{start};
    seen[start] = true;
    while (!stack.empty()) {
        const auto u = stack.back();
        stack.pop_back();
        for (std::size_t v = 0; v < n; ++v) {
            const double w = transpose ? adj(v, u) : adj(u, v);
            if (w > 0.0 && !seen[v]) {
                seen[v] = true;
                stack.push_back(v);
            }
        }
    }
    return seen;
}

} // namespace detail

/// True iff every agent reaches every other agent through positive weights.
inline bool is_strongly_connected(const StochasticGraph& g) {
    const auto fwd = detail::reachable_from(g.weights(), 0, false);
    const auto bwd = detail::reachable_from(g.weights(), 0, true);
    return std::all_of(fwd.begin(), fwd.end(), [](bool b) { return b; }) &&
           std::all_of(bwd.begin(), bwd.end(), [](bool b) { return b; });
}

struct CirculantSpec {
    std::vector<double> generator;
};

/// Row r is the generator cyclically shifted right by r positions.
inline Matrix build_circulant(const CirculantSpec& spec) {
    const auto n = spec.generator.size();
    if (n == 0) throw InvalidArgument("circulant generator must be nonempty");
    Matrix m(n, n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) m(r, c) = spec.generator[(c + n - r) % n];
    return m;
}

/// Symmetric ring. For odd n = 2s-1 the half weights are (w_0..w_{s-1});
/// for even n = 2s they are (w_0..w_{s-1}, w_s) with w_s the antipodal weight.
struct RingSpec {
    std::size_t n = 0;
    std::vector<double> half_weights;
};

inline std::size_t ring_half_length(std::size_t n) { return n / 2 + 1; }

/// Expands half weights to the full symmetric generator. Checks shape,
/// nonnegativity and normalization but not the w_0, w_1 > 0 premise.
inline std::vector<double> ring_generator(const RingSpec& spec) {
    const auto n = spec.n;
    if (n < 2) throw InvalidArgument("ring needs at least two agents");
    const auto& h = spec.half_weights;
    if (h.size() != ring_half_length(n))
        throw InvalidArgument("ring of " + std::to_string(n) + " agents needs " +
                              std::to_string(ring_half_length(n)) + " half weights");
    for (double w : h)
        if (!(w >= 0.0)) throw InvalidArgument("ring weights must be nonnegative");
    std::vector<double> g(n);
    for (std::size_t l = 0; l < n; ++l) g[l] = h[std::min(l, n - l)];
    double sum = 0.0;
    for (double w : g) sum += w;
    if (std::abs(sum - 1.0) > kStochasticTol) throw NotNormalized(sum);
    return g;
}

inline StochasticGraph build_symmetric_ring(const RingSpec& spec) {
    auto g = ring_generator(spec);
    if (!(spec.half_weights[0] > 0.0) || !(spec.half_weights[1] > 0.0))
        throw InvalidArgument("ring requires w_0 > 0 and w_1 > 0");
    return StochasticGraph::validated(build_circulant({std::move(g)}));
}

/// Divides each row by its sum.
inline StochasticGraph normalize_adjacency(const Matrix& adjacency) {
    if (adjacency.rows() == 0 || adjacency.rows() != adjacency.cols())
        throw InvalidArgument("adjacency must be square and nonempty");
    Matrix w = adjacency;
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        for (Eigen::Index j = 0; j < w.cols(); ++j)
            if (w(i, j) < 0.0) throw NegativeEntry(i, j);
        const double s = w.row(i).sum();
        if (!(s > 0.0)) throw ZeroOutDegree(static_cast<std::size_t>(i));
        w.row(i) /= s;
    }
    return StochasticGraph::validated(std::move(w));
}

struct EdgeListOptions {
    bool directed = true;
    /// When set, the first non-comment line is a header. Tokens of the form
    /// `base=0|1` and `n=N` are honoured; anything else is ignored.
    bool header = false;
    bool one_based = false;
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
    std::string s = line;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::replace(s.begin(), s.end(), '\t', ' ');
    std::istringstream is(s);
    std::vector<std::string> out;
    for (std::string tok; is >> tok;) out.push_back(tok);
    return out;
}

inline bool parse_double(const std::string& tok, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(tok, &pos);
        return pos == tok.size() && std::isfinite(out);
    } catch (...) {
        return false;
    }
}

inline bool parse_index(const std::string& tok, long long& out) {
    try {
        std::size_t pos = 0;
        out = std::stoll(tok, &pos);
        return pos == tok.size();
    } catch (...) {
        return false;
    }
}

} // namespace detail

/// Parses an edge list from a stream. A line "i j [w]" adds weight w
/// (default 1) to the adjacency entry (i, j): agent i listens to agent j.
/// Undirected lists also add (j, i). The result is row-normalized.
inline StochasticGraph parse_edge_list(std::istream& in, const EdgeListOptions& opts) {
    bool one_based = opts.one_based;
    long long declared_n = -1;
    bool header_pending = opts.header;
    struct Edge {
        long long src, dst;
        double w;
    };
    std::vector<Edge> edges;
    long long max_id = -1;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto fields = detail::split_fields(line);
        if (fields.empty()) continue;
        if (header_pending) {
            header_pending = false;
            for (const auto& f : fields) {
                if (f == "base=1") one_based = true;
                else if (f == "base=0") one_based = false;
                else if (f.rfind("n=", 0) == 0 && !detail::parse_index(f.substr(2), declared_n))
                    throw ParseError(lineno, "bad node count '" + f + "'");
            }
            continue;
        }
        if (fields.size() < 2 || fields.size() > 3)
            throw ParseError(lineno, "expected 'src dst [weight]'");
        Edge e{0, 0, 1.0};
        if (!detail::parse_index(fields[0], e.src) || !detail::parse_index(fields[1], e.dst))
            throw ParseError(lineno, "node ids must be integers");
        if (fields.size() == 3 && (!detail::parse_double(fields[2], e.w) || e.w < 0.0))
            throw ParseError(lineno, "weight must be a nonnegative number");
        if (one_based) {
            --e.src;
            --e.dst;
        }
        if (e.src < 0 || e.dst < 0) throw ParseError(lineno, "node id below base");
        max_id = std::max({max_id, e.src, e.dst});
        edges.push_back(e);
    }
    const long long n = declared_n >= 0 ? declared_n : max_id + 1;
    if (n <= 0) throw ParseError(lineno, "edge list is empty");
    if (max_id >= n) throw ParseError(lineno, "node id exceeds declared n");
    Matrix adj = Matrix::Zero(n, n);
    for (const auto& e : edges) {
        adj(e.src, e.dst) += e.w;
        if (!opts.directed && e.src != e.dst) adj(e.dst, e.src) += e.w;
    }
    return normalize_adjacency(adj);
}

inline StochasticGraph load_edge_list(const std::string& path, const EdgeListOptions& opts) {
    std::ifstream in(path);
    if (!in) throw ParseError(0, "cannot open " + path);
    return parse_edge_list(in, opts);
}

/// Matrix text format: first line n, then n whitespace-separated rows.
inline Matrix parse_matrix(std::istream& in) {
    long long n = 0;
    if (!(in >> n) || n <= 0) throw ParseError(1, "expected positive matrix dimension");
    Matrix m(n, n);
    for (long long i = 0; i < n; ++i)
        for (long long j = 0; j < n; ++j)
            if (!(in >> m(i, j))) throw ParseError(static_cast<std::size_t>(i + 2), "short matrix row");
    return m;
}

inline StochasticGraph load_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(0, "cannot open " + path);
    return StochasticGraph::validated(parse_matrix(in));
}

inline void write_matrix(std::ostream& out, const Matrix& m) {
    out << m.rows() << '\n';
    out.precision(17);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
        out << '\n';
    }
}

} // namespace fjpower
