#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fjpower {

/// Base of every error raised by the library. `code()` is a stable
/// machine-readable tag used by the CLI to choose an exit status.
class Error : public std::runtime_error {
  public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

  private:
    std::string code_;
};

struct NonStochastic : Error {
    NonStochastic(std::size_t row, double sum)
        : Error("NonStochastic", "row " + std::to_string(row) + " sums to " + std::to_string(sum)),
          row(row), sum(sum) {}
    std::size_t row;
    double sum;
};

struct NegativeEntry : Error {
    NegativeEntry(std::size_t i, std::size_t j)
        : Error("NegativeEntry",
                "entry (" + std::to_string(i) + "," + std::to_string(j) + ") is outside [0,1]"),
          i(i), j(j) {}
    std::size_t i, j;
};

struct NotNormalized : Error {
    explicit NotNormalized(double sum)
        : Error("NotNormalized", "ring generator sums to " + std::to_string(sum)), sum(sum) {}
    double sum;
};

struct ZeroOutDegree : Error {
    explicit ZeroOutDegree(std::size_t node)
        : Error("ZeroOutDegree", "node " + std::to_string(node) + " has no outgoing weight"),
          node(node) {}
    std::size_t node;
};

struct ParseError : Error {
    ParseError(std::size_t line, const std::string& msg)
        : Error("ParseError", "line " + std::to_string(line) + ": " + msg), line(line) {}
    std::size_t line;
};

struct SingularSystem : Error {
    explicit SingularSystem(const std::string& what) : Error("SingularSystem", what) {}
};

struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& what) : Error("InvalidArgument", what) {}
};

struct DomainError : Error {
    explicit DomainError(const std::string& what) : Error("DomainError", what) {}
};

struct HeterogeneousStubbornness : Error {
    HeterogeneousStubbornness()
        : Error("HeterogeneousStubbornness", "stubbornness must be uniform across agents") {}
};

struct ZeroOmega : Error {
    ZeroOmega() : Error("ZeroOmega", "link weight omega must be positive") {}
};

struct BudgetExceedsN : Error {
    BudgetExceedsN(std::size_t k, std::size_t n)
        : Error("BudgetExceedsN",
                "budget " + std::to_string(k) + " exceeds agent count " + std::to_string(n)) {}
};

struct CombinatorialExplosion : Error {
    explicit CombinatorialExplosion(double cap)
        : Error("CombinatorialExplosion",
                "subset count exceeds cap " + std::to_string(static_cast<long long>(cap))),
          cap(cap) {}
    double cap;
};

struct TiedMaximum : Error {
    explicit TiedMaximum(std::vector<std::size_t> tied)
        : Error("TiedMaximum", "argmax is not unique"), tied(std::move(tied)) {}
    std::vector<std::size_t> tied;
};

struct AlreadySelected : Error {
    explicit AlreadySelected(std::size_t agent)
        : Error("AlreadySelected", "agent " + std::to_string(agent) + " is already selected") {}
};

struct PremiseNotMatched : Error {
    PremiseNotMatched() : Error("PremiseNotMatched", "no closed-form premise matches") {}
};

struct NoFixedPoint : Error {
    NoFixedPoint() : Error("NoFixedPoint", "hyperbolic search found no fixed point") {}
};

struct EmptySet : Error {
    EmptySet() : Error("EmptySet", "selection must be nonempty") {}
};

/// Raised by the property harnesses; carries a replayable counterexample.
struct CounterexampleFound : Error {
    CounterexampleFound(std::vector<std::size_t> larger, std::vector<std::size_t> smaller,
                        std::size_t agent, const std::string& what)
        : Error("CounterexampleFound", what), larger(std::move(larger)),
          smaller(std::move(smaller)), agent(agent) {}
    std::vector<std::size_t> larger;
    std::vector<std::size_t> smaller;
    std::size_t agent;
};

struct SolverNotApplicable : Error {
    explicit SolverNotApplicable(const std::string& what) : Error("SolverNotApplicable", what) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error("ConfigError", what) {}
};

} // namespace fjpower
