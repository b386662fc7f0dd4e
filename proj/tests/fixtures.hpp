#pragma once

// Named instances shared by the unit and acceptance tests.

#include "fjpower/graph.hpp"

#include <cstddef>
#include <vector>

namespace fixture {

inline fjpower::StochasticGraph swap2() {
    fjpower::Matrix w(2, 2);
    w << 0, 1, 1, 0;
    return fjpower::validate_stochastic(w);
}

/// Ten-agent graph with a hub pair and an eight-agent ring (0-based ids).
/// Agent 0 keeps 0.89 on itself and listens to agent 1 with 0.11. Agent 1
/// listens to 0 (0.5) and to ring agents 2 and 6 (0.25 each). Ring agents
/// 2..9 listen uniformly to their ring neighbours at distance one and two;
/// agents 2 and 6 also listen to agent 1, which gives them five neighbours.
/// Incoming weight (excluding self) is 0.5 for agent 0 and 1.25 for agents
/// 2 and 6.
inline fjpower::StochasticGraph hub_ring() {
    const std::size_t n = 10;
    fjpower::Matrix w = fjpower::Matrix::Zero(n, n);
    w(0, 0) = 0.89;
    w(0, 1) = 0.11;
    w(1, 0) = 0.5;
    w(1, 2) = 0.25;
    w(1, 6) = 0.25;
    for (std::size_t k = 0; k < 8; ++k) {
        const std::size_t i = 2 + k;
        std::vector<std::size_t> nbrs;
        for (std::size_t d : {1u, 2u, 6u, 7u}) nbrs.push_back(2 + (k + d) % 8);
        if (i == 2 || i == 6) nbrs.push_back(1);
        for (auto j : nbrs) w(i, j) = 1.0 / static_cast<double>(nbrs.size());
    }
    return fjpower::validate_stochastic(w);
}

/// Twelve-agent ring with generator (0.16, 0.14, 0.28, 0 x7, 0.28, 0.14).
inline fjpower::RingSpec ring12_nonmonotone() {
    return {12, {0.16, 0.14, 0.28, 0, 0, 0, 0}};
}

/// Twenty-six-agent ring: self weight 0.02 and weights (0.17, 0.11, 0.09,
/// 0.12) at distances one to four on both sides.
inline fjpower::RingSpec ring26() {
    std::vector<double> half(14, 0.0);
    half[0] = 0.02;
    half[1] = 0.17;
    half[2] = 0.11;
    half[3] = 0.09;
    half[4] = 0.12;
    return {26, half};
}

} // namespace fixture
