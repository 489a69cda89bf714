#pragma once

#include <cstdint>
#include <stdexcept>

#include "bellmanlab/grid.hpp"
#include "bellmanlab/mdp.hpp"

namespace bellmanlab {

struct SimConfig {
    int substeps = 16;    // Euler substeps per hold interval
    int n_samples = 1000; // Monte-Carlo sample paths
    std::uint64_t seed = 0;
    bool antithetic = false;

    void check() const {
        if (substeps < 1) throw std::invalid_argument("substeps must be >= 1");
        if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    }
};

struct McEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    int n_samples = 0;
    std::int64_t clipped_substeps = 0; // how often a state had to be clipped to the box
    std::int64_t total_substeps = 0;
};

struct NonFiniteState : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SamplePath {
    Vec times;               // u_0 = t, ..., u_K = min(t+delta, T)
    std::vector<Vec> states; // states.front() = s at t
    int clipped = 0;

    const Vec& terminal() const { return states.back(); }
};

/// Euler-Maruyama path under the action held over [t, min(t+delta, T)].
/// Brownian increments come from the counter generator keyed by
/// (seed, sample_id, substep); states are clipped to the state box.
/// At t = horizon the path is the single starting state.
SamplePath simulate_held_action(const MdpSpec& spec, double t, const Vec& s, const Vec& a,
                                const SimConfig& cfg, std::uint64_t sample_id);

/// One-step lookahead value at (t, s, a): discounted running reward over
/// the hold interval (left-endpoint quadrature) plus the discounted best
/// continuation from q_next, or the discounted terminal reward past the
/// horizon. Exact (single-sample, zero stderr) in discrete mode. Samples
/// are averaged with fixed-order pairwise summation, so the result is
/// bit-stable under any parallel schedule.
McEstimate mc_discounted_reward(const MdpSpec& spec, double t, const Vec& s, const Vec& a,
                                int action_index, const GridFunction& q_next,
                                const SimConfig& cfg);

/// Same quantity through the backward recursion
///   Y_k = Y_{k+1} + (r(u_k, s_k, a) - lambda * Y_{k+1}) * du
/// from the terminal condition (continuation sup or terminal reward),
/// averaged over paths. The driver is linear and noise-free in Y, so the
/// per-path recursion is exact in expectation; with shared seeds this is a
/// common-random-numbers cross-check of mc_discounted_reward (agreement
/// within sampling error plus an O(du) discounting bias).
McEstimate bsde_evaluate(const MdpSpec& spec, const GridFunction& q_continuation, double t,
                         const Vec& s, const Vec& a, const SimConfig& cfg);

struct StabilityProbe {
    Vec perturbation_sizes;
    Vec mean_terminal_distances;
    double fitted_slope = 0.0; // max ratio distance/size
};

/// Empirical state-flow stability: mean terminal-state distance between
/// paths started from inputs a given distance apart (common noise), per
/// perturbation size. The slope is the problem's empirical stability
/// constant.
StabilityProbe probe_sde_stability(const MdpSpec& spec, const SimConfig& cfg, int n_points,
                                   std::uint64_t seed);

} // namespace bellmanlab
