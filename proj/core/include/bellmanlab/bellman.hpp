#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bellmanlab/grid.hpp"
#include "bellmanlab/mdp.hpp"
#include "bellmanlab/trajectory.hpp"

namespace bellmanlab {

/// One application of the lookahead operator on a grid function: node j
/// gets the one-step value at p_j (exact recursion in discrete mode,
/// Monte-Carlo in SDE mode with per-node derived seeds, so the sampled
/// operator is deterministic given the config and remains a contraction).
GridFunction bellman_apply(const MdpSpec& spec, const GridFunction& q, const SimConfig& cfg);

/// bellman_apply(q) - q, nodewise. This is the residual each operator
/// block learns.
GridFunction residual_apply(const MdpSpec& spec, const GridFunction& q, const SimConfig& cfg);

/// Pointwise lookahead value at an arbitrary domain point (off-grid);
/// used for dense fixed-point defect probing.
double bellman_value_at(const MdpSpec& spec, const GridFunction& q, const DomainPoint& p,
                        const SimConfig& cfg);

struct IterationTrace {
    std::vector<GridFunction> iterates;  // Q^(0..k)
    Vec sup_distances;                   // d_k = max_j |Q^(k+1) - Q^(k)|_j
    Vec sup_norms;                       // per iterate
    Vec lipschitz;                       // per iterate estimate
    Vec ratios;                          // d_{k+1} / d_k (0 when d_k = 0)
    bool converged = false;
    double tol = 0.0;

    int steps() const { return static_cast<int>(sup_distances.size()); }
    const GridFunction& last() const { return iterates.back(); }
};

/// Fixed-point iteration q <- B q until the nodewise sup distance drops
/// below tol or k_max steps. Non-convergence is reported in the trace, not
/// thrown; the final iterate carries an a-posteriori fixed-point error of
/// at most tol * beta / (1 - beta).
IterationTrace value_iterate(const MdpSpec& spec, const GridFunction& q0, int k_max, double tol,
                             const SimConfig& cfg);

struct ContractionReport {
    Vec ratios;
    double max_ratio = 0.0;
    double beta = 0.0;
    double tolerance = 0.0; // multiplicative headroom applied to beta
    int pairs_used = 0;
    bool pass = false;
};

/// Measures sup|B q1 - B q2| / sup|q1 - q2| over random Lipschitz pairs
/// drawn from the bump generator, with common random numbers across the
/// two applications. Degenerate pairs (q1 = q2) contribute ratio 0.
ContractionReport verify_contraction(const MdpSpec& spec, const GridPtr& grid, int n_pairs,
                                     const SimConfig& cfg, std::uint64_t seed,
                                     double tolerance = 0.0);

/// Lipschitz propagation budget: one operator application maps a constant
/// L to at most additive + carry * L, so k applications from initial L0
/// stay below the envelope
///   envelope(k) = additive * sum_{j<k} carry^j + carry^k * L0,
/// and the horizon-truncated uniform cap is envelope(n_max).
struct RegularityBudget {
    double additive = 0.0;  // per-step added Lipschitz mass
    double carry = 0.0;     // per-step multiplier on the incoming constant
    double initial = 0.0;   // L0
    int n_max = 0;
    double uniform_cap = 0.0;

    double envelope(int k) const;
};

RegularityBudget regularity_budget(const MdpSpec& spec, double additive, double carry,
                                   double initial);

/// Budget with analytic constants where they exist: discrete mode uses
/// (lip_reward, gamma * lip_transition). SDE mode has no closed form here;
/// use estimate_budget instead.
RegularityBudget analytic_budget(const MdpSpec& spec);

/// Regression of Lipschitz(B q) against Lipschitz(q) over a sampled
/// function family; returns a budget with fitted (additive, carry).
RegularityBudget estimate_budget(const MdpSpec& spec, const GridPtr& grid, int n_funcs,
                                 const SimConfig& cfg, std::uint64_t seed);

struct RegularityRow {
    int k = 0;
    double sup_norm = 0.0;
    double sup_cap = 0.0;       // per-iterate staged amplitude envelope
    double lipschitz = 0.0;
    double lip_envelope = 0.0;  // per-iterate budget envelope
    bool within_uniform = false;
    bool within_envelope = false;
};

struct RegularityReport {
    std::vector<RegularityRow> rows;
    double value_cap = 0.0;   // uniform amplitude cap checked
    double lipschitz_cap = 0.0;
    bool uniform_ok = false;  // every iterate within the uniform caps
    bool envelope_ok = false; // every iterate within its per-iterate envelope
    std::vector<int> violations;
};

/// Checks every iterate of a trace against the uniform caps
/// (value_bound, budget.uniform_cap) and against its per-iterate
/// envelopes; the two uniform checks are exactly the premises of the
/// compactness argument (uniform boundedness + equicontinuity).
RegularityReport verify_uniform_regularity(const MdpSpec& spec, const IterationTrace& trace,
                                           const RegularityBudget& budget, double value_bound,
                                           double tolerance = 1e-9);

} // namespace bellmanlab
