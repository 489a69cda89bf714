#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bellmanlab/grid.hpp"

namespace bellmanlab {

/// Generator of random functions inside the compact set
///   { Q : sup|Q| <= amplitude_cap, Lipschitz(Q) <= lipschitz_cap }.
///
/// Two sources, mixed by curriculum_fraction:
///   - smooth Gaussian-bump combinations, rescaled into the caps, with
///     amplitudes biased toward small values so near-fixed-point inputs
///     are well represented;
///   - curriculum functions (typically value-iteration iterates) plus
///     small bump perturbations, rescaled into the caps.
///
/// Sample i depends only on (seed, i), so any prefix of a draw is stable.
struct FunctionFamily {
    double amplitude_cap = 1.0;  // sup-norm cap
    double lipschitz_cap = 3.0;  // estimated-Lipschitz cap
    int n_bumps = 6;
    double curriculum_fraction = 0.5; // probability of drawing a curriculum variant
    double perturbation_scale = 0.08; // bump amplitude added to curriculum draws
    std::uint64_t seed = 0;
    std::vector<GridFunction> curriculum;
};

struct RejectionBudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Draws `count` functions from the family on the given grid; every
/// returned function satisfies both caps (verified with the grid
/// estimators, Lipschitz within the 1.02 audit factor).
std::vector<GridFunction> sample_target_family(const FunctionFamily& family, const GridPtr& grid,
                                               int count);

} // namespace bellmanlab
