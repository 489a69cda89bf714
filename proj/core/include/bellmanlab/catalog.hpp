#pragma once

#include <map>
#include <string>

#include "bellmanlab/mdp.hpp"

namespace bellmanlab {

/// Builtin problems, addressable by id from config files. Unknown parameter
/// keys are rejected so config typos surface immediately.
///
///   move_to_center        1D discrete problem on [0,1]: actions step left or
///                         right by `step` (clamped), r(s) = -(s-0.5)^2,
///                         g = 0, gamma discount. Parameters: gamma (0.9),
///                         step (0.1), n_stages (2).
///   move_to_center_zero   same dynamics with r = g = 0.
///   pull_to_action        1D SDE on S=[-1,1], A=[-1,1]: drift kappa*(a-s),
///                         constant diffusion sigma, r = -s^2 - 0.1 a^2,
///                         g = -0.5 s^2. Parameters: kappa (1), sigma (0.2),
///                         lambda (1), horizon (1), delta (0.25).
///   const_sde             1D SDE with constant coefficients, for closed-form
///                         checks. Parameters: drift (0), sigma (0),
///                         reward (1), terminal (0), lambda (1), horizon (1),
///                         delta (0.25).
MdpSpec make_problem(const std::string& id, const std::map<std::string, double>& params = {});

/// The 11-node example configuration used throughout: move_to_center with
/// gamma = 0.9, step = 0.1.
MdpSpec make_move_to_center();

} // namespace bellmanlab
