#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bellmanlab {

using Vec = std::vector<double>;

enum class DynamicsMode { ContinuousSde, DiscreteDeterministic };

struct Box {
    Vec lo, hi;

    int dim() const { return static_cast<int>(lo.size()); }
    double side(int i) const { return hi[i] - lo[i]; }
};

/// Declared bounds and Lipschitz constants of the problem coefficients.
/// Declarations are audited, never trusted: validate_spec probes them.
struct CoeffBounds {
    double lip_drift = 0.0;
    double lip_diffusion = 0.0;
    double lip_reward = 0.0;
    double lip_terminal = 0.0;
    double lip_transition = 0.0; // discrete mode only
    double max_drift = 0.0;
    double max_diffusion = 0.0;
    double max_reward = 0.0;
    double max_terminal = 0.0;
};

/// The control problem: dynamics coefficients, rewards, discounting and the
/// declared regularity constants, in one of two modes.
///
/// ContinuousSde: state follows ds = h du + sigma dW under an action held
/// for `hold_delta`; discounting at rate `discount_lambda` over horizon
/// [0, `horizon`].
///
/// DiscreteDeterministic: a stationary discounted problem with a
/// deterministic transition map and a finite action set; the discount is
/// the factor `gamma` per step.
///
/// Finite actions are embedded for metric purposes with coordinates equal
/// to their index, so d((t,s,a_i),(t',s',a_j)) = |t-t'| + ||s-s'|| + |i-j|.
struct MdpSpec {
    std::string name;
    DynamicsMode mode = DynamicsMode::DiscreteDeterministic;

    int state_dim = 1;
    int noise_dim = 1; // Brownian dimension d (ContinuousSde)
    Box state_box;
    Box action_box;                        // ContinuousSde action set
    std::vector<std::string> action_labels; // DiscreteDeterministic action set

    double horizon = 1.0;        // T
    double hold_delta = 0.1;     // delta
    double discount_lambda = 1.0; // lambda (ContinuousSde)
    double gamma = 0.9;          // per-step factor (DiscreteDeterministic)
    int n_stages = 0;            // optional finite stage count for staged bounds

    // coefficients; all pure. Actions arrive as coordinate vectors, finite
    // actions as their embedded index coordinate.
    std::function<void(double t, const Vec& s, const Vec& a, Vec& out)> drift;
    std::function<void(double t, const Vec& s, const Vec& a, Vec& out)> diffusion; // n x d row-major
    std::function<double(double t, const Vec& s, const Vec& a)> running_reward;
    std::function<double(const Vec& s)> terminal_reward;
    std::function<void(const Vec& s, int action, Vec& out)> transition; // discrete

    CoeffBounds bounds;

    int n_actions() const { return static_cast<int>(action_labels.size()); }

    /// Structural invariants; throws std::invalid_argument on violation.
    void check_structure() const;
};

/// Contraction factor: e^{-lambda*delta} in SDE mode, gamma in discrete
/// mode. Always strictly inside (0, 1) for a valid spec.
double discount_factor(const MdpSpec& spec);

/// Uniform bound on the fixed point of the iteration actually performed:
/// M_r/lambda + M_g (continuous), M_r/(1-gamma) + M_g (discrete).
double uniform_q_bound(const MdpSpec& spec);

/// Staged variant: bound on iterate N started from the zero function,
/// M_r*(1-gamma^N)/(1-gamma) + gamma^N*M_g. Discrete mode only.
double uniform_q_bound_staged(const MdpSpec& spec, int n_stages);

struct AuditViolation {
    std::string coefficient; // "drift", "diffusion", "reward", "terminal", "transition"
    std::string kind;        // "bound" or "lipschitz"
    double declared = 0.0;
    double observed = 0.0;
    Vec point_a, point_b;    // flattened (t, s..., a...) coordinates
};

struct AuditReport {
    int n_probe = 0;
    std::uint64_t seed = 0;
    // per coefficient: max observed magnitude and max difference quotient
    // under d = |t-t'| + ||s-s'|| + ||a-a'||.
    double max_drift = 0.0, max_diffusion = 0.0, max_reward = 0.0, max_terminal = 0.0;
    double slope_drift = 0.0, slope_diffusion = 0.0, slope_reward = 0.0,
           slope_terminal = 0.0, slope_transition = 0.0;
    std::vector<AuditViolation> violations;

    bool clean() const { return violations.empty(); }
};

struct NonFiniteCoefficient : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Probes the coefficients at random point pairs in the domain and checks
/// the declared bounds (with a 1.02 tolerance factor on Lipschitz
/// constants; sampling can refute a declared constant, never certify it).
/// Probe i is derived from (seed, i), so reported maxima are monotone
/// non-decreasing in n_probe for a fixed seed.
AuditReport validate_spec(const MdpSpec& spec, int n_probe, std::uint64_t seed);

} // namespace bellmanlab
