#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bellmanlab/bellman.hpp"
#include "bellmanlab/operator_net.hpp"

namespace bellmanlab {

struct BlockMissing : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Depth and per-layer error budget for a target total error epsilon:
///   layers = ceil(ln(2 * value_bound / epsilon) / rate) + 1, rate = lambda*delta
///   (or ln(1/gamma)); layers = 1 when epsilon >= 2 * value_bound.
///   per_layer_budget = epsilon * (1 - beta) / 2.
struct StackPlan {
    double epsilon = 0.0;
    int layers = 1;
    double per_layer_budget = 0.0;
    double beta = 0.0;
    double value_bound = 0.0;      // uniform bound used for the depth formula
    double resolution_floor = -1.0; // filled in once a reference fixed point exists
    bool feasible = true;

    double envelope(int l) const {
        return per_layer_budget * (1.0 - std::pow(beta, l)) / (1.0 - beta);
    }
};

StackPlan plan_stack(const MdpSpec& spec, double epsilon);

/// Dense fixed-point defect of a reference solution: max over quasi-random
/// probe points of |one-step-lookahead(q)(x) - q(x)|. On a fixed grid the
/// achievable final error cannot beat this floor.
double resolution_floor(const MdpSpec& spec, const GridFunction& q_star, const SimConfig& cfg,
                        int n_probe = 2048);

enum class BlockMode { Trained, Oracle, InjectedConstant };

struct StackLayerRow {
    int layer = 0;
    double err_vs_exact = 0.0;  // e_l = max_j |Qhat^(l) - Q^(l)|_j
    double residual_gap = 0.0;  // max_j |update_l - (B Qhat^(l) - Qhat^(l))|_j; 0 on the final row
    double envelope = 0.0;      // per_layer_budget * (1 - beta^l) / (1 - beta)
    double sup_norm = 0.0;
    double lipschitz = 0.0;
};

struct StackTrace {
    std::vector<StackLayerRow> rows; // l = 0..L
    double final_error = 0.0;        // max_j |Qhat^(L) - q_star|_j
};

/// Runs the residual stack Qhat^(l+1) = Qhat^(l) + F(Qhat^(l)) and accounts
/// for the error against the exact iterates layer by layer. The residual
/// gap is measured on the realized iterate (one extra residual application
/// per layer). `blocks` holds either one shared block or one per layer;
/// Oracle mode replaces F by the exact residual, InjectedConstant by the
/// exact residual plus a constant field.
StackTrace run_stack(const MdpSpec& spec, const StackPlan& plan,
                     const std::vector<const OperatorBlock*>& blocks, const GridFunction& q0,
                     const IterationTrace& reference, const GridFunction& q_star,
                     const SimConfig& cfg, BlockMode mode = BlockMode::Trained,
                     double injected_constant = 0.0);

struct TheoremChecks {
    bool per_layer_budget_ok = false; // (i)  every residual gap <= per_layer_budget
    bool envelope_ok = false;         // (ii) every e_l within the budget envelope
    bool final_error_ok = false;      // (iii) final error < epsilon
    bool caps_ok = false;             // (iv) every input iterate within the target-set caps

    bool all() const { return per_layer_budget_ok && envelope_ok && final_error_ok && caps_ok; }
};

struct TheoremReport {
    StackPlan plan;
    TheoremChecks checks;
    StackTrace trace;
    double max_residual_gap = 0.0;
    double final_error = 0.0;
    double amplitude_cap = 0.0;   // value_bound + epsilon/2
    double lipschitz_cap = 0.0;   // from the (2*additive + lfstar, 2*carry + 1) recurrence
    double lfstar_measured = 0.0;
    double budget_additive = 0.0;
    double budget_carry = 0.0;
    TrainMetrics train_metrics;   // meaningful in Trained mode
    std::string status;           // "pass" | "bound-failure" | "infeasible-as-configured"
};

struct TheoremOptions {
    BlockMode mode = BlockMode::Trained;
    bool shared_block = true;     // one block reused across layers (per-layer otherwise)
    double injected_constant = 0.0;
    std::uint64_t seed = 1;
    int q_star_iterations = 600;
    double q_star_tol = 1e-13;
    int floor_probes = 2048;
};

/// End-to-end pipeline: plan, exact reference iteration, block training to
/// the per-layer budget, stack run, and the four bound checks. Failed
/// bounds are report content, never exceptions.
TheoremReport verify_theorem(const MdpSpec& spec, const GridPtr& grid, double epsilon,
                             const FunctionFamily& family_template, const TrainConfig& tc,
                             const SimConfig& cfg, const TheoremOptions& opts = {});

} // namespace bellmanlab
